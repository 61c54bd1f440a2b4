#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vnlnet/tensor.hpp"

namespace vnl {

/// Spatio-temporal pixel coordinate.
struct PixelPos {
    std::int32_t x = 0;
    std::int32_t y = 0;
    std::int32_t t = 0;

    bool operator==(const PixelPos&) const = default;
};

/// Planar video: frames x channels x rows x cols, single precision, nominal
/// intensity range [0, 255]. Channels is 1 (gray) or 3 (color).
class Video {
public:
    Video() = default;
    Video(int frames, int channels, int rows, int cols, float fill = 0.f);
    explicit Video(Tensor4<float> samples);

    int frames() const { return samples_.n(); }
    int channels() const { return samples_.c(); }
    int rows() const { return samples_.h(); }
    int cols() const { return samples_.w(); }
    bool empty() const { return samples_.size() == 0; }

    float& operator()(int t, int c, int y, int x) { return samples_(t, c, y, x); }
    float operator()(int t, int c, int y, int x) const { return samples_(t, c, y, x); }

    float* plane(int t, int c) { return samples_.plane(t, c); }
    const float* plane(int t, int c) const { return samples_.plane(t, c); }

    std::span<float> data() { return samples_.data(); }
    std::span<const float> data() const { return samples_.data(); }

    const Tensor4<float>& tensor() const { return samples_; }
    Tensor4<float>& tensor() { return samples_; }

    bool same_shape(const Video& o) const { return samples_.same_shape(o.samples_); }
    std::string shape_string() const;

    /// Copy of frames [first, first + count).
    Video frames_slice(int first, int count) const;

    bool operator==(const Video&) const = default;

private:
    Tensor4<float> samples_;
};

/// Symmetric reflection without edge repeat: -1 -> 1, n -> n - 2.
/// Any index is folded back into [0, n).
int reflect_index(std::int64_t i, int n);

/// Value at (x, y, t, c) with every axis reflected into range.
float sample_extended(const Video& v, std::int64_t x, std::int64_t y, std::int64_t t, int c);

/// Reads 8-bit binary PGM (P5) or PPM (P6) files as consecutive frames.
Video read_sequence(const std::vector<std::filesystem::path>& paths);

/// Lists *.pgm / *.ppm files in a directory, sorted lexicographically.
std::vector<std::filesystem::path> list_sequence(const std::filesystem::path& dir);

/// Writes one PGM/PPM per frame into dir (created if missing). Values are
/// clamped to [0, 255] and rounded half away from zero.
std::vector<std::filesystem::path> write_sequence(const Video& v, const std::filesystem::path& dir,
                                                  const std::string& prefix = "frame");

std::uint8_t to_byte(float value);

}  // namespace vnl
