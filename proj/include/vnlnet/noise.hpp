#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "vnlnet/video.hpp"

namespace vnl {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Every noise
/// sample is a pure function of (seed, stream, sample index), so generation
/// is reproducible across platforms and independent of the worker count.
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;

    explicit Philox4x32(std::uint64_t seed) : key_{static_cast<std::uint32_t>(seed),
                                                   static_cast<std::uint32_t>(seed >> 32)} {}

    Block operator()(std::uint64_t index, std::uint32_t stream) const;

    /// Two uniforms in [0, 1) with 53 bits each.
    std::array<double, 2> uniforms(std::uint64_t index, std::uint32_t stream) const;

    /// Standard normal via Box-Muller on the two uniforms of the block.
    double gaussian(std::uint64_t index, std::uint32_t stream) const;

private:
    std::array<std::uint32_t, 2> key_;
};

enum class NoiseKind { awgn, box_correlated, salt_pepper_uniform };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::awgn;
    double sigma = 0.0;     // Gaussian kinds
    double fraction = 0.0;  // salt_pepper_uniform
    std::uint64_t seed = 0;

    void validate() const;
    std::string describe() const;
};

NoiseKind parse_noise_kind(const std::string& name);
std::string noise_kind_name(NoiseKind kind);

/// v = u + r, r ~ N(0, sigma^2) i.i.d. Not clamped.
Video add_awgn(const Video& u, double sigma, std::uint64_t seed);

/// White Gaussian field of std 3*sigma smoothed by the normalized 3x3 box
/// (reflected borders); interior marginal std equals sigma.
Video add_box_correlated(const Video& u, double sigma, std::uint64_t seed);

/// Each sample is replaced with probability `fraction` by U[0, 255].
Video add_salt_pepper_uniform(const Video& u, double fraction, std::uint64_t seed);

Video add_noise(const Video& u, const NoiseSpec& spec);

/// Mixes several integers into one seed (splitmix64 finalizer chain).
std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0);

}  // namespace vnl
