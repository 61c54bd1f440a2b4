#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vnlnet/video.hpp"

namespace vnl {

enum class SearchMode { free, one_per_frame };

SearchMode parse_search_mode(const std::string& name);
std::string search_mode_name(SearchMode mode);

struct SearchConfig {
    int patch_size = 41;       // s, odd
    int spatial_window = 41;   // w_s, odd: side of the candidate-centre square
    int temporal_window = 15;  // w_t, odd: frames, centred on the reference
    int num_neighbors = 15;    // n
    SearchMode mode = SearchMode::one_per_frame;
    /// Clean signal used for distances only (gathered values still come from
    /// the searched video). Not owned.
    const Video* oracle_guide = nullptr;

    /// Throws Error if the configuration is inconsistent with `v`.
    void validate(const Video& v) const;
};

/// Which reference frames to search and how to block the work.
struct SearchOptions {
    int frame_begin = 0;
    int frame_end = -1;         // exclusive, -1 = all frames
    int segment_length = 128;   // columns per row segment (overlap s - 1)
    int threads = 0;            // 0 = OpenMP default
};

struct MatchEntry {
    PixelPos pos;
    float dist = 0.f;

    bool operator==(const MatchEntry&) const = default;
};

/// Per-pixel list of n matches for reference frames
/// [first_frame, first_frame + frame_count).
///
/// Free mode: entry 0 is the pixel itself (distance 0), distances are
/// non-decreasing. One-per-frame mode: entry k is the best match in window
/// frame t - w_t/2 + k (mirrored at the sequence ends), entry w_t/2 is the
/// pixel itself.
class MatchTable {
public:
    MatchTable() = default;
    MatchTable(int frames, int rows, int cols, int neighbors, SearchMode mode, int first_frame,
               int frame_count);

    int frames() const { return frames_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int neighbors() const { return neighbors_; }
    SearchMode mode() const { return mode_; }
    int first_frame() const { return first_frame_; }
    int frame_count() const { return frame_count_; }
    bool covers_frame(int t) const { return t >= first_frame_ && t < first_frame_ + frame_count_; }

    std::span<MatchEntry> at(int x, int y, int t)
    {
        return {entries_.data() + offset(x, y, t), static_cast<std::size_t>(neighbors_)};
    }
    std::span<const MatchEntry> at(int x, int y, int t) const
    {
        return {entries_.data() + offset(x, y, t), static_cast<std::size_t>(neighbors_)};
    }

    const std::vector<MatchEntry>& entries() const { return entries_; }

    bool operator==(const MatchTable&) const = default;

private:
    std::size_t offset(int x, int y, int t) const
    {
        return ((static_cast<std::size_t>(t - first_frame_) * rows_ + y) * cols_ + x) *
               static_cast<std::size_t>(neighbors_);
    }

    int frames_ = 0, rows_ = 0, cols_ = 0, neighbors_ = 0;
    SearchMode mode_ = SearchMode::free;
    int first_frame_ = 0, frame_count_ = 0;
    std::vector<MatchEntry> entries_;
};

/// Sum over the s x s offsets and all channels of squared differences between
/// the patches centred at p and q; out-of-frame samples are reflected.
double patch_distance(const Video& v, PixelPos p, PixelPos q, int s);

/// Rounds every sample to a multiple of 2^-10. On this lattice every squared
/// difference and every partial distance sum is exact in double precision
/// (|values| < 8192, s*s*C*510^2 < 2^33), so the search result does not depend
/// on summation order. Integer-valued videos are unchanged.
Video snap_to_distance_lattice(const Video& v);

/// Ordered-table update: if d < distances.back(), shift-insert (p, d) after
/// every entry whose distance is <= d. Returns true when the table changed.
template <typename D>
bool insert_ordered(std::span<D> distances, std::span<PixelPos> positions, PixelPos p, D d)
{
    const std::size_t n = distances.size();
    if (n == 0 || !(d < distances[n - 1]))
        return false;
    for (std::size_t i = n - 1; i >= 1; --i) {
        if (distances[i - 1] <= d) {
            distances[i] = d;
            positions[i] = p;
            return true;
        }
        distances[i] = distances[i - 1];
        positions[i] = positions[i - 1];
    }
    distances[0] = d;
    positions[0] = p;
    return true;
}

/// Brute-force reference search: one full patch comparison per candidate.
MatchTable search_naive(const Video& v, const SearchConfig& cfg, const SearchOptions& opts = {});

/// Column-sum search: per search offset, column sums of squared differences
/// are shared across a row segment and turned into patch distances by an
/// s-wide horizontal box sum. Produces the same table as search_naive.
MatchTable search_fast(const Video& v, const SearchConfig& cfg, const SearchOptions& opts = {});

/// Binary layout (little-endian): "VNLM", u32 version, i32 frames, rows, cols,
/// neighbors, mode, first_frame, frame_count, then per pixel (frame, row, col
/// order) n entries of {i32 x, i32 y, i32 t, f32 dist}.
void save_match_table(const MatchTable& table, const std::filesystem::path& path);
MatchTable load_match_table(const std::filesystem::path& path);

}  // namespace vnl
