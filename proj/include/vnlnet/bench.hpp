#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "vnlnet/patch_search.hpp"

namespace vnl {

struct BenchGrid {
    std::vector<int> sizes{128};          // square frame side
    std::vector<int> patch_sizes{9, 21, 41};
    int frames = 15;
    int spatial_window = 41;
    int temporal_window = 15;
    int repetitions = 1;
    bool run_naive = true;
    bool run_fast = true;
    int threads = 0;
    std::uint64_t seed = 1;
};

/// Per-frame search time (central reference frame, one-per-frame mode),
/// minimum over the repetitions.
struct BenchRow {
    int size = 0;
    int patch = 0;
    std::optional<double> naive_seconds;
    std::optional<double> fast_seconds;
};

std::vector<BenchRow> run_search_bench(const BenchGrid& grid);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct BenchSlopes {
    int size = 0;
    std::optional<double> naive;
    std::optional<double> fast;
};

/// Slope of time against patch width for each frame size with at least two
/// patch widths.
std::vector<BenchSlopes> bench_slopes(const std::vector<BenchRow>& rows);

void write_bench_csv(const std::vector<BenchRow>& rows, const BenchGrid& grid, std::ostream& out);

}  // namespace vnl
