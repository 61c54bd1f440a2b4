#include "vnlnet/bench.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <algorithm>
#include <limits>
#include <map>
#include <sstream>
#include <ostream>

#include "vnlnet/noise.hpp"

namespace vnl {

namespace {

template <typename Fn>
double time_min(int repetitions, Fn&& fn)
{
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < repetitions; ++r) {
        const auto start = std::chrono::steady_clock::now();
        fn();
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        best = std::min(best, elapsed.count());
    }
    return best;
}

}  // namespace

std::vector<BenchRow> run_search_bench(const BenchGrid& grid)
{
    if (grid.repetitions < 1 || grid.frames < 1)
        throw Error("bench: repetitions and frames must be positive");
    std::vector<BenchRow> rows;
    for (int size : grid.sizes) {
        // integer-valued noise clip in [0, 255]
        Video v = add_awgn(Video(grid.frames, 1, size, size, 128.f), 50.0, grid.seed);
        for (float& x : v.data())
            x = std::clamp(std::round(x), 0.f, 255.f);
        for (int s : grid.patch_sizes) {
            SearchConfig cfg;
            cfg.patch_size = s;
            cfg.spatial_window = grid.spatial_window;
            cfg.temporal_window = grid.temporal_window;
            cfg.num_neighbors = grid.temporal_window;
            cfg.mode = SearchMode::one_per_frame;
            SearchOptions opts;
            opts.frame_begin = grid.frames / 2;
            opts.frame_end = opts.frame_begin + 1;
            opts.threads = grid.threads;
            BenchRow row{size, s, {}, {}};
            if (grid.run_naive)
                row.naive_seconds = time_min(grid.repetitions, [&] { search_naive(v, cfg, opts); });
            if (grid.run_fast)
                row.fast_seconds = time_min(grid.repetitions, [&] { search_fast(v, cfg, opts); });
            rows.push_back(row);
        }
    }
    return rows;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw Error("loglog_slope: need at least two points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= double(x.size());
    my /= double(x.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0)
        throw Error("loglog_slope: all x values are equal");
    return sxy / sxx;
}

std::vector<BenchSlopes> bench_slopes(const std::vector<BenchRow>& rows)
{
    std::map<int, std::vector<const BenchRow*>> by_size;
    for (const BenchRow& r : rows)
        by_size[r.size].push_back(&r);
    std::vector<BenchSlopes> out;
    for (const auto& [size, group] : by_size) {
        if (group.size() < 2)
            continue;
        BenchSlopes s{size, {}, {}};
        std::vector<double> x, naive, fast;
        for (const BenchRow* r : group) {
            x.push_back(r->patch);
            if (r->naive_seconds)
                naive.push_back(*r->naive_seconds);
            if (r->fast_seconds)
                fast.push_back(*r->fast_seconds);
        }
        if (naive.size() == x.size())
            s.naive = loglog_slope(x, naive);
        if (fast.size() == x.size())
            s.fast = loglog_slope(x, fast);
        out.push_back(s);
    }
    return out;
}

void write_bench_csv(const std::vector<BenchRow>& rows, const BenchGrid& grid, std::ostream& out)
{
    auto field = [](const std::optional<double>& v) {
        std::ostringstream os;
        if (v)
            os << std::setprecision(6) << *v;
        return os.str();
    };
    out << "size,patch,window,frames,repetitions,naive_seconds,fast_seconds,speedup\n";
    for (const BenchRow& r : rows) {
        std::optional<double> speedup;
        if (r.naive_seconds && r.fast_seconds && *r.fast_seconds > 0)
            speedup = *r.naive_seconds / *r.fast_seconds;
        out << r.size << ',' << r.patch << ',' << grid.spatial_window << ','
            << grid.temporal_window << ',' << grid.repetitions << ',' << field(r.naive_seconds)
            << ',' << field(r.fast_seconds) << ',' << field(speedup) << '\n';
    }
}

}  // namespace vnl
