#include "vnlnet/patch_search.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include <omp.h>

namespace vnl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr PixelPos kNoPos{-1, -1, -1};

// Reflect-padded copy of the distance guide, one plane per (frame, channel).
class PaddedGuide {
public:
    PaddedGuide(const Video& guide, int pad)
        : pad_(pad), channels_(guide.channels()), stride_(guide.cols() + 2 * pad),
          padded_rows_(guide.rows() + 2 * pad),
          data_(static_cast<std::size_t>(guide.frames()) * guide.channels() * stride_ *
                padded_rows_)
    {
        const int T = guide.frames(), C = guide.channels();
#pragma omp parallel for schedule(static)
        for (int tc = 0; tc < T * C; ++tc) {
            const int t = tc / C, c = tc % C;
            float* dst = data_.data() + static_cast<std::size_t>(tc) * stride_ * padded_rows_;
            for (int y = 0; y < padded_rows_; ++y)
                for (int x = 0; x < stride_; ++x)
                    dst[static_cast<std::size_t>(y) * stride_ + x] =
                        sample_extended(guide, x - pad, y - pad, t, c);
        }
    }

    // Pointer to pixel (x, y) of frame t, channel c, in unpadded coordinates.
    const float* at(int t, int c, int y, int x) const
    {
        return data_.data() +
               (static_cast<std::size_t>(t * channels_ + c) * padded_rows_ + (y + pad_)) * stride_ +
               (x + pad_);
    }
    std::ptrdiff_t stride() const { return stride_; }

private:
    int pad_;
    int channels_;
    int stride_;
    int padded_rows_;
    std::vector<float> data_;
};

struct FrameRange {
    int begin;
    int end;
};

FrameRange resolve_frames(const Video& v, const SearchOptions& opts)
{
    const int end = opts.frame_end < 0 ? v.frames() : opts.frame_end;
    if (opts.frame_begin < 0 || end > v.frames() || opts.frame_begin >= end)
        throw Error("search: frame range [" + std::to_string(opts.frame_begin) + ", " +
                    std::to_string(end) + ") is invalid for a video with " +
                    std::to_string(v.frames()) + " frames");
    return {opts.frame_begin, end};
}

const Video& distance_source(const Video& v, const SearchConfig& cfg)
{
    return cfg.oracle_guide ? *cfg.oracle_guide : v;
}

int thread_count(const SearchOptions& opts)
{
    return opts.threads > 0 ? opts.threads : omp_get_max_threads();
}

// Candidate-frame offsets [lo, hi] in free mode: window clipped to the sequence.
std::pair<int, int> free_frame_offsets(int t, int frames, int radius)
{
    return {std::max(-radius, -t), std::min(radius, frames - 1 - t)};
}

// Distances from p to the candidates (x_lo .. x_lo + count - 1, y, t), each a
// full s x s comparison. The loop runs across candidates so it vectorizes;
// per candidate the terms are added in the same order as patch_distance.
void row_distances(const PaddedGuide& g, int channels, int s, PixelPos p, int t, int y, int x_lo,
                   int count, double* out)
{
    const int half = s / 2;
    std::fill_n(out, count, 0.0);
    for (int c = 0; c < channels; ++c)
        for (int h = -half; h <= half; ++h) {
            const float* a = g.at(p.t, c, p.y + h, p.x - half);
            const float* b = g.at(t, c, y + h, x_lo - half);
            for (int w = 0; w < s; ++w) {
                const double av = a[w];
                const float* bw = b + w;
#pragma omp simd
                for (int j = 0; j < count; ++j) {
                    const double d = av - static_cast<double>(bw[j]);
                    out[j] += d * d;
                }
            }
        }
}

void store(MatchTable& table, int x, int y, int t, std::span<const double> dists,
           std::span<const PixelPos> positions)
{
    auto out = table.at(x, y, t);
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = {positions[k], static_cast<float>(dists[k])};
}

}  // namespace

SearchMode parse_search_mode(const std::string& name)
{
    if (name == "free")
        return SearchMode::free;
    if (name == "one_per_frame" || name == "one-per-frame")
        return SearchMode::one_per_frame;
    throw Error("unknown search mode '" + name + "' (expected free or one-per-frame)");
}

std::string search_mode_name(SearchMode mode)
{
    return mode == SearchMode::free ? "free" : "one-per-frame";
}

void SearchConfig::validate(const Video& v) const
{
    auto odd = [](int k) { return k >= 1 && k % 2 == 1; };
    if (!odd(patch_size))
        throw Error("patch size must be odd and positive, got " + std::to_string(patch_size));
    if (!odd(spatial_window))
        throw Error("spatial window must be odd and positive, got " +
                    std::to_string(spatial_window));
    if (!odd(temporal_window))
        throw Error("temporal window must be odd and positive, got " +
                    std::to_string(temporal_window));
    if (num_neighbors < 1)
        throw Error("number of neighbors must be at least 1");
    if (mode == SearchMode::one_per_frame && num_neighbors != temporal_window)
        throw Error("one-per-frame mode needs neighbors == temporal window (" +
                    std::to_string(num_neighbors) + " != " + std::to_string(temporal_window) + ")");
    if (mode == SearchMode::free) {
        // fewest candidates: a corner pixel of the first frame
        const int r = spatial_window / 2, rt = temporal_window / 2;
        const long long fewest = static_cast<long long>(std::min(v.cols(), r + 1)) *
                                 std::min(v.rows(), r + 1) * std::min(v.frames(), rt + 1);
        if (num_neighbors > fewest)
            throw Error("free mode asks for " + std::to_string(num_neighbors) +
                        " neighbors but border pixels only have " + std::to_string(fewest) +
                        " candidates");
    }
    if (oracle_guide && !oracle_guide->same_shape(v))
        throw Error("oracle guide shape (" + oracle_guide->shape_string() +
                    ") differs from the video (" + v.shape_string() + ")");
}

MatchTable::MatchTable(int frames, int rows, int cols, int neighbors, SearchMode mode,
                       int first_frame, int frame_count)
    : frames_(frames), rows_(rows), cols_(cols), neighbors_(neighbors), mode_(mode),
      first_frame_(first_frame), frame_count_(frame_count),
      entries_(static_cast<std::size_t>(frame_count) * rows * cols * neighbors)
{
}

double patch_distance(const Video& v, PixelPos p, PixelPos q, int s)
{
    const int half = s / 2;
    double acc = 0.0;
    for (int c = 0; c < v.channels(); ++c)
        for (int h = -half; h <= half; ++h)
            for (int w = -half; w <= half; ++w) {
                const double d = static_cast<double>(sample_extended(v, p.x + w, p.y + h, p.t, c)) -
                                 sample_extended(v, q.x + w, q.y + h, q.t, c);
                acc += d * d;
            }
    return acc;
}

Video snap_to_distance_lattice(const Video& v)
{
    Video out = v;
    for (float& value : out.data())
        value = std::nearbyint(value * 1024.f) / 1024.f;
    return out;
}

MatchTable search_naive(const Video& v, const SearchConfig& cfg, const SearchOptions& opts)
{
    cfg.validate(v);
    const FrameRange range = resolve_frames(v, opts);
    const int T = v.frames(), H = v.rows(), W = v.cols(), C = v.channels();
    const int s = cfg.patch_size, n = cfg.num_neighbors;
    const int r = cfg.spatial_window / 2, rt = cfg.temporal_window / 2;
    const PaddedGuide guide(snap_to_distance_lattice(distance_source(v, cfg)), s / 2);

    MatchTable table(T, H, W, n, cfg.mode, range.begin, range.end - range.begin);
    const int rows_total = (range.end - range.begin) * H;

#pragma omp parallel for schedule(dynamic) num_threads(thread_count(opts))
    for (int job = 0; job < rows_total; ++job) {
        const int t = range.begin + job / H, y = job % H;
        std::vector<double> dists(n);
        std::vector<PixelPos> positions(n);
        std::vector<double> row(2 * r + 1);
        const int y_lo = std::max(0, y - r), y_hi = std::min(H - 1, y + r);
        for (int x = 0; x < W; ++x) {
            const PixelPos self{x, y, t};
            const int x_lo = std::max(0, x - r), x_hi = std::min(W - 1, x + r);
            if (cfg.mode == SearchMode::free) {
                std::fill(dists.begin(), dists.end(), kInf);
                std::fill(positions.begin(), positions.end(), kNoPos);
                dists[0] = 0.0;
                positions[0] = self;
                const auto [dt_lo, dt_hi] = free_frame_offsets(t, T, rt);
                for (int tc = t + dt_lo; tc <= t + dt_hi; ++tc)
                    for (int yc = y_lo; yc <= y_hi; ++yc) {
                        row_distances(guide, C, s, self, tc, yc, x_lo, x_hi - x_lo + 1, row.data());
                        for (int xc = x_lo; xc <= x_hi; ++xc) {
                            const PixelPos cand{xc, yc, tc};
                            if (cand == self)
                                continue;
                            insert_ordered<double>(dists, positions, cand, row[xc - x_lo]);
                        }
                    }
            } else {
                for (int k = 0; k < cfg.temporal_window; ++k) {
                    const bool centre = k == rt;
                    const int tc = reflect_index(t + k - rt, T);
                    double best = centre ? 0.0 : kInf;
                    PixelPos best_pos = centre ? self : kNoPos;
                    for (int yc = y_lo; yc <= y_hi; ++yc) {
                        row_distances(guide, C, s, self, tc, yc, x_lo, x_hi - x_lo + 1, row.data());
                        for (int xc = x_lo; xc <= x_hi; ++xc) {
                            const PixelPos cand{xc, yc, tc};
                            if (centre && cand == self)
                                continue;
                            const double d = row[xc - x_lo];
                            if (d < best) {
                                best = d;
                                best_pos = cand;
                            }
                        }
                    }
                    dists[k] = best;
                    positions[k] = best_pos;
                }
            }
            store(table, x, y, t, dists, positions);
        }
    }
    return table;
}

namespace {

// State for one row segment: output columns [x_begin, x_end) of row y.
struct Segment {
    int t, y, x_begin, x_end;
};

class SegmentSearcher {
public:
    SegmentSearcher(const PaddedGuide& guide, const SearchConfig& cfg, int frames, int rows,
                    int cols, int channels, int segment_columns)
        : guide_(guide), cfg_(cfg), T_(frames), H_(rows), W_(cols), C_(channels),
          s_(cfg.patch_size), half_(cfg.patch_size / 2), n_(cfg.num_neighbors),
          colsum_(static_cast<std::size_t>(segment_columns)),
          dists_(static_cast<std::size_t>(segment_columns) * n_),
          positions_(static_cast<std::size_t>(segment_columns) * n_),
          best_(segment_columns), best_pos_(segment_columns)
    {
    }

    void run(const Segment& seg, MatchTable& table)
    {
        const int len = seg.x_end - seg.x_begin;
        const int r = cfg_.spatial_window / 2, rt = cfg_.temporal_window / 2;
        if (cfg_.mode == SearchMode::free) {
            for (int i = 0; i < len; ++i) {
                auto d = table_dists(i);
                auto p = table_positions(i);
                std::fill(d.begin(), d.end(), kInf);
                std::fill(p.begin(), p.end(), kNoPos);
                d[0] = 0.0;
                p[0] = PixelPos{seg.x_begin + i, seg.y, seg.t};
            }
            const auto [dt_lo, dt_hi] = free_frame_offsets(seg.t, T_, rt);
            for (int dt = dt_lo; dt <= dt_hi; ++dt)
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        if (dt == 0 && dy == 0 && dx == 0)
                            continue;
                        visit_offset(seg, seg.t + dt, dy, dx, [&](int i, PixelPos q, double d) {
                            insert_ordered<double>(table_dists(i), table_positions(i), q, d);
                        });
                    }
            for (int i = 0; i < len; ++i)
                store(table, seg.x_begin + i, seg.y, seg.t, table_dists(i), table_positions(i));
            return;
        }

        for (int k = 0; k < cfg_.temporal_window; ++k) {
            const bool centre = k == rt;
            const int tc = reflect_index(seg.t + k - rt, T_);
            for (int i = 0; i < len; ++i) {
                best_[i] = centre ? 0.0 : kInf;
                best_pos_[i] = centre ? PixelPos{seg.x_begin + i, seg.y, seg.t} : kNoPos;
            }
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    if (centre && dy == 0 && dx == 0)
                        continue;
                    visit_offset(seg, tc, dy, dx, [&](int i, PixelPos q, double d) {
                        if (d < best_[i]) {
                            best_[i] = d;
                            best_pos_[i] = q;
                        }
                    });
                }
            for (int i = 0; i < len; ++i) {
                auto out = table.at(seg.x_begin + i, seg.y, seg.t);
                out[k] = {best_pos_[i], static_cast<float>(best_[i])};
            }
        }
    }

private:
    std::span<double> table_dists(int i)
    {
        return {dists_.data() + static_cast<std::size_t>(i) * n_, static_cast<std::size_t>(n_)};
    }
    std::span<PixelPos> table_positions(int i)
    {
        return {positions_.data() + static_cast<std::size_t>(i) * n_, static_cast<std::size_t>(n_)};
    }

    // Distances from every reference pixel of the segment to the candidate at
    // offset (dy, dx) in frame tc, for the pixels whose candidate is in frame.
    template <typename Visit>
    void visit_offset(const Segment& seg, int tc, int dy, int dx, Visit&& visit)
    {
        const int yc = seg.y + dy;
        if (yc < 0 || yc >= H_)
            return;
        const int xb = std::max(seg.x_begin, -dx);
        const int xe = std::min(seg.x_end, W_ - dx);
        if (xb >= xe)
            return;

        // Column sums over the s rows of the patch, for columns [xb - half, xe + half).
        const int first_col = xb - half_;
        const int ncols = xe - xb + s_ - 1;
        double* colsum = colsum_.data();
        std::fill_n(colsum, ncols, 0.0);
        const std::ptrdiff_t stride = guide_.stride();
        for (int c = 0; c < C_; ++c) {
            const float* ref = guide_.at(seg.t, c, seg.y - half_, first_col);
            const float* cand = guide_.at(tc, c, yc - half_, first_col + dx);
            for (int h = 0; h < s_; ++h, ref += stride, cand += stride)
                for (int i = 0; i < ncols; ++i) {
                    const double d = static_cast<double>(ref[i]) - static_cast<double>(cand[i]);
                    colsum[i] += d * d;
                }
        }

        // Horizontal box sum of width s, sliding. Exact on the distance lattice.
        double acc = 0.0;
        for (int i = 0; i < s_; ++i)
            acc += colsum[i];
        for (int x = xb;; ++x) {
            visit(x - seg.x_begin, PixelPos{x + dx, yc, tc}, acc);
            if (x + 1 >= xe)
                break;
            const int i = x - xb;
            acc += colsum[i + s_] - colsum[i];
        }
    }

    const PaddedGuide& guide_;
    const SearchConfig& cfg_;
    int T_, H_, W_, C_;
    int s_, half_, n_;
    std::vector<double> colsum_;
    std::vector<double> dists_;
    std::vector<PixelPos> positions_;
    std::vector<double> best_;
    std::vector<PixelPos> best_pos_;
};

}  // namespace

MatchTable search_fast(const Video& v, const SearchConfig& cfg, const SearchOptions& opts)
{
    cfg.validate(v);
    const FrameRange range = resolve_frames(v, opts);
    const int T = v.frames(), H = v.rows(), W = v.cols(), C = v.channels();
    const int s = cfg.patch_size;
    const PaddedGuide guide(snap_to_distance_lattice(distance_source(v, cfg)), s / 2);

    // Row segments of `segment_length` column sums overlap by s - 1 columns,
    // so each yields segment_length - s + 1 complete distances.
    const int outputs_per_segment = std::max(1, opts.segment_length - (s - 1));
    const int segment_columns = outputs_per_segment + s - 1;
    const int segments_per_row = (W + outputs_per_segment - 1) / outputs_per_segment;

    MatchTable table(T, H, W, cfg.num_neighbors, cfg.mode, range.begin, range.end - range.begin);
    const long long jobs = static_cast<long long>(range.end - range.begin) * H * segments_per_row;

#pragma omp parallel num_threads(thread_count(opts))
    {
        SegmentSearcher searcher(guide, cfg, T, H, W, C, segment_columns);
#pragma omp for schedule(dynamic)
        for (long long job = 0; job < jobs; ++job) {
            const int seg_index = static_cast<int>(job % segments_per_row);
            const long long row = job / segments_per_row;
            Segment seg;
            seg.t = range.begin + static_cast<int>(row / H);
            seg.y = static_cast<int>(row % H);
            seg.x_begin = seg_index * outputs_per_segment;
            seg.x_end = std::min(W, seg.x_begin + outputs_per_segment);
            searcher.run(seg, table);
        }
    }
    return table;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written in host order and assume a little-endian host");

constexpr char kTableMagic[4] = {'V', 'N', 'L', 'M'};
constexpr std::uint32_t kTableVersion = 1;

template <typename T>
void put(std::ostream& out, T value)
{
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path)
{
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in)
        throw Error("truncated match table " + path.string());
    return value;
}

}  // namespace

void save_match_table(const MatchTable& table, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out.write(kTableMagic, 4);
    put<std::uint32_t>(out, kTableVersion);
    for (int v : {table.frames(), table.rows(), table.cols(), table.neighbors(),
                  static_cast<int>(table.mode()), table.first_frame(), table.frame_count()})
        put<std::int32_t>(out, v);
    for (const MatchEntry& e : table.entries()) {
        put<std::int32_t>(out, e.pos.x);
        put<std::int32_t>(out, e.pos.y);
        put<std::int32_t>(out, e.pos.t);
        put<float>(out, e.dist);
    }
    if (!out)
        throw Error("write failed for " + path.string());
}

MatchTable load_match_table(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path.string());
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || !std::equal(magic, magic + 4, kTableMagic))
        throw Error("not a match table: " + path.string());
    if (get<std::uint32_t>(in, path) != kTableVersion)
        throw Error("unsupported match table version in " + path.string());
    int dims[7];
    for (int& d : dims)
        d = get<std::int32_t>(in, path);
    const auto [T, H, W, n, mode, first, count] = dims;
    if (T < 1 || H < 1 || W < 1 || n < 1 || (mode != 0 && mode != 1) || first < 0 || count < 1 ||
        first + count > T)
        throw Error("corrupt match table header in " + path.string());
    MatchTable table(T, H, W, n, static_cast<SearchMode>(mode), first, count);
    for (int t = first; t < first + count; ++t)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                for (MatchEntry& e : table.at(x, y, t)) {
                    e.pos.x = get<std::int32_t>(in, path);
                    e.pos.y = get<std::int32_t>(in, path);
                    e.pos.t = get<std::int32_t>(in, path);
                    e.dist = get<float>(in, path);
                }
    return table;
}

}  // namespace vnl
