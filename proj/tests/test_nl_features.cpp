#include "doctest.h"

#include <cmath>
#include <set>

#include "test_support.hpp"
#include "vnlnet/denoise.hpp"
#include "vnlnet/metrics.hpp"
#include "vnlnet/nl_features.hpp"
#include "vnlnet/noise.hpp"

using namespace vnl;

namespace {

SearchConfig make_cfg(int s, int ws, int wt, int n, SearchMode mode)
{
    SearchConfig cfg;
    cfg.patch_size = s;
    cfg.spatial_window = ws;
    cfg.temporal_window = wt;
    cfg.num_neighbors = n;
    cfg.mode = mode;
    return cfg;
}

Video static_video(const Video& frame, int T)
{
    Video v(T, frame.channels(), frame.rows(), frame.cols());
    for (int t = 0; t < T; ++t)
        for (int c = 0; c < frame.channels(); ++c)
            std::copy_n(frame.plane(0, c), frame.rows() * frame.cols(), v.plane(t, c));
    return v;
}

}  // namespace

TEST_CASE("constant video gathers the constant")
{
    const Video v(3, 3, 6, 6, 17.f);
    const auto f = gather_features(v, search_fast(v, make_cfg(3, 3, 3, 4, SearchMode::free)));
    CHECK(f.channels() == 12);
    for (float x : f.values.data())
        CHECK(x == 17.f);
    const Video mean = nl_pixel_mean(f);
    for (float x : mean.data())
        CHECK(x == 17.f);
}

TEST_CASE("channel-0 identity in free mode")
{
    for (int C : {1, 3}) {
        const Video v = testing::random_video(4, C, 9, 10, 30 + C);
        const auto f = gather_features(v, search_fast(v, make_cfg(5, 5, 3, 5, SearchMode::free)));
        REQUIRE(f.values.n() == 4);
        for (int t = 0; t < 4; ++t)
            for (int c = 0; c < C; ++c)
                for (int y = 0; y < 9; ++y)
                    for (int x = 0; x < 10; ++x)
                        CHECK(f.values(t, c, y, x) == v(t, c, y, x));
    }
}

TEST_CASE("gathered values come from the video, also with an oracle guide")
{
    const Video v = testing::random_video(3, 1, 8, 8, 3);
    const Video clean = testing::random_video(3, 1, 8, 8, 4);
    SearchConfig cfg = make_cfg(3, 5, 3, 3, SearchMode::one_per_frame);
    cfg.oracle_guide = &clean;
    const MatchTable m = search_fast(v, cfg);
    const auto f = gather_features(v, m);
    const std::set<float> source(v.data().begin(), v.data().end());
    for (int t = 0; t < 3; ++t)
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x)
                for (int k = 0; k < 3; ++k) {
                    const PixelPos p = m.at(x, y, t)[k].pos;
                    CHECK(f.values(t, k, y, x) == v(p.t, 0, p.y, p.x));
                    CHECK(source.count(f.values(t, k, y, x)) == 1);
                }
}

TEST_CASE("dimension mismatch")
{
    const Video v = testing::random_video(3, 1, 8, 8, 3);
    const MatchTable m = search_fast(v, make_cfg(3, 3, 3, 3, SearchMode::free));
    CHECK_THROWS_AS(gather_features(Video(3, 1, 8, 9), m), Error);
    CHECK_THROWS_AS(gather_features(Video(2, 1, 8, 8), m), Error);
}

TEST_CASE("nl_pixel_mean")
{
    SUBCASE("n = 1 is the identity")
    {
        const Video v = testing::random_video(2, 3, 5, 6, 8);
        CHECK(nl_pixel_mean(gather_features(v, search_fast(v, make_cfg(3, 3, 1, 1,
                                                                       SearchMode::free)))) == v);
    }
    SUBCASE("shifting the video by a constant shifts the mean")
    {
        const Video v = testing::random_integer_video(3, 1, 10, 10, 9);
        Video w = v;
        for (float& x : w.data())
            x += 37.f;
        const auto cfg = make_cfg(3, 5, 3, 4, SearchMode::free);
        const Video a = nl_pixel_mean(gather_features(v, search_fast(v, cfg)));
        const Video b = nl_pixel_mean(gather_features(w, search_fast(w, cfg)));
        for (std::size_t i = 0; i < a.data().size(); ++i)
            CHECK(b.data()[i] == a.data()[i] + 37.f);
    }
    SUBCASE("static video: one match per frame, at the same site")
    {
        const Video frame = testing::random_video(1, 1, 24, 24, 10);
        const Video clean = static_video(frame, 15);
        const Video noisy = add_awgn(clean, 20.0, 5);
        const auto cfg = make_cfg(9, 9, 15, 15, SearchMode::one_per_frame);
        SearchOptions opts;
        opts.frame_begin = 7;
        opts.frame_end = 8;
        const MatchTable m = search_fast(noisy, cfg, opts);
        const auto f = gather_features(noisy, m);
        int aligned = 0, total = 0;
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 24; ++x)
                for (int k = 0; k < 15; ++k) {
                    const PixelPos p = m.at(x, y, 7)[k].pos;
                    aligned += p.x == x && p.y == y;
                    ++total;
                    CHECK(f.values(0, k, y, x) == noisy(p.t, 0, p.y, p.x));
                }
        // strong texture (std ~74) makes misaligned matches very unlikely
        CHECK(aligned > 0.99 * total);
    }
}

TEST_CASE("Non-Local Pixel Mean on a static clip gains about 11.8 dB")
{
    Video frame(1, 1, 48, 48);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x)
            frame(0, 0, y, x) = float(128 + 90 * std::sin(0.7 * x) * std::cos(0.45 * y));
    const Video clean = static_video(frame, 15);
    const Video noisy = add_awgn(clean, 20.0, 12);
    SearchOptions opts;
    opts.frame_begin = 7;
    opts.frame_end = 8;
    const Video out = nl_mean_denoise(noisy, make_cfg(21, 21, 15, 15, SearchMode::one_per_frame),
                                      opts);
    const double gain = psnr(clean.frames_slice(7, 1), out) - psnr(clean.frames_slice(7, 1),
                                                                   noisy.frames_slice(7, 1));
    CHECK(std::abs(gain - 10 * std::log10(15.0)) <= 1.5);
}
