#include "doctest.h"

#include <cmath>
#include <sstream>

#include "test_support.hpp"
#include "vnlnet/metrics.hpp"
#include "vnlnet/noise.hpp"

using namespace vnl;

namespace {

// Direct SSIM: every 11x11 window evaluated from scratch with the 2-D weights.
double ssim_direct(const Video& a, const Video& b)
{
    double g[11], sum = 0;
    for (int i = 0; i < 11; ++i)
        sum += g[i] = std::exp(-(i - 5) * (i - 5) / (2 * 1.5 * 1.5));
    const double c1 = 6.5025, c2 = 58.5225;
    double total = 0;
    int count = 0;
    for (int y = 0; y + 11 <= a.rows(); ++y)
        for (int x = 0; x + 11 <= a.cols(); ++x) {
            double mx = 0, my = 0;
            for (int i = 0; i < 11; ++i)
                for (int j = 0; j < 11; ++j) {
                    const double w = g[i] * g[j] / (sum * sum);
                    mx += w * a(0, 0, y + i, x + j);
                    my += w * b(0, 0, y + i, x + j);
                }
            double vx = 0, vy = 0, cov = 0;
            for (int i = 0; i < 11; ++i)
                for (int j = 0; j < 11; ++j) {
                    const double w = g[i] * g[j] / (sum * sum);
                    const double dx = a(0, 0, y + i, x + j) - mx, dy = b(0, 0, y + i, x + j) - my;
                    vx += w * dx * dx;
                    vy += w * dy * dy;
                    cov += w * dx * dy;
                }
            total += (2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    return total / count;
}

}  // namespace

TEST_CASE("psnr")
{
    const Video ref = testing::random_video(2, 1, 20, 20, 1);
    CHECK(std::isinf(psnr(ref, ref)));

    Video plus = ref;
    for (float& x : plus.data())
        x += 255.f;
    CHECK(std::abs(psnr(ref, plus)) < 1e-6);

    Video twenty = ref;
    for (std::size_t i = 0; i < twenty.data().size(); ++i)
        twenty.data()[i] += i % 2 ? 20.f : -20.f;  // MSE exactly 400
    CHECK(psnr(ref, twenty) == doctest::Approx(20 * std::log10(255.0 / 20)).epsilon(1e-6));
    CHECK(psnr(ref, twenty) == doctest::Approx(22.11).epsilon(0.001));

    const Video other = testing::random_video(2, 1, 20, 20, 2);
    double acc = 0;
    for (std::size_t i = 0; i < ref.data().size(); ++i)
        acc += std::pow(double(ref.data()[i]) - other.data()[i], 2);
    CHECK(psnr(ref, other) == doctest::Approx(10 * std::log10(255.0 * 255.0 / (acc / ref.data().size()))));
    CHECK(psnr(ref, other) == psnr(other, ref));

    CHECK_THROWS_AS(psnr(ref, Video(2, 1, 20, 21)), Error);
}

TEST_CASE("ssim")
{
    const Video ref = testing::random_video(1, 1, 24, 30, 3);
    CHECK(ssim(ref, ref) == doctest::Approx(1.0).epsilon(1e-12));

    SUBCASE("matches a direct window-by-window evaluation")
    {
        const Video test = add_awgn(ref, 25.0, 4);
        CHECK(ssim(ref, test) == doctest::Approx(ssim_direct(ref, test)).epsilon(1e-9));
    }
    SUBCASE("constant against constant + 10")
    {
        const double a = 100;
        const Video x(1, 1, 16, 16, float(a)), y(1, 1, 16, 16, float(a + 10));
        const double c1 = std::pow(0.01 * 255, 2);
        CHECK(ssim(x, y) == doctest::Approx((2 * a * (a + 10) + c1) /
                                            (a * a + (a + 10) * (a + 10) + c1)).epsilon(1e-9));
    }
    SUBCASE("negative image")
    {
        Video checker(1, 1, 32, 32);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x)
                checker(0, 0, y, x) = ((x / 2 + y / 2) % 2) ? 230.f : 25.f;
        Video negative = checker;
        for (float& v : negative.data())
            v = 255.f - v;
        CHECK(ssim(checker, negative) < 0.1);
    }
    SUBCASE("invariant under a common shift")
    {
        const Video test = add_awgn(ref, 10.0, 5);
        Video a = ref, b = test;
        for (float& v : a.data())
            v += 7.f;
        for (float& v : b.data())
            v += 7.f;
        // only the luminance term sees the shift, and it stays near 1 here
        CHECK(ssim(a, b) == doctest::Approx(ssim(ref, test)).epsilon(0.02));
    }
    SUBCASE("color is the mean of the channel values")
    {
        const Video c = testing::random_video(1, 3, 16, 16, 6);
        const Video d = add_awgn(c, 15.0, 7);
        double acc = 0;
        for (int ch = 0; ch < 3; ++ch)
            acc += ssim_plane(c.plane(0, ch), d.plane(0, ch), 16, 16);
        CHECK(ssim(c, d) == doctest::Approx(acc / 3));
    }
    CHECK_THROWS_AS(ssim(Video(1, 1, 10, 20), Video(1, 1, 10, 20)), Error);
}

TEST_CASE("metric report")
{
    const Video ref = testing::random_video(3, 1, 16, 16, 8);
    const Video test = add_awgn(ref, 20.0, 9);
    const MetricReport r = evaluate(ref, test);
    REQUIRE(r.psnr.size() == 3);
    CHECK(r.mean_psnr == doctest::Approx((r.psnr[0] + r.psnr[1] + r.psnr[2]) / 3));

    std::ostringstream csv;
    r.print_csv(csv);
    CHECK(csv.str().rfind("frame,psnr,ssim\n", 0) == 0);

    std::ostringstream same;
    evaluate(ref, ref).print_table(same);
    CHECK(same.str().find("inf") != std::string::npos);
}
