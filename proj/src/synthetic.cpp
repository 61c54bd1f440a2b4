#include "vnlnet/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "vnlnet/noise.hpp"

namespace vnl {

namespace {

// Separable Gaussian blur with reflected borders, in place.
void blur(std::vector<double>& img, int rows, int cols, double sigma)
{
    const int radius = static_cast<int>(std::ceil(3 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0;
    for (int i = -radius; i <= radius; ++i)
        sum += kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (double& k : kernel)
        k /= sum;

    std::vector<double> tmp(img.size());
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) {
            double acc = 0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * img[static_cast<std::size_t>(y) * cols + reflect_index(x + i, cols)];
            tmp[static_cast<std::size_t>(y) * cols + x] = acc;
        }
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) {
            double acc = 0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp[static_cast<std::size_t>(reflect_index(y + i, rows)) * cols + x];
            img[static_cast<std::size_t>(y) * cols + x] = acc;
        }
}

void normalize(std::vector<double>& img, double lo, double hi)
{
    const auto [mn, mx] = std::minmax_element(img.begin(), img.end());
    const double a = *mn, b = *mx;
    for (double& v : img)
        v = b > a ? lo + (hi - lo) * (v - a) / (b - a) : 0.5 * (lo + hi);
}

class Draws {
public:
    explicit Draws(std::uint64_t seed) : rng_(seed) {}
    double uniform() { return rng_.uniforms(counter_++, 7)[0]; }
    double gaussian() { return rng_.gaussian(counter_++, 8); }
    int integer(int lo, int hi) { return lo + static_cast<int>(uniform() * (hi - lo + 1)); }

private:
    Philox4x32 rng_;
    std::uint64_t counter_ = 0;
};

// One channel of the canvas texture.
std::vector<double> texture(int rows, int cols, Draws& draws)
{
    const std::size_t size = static_cast<std::size_t>(rows) * cols;
    std::vector<double> out(size, 0.0);
    for (double sigma : {6.0, 2.5}) {
        std::vector<double> layer(size);
        for (double& v : layer)
            v = draws.gaussian();
        blur(layer, rows, cols, sigma);
        normalize(layer, -1.0, 1.0);
        const double weight = sigma > 3 ? 1.0 : 0.35;
        for (std::size_t i = 0; i < size; ++i)
            out[i] += weight * layer[i];
    }
    normalize(out, 40.0, 200.0);
    // flat shapes give sharp edges
    const int shapes = 3 + draws.integer(0, 3);
    for (int s = 0; s < shapes; ++s) {
        const double cx = draws.uniform() * cols, cy = draws.uniform() * rows;
        const double rad = 4 + draws.uniform() * std::min(rows, cols) / 6.0;
        const double level = 30 + draws.uniform() * 195;
        const bool disc = draws.uniform() < 0.5;
        for (int y = 0; y < rows; ++y)
            for (int x = 0; x < cols; ++x) {
                const double dx = x - cx, dy = y - cy;
                const bool inside = disc ? dx * dx + dy * dy < rad * rad
                                         : std::abs(dx) < rad && std::abs(dy) < 0.6 * rad;
                if (inside)
                    out[static_cast<std::size_t>(y) * cols + x] = level;
            }
    }
    return out;
}

}  // namespace

Video make_clip(const ClipSpec& spec)
{
    const int travel_x = std::abs(spec.velocity_x) * (spec.frames - 1);
    const int travel_y = std::abs(spec.velocity_y) * (spec.frames - 1);
    const int canvas_rows = spec.rows + travel_y, canvas_cols = spec.cols + travel_x;
    Draws draws(spec.seed);

    Video out(spec.frames, spec.channels, spec.rows, spec.cols);
    for (int c = 0; c < spec.channels; ++c) {
        const std::vector<double> canvas = texture(canvas_rows, canvas_cols, draws);
        for (int t = 0; t < spec.frames; ++t) {
            // origin moves so that the content translates by the velocity
            const int ox = spec.velocity_x >= 0 ? travel_x - spec.velocity_x * t : -spec.velocity_x * t;
            const int oy = spec.velocity_y >= 0 ? travel_y - spec.velocity_y * t : -spec.velocity_y * t;
            for (int y = 0; y < spec.rows; ++y)
                for (int x = 0; x < spec.cols; ++x)
                    out(t, c, y, x) = static_cast<float>(
                        std::round(canvas[static_cast<std::size_t>(y + oy) * canvas_cols + x + ox]));
        }
    }
    return out;
}

std::vector<Video> make_corpus(int count, int frames, int rows, int cols, int channels,
                               double moving_fraction, std::uint64_t seed)
{
    std::vector<Video> clips;
    Draws draws(derive_seed(seed, 0x636f72707573ull));
    for (int i = 0; i < count; ++i) {
        ClipSpec spec;
        spec.frames = frames;
        spec.rows = rows;
        spec.cols = cols;
        spec.channels = channels;
        spec.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
        if (draws.uniform() < moving_fraction) {
            spec.velocity_x = draws.integer(-2, 2);
            spec.velocity_y = draws.integer(-2, 2);
            if (spec.velocity_x == 0 && spec.velocity_y == 0)
                spec.velocity_x = 1;
        }
        clips.push_back(make_clip(spec));
    }
    return clips;
}

}  // namespace vnl
