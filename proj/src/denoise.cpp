#include "vnlnet/denoise.hpp"

#include <algorithm>

namespace vnl {

Tensor4<float> feature_frame(const NlFeatures& f, int t)
{
    const int ti = t - f.first_frame;
    if (ti < 0 || ti >= f.values.n())
        throw Error("feature_frame: frame " + std::to_string(t) + " not covered");
    Tensor4<float> out(1, f.values.c(), f.values.h(), f.values.w());
    std::copy_n(f.values.plane(ti, 0), out.size(), out.data().begin());
    return out;
}

Tensor4<float> video_frame(const Video& v, int t)
{
    Tensor4<float> out(1, v.channels(), v.rows(), v.cols());
    std::copy_n(v.plane(t, 0), out.size(), out.data().begin());
    return out;
}

void check_network_matches(const NetworkConfig& net, const SearchConfig& cfg, int color_channels)
{
    if (net.color_channels != color_channels)
        throw Error("network was trained for " + std::to_string(net.color_channels) +
                    "-channel video, input has " + std::to_string(color_channels));
    const int expected = net.no_patch ? color_channels : cfg.num_neighbors * color_channels;
    if (net.input_channels != expected)
        throw Error("network expects " + std::to_string(net.input_channels) +
                    " input channels but the search produces n*C = " +
                    std::to_string(cfg.num_neighbors) + "*" + std::to_string(color_channels) +
                    " = " + std::to_string(expected));
}

Video denoise(const Video& noisy, Network<float>& net, const SearchConfig& cfg,
              const SearchOptions& opts)
{
    check_network_matches(net.config(), cfg, noisy.channels());
    const int begin = opts.frame_begin;
    const int end = opts.frame_end < 0 ? noisy.frames() : opts.frame_end;
    if (begin < 0 || end > noisy.frames() || begin >= end)
        throw Error("denoise: invalid frame range");

    Video out(end - begin, noisy.channels(), noisy.rows(), noisy.cols());
    for (int t = begin; t < end; ++t) {
        Tensor4<float> input;
        if (net.config().no_patch) {
            input = video_frame(noisy, t);
        } else {
            SearchOptions one = opts;
            one.frame_begin = t;
            one.frame_end = t + 1;
            input = feature_frame(gather_features(noisy, search_fast(noisy, cfg, one)), t);
        }
        const Tensor4<float> residual = net.forward(input, false);
        for (int c = 0; c < noisy.channels(); ++c) {
            const float* src = noisy.plane(t, c);
            const float* r = residual.plane(0, c);
            float* dst = out.plane(t - begin, c);
            for (std::size_t i = 0; i < residual.plane_size(); ++i)
                dst[i] = src[i] - r[i];
        }
    }
    return out;
}

Video nl_mean_denoise(const Video& noisy, const SearchConfig& cfg, const SearchOptions& opts)
{
    return nl_pixel_mean(gather_features(noisy, search_fast(noisy, cfg, opts)));
}

}  // namespace vnl
