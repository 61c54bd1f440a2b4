#include "vnlnet/nl_features.hpp"

namespace vnl {

NlFeatures gather_features(const Video& v, const MatchTable& m)
{
    if (m.frames() != v.frames() || m.rows() != v.rows() || m.cols() != v.cols())
        throw Error("gather_features: match table (" + std::to_string(m.frames()) + "x" +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                    ") does not match video (" + v.shape_string() + ")");
    const int C = v.channels(), n = m.neighbors(), H = v.rows(), W = v.cols();
    NlFeatures f;
    f.first_frame = m.first_frame();
    f.neighbors = n;
    f.color_channels = C;
    f.values = Tensor4<float>(m.frame_count(), n * C, H, W);

    const int planes = m.frame_count() * H;
#pragma omp parallel for schedule(static)
    for (int job = 0; job < planes; ++job) {
        const int ti = job / H, y = job % H;
        const int t = m.first_frame() + ti;
        for (int x = 0; x < W; ++x) {
            const auto matches = m.at(x, y, t);
            for (int k = 0; k < n; ++k) {
                const PixelPos p = matches[k].pos;
                for (int c = 0; c < C; ++c)
                    f.values(ti, k * C + c, y, x) = v(p.t, c, p.y, p.x);
            }
        }
    }
    return f;
}

Video nl_pixel_mean(const NlFeatures& f)
{
    const int C = f.color_channels, n = f.neighbors;
    const int frames = f.values.n(), H = f.values.h(), W = f.values.w();
    if (C < 1 || n < 1 || f.values.c() != n * C)
        throw Error("nl_pixel_mean: inconsistent feature layout");
    Video out(frames, C, H, W);
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int t = 0; t < frames; ++t)
        for (int c = 0; c < C; ++c) {
            float* dst = out.plane(t, c);
            for (std::size_t i = 0; i < plane; ++i) {
                double acc = 0.0;
                for (int k = 0; k < n; ++k)
                    acc += f.values.plane(t, k * C + c)[i];
                dst[i] = static_cast<float>(acc / n);
            }
        }
    return out;
}

}  // namespace vnl
