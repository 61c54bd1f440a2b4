#pragma once

#include <iosfwd>
#include <vector>

#include "vnlnet/video.hpp"

namespace vnl {

/// 10 log10(255^2 / MSE) over all samples of the two videos (any number of
/// frames). +infinity when the inputs are identical.
double psnr(const Video& ref, const Video& test);

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, L = 255, averaged over window positions fully inside the frame,
/// then over channels and frames.
double ssim(const Video& ref, const Video& test);

/// SSIM of one channel plane (rows x cols, row-major).
double ssim_plane(const float* ref, const float* test, int rows, int cols);

struct MetricReport {
    std::vector<double> psnr;
    std::vector<double> ssim;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;

    void print_table(std::ostream& out) const;
    void print_csv(std::ostream& out) const;
};

/// Per-frame PSNR and SSIM. Frames smaller than the SSIM window get NaN SSIM.
MetricReport evaluate(const Video& ref, const Video& test);

}  // namespace vnl
