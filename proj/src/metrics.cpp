#include "vnlnet/metrics.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace vnl {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kPeak = 255.0;

void require_same_shape(const Video& a, const Video& b, const char* what)
{
    if (!a.same_shape(b))
        throw Error(std::string(what) + ": shape mismatch (" + a.shape_string() + " vs " +
                    b.shape_string() + ")");
}

std::array<double, kWindow> gaussian_window()
{
    std::array<double, kWindow> w{};
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kWindow / 2;
        w[i] = std::exp(-d * d / (2 * kWindowSigma * kWindowSigma));
        sum += w[i];
    }
    for (double& v : w)
        v /= sum;
    return w;
}

std::string format_value(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

}  // namespace

double psnr(const Video& ref, const Video& test)
{
    require_same_shape(ref, test, "psnr");
    auto a = ref.data();
    auto b = test.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = double(a[i]) - double(b[i]);
        acc += d * d;
    }
    const double mse = acc / static_cast<double>(a.size());
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(kPeak * kPeak / mse);
}

double ssim_plane(const float* ref, const float* test, int rows, int cols)
{
    if (rows < kWindow || cols < kWindow)
        throw Error("ssim: frame " + std::to_string(cols) + "x" + std::to_string(rows) +
                    " is smaller than the 11x11 window");
    static const auto window = gaussian_window();
    const double c1 = (0.01 * kPeak) * (0.01 * kPeak);
    const double c2 = (0.03 * kPeak) * (0.03 * kPeak);
    const int out_cols = cols - kWindow + 1, out_rows = rows - kWindow + 1;

    // horizontal pass of the five moment images
    const std::size_t hsize = static_cast<std::size_t>(rows) * out_cols;
    std::vector<double> hx(hsize), hy(hsize), hxx(hsize), hyy(hsize), hxy(hsize);
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < out_cols; ++x) {
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            for (int k = 0; k < kWindow; ++k) {
                const std::size_t i = static_cast<std::size_t>(y) * cols + x + k;
                const double a = ref[i], b = test[i];
                sx += window[k] * a;
                sy += window[k] * b;
                sxx += window[k] * a * a;
                syy += window[k] * b * b;
                sxy += window[k] * a * b;
            }
            const std::size_t o = static_cast<std::size_t>(y) * out_cols + x;
            hx[o] = sx, hy[o] = sy, hxx[o] = sxx, hyy[o] = syy, hxy[o] = sxy;
        }

    double total = 0.0;
    for (int y = 0; y < out_rows; ++y)
        for (int x = 0; x < out_cols; ++x) {
            double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
            for (int k = 0; k < kWindow; ++k) {
                const std::size_t i = static_cast<std::size_t>(y + k) * out_cols + x;
                mx += window[k] * hx[i];
                my += window[k] * hy[i];
                mxx += window[k] * hxx[i];
                myy += window[k] * hyy[i];
                mxy += window[k] * hxy[i];
            }
            const double vx = mxx - mx * mx, vy = myy - my * my, cov = mxy - mx * my;
            total += ((2 * mx * my + c1) * (2 * cov + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    return total / (static_cast<double>(out_rows) * out_cols);
}

double ssim(const Video& ref, const Video& test)
{
    require_same_shape(ref, test, "ssim");
    double acc = 0.0;
    for (int t = 0; t < ref.frames(); ++t)
        for (int c = 0; c < ref.channels(); ++c)
            acc += ssim_plane(ref.plane(t, c), test.plane(t, c), ref.rows(), ref.cols());
    return acc / (static_cast<double>(ref.frames()) * ref.channels());
}

MetricReport evaluate(const Video& ref, const Video& test)
{
    require_same_shape(ref, test, "evaluate");
    MetricReport report;
    const bool ssim_ok = ref.rows() >= kWindow && ref.cols() >= kWindow;
    for (int t = 0; t < ref.frames(); ++t) {
        const Video a = ref.frames_slice(t, 1), b = test.frames_slice(t, 1);
        report.psnr.push_back(psnr(a, b));
        report.ssim.push_back(ssim_ok ? ssim(a, b) : std::numeric_limits<double>::quiet_NaN());
    }
    for (std::size_t i = 0; i < report.psnr.size(); ++i) {
        report.mean_psnr += report.psnr[i];
        report.mean_ssim += report.ssim[i];
    }
    report.mean_psnr /= static_cast<double>(report.psnr.size());
    report.mean_ssim /= static_cast<double>(report.ssim.size());
    return report;
}

void MetricReport::print_table(std::ostream& out) const
{
    out << std::setw(6) << "frame" << std::setw(12) << "psnr" << std::setw(10) << "ssim" << '\n';
    for (std::size_t i = 0; i < psnr.size(); ++i)
        out << std::setw(6) << i << std::setw(12) << format_value(psnr[i]) << std::setw(10)
            << format_value(ssim[i]) << '\n';
    out << std::setw(6) << "mean" << std::setw(12) << format_value(mean_psnr) << std::setw(10)
        << format_value(mean_ssim) << '\n';
}

void MetricReport::print_csv(std::ostream& out) const
{
    out << "frame,psnr,ssim\n";
    for (std::size_t i = 0; i < psnr.size(); ++i)
        out << i << ',' << format_value(psnr[i]) << ',' << format_value(ssim[i]) << '\n';
}

}  // namespace vnl
