#include "vnlnet/noise.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace vnl {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr std::uint32_t kStreamAwgn = 1;
constexpr std::uint32_t kStreamBox = 2;
constexpr std::uint32_t kStreamSaltPepper = 3;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

std::uint64_t splitmix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

Philox4x32::Block Philox4x32::operator()(std::uint64_t index, std::uint32_t stream) const
{
    Block ctr{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), stream, 0};
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
        k0 += kPhiloxW0;
        k1 += kPhiloxW1;
    }
    return ctr;
}

std::array<double, 2> Philox4x32::uniforms(std::uint64_t index, std::uint32_t stream) const
{
    const Block b = (*this)(index, stream);
    constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
    const std::uint64_t a = (static_cast<std::uint64_t>(b[0]) << 32 | b[1]) >> 11;
    const std::uint64_t c = (static_cast<std::uint64_t>(b[2]) << 32 | b[3]) >> 11;
    return {static_cast<double>(a) * scale, static_cast<double>(c) * scale};
}

double Philox4x32::gaussian(std::uint64_t index, std::uint32_t stream) const
{
    const auto [u1, u2] = uniforms(index, stream);
    const double radius = std::sqrt(-2.0 * std::log(1.0 - u1));  // 1-u1 in (0, 1]
    return radius * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c)
{
    return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

void NoiseSpec::validate() const
{
    switch (kind) {
    case NoiseKind::awgn:
    case NoiseKind::box_correlated:
        if (!(sigma >= 0.0) || !std::isfinite(sigma))
            throw Error("noise sigma must be a finite value >= 0");
        break;
    case NoiseKind::salt_pepper_uniform:
        if (!(fraction >= 0.0 && fraction <= 1.0))
            throw Error("salt-and-pepper fraction must lie in [0, 1]");
        break;
    }
}

std::string NoiseSpec::describe() const
{
    std::ostringstream os;
    os << "noise=" << noise_kind_name(kind) << '\n';
    if (kind == NoiseKind::salt_pepper_uniform)
        os << "fraction=" << fraction << '\n';
    else
        os << "sigma=" << sigma << '\n';
    os << "seed=" << seed << '\n';
    os << "rng=philox4x32-10\n";
    return os.str();
}

NoiseKind parse_noise_kind(const std::string& name)
{
    if (name == "awgn")
        return NoiseKind::awgn;
    if (name == "box" || name == "box_correlated")
        return NoiseKind::box_correlated;
    if (name == "sp" || name == "salt_pepper_uniform")
        return NoiseKind::salt_pepper_uniform;
    throw Error("unknown noise kind '" + name + "' (expected awgn, box or sp)");
}

std::string noise_kind_name(NoiseKind kind)
{
    switch (kind) {
    case NoiseKind::awgn: return "awgn";
    case NoiseKind::box_correlated: return "box";
    case NoiseKind::salt_pepper_uniform: return "sp";
    }
    return "?";
}

Video add_awgn(const Video& u, double sigma, std::uint64_t seed)
{
    Video v = u;
    if (sigma == 0.0)
        return v;
    const Philox4x32 rng(seed);
    auto data = v.data();
    const auto count = static_cast<std::int64_t>(data.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i)
        data[i] = static_cast<float>(data[i] + sigma * rng.gaussian(i, kStreamAwgn));
    return v;
}

Video add_box_correlated(const Video& u, double sigma, std::uint64_t seed)
{
    Video v = u;
    if (sigma == 0.0)
        return v;
    const Philox4x32 rng(seed);
    const int H = u.rows(), W = u.cols();
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const int planes = u.frames() * u.channels();

#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        std::vector<double> white(plane);
        const std::uint64_t base = static_cast<std::uint64_t>(p) * plane;
        for (std::size_t i = 0; i < plane; ++i)
            white[i] = 3.0 * sigma * rng.gaussian(base + i, kStreamBox);
        float* out = v.data().data() + base;
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                double acc = 0.0;
                for (int dy = -1; dy <= 1; ++dy) {
                    const int yy = reflect_index(y + dy, H);
                    for (int dx = -1; dx <= 1; ++dx)
                        acc += white[static_cast<std::size_t>(yy) * W + reflect_index(x + dx, W)];
                }
                out[static_cast<std::size_t>(y) * W + x] += static_cast<float>(acc / 9.0);
            }
        }
    }
    return v;
}

Video add_salt_pepper_uniform(const Video& u, double fraction, std::uint64_t seed)
{
    Video v = u;
    if (fraction == 0.0)
        return v;
    const Philox4x32 rng(seed);
    auto data = v.data();
    const auto count = static_cast<std::int64_t>(data.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
        const auto [pick, value] = rng.uniforms(i, kStreamSaltPepper);
        if (pick < fraction)
            data[i] = static_cast<float>(255.0 * value);
    }
    return v;
}

Video add_noise(const Video& u, const NoiseSpec& spec)
{
    spec.validate();
    switch (spec.kind) {
    case NoiseKind::awgn: return add_awgn(u, spec.sigma, spec.seed);
    case NoiseKind::box_correlated: return add_box_correlated(u, spec.sigma, spec.seed);
    case NoiseKind::salt_pepper_uniform: return add_salt_pepper_uniform(u, spec.fraction, spec.seed);
    }
    return u;
}

}  // namespace vnl
