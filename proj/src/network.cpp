#include "vnlnet/network.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include <Eigen/Core>

#include "vnlnet/noise.hpp"

namespace vnl {

// ---------------------------------------------------------------------------
// configuration

NetworkConfig NetworkConfig::standard(int neighbors, int color_channels)
{
    NetworkConfig cfg;
    cfg.input_channels = neighbors * color_channels;
    cfg.color_channels = color_channels;
    cfg.stage1_width = 32 * color_channels;
    cfg.trunk_width = 64 * color_channels;
    return cfg;
}

NetworkConfig NetworkConfig::no_patch_baseline(int color_channels)
{
    NetworkConfig cfg = standard(1, color_channels);
    cfg.no_patch = true;
    cfg.stage1_depth = 0;
    return cfg;
}

int NetworkConfig::conv_layer_count() const
{
    return (no_patch ? 0 : stage1_depth) + trunk_depth + 1;
}

void NetworkConfig::validate() const
{
    if (color_channels != 1 && color_channels != 3)
        throw Error("network: color channels must be 1 or 3");
    if (input_channels < 1 || input_channels % color_channels != 0)
        throw Error("network: input channels must be a positive multiple of the color channels");
    if (no_patch && input_channels != color_channels)
        throw Error("network: a no-patch network takes only the noisy frame (" +
                    std::to_string(color_channels) + " channels), got " +
                    std::to_string(input_channels));
    if (stage1_depth < 0 || trunk_depth < 0)
        throw Error("network: negative depth");
    if ((!no_patch && stage1_depth > 0 && stage1_width < 1) || (trunk_depth > 0 && trunk_width < 1))
        throw Error("network: layer widths must be positive");
    if (!(bn_epsilon > 0) || !(bn_momentum >= 0 && bn_momentum <= 1))
        throw Error("network: invalid batch-norm settings");
}

std::vector<LayerSpec> NetworkConfig::layers() const
{
    validate();
    std::vector<LayerSpec> out;
    int channels = input_channels;
    if (!no_patch) {
        for (int i = 0; i < stage1_depth; ++i) {
            out.push_back({LayerKind::conv, 1, channels, stage1_width, true, 0});
            out.push_back({LayerKind::relu, 0, stage1_width, stage1_width, false, 0});
            channels = stage1_width;
        }
    }
    for (int i = 0; i < trunk_depth; ++i) {
        out.push_back({LayerKind::conv, 3, channels, trunk_width, false, 0});
        out.push_back({LayerKind::batch_norm, 0, trunk_width, trunk_width, false, bn_epsilon});
        out.push_back({LayerKind::relu, 0, trunk_width, trunk_width, false, 0});
        channels = trunk_width;
    }
    out.push_back({LayerKind::conv, 3, channels, color_channels, true, 0});
    return out;
}

// ---------------------------------------------------------------------------
// layers

template <typename T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor4<T> forward(const Tensor4<T>& in, bool training) = 0;
    virtual Tensor4<T> backward(const Tensor4<T>& grad_out) = 0;
    virtual void collect(const std::string&, std::vector<ParamView<T>>&) {}
    virtual void collect_buffers(const std::string&, std::vector<BufferView<T>>&) {}
    virtual void append_pattern(std::vector<std::uint8_t>&) const {}
    virtual std::unique_ptr<Layer> clone() const = 0;
};

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

// Unfolds one sample (C x H x W) into (C*k*k) x (H*W), zero padded.
template <typename T>
void im2col(const T* src, int C, int H, int W, int k, T* cols)
{
    const int pad = k / 2;
    const std::size_t hw = static_cast<std::size_t>(H) * W;
    for (int c = 0; c < C; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                T* row = cols + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * hw;
                const int dx = kx - pad;
                const int x_lo = std::max(0, -dx), x_hi = std::min(W, W - dx);
                for (int y = 0; y < H; ++y) {
                    T* dst = row + static_cast<std::size_t>(y) * W;
                    const int ys = y + ky - pad;
                    if (ys < 0 || ys >= H) {
                        std::fill_n(dst, W, T(0));
                        continue;
                    }
                    const T* s = src + (static_cast<std::size_t>(c) * H + ys) * W;
                    std::fill_n(dst, x_lo, T(0));
                    for (int x = x_lo; x < x_hi; ++x)
                        dst[x] = s[x + dx];
                    std::fill(dst + x_hi, dst + W, T(0));
                }
            }
}

// Adjoint of im2col: scatters (C*k*k) x (H*W) back into C x H x W (adds).
template <typename T>
void col2im(const T* cols, int C, int H, int W, int k, T* dst)
{
    const int pad = k / 2;
    const std::size_t hw = static_cast<std::size_t>(H) * W;
    for (int c = 0; c < C; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const T* row = cols + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * hw;
                const int dx = kx - pad;
                const int x_lo = std::max(0, -dx), x_hi = std::min(W, W - dx);
                for (int y = 0; y < H; ++y) {
                    const int ys = y + ky - pad;
                    if (ys < 0 || ys >= H)
                        continue;
                    const T* s = row + static_cast<std::size_t>(y) * W;
                    T* d = dst + (static_cast<std::size_t>(c) * H + ys) * W;
                    for (int x = x_lo; x < x_hi; ++x)
                        d[x + dx] += s[x];
                }
            }
}

template <typename T>
class Conv final : public Layer<T> {
public:
    explicit Conv(const LayerSpec& spec)
        : k_(spec.kernel), cin_(spec.in_channels), cout_(spec.out_channels), has_bias_(spec.bias),
          weight_(static_cast<std::size_t>(cout_) * cin_ * k_ * k_),
          grad_weight_(weight_.size()), bias_(has_bias_ ? cout_ : 0), grad_bias_(bias_.size())
    {
    }

    Tensor4<T> forward(const Tensor4<T>& in, bool training) override
    {
        if (in.c() != cin_)
            throw Error("conv: expected " + std::to_string(cin_) + " input channels, got " +
                        std::to_string(in.c()));
        const int N = in.n(), H = in.h(), W = in.w();
        const Eigen::Index hw = static_cast<Eigen::Index>(H) * W;
        const Eigen::Index rows = static_cast<Eigen::Index>(cin_) * k_ * k_;
        Tensor4<T> out(N, cout_, H, W);
        ConstMatrixMap<T> wmat(weight_.data(), cout_, rows);
        std::vector<T> cols(k_ == 1 ? 0 : static_cast<std::size_t>(rows * hw));
        for (int i = 0; i < N; ++i) {
            const T* src = in.plane(i, 0);
            if (k_ != 1) {
                im2col(src, cin_, H, W, k_, cols.data());
                src = cols.data();
            }
            MatrixMap<T> y(out.plane(i, 0), cout_, hw);
            y.noalias() = wmat * ConstMatrixMap<T>(src, rows, hw);
            if (has_bias_)
                y.colwise() += Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(bias_.data(), cout_);
        }
        if (training)
            input_ = in;
        return out;
    }

    Tensor4<T> backward(const Tensor4<T>& grad_out) override
    {
        const int N = input_.n(), H = input_.h(), W = input_.w();
        const Eigen::Index hw = static_cast<Eigen::Index>(H) * W;
        const Eigen::Index rows = static_cast<Eigen::Index>(cin_) * k_ * k_;
        Tensor4<T> grad_in(N, cin_, H, W);
        ConstMatrixMap<T> wmat(weight_.data(), cout_, rows);
        MatrixMap<T> gw(grad_weight_.data(), cout_, rows);
        std::vector<T> cols(k_ == 1 ? 0 : static_cast<std::size_t>(rows * hw));
        std::vector<T> grad_cols(cols.size());
        for (int i = 0; i < N; ++i) {
            ConstMatrixMap<T> gy(grad_out.plane(i, 0), cout_, hw);
            const T* src = input_.plane(i, 0);
            if (k_ != 1) {
                im2col(src, cin_, H, W, k_, cols.data());
                src = cols.data();
            }
            gw.noalias() += gy * ConstMatrixMap<T>(src, rows, hw).transpose();
            // plain loop: Eigen reductions peel by address alignment, which
            // would make the sum depend on where the batch was allocated
            if (has_bias_)
                for (int o = 0; o < cout_; ++o) {
                    const T* g = grad_out.plane(i, o);
                    double acc = 0.0;
                    for (Eigen::Index j = 0; j < hw; ++j)
                        acc += g[j];
                    grad_bias_[o] += static_cast<T>(acc);
                }
            if (k_ == 1) {
                MatrixMap<T>(grad_in.plane(i, 0), cin_, hw).noalias() = wmat.transpose() * gy;
            } else {
                MatrixMap<T>(grad_cols.data(), rows, hw).noalias() = wmat.transpose() * gy;
                col2im(grad_cols.data(), cin_, H, W, k_, grad_in.plane(i, 0));
            }
        }
        return grad_in;
    }

    void collect(const std::string& prefix, std::vector<ParamView<T>>& out) override
    {
        out.push_back({prefix + ".weight", weight_, grad_weight_});
        if (has_bias_)
            out.push_back({prefix + ".bias", bias_, grad_bias_});
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv>(*this); }

private:
    int k_, cin_, cout_;
    bool has_bias_;
    std::vector<T> weight_, grad_weight_, bias_, grad_bias_;
    Tensor4<T> input_;
};

template <typename T>
class BatchNorm final : public Layer<T> {
public:
    BatchNorm(const LayerSpec& spec, double momentum)
        : channels_(spec.out_channels), epsilon_(spec.epsilon), momentum_(momentum),
          gamma_(channels_, T(1)), beta_(channels_, T(0)), grad_gamma_(channels_),
          grad_beta_(channels_), running_mean_(channels_, T(0)), running_var_(channels_, T(1)),
          ready_(1, T(0)), inv_std_(channels_)
    {
    }

    Tensor4<T> forward(const Tensor4<T>& in, bool training) override
    {
        const int N = in.n();
        const std::size_t plane = in.plane_size();
        Tensor4<T> out(N, channels_, in.h(), in.w());
        if (!training) {
            for (int c = 0; c < channels_; ++c) {
                const T scale = static_cast<T>(gamma_[c] / std::sqrt(double(running_var_[c]) + epsilon_));
                const T shift = static_cast<T>(beta_[c] - scale * running_mean_[c]);
                for (int i = 0; i < N; ++i) {
                    const T* x = in.plane(i, c);
                    T* y = out.plane(i, c);
                    for (std::size_t j = 0; j < plane; ++j)
                        y[j] = scale * x[j] + shift;
                }
            }
            return out;
        }

        normalized_ = Tensor4<T>(N, channels_, in.h(), in.w());
        const double count = static_cast<double>(N) * plane;
        for (int c = 0; c < channels_; ++c) {
            double sum = 0.0;
            for (int i = 0; i < N; ++i) {
                const T* x = in.plane(i, c);
                for (std::size_t j = 0; j < plane; ++j)
                    sum += x[j];
            }
            const double mean = sum / count;
            double sq = 0.0;
            for (int i = 0; i < N; ++i) {
                const T* x = in.plane(i, c);
                for (std::size_t j = 0; j < plane; ++j) {
                    const double d = x[j] - mean;
                    sq += d * d;
                }
            }
            const double var = sq / count;
            const double inv_std = 1.0 / std::sqrt(var + epsilon_);
            inv_std_[c] = static_cast<T>(inv_std);
            for (int i = 0; i < N; ++i) {
                const T* x = in.plane(i, c);
                T* xh = normalized_.plane(i, c);
                T* y = out.plane(i, c);
                for (std::size_t j = 0; j < plane; ++j) {
                    xh[j] = static_cast<T>((x[j] - mean) * inv_std);
                    y[j] = gamma_[c] * xh[j] + beta_[c];
                }
            }
            // running statistics track the unbiased variance
            const double unbiased = count > 1 ? var * count / (count - 1) : var;
            if (ready_[0] == T(0)) {
                running_mean_[c] = static_cast<T>(mean);
                running_var_[c] = static_cast<T>(unbiased);
            } else {
                running_mean_[c] = static_cast<T>((1 - momentum_) * running_mean_[c] + momentum_ * mean);
                running_var_[c] = static_cast<T>((1 - momentum_) * running_var_[c] + momentum_ * unbiased);
            }
        }
        ready_[0] = T(1);
        return out;
    }

    Tensor4<T> backward(const Tensor4<T>& grad_out) override
    {
        const int N = grad_out.n();
        const std::size_t plane = grad_out.plane_size();
        const double count = static_cast<double>(N) * plane;
        Tensor4<T> grad_in(N, channels_, grad_out.h(), grad_out.w());
        for (int c = 0; c < channels_; ++c) {
            double sum_dy = 0.0, sum_dy_xh = 0.0;
            for (int i = 0; i < N; ++i) {
                const T* dy = grad_out.plane(i, c);
                const T* xh = normalized_.plane(i, c);
                for (std::size_t j = 0; j < plane; ++j) {
                    sum_dy += dy[j];
                    sum_dy_xh += double(dy[j]) * xh[j];
                }
            }
            grad_beta_[c] += static_cast<T>(sum_dy);
            grad_gamma_[c] += static_cast<T>(sum_dy_xh);
            const double scale = double(gamma_[c]) * inv_std_[c] / count;
            for (int i = 0; i < N; ++i) {
                const T* dy = grad_out.plane(i, c);
                const T* xh = normalized_.plane(i, c);
                T* dx = grad_in.plane(i, c);
                for (std::size_t j = 0; j < plane; ++j)
                    dx[j] = static_cast<T>(scale * (count * dy[j] - sum_dy - xh[j] * sum_dy_xh));
            }
        }
        return grad_in;
    }

    void collect(const std::string& prefix, std::vector<ParamView<T>>& out) override
    {
        out.push_back({prefix + ".gamma", gamma_, grad_gamma_});
        out.push_back({prefix + ".beta", beta_, grad_beta_});
    }

    void collect_buffers(const std::string& prefix, std::vector<BufferView<T>>& out) override
    {
        out.push_back({prefix + ".running_mean", running_mean_});
        out.push_back({prefix + ".running_var", running_var_});
        out.push_back({prefix + ".running_ready", ready_});
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<BatchNorm>(*this); }

private:
    int channels_;
    double epsilon_, momentum_;
    std::vector<T> gamma_, beta_, grad_gamma_, grad_beta_;
    std::vector<T> running_mean_, running_var_, ready_;
    std::vector<T> inv_std_;
    Tensor4<T> normalized_;
};

template <typename T>
class Relu final : public Layer<T> {
public:
    Tensor4<T> forward(const Tensor4<T>& in, bool) override
    {
        Tensor4<T> out = in;
        mask_.resize(in.size());
        auto data = out.data();
        // NaN passes through so a diverged run surfaces as a non-finite loss
        for (std::size_t i = 0; i < data.size(); ++i) {
            mask_[i] = !(data[i] <= T(0));
            if (!mask_[i])
                data[i] = T(0);
        }
        return out;
    }

    Tensor4<T> backward(const Tensor4<T>& grad_out) override
    {
        Tensor4<T> grad_in = grad_out;
        auto data = grad_in.data();
        for (std::size_t i = 0; i < data.size(); ++i)
            if (!mask_[i])
                data[i] = T(0);
        return grad_in;
    }

    void append_pattern(std::vector<std::uint8_t>& out) const override
    {
        out.insert(out.end(), mask_.begin(), mask_.end());
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Relu>(*this); }

private:
    std::vector<std::uint8_t> mask_;
};

}  // namespace

// ---------------------------------------------------------------------------
// network

template <typename T>
Network<T>::Network(const NetworkConfig& cfg) : cfg_(cfg)
{
    for (const LayerSpec& spec : cfg_.layers()) {
        switch (spec.kind) {
        case LayerKind::conv: layers_.push_back(std::make_unique<Conv<T>>(spec)); break;
        case LayerKind::batch_norm:
            layers_.push_back(std::make_unique<BatchNorm<T>>(spec, cfg_.bn_momentum));
            break;
        case LayerKind::relu: layers_.push_back(std::make_unique<Relu<T>>()); break;
        }
    }
}

template <typename T>
Network<T>::~Network() = default;
template <typename T>
Network<T>::Network(Network&&) noexcept = default;
template <typename T>
Network<T>& Network<T>::operator=(Network&&) noexcept = default;

template <typename T>
Network<T>::Network(const Network& other) : cfg_(other.cfg_)
{
    for (const auto& layer : other.layers_)
        layers_.push_back(layer->clone());
}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other)
{
    if (this != &other) {
        Network copy(other);
        *this = std::move(copy);
    }
    return *this;
}

template <typename T>
void Network<T>::initialize(std::uint64_t seed)
{
    const Philox4x32 rng(seed);
    const std::vector<LayerSpec> specs = cfg_.layers();
    std::uint32_t stream = 0;
    std::size_t spec_index = 0;
    for (auto& layer : layers_) {
        const LayerSpec& spec = specs[spec_index++];
        std::vector<ParamView<T>> params;
        layer->collect("", params);
        for (auto& p : params) {
            if (p.name == ".weight") {
                const double stddev =
                    std::sqrt(2.0 / (double(spec.kernel) * spec.kernel * spec.in_channels));
                for (std::size_t i = 0; i < p.value.size(); ++i)
                    p.value[i] = static_cast<T>(stddev * rng.gaussian(i, stream));
            } else if (p.name == ".gamma") {
                std::fill(p.value.begin(), p.value.end(), T(1));
            } else {
                std::fill(p.value.begin(), p.value.end(), T(0));
            }
        }
        std::vector<BufferView<T>> bufs;
        layer->collect_buffers("", bufs);
        for (auto& b : bufs)
            std::fill(b.value.begin(), b.value.end(), b.name == ".running_var" ? T(1) : T(0));
        ++stream;
    }
    zero_grad();
}

template <typename T>
void Network<T>::zero_parameters()
{
    for (auto& p : parameters())
        std::fill(p.value.begin(), p.value.end(), T(0));
    for (auto& b : buffers())
        std::fill(b.value.begin(), b.value.end(), b.name.ends_with("running_var") ? T(1) : T(0));
    zero_grad();
}

template <typename T>
Tensor4<T> Network<T>::forward(const Tensor4<T>& input, bool training)
{
    if (input.c() != cfg_.input_channels)
        throw Error("network expects " + std::to_string(cfg_.input_channels) +
                    " input channels, got " + std::to_string(input.c()));
    Tensor4<T> x = input;
    for (auto& layer : layers_)
        x = layer->forward(x, training);
    return x;
}

template <typename T>
Tensor4<T> Network<T>::backward(const Tensor4<T>& grad_output)
{
    Tensor4<T> g = grad_output;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
        g = (*it)->backward(g);
    return g;
}

template <typename T>
void Network<T>::zero_grad()
{
    for (auto& p : parameters())
        std::fill(p.grad.begin(), p.grad.end(), T(0));
}

namespace {

// Layer names: stage1.<i>, trunk.<i>.conv / trunk.<i>.bn, output.
std::vector<std::string> layer_prefixes(const NetworkConfig& cfg)
{
    std::vector<std::string> names;
    const std::vector<LayerSpec> specs = cfg.layers();
    int stage = 0, trunk = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const LayerSpec& spec = specs[i];
        if (i + 1 == specs.size())
            names.push_back("output");
        else if (spec.kind == LayerKind::conv && spec.kernel == 1)
            names.push_back("stage1." + std::to_string(stage++));
        else if (spec.kind == LayerKind::conv)
            names.push_back("trunk." + std::to_string(trunk) + ".conv");
        else if (spec.kind == LayerKind::batch_norm)
            names.push_back("trunk." + std::to_string(trunk++) + ".bn");
        else
            names.push_back("relu");
    }
    return names;
}

}  // namespace

template <typename T>
std::vector<ParamView<T>> Network<T>::parameters()
{
    const auto names = layer_prefixes(cfg_);
    std::vector<ParamView<T>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        layers_[i]->collect(names[i], out);
    return out;
}

template <typename T>
std::vector<BufferView<T>> Network<T>::buffers()
{
    const auto names = layer_prefixes(cfg_);
    std::vector<BufferView<T>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        layers_[i]->collect_buffers(names[i], out);
    return out;
}

template <typename T>
std::vector<std::uint8_t> Network<T>::relu_pattern() const
{
    std::vector<std::uint8_t> out;
    for (const auto& layer : layers_)
        layer->append_pattern(out);
    return out;
}

template <typename T>
template <typename U>
Network<U> Network<T>::cast() const
{
    Network<T> self = *this;
    Network<U> out(cfg_);
    auto src = self.parameters();
    auto dst = out.parameters();
    for (std::size_t i = 0; i < src.size(); ++i)
        std::transform(src[i].value.begin(), src[i].value.end(), dst[i].value.begin(),
                       [](T v) { return static_cast<U>(v); });
    auto src_b = self.buffers();
    auto dst_b = out.buffers();
    for (std::size_t i = 0; i < src_b.size(); ++i)
        std::transform(src_b[i].value.begin(), src_b[i].value.end(), dst_b[i].value.begin(),
                       [](T v) { return static_cast<U>(v); });
    return out;
}

template <typename T>
double loss_mse(const Tensor4<T>& residual, const Tensor4<T>& noise)
{
    if (!residual.same_shape(noise))
        throw Error("loss_mse: shape mismatch " + residual.shape_string() + " vs " +
                    noise.shape_string());
    double acc = 0.0;
    auto r = residual.data();
    auto n = noise.data();
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double d = double(r[i]) - double(n[i]);
        acc += d * d;
    }
    return r.empty() ? 0.0 : acc / static_cast<double>(r.size());
}

template <typename T>
Tensor4<T> loss_mse_grad(const Tensor4<T>& residual, const Tensor4<T>& noise)
{
    if (!residual.same_shape(noise))
        throw Error("loss_mse_grad: shape mismatch");
    Tensor4<T> g(residual.n(), residual.c(), residual.h(), residual.w());
    const double scale = 2.0 / static_cast<double>(residual.size());
    auto r = residual.data();
    auto n = noise.data();
    auto out = g.data();
    for (std::size_t i = 0; i < r.size(); ++i)
        out[i] = static_cast<T>(scale * (double(r[i]) - double(n[i])));
    return g;
}

template <typename T>
double compute_gradients(Network<T>& net, const Tensor4<T>& features, const Tensor4<T>& noise)
{
    const Tensor4<T> residual = net.forward(features, true);
    const double loss = loss_mse(residual, noise);
    net.zero_grad();
    net.backward(loss_mse_grad(residual, noise));
    return loss;
}

template class Network<float>;
template class Network<double>;
template Network<double> Network<float>::cast<double>() const;
template Network<float> Network<double>::cast<float>() const;
template Network<float> Network<float>::cast<float>() const;
template Network<double> Network<double>::cast<double>() const;
template double loss_mse(const Tensor4<float>&, const Tensor4<float>&);
template double loss_mse(const Tensor4<double>&, const Tensor4<double>&);
template Tensor4<float> loss_mse_grad(const Tensor4<float>&, const Tensor4<float>&);
template Tensor4<double> loss_mse_grad(const Tensor4<double>&, const Tensor4<double>&);
template double compute_gradients(Network<float>&, const Tensor4<float>&, const Tensor4<float>&);
template double compute_gradients(Network<double>&, const Tensor4<double>&, const Tensor4<double>&);

// ---------------------------------------------------------------------------
// weight files

namespace {

static_assert(std::endian::native == std::endian::little,
              "weight files are written in host order and assume a little-endian host");

constexpr char kWeightMagic[4] = {'V', 'N', 'L', 'W'};
constexpr std::uint32_t kWeightVersion = 1;

template <typename V>
void put(std::ostream& out, V value)
{
    out.write(reinterpret_cast<const char*>(&value), sizeof(V));
}

template <typename V>
V get(std::istream& in, const std::filesystem::path& path)
{
    V value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(V));
    if (!in)
        throw Error("truncated weight file " + path.string());
    return value;
}

}  // namespace

void save_weights(Network<float>& net, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    const NetworkConfig& cfg = net.config();
    out.write(kWeightMagic, 4);
    put<std::uint32_t>(out, kWeightVersion);
    for (int v : {cfg.input_channels, cfg.color_channels, cfg.stage1_width, cfg.trunk_width,
                  cfg.stage1_depth, cfg.trunk_depth, cfg.no_patch ? 1 : 0})
        put<std::int32_t>(out, v);
    put<double>(out, cfg.bn_epsilon);
    put<double>(out, cfg.bn_momentum);

    std::vector<std::pair<std::string, std::span<float>>> arrays;
    for (auto& p : net.parameters())
        arrays.emplace_back(p.name, p.value);
    for (auto& b : net.buffers())
        arrays.emplace_back(b.name, b.value);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
    for (const auto& [name, values] : arrays) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint64_t>(out, values.size());
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(float)));
    }
    if (!out)
        throw Error("write failed for " + path.string());
}

Network<float> load_weights(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path.string());
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || !std::equal(magic, magic + 4, kWeightMagic))
        throw Error("not a weight file (bad magic): " + path.string());
    const auto version = get<std::uint32_t>(in, path);
    if (version != kWeightVersion)
        throw Error("unsupported weight file version " + std::to_string(version) + " in " +
                    path.string());
    NetworkConfig cfg;
    cfg.input_channels = get<std::int32_t>(in, path);
    cfg.color_channels = get<std::int32_t>(in, path);
    cfg.stage1_width = get<std::int32_t>(in, path);
    cfg.trunk_width = get<std::int32_t>(in, path);
    cfg.stage1_depth = get<std::int32_t>(in, path);
    cfg.trunk_depth = get<std::int32_t>(in, path);
    cfg.no_patch = get<std::int32_t>(in, path) != 0;
    cfg.bn_epsilon = get<double>(in, path);
    cfg.bn_momentum = get<double>(in, path);
    Network<float> net(cfg);

    std::vector<std::pair<std::string, std::span<float>>> arrays;
    for (auto& p : net.parameters())
        arrays.emplace_back(p.name, p.value);
    for (auto& b : net.buffers())
        arrays.emplace_back(b.name, b.value);
    const auto count = get<std::uint32_t>(in, path);
    if (count != arrays.size())
        throw Error("weight file " + path.string() + " holds " + std::to_string(count) +
                    " arrays, configuration needs " + std::to_string(arrays.size()));
    for (auto& [name, values] : arrays) {
        const auto len = get<std::uint32_t>(in, path);
        if (len > 4096)
            throw Error("corrupt array name in " + path.string());
        std::string stored(len, '\0');
        in.read(stored.data(), len);
        if (!in)
            throw Error("truncated weight file " + path.string());
        if (stored != name)
            throw Error("weight file " + path.string() + ": expected array '" + name +
                        "', found '" + stored + "'");
        const auto elements = get<std::uint64_t>(in, path);
        if (elements != values.size())
            throw Error("weight file " + path.string() + ": array '" + name + "' has " +
                        std::to_string(elements) + " values, expected " +
                        std::to_string(values.size()));
        in.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(values.size() * sizeof(float)));
        if (!in)
            throw Error("truncated weight file " + path.string());
    }
    return net;
}

}  // namespace vnl
