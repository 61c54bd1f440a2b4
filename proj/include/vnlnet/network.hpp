#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vnlnet/tensor.hpp"

namespace vnl {

enum class LayerKind { conv, batch_norm, relu };

struct LayerSpec {
    LayerKind kind = LayerKind::conv;
    int kernel = 1;        // conv: 1 or 3, zero padding (kernel - 1) / 2
    int in_channels = 0;   // conv
    int out_channels = 0;  // conv; channel count for batch_norm
    bool bias = false;     // conv
    double epsilon = 1e-5; // batch_norm
};

/// Non-local stage of 1x1 convolutions (each followed by ReLU), then a trunk
/// of 3x3 conv + batch norm + ReLU layers, then a 3x3 output convolution that
/// predicts the noise residual.
struct NetworkConfig {
    int input_channels = 15;  // n * C
    int color_channels = 1;   // C, also the output channel count
    int stage1_width = 32;
    int trunk_width = 64;
    int stage1_depth = 4;
    int trunk_depth = 14;
    bool no_patch = false;    // single-frame baseline: input is the noisy frame, no 1x1 stage
    double bn_epsilon = 1e-5;
    double bn_momentum = 0.1;

    /// Widths 32/64 for gray, tripled for color.
    static NetworkConfig standard(int neighbors, int color_channels);
    static NetworkConfig no_patch_baseline(int color_channels);

    int conv_layer_count() const;
    void validate() const;
    std::vector<LayerSpec> layers() const;

    bool operator==(const NetworkConfig&) const = default;
};

template <typename T>
struct ParamView {
    std::string name;
    std::span<T> value;
    std::span<T> grad;
};

template <typename T>
struct BufferView {
    std::string name;
    std::span<T> value;
};

template <typename T>
class Layer;

/// Feed-forward network with explicit reverse-mode gradients.
template <typename T>
class Network {
public:
    explicit Network(const NetworkConfig& cfg);
    ~Network();
    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) noexcept;
    Network& operator=(Network&&) noexcept;

    const NetworkConfig& config() const { return cfg_; }

    /// He-normal convolution weights (variance 2 / (k^2 * in)), zero biases,
    /// BN gamma = 1 and beta = 0; running statistics start uninitialised.
    void initialize(std::uint64_t seed);

    /// Sets every parameter and buffer to zero (identity denoiser).
    void zero_parameters();

    /// Predicted residual, shape N x C x H x W. Training mode uses batch
    /// statistics in batch norm and keeps what backward() needs.
    Tensor4<T> forward(const Tensor4<T>& input, bool training);

    /// Accumulates parameter gradients from dLoss/dOutput of the last
    /// training-mode forward pass. Returns dLoss/dInput.
    Tensor4<T> backward(const Tensor4<T>& grad_output);

    void zero_grad();

    std::vector<ParamView<T>> parameters();
    std::vector<BufferView<T>> buffers();

    /// Concatenated ReLU on/off pattern of the last forward pass.
    std::vector<std::uint8_t> relu_pattern() const;

    /// Same architecture and values in another precision.
    template <typename U>
    Network<U> cast() const;

private:
    NetworkConfig cfg_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

/// mean((residual - noise)^2), accumulated in double.
template <typename T>
double loss_mse(const Tensor4<T>& residual, const Tensor4<T>& noise);

/// dLoss/dResidual for loss_mse.
template <typename T>
Tensor4<T> loss_mse_grad(const Tensor4<T>& residual, const Tensor4<T>& noise);

/// Forward (training mode), loss, and backward in one call; parameter
/// gradients are overwritten. Returns the loss.
template <typename T>
double compute_gradients(Network<T>& net, const Tensor4<T>& features, const Tensor4<T>& noise);

/// Weight file (little-endian): "VNLW", u32 version, config block
/// (i32 input_channels, color_channels, stage1_width, trunk_width,
/// stage1_depth, trunk_depth, no_patch; f64 bn_epsilon, bn_momentum),
/// u32 array count, then per array {u32 name length, name bytes,
/// u64 element count, f32 values}.
void save_weights(Network<float>& net, const std::filesystem::path& path);
Network<float> load_weights(const std::filesystem::path& path);

}  // namespace vnl
