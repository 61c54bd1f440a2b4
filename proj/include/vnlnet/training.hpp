#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "vnlnet/kv_config.hpp"
#include "vnlnet/network.hpp"
#include "vnlnet/nl_features.hpp"
#include "vnlnet/noise.hpp"
#include "vnlnet/patch_search.hpp"

namespace vnl {

struct LrStep {
    int epoch = 0;
    double rate = 0.0;
};

struct TrainConfig {
    int crop_size = 44;
    int batch_size = 128;
    int batches_per_epoch = 14000;
    int epochs = 20;
    std::vector<LrStep> lr_schedule{{0, 1e-3}, {12, 1e-4}, {17, 1e-6}};
    NoiseSpec noise{NoiseKind::awgn, 20.0, 0.0, 0};
    SearchConfig search;
    NetworkConfig network;
    std::uint64_t seed = 0;

    /// Rate of the last schedule entry whose epoch is <= `epoch`.
    double rate_at(int epoch) const;
    void validate() const;
};

/// Parses "epoch:rate,epoch:rate,...".
std::vector<LrStep> parse_lr_schedule(const std::string& text);

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
};

/// Bias-corrected Adam update of every parameter from its gradient.
template <typename T>
void adam_step(std::vector<ParamView<T>>& params, AdamState& state, double rate);

struct Batch {
    Tensor4<float> features;  // N x Cin x S x S
    Tensor4<float> noise;     // N x C x S x S, noisy - clean
};

/// One epoch of training material: a fresh noise realisation per video, the
/// patch search run once on each noisy video, and crops drawn from the
/// gathered features where the whole search window fits.
class EpochDataset {
public:
    EpochDataset(const std::vector<Video>& clean, const TrainConfig& cfg, int epoch);

    /// Deterministic function of (cfg.seed, epoch, index).
    Batch batch(std::int64_t index) const;

    /// Eligible reference frames of video i: [first, last).
    std::pair<int, int> eligible_frames(std::size_t video) const;
    std::int64_t eligible_positions() const { return total_positions_; }
    const NlFeatures& features(std::size_t video) const { return features_[video]; }
    const Video& noisy(std::size_t video) const { return noisy_[video]; }

    /// Crop (video, frame, top-left x, y) used as sample `index` of `batch`.
    struct Crop {
        std::size_t video;
        int t, x, y;
    };
    Crop crop(std::int64_t batch_index, int sample) const;

private:
    const std::vector<Video>& clean_;
    TrainConfig cfg_;
    int epoch_;
    std::vector<Video> noisy_;
    std::vector<NlFeatures> features_;
    std::vector<std::int64_t> cumulative_;  // eligible positions before video i
    std::int64_t total_positions_ = 0;
    int margin_ = 0;
};

EpochDataset make_epoch_dataset(const std::vector<Video>& clean, const TrainConfig& cfg, int epoch);

struct EpochLog {
    int epoch = 0;
    double rate = 0.0;
    double train_loss = 0.0;
    double val_psnr = 0.0;
};

struct TrainResult {
    Network<float> network;
    std::vector<EpochLog> log;
    double noisy_val_psnr = 0.0;
};

/// Noisy central frames of validation clips (fixed noise) and the matching
/// clean frames.
struct ValidationSet {
    std::vector<Video> noisy;
    std::vector<Video> clean_center;
    std::vector<int> center;
};

ValidationSet make_validation_set(const std::vector<Video>& clean, const TrainConfig& cfg);

/// Mean PSNR of the clamped denoised central frames.
double validation_psnr(Network<float>& net, const ValidationSet& val, const SearchConfig& cfg);

/// Mean PSNR of the noisy central frames.
double noisy_psnr(const ValidationSet& val);

/// Full training loop. Throws on a non-finite loss with the epoch, batch and
/// learning rate in the message.
TrainResult train(const std::vector<Video>& clean, const std::vector<Video>& validation,
                  const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

void write_train_log(const std::vector<EpochLog>& log, std::ostream& out);

/// Builds a TrainConfig from flat settings. Keys: crop_size, batch_size,
/// batches_per_epoch, epochs, lr_schedule, noise, sigma, fraction, seed,
/// patch, window, frames, neighbors, mode, stage1_width, trunk_width,
/// stage1_depth, trunk_depth, no_patch, channels.
TrainConfig train_config_from(const KeyValues& kv);
const std::set<std::string>& train_config_keys();

}  // namespace vnl
