#include "vnlnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "vnlnet/denoise.hpp"
#include "vnlnet/metrics.hpp"

namespace vnl {

namespace {

constexpr std::uint64_t kCropStream = 0x63726f70ull;       // "crop"
constexpr std::uint64_t kValidationStream = 0x76616cull;   // "val"
constexpr std::uint64_t kInitStream = 0x696e6974ull;       // "init"

}  // namespace

// ---------------------------------------------------------------------------
// configuration

double TrainConfig::rate_at(int epoch) const
{
    double rate = lr_schedule.empty() ? 0.0 : lr_schedule.front().rate;
    for (const LrStep& step : lr_schedule)
        if (step.epoch <= epoch)
            rate = step.rate;
    return rate;
}

void TrainConfig::validate() const
{
    if (crop_size < 1 || batch_size < 1 || batches_per_epoch < 1 || epochs < 1)
        throw Error("training: crop size, batch size, batches per epoch and epochs must be positive");
    if (lr_schedule.empty() || lr_schedule.front().epoch != 0)
        throw Error("training: the learning-rate schedule must start at epoch 0");
    for (std::size_t i = 1; i < lr_schedule.size(); ++i)
        if (lr_schedule[i].epoch <= lr_schedule[i - 1].epoch)
            throw Error("training: learning-rate schedule epochs must increase");
    for (const LrStep& step : lr_schedule)
        if (!(step.rate >= 0) || !std::isfinite(step.rate))
            throw Error("training: learning rates must be finite and >= 0");
    noise.validate();
    network.validate();
    const int C = network.color_channels;
    const int expected = network.no_patch ? C : search.num_neighbors * C;
    if (network.input_channels != expected)
        throw Error("training: network input channels " + std::to_string(network.input_channels) +
                    " do not match n*C = " + std::to_string(expected));
}

std::vector<LrStep> parse_lr_schedule(const std::string& text)
{
    std::vector<LrStep> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw Error("learning-rate schedule entry '" + item + "' is not epoch:rate");
        try {
            out.push_back({std::stoi(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
        } catch (const std::exception&) {
            throw Error("learning-rate schedule entry '" + item + "' is not epoch:rate");
        }
    }
    if (out.empty())
        throw Error("empty learning-rate schedule");
    return out;
}

// ---------------------------------------------------------------------------
// Adam

template <typename T>
void adam_step(std::vector<ParamView<T>>& params, AdamState& state, double rate)
{
    if (state.first_moment.size() != params.size()) {
        state.first_moment.assign(params.size(), {});
        state.second_moment.assign(params.size(), {});
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.first_moment[i].assign(params[i].value.size(), 0.0);
            state.second_moment[i].assign(params[i].value.size(), 0.0);
        }
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        if (m.size() != params[i].value.size())
            throw Error("adam_step: parameter '" + params[i].name + "' changed size");
        for (std::size_t j = 0; j < m.size(); ++j) {
            const double g = params[i].grad[j];
            m[j] = state.beta1 * m[j] + (1 - state.beta1) * g;
            v[j] = state.beta2 * v[j] + (1 - state.beta2) * g * g;
            const double update = rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + state.epsilon);
            params[i].value[j] = static_cast<T>(params[i].value[j] - update);
        }
    }
}

template void adam_step(std::vector<ParamView<float>>&, AdamState&, double);
template void adam_step(std::vector<ParamView<double>>&, AdamState&, double);

// ---------------------------------------------------------------------------
// data

EpochDataset::EpochDataset(const std::vector<Video>& clean, const TrainConfig& cfg, int epoch)
    : clean_(clean), cfg_(cfg), epoch_(epoch), margin_(cfg.search.spatial_window / 2)
{
    cfg_.validate();
    if (clean.empty())
        throw Error("training: no training videos");
    const int rt = cfg_.search.temporal_window / 2;
    cumulative_.push_back(0);
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const Video& u = clean[i];
        const int frames = u.frames() - 2 * rt;
        const int nx = u.cols() - cfg_.crop_size - 2 * margin_ + 1;
        const int ny = u.rows() - cfg_.crop_size - 2 * margin_ + 1;
        if (u.channels() != cfg_.network.color_channels)
            throw Error("training video " + std::to_string(i) + " has " +
                        std::to_string(u.channels()) + " channels, network expects " +
                        std::to_string(cfg_.network.color_channels));
        if (frames < 1 || nx < 1 || ny < 1)
            throw Error("training video " + std::to_string(i) + " (" + u.shape_string() +
                        ") has no crop position where a " + std::to_string(cfg_.crop_size) +
                        "-pixel crop and the search window fit");
        cumulative_.push_back(cumulative_.back() + static_cast<std::int64_t>(frames) * nx * ny);
    }
    total_positions_ = cumulative_.back();

    for (std::size_t i = 0; i < clean.size(); ++i) {
        NoiseSpec spec = cfg_.noise;
        spec.seed = derive_seed(cfg_.seed, static_cast<std::uint64_t>(epoch), i);
        noisy_.push_back(add_noise(clean[i], spec));
        const auto [first, last] = eligible_frames(i);
        if (cfg_.network.no_patch) {
            NlFeatures f;
            f.first_frame = first;
            f.neighbors = 1;
            f.color_channels = clean[i].channels();
            f.values = noisy_.back().frames_slice(first, last - first).tensor();
            features_.push_back(std::move(f));
        } else {
            SearchOptions opts;
            opts.frame_begin = first;
            opts.frame_end = last;
            features_.push_back(gather_features(noisy_.back(), search_fast(noisy_.back(), cfg_.search, opts)));
        }
    }
}

std::pair<int, int> EpochDataset::eligible_frames(std::size_t video) const
{
    const int rt = cfg_.search.temporal_window / 2;
    return {rt, clean_[video].frames() - rt};
}

EpochDataset::Crop EpochDataset::crop(std::int64_t batch_index, int sample) const
{
    const Philox4x32 rng(derive_seed(cfg_.seed, static_cast<std::uint64_t>(epoch_), kCropStream));
    const std::uint64_t counter = static_cast<std::uint64_t>(batch_index) * cfg_.batch_size + sample;
    const double u = rng.uniforms(counter, 0)[0];
    auto index = std::min<std::int64_t>(static_cast<std::int64_t>(u * total_positions_),
                                        total_positions_ - 1);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), index);
    const std::size_t video = static_cast<std::size_t>(it - cumulative_.begin() - 1);
    index -= cumulative_[video];
    const Video& u_clip = clean_[video];
    const int nx = u_clip.cols() - cfg_.crop_size - 2 * margin_ + 1;
    const int ny = u_clip.rows() - cfg_.crop_size - 2 * margin_ + 1;
    Crop c;
    c.video = video;
    c.x = margin_ + static_cast<int>(index % nx);
    index /= nx;
    c.y = margin_ + static_cast<int>(index % ny);
    c.t = eligible_frames(video).first + static_cast<int>(index / ny);
    return c;
}

Batch EpochDataset::batch(std::int64_t index) const
{
    const int S = cfg_.crop_size;
    const int C = cfg_.network.color_channels;
    const int cin = cfg_.network.input_channels;
    Batch b{Tensor4<float>(cfg_.batch_size, cin, S, S), Tensor4<float>(cfg_.batch_size, C, S, S)};
    for (int i = 0; i < cfg_.batch_size; ++i) {
        const Crop c = crop(index, i);
        const NlFeatures& f = features_[c.video];
        const int ti = c.t - f.first_frame;
        for (int ch = 0; ch < cin; ++ch)
            for (int y = 0; y < S; ++y)
                std::copy_n(&f.values(ti, ch, c.y + y, c.x), S, &b.features(i, ch, y, 0));
        const Video& noisy = noisy_[c.video];
        const Video& clean = clean_[c.video];
        for (int ch = 0; ch < C; ++ch)
            for (int y = 0; y < S; ++y)
                for (int x = 0; x < S; ++x)
                    b.noise(i, ch, y, x) =
                        noisy(c.t, ch, c.y + y, c.x + x) - clean(c.t, ch, c.y + y, c.x + x);
    }
    return b;
}

EpochDataset make_epoch_dataset(const std::vector<Video>& clean, const TrainConfig& cfg, int epoch)
{
    return EpochDataset(clean, cfg, epoch);
}

// ---------------------------------------------------------------------------
// validation

ValidationSet make_validation_set(const std::vector<Video>& clean, const TrainConfig& cfg)
{
    ValidationSet val;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        NoiseSpec spec = cfg.noise;
        spec.seed = derive_seed(cfg.seed, kValidationStream, i);
        val.noisy.push_back(add_noise(clean[i], spec));
        const int centre = clean[i].frames() / 2;
        val.center.push_back(centre);
        val.clean_center.push_back(clean[i].frames_slice(centre, 1));
    }
    return val;
}

double validation_psnr(Network<float>& net, const ValidationSet& val, const SearchConfig& cfg)
{
    if (val.noisy.empty())
        return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < val.noisy.size(); ++i) {
        SearchOptions opts;
        opts.frame_begin = val.center[i];
        opts.frame_end = val.center[i] + 1;
        Video out = denoise(val.noisy[i], net, cfg, opts);
        for (float& v : out.data())
            v = std::clamp(v, 0.f, 255.f);
        acc += psnr(val.clean_center[i], out);
    }
    return acc / static_cast<double>(val.noisy.size());
}

double noisy_psnr(const ValidationSet& val)
{
    if (val.noisy.empty())
        return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < val.noisy.size(); ++i)
        acc += psnr(val.clean_center[i], val.noisy[i].frames_slice(val.center[i], 1));
    return acc / static_cast<double>(val.noisy.size());
}

// ---------------------------------------------------------------------------
// loop

TrainResult train(const std::vector<Video>& clean, const std::vector<Video>& validation,
                  const TrainConfig& cfg, const std::function<void(const EpochLog&)>& on_epoch)
{
    cfg.validate();
    TrainResult result{Network<float>(cfg.network), {}, 0.0};
    Network<float>& net = result.network;
    net.initialize(derive_seed(cfg.seed, kInitStream));
    AdamState adam;

    const ValidationSet val = make_validation_set(validation, cfg);
    result.noisy_val_psnr = noisy_psnr(val);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double rate = cfg.rate_at(epoch);
        const EpochDataset data(clean, cfg, epoch);
        double loss_sum = 0.0;
        for (int b = 0; b < cfg.batches_per_epoch; ++b) {
            const Batch batch = data.batch(b);
            const double loss = compute_gradients(net, batch.features, batch.noise);
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "non-finite training loss at epoch " << epoch << ", batch " << b
                    << " (learning rate " << rate << ")";
                throw Error(msg.str());
            }
            loss_sum += loss;
            auto params = net.parameters();
            adam_step(params, adam, rate);
        }
        EpochLog entry{epoch, rate, loss_sum / cfg.batches_per_epoch,
                       validation_psnr(net, val, cfg.search)};
        result.log.push_back(entry);
        if (on_epoch)
            on_epoch(entry);
    }
    return result;
}

void write_train_log(const std::vector<EpochLog>& log, std::ostream& out)
{
    out << "epoch,lr,train_loss,val_psnr\n";
    for (const EpochLog& e : log)
        out << e.epoch << ',' << e.rate << ',' << e.train_loss << ',' << e.val_psnr << '\n';
}

// ---------------------------------------------------------------------------
// key-value settings

const std::set<std::string>& train_config_keys()
{
    static const std::set<std::string> keys{
        "crop_size", "batch_size", "batches_per_epoch", "epochs", "lr_schedule", "noise",
        "sigma", "fraction", "seed", "patch", "window", "frames", "neighbors", "mode",
        "stage1_width", "trunk_width", "stage1_depth", "trunk_depth", "no_patch", "channels"};
    return keys;
}

TrainConfig train_config_from(const KeyValues& kv)
{
    TrainConfig cfg;
    cfg.crop_size = kv.get_int("crop_size", cfg.crop_size);
    cfg.batch_size = kv.get_int("batch_size", cfg.batch_size);
    cfg.batches_per_epoch = kv.get_int("batches_per_epoch", cfg.batches_per_epoch);
    cfg.epochs = kv.get_int("epochs", cfg.epochs);
    if (kv.has("lr_schedule"))
        cfg.lr_schedule = parse_lr_schedule(kv.get("lr_schedule", ""));
    cfg.noise.kind = parse_noise_kind(kv.get("noise", "awgn"));
    cfg.noise.sigma = kv.get_double("sigma", 20.0);
    cfg.noise.fraction = kv.get_double("fraction", 0.25);
    cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));

    cfg.search.patch_size = kv.get_int("patch", 41);
    cfg.search.spatial_window = kv.get_int("window", 41);
    cfg.search.temporal_window = kv.get_int("frames", 15);
    cfg.search.mode = parse_search_mode(kv.get("mode", "one-per-frame"));
    cfg.search.num_neighbors = kv.get_int(
        "neighbors", cfg.search.mode == SearchMode::one_per_frame ? cfg.search.temporal_window : 15);

    const int channels = kv.get_int("channels", 1);
    const bool no_patch = kv.get_bool("no_patch", false);
    cfg.network = no_patch ? NetworkConfig::no_patch_baseline(channels)
                           : NetworkConfig::standard(cfg.search.num_neighbors, channels);
    cfg.network.stage1_width = kv.get_int("stage1_width", cfg.network.stage1_width);
    cfg.network.trunk_width = kv.get_int("trunk_width", cfg.network.trunk_width);
    if (!no_patch)
        cfg.network.stage1_depth = kv.get_int("stage1_depth", cfg.network.stage1_depth);
    cfg.network.trunk_depth = kv.get_int("trunk_depth", cfg.network.trunk_depth);
    cfg.validate();
    return cfg;
}

}  // namespace vnl
