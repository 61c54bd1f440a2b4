#include "doctest.h"

#include <cmath>
#include <sstream>

#include "test_support.hpp"
#include "vnlnet/synthetic.hpp"
#include "vnlnet/training.hpp"

using namespace vnl;

namespace {

TrainConfig toy_config()
{
    TrainConfig cfg;
    cfg.crop_size = 12;
    cfg.batch_size = 4;
    cfg.batches_per_epoch = 3;
    cfg.epochs = 2;
    cfg.lr_schedule = {{0, 1e-3}};
    cfg.search.patch_size = 5;
    cfg.search.spatial_window = 5;
    cfg.search.temporal_window = 3;
    cfg.search.num_neighbors = 3;
    cfg.search.mode = SearchMode::one_per_frame;
    cfg.network = NetworkConfig::standard(3, 1);
    cfg.network.stage1_width = 4;
    cfg.network.trunk_width = 4;
    cfg.network.stage1_depth = 2;
    cfg.network.trunk_depth = 3;
    cfg.seed = 5;
    return cfg;
}

std::vector<double> flatten(Network<float>& net)
{
    std::vector<double> out;
    for (auto& p : net.parameters())
        out.insert(out.end(), p.value.begin(), p.value.end());
    return out;
}

}  // namespace

TEST_CASE("learning-rate schedule")
{
    TrainConfig cfg;
    CHECK(cfg.rate_at(0) == 1e-3);
    CHECK(cfg.rate_at(11) == 1e-3);
    CHECK(cfg.rate_at(12) == 1e-4);
    CHECK(cfg.rate_at(16) == 1e-4);
    CHECK(cfg.rate_at(17) == 1e-6);
    CHECK(cfg.rate_at(19) == 1e-6);

    const auto parsed = parse_lr_schedule("0:0.01,3:0.001");
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[1].epoch == 3);
    CHECK(parsed[1].rate == 0.001);
    CHECK_THROWS_AS(parse_lr_schedule("0-0.01"), Error);

    TrainConfig bad = toy_config();
    bad.lr_schedule = {{1, 1e-3}};
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("Adam")
{
    SUBCASE("zero gradients leave parameters unchanged")
    {
        std::vector<double> value{1.0, -2.0}, grad{0.0, 0.0};
        std::vector<ParamView<double>> params{{"p", value, grad}};
        AdamState state;
        for (int i = 0; i < 5; ++i)
            adam_step(params, state, 1e-2);
        CHECK(value == std::vector<double>{1.0, -2.0});
        CHECK(state.step == 5);
    }
    SUBCASE("constant gradient: steps approach the learning rate")
    {
        std::vector<double> value{0.0}, grad{0.37};
        std::vector<ParamView<double>> params{{"p", value, grad}};
        AdamState state;
        // scalar reference simulation of the bias-corrected update
        double m = 0, v = 0, x = 0;
        for (int k = 1; k <= 200; ++k) {
            const double before = value[0];
            adam_step(params, state, 1e-3);
            m = 0.9 * m + 0.1 * 0.37;
            v = 0.999 * v + 0.001 * 0.37 * 0.37;
            x -= 1e-3 * (m / (1 - std::pow(0.9, k))) / (std::sqrt(v / (1 - std::pow(0.999, k))) + 1e-8);
            CHECK(value[0] == doctest::Approx(x).epsilon(1e-12));
            if (k == 200)
                CHECK(before - value[0] == doctest::Approx(1e-3).epsilon(1e-6));
        }
    }
    SUBCASE("identical runs give identical trajectories")
    {
        std::vector<double> a{0.5, 0.1}, b{0.5, 0.1}, ga{0.2, -0.3}, gb{0.2, -0.3};
        std::vector<ParamView<double>> pa{{"p", a, ga}}, pb{{"p", b, gb}};
        AdamState sa, sb;
        for (int i = 0; i < 20; ++i) {
            ga[0] = gb[0] = std::sin(i);
            adam_step(pa, sa, 1e-2);
            adam_step(pb, sb, 1e-2);
        }
        CHECK(a == b);
    }
}

TEST_CASE("epoch dataset")
{
    ClipSpec spec;
    spec.frames = 16;
    spec.rows = 28;
    spec.cols = 30;
    spec.seed = 1;
    const std::vector<Video> clips{make_clip(spec)};

    SUBCASE("temporal window 15 on 16 frames leaves frames 7 and 8")
    {
        TrainConfig cfg = toy_config();
        cfg.search.temporal_window = 15;
        cfg.search.num_neighbors = 15;
        cfg.network = NetworkConfig::standard(15, 1);
        cfg.network.stage1_width = cfg.network.trunk_width = 4;
        const EpochDataset data(clips, cfg, 0);
        CHECK(data.eligible_frames(0) == std::pair<int, int>{7, 9});
        for (int b = 0; b < 20; ++b)
            for (int i = 0; i < cfg.batch_size; ++i) {
                const auto c = data.crop(b, i);
                CHECK((c.t == 7 || c.t == 8));
                CHECK(c.x >= 2);
                CHECK(c.x + cfg.crop_size + 2 <= spec.cols);
                CHECK(c.y >= 2);
                CHECK(c.y + cfg.crop_size + 2 <= spec.rows);
            }
    }
    SUBCASE("crop channel 0 equals the noisy video and targets are noisy minus clean")
    {
        TrainConfig cfg = toy_config();
        cfg.search.mode = SearchMode::free;
        const EpochDataset data(clips, cfg, 0);
        const Batch b = data.batch(2);
        for (int i = 0; i < cfg.batch_size; ++i) {
            const auto c = data.crop(2, i);
            for (int y = 0; y < cfg.crop_size; ++y)
                for (int x = 0; x < cfg.crop_size; ++x) {
                    const float noisy = data.noisy(0)(c.t, 0, c.y + y, c.x + x);
                    CHECK(b.features(i, 0, y, x) == noisy);
                    CHECK(b.noise(i, 0, y, x) == noisy - clips[0](c.t, 0, c.y + y, c.x + x));
                }
        }
    }
    SUBCASE("fresh noise per epoch, reproducible per seed")
    {
        const TrainConfig cfg = toy_config();
        const EpochDataset e0(clips, cfg, 0), e0b(clips, cfg, 0), e1(clips, cfg, 1);
        CHECK(e0.noisy(0) == e0b.noisy(0));
        CHECK_FALSE(e0.noisy(0) == e1.noisy(0));
        CHECK(e0.batch(1).features == e0b.batch(1).features);
    }
    SUBCASE("video too small for any crop")
    {
        TrainConfig cfg = toy_config();
        cfg.crop_size = 40;
        try {
            EpochDataset data(clips, cfg, 0);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("video 0") != std::string::npos);
        }
    }
}

TEST_CASE("loss decreases on a fixed batch")
{
    ClipSpec spec;
    spec.frames = 5;
    spec.rows = 24;
    spec.cols = 24;
    spec.seed = 2;
    const std::vector<Video> clips{make_clip(spec)};
    const TrainConfig cfg = toy_config();
    const Batch batch = EpochDataset(clips, cfg, 0).batch(0);
    Network<float> net(cfg.network);
    net.initialize(3);
    AdamState adam;
    int increases = 0;
    double previous = compute_gradients(net, batch.features, batch.noise);
    for (int k = 0; k < 10; ++k) {
        auto params = net.parameters();
        adam_step(params, adam, 1e-3);
        const double loss = compute_gradients(net, batch.features, batch.noise);
        increases += !(loss < previous);
        previous = loss;
    }
    CHECK(increases <= 1);
}

TEST_CASE("training loop")
{
    ClipSpec spec;
    spec.frames = 5;
    spec.rows = 24;
    spec.cols = 24;
    std::vector<Video> train_clips, val_clips;
    for (int i = 0; i < 2; ++i) {
        spec.seed = 10 + i;
        train_clips.push_back(make_clip(spec));
    }
    spec.seed = 20;
    val_clips.push_back(make_clip(spec));

    SUBCASE("zero learning rate keeps the initial parameters")
    {
        TrainConfig cfg = toy_config();
        cfg.lr_schedule = {{0, 0.0}};
        Network<float> init(cfg.network);
        init.initialize(derive_seed(cfg.seed, 0x696e6974ull));
        TrainResult r = train(train_clips, val_clips, cfg);
        CHECK(flatten(r.network) == flatten(init));
    }
    SUBCASE("deterministic, with one log entry per epoch")
    {
        const TrainConfig cfg = toy_config();
        int callbacks = 0;
        TrainResult a = train(train_clips, val_clips, cfg, [&](const EpochLog&) { ++callbacks; });
        TrainResult b = train(train_clips, val_clips, cfg);
        CHECK(callbacks == 2);
        REQUIRE(a.log.size() == 2);
        CHECK(a.log[1].epoch == 1);
        CHECK(std::isfinite(a.log[1].val_psnr));
        CHECK(flatten(a.network) == flatten(b.network));
        CHECK(a.noisy_val_psnr == doctest::Approx(20 * std::log10(255.0 / 20)).epsilon(0.02));

        std::ostringstream csv;
        write_train_log(a.log, csv);
        CHECK(csv.str().rfind("epoch,lr,train_loss,val_psnr\n", 0) == 0);
    }
    SUBCASE("schedule is applied per epoch")
    {
        TrainConfig cfg = toy_config();
        cfg.epochs = 3;
        cfg.lr_schedule = {{0, 1e-3}, {2, 1e-4}};
        TrainResult r = train(train_clips, val_clips, cfg);
        CHECK(r.log[0].rate == 1e-3);
        CHECK(r.log[1].rate == 1e-3);
        CHECK(r.log[2].rate == 1e-4);
    }
    SUBCASE("non-finite loss aborts with a diagnostic")
    {
        TrainConfig cfg = toy_config();
        cfg.lr_schedule = {{0, 1e38}};
        try {
            train(train_clips, val_clips, cfg);
            FAIL("expected an error");
        } catch (const Error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("epoch") != std::string::npos);
            CHECK(msg.find("batch") != std::string::npos);
            CHECK(msg.find("1e+38") != std::string::npos);
        }
    }
    SUBCASE("no-patch baseline trains on the noisy frame alone")
    {
        TrainConfig cfg = toy_config();
        cfg.network = NetworkConfig::no_patch_baseline(1);
        cfg.network.trunk_width = 4;
        cfg.network.trunk_depth = 3;
        TrainResult r = train(train_clips, val_clips, cfg);
        CHECK(std::isfinite(r.log.back().val_psnr));
    }
}

TEST_CASE("key-value configuration")
{
    const KeyValues kv = KeyValues::parse(
        "# toy\ncrop_size = 20\nbatch_size=8\nlr_schedule = 0:1e-3, 5:1e-4\nnoise = sp\n"
        "fraction = 0.25\npatch = 9\nwindow = 11\nframes = 3\nmode = one-per-frame\n"
        "stage1_width = 8\ntrunk_width = 16\nstage1_depth = 2\ntrunk_depth = 3\n");
    kv.require_known(train_config_keys());
    const TrainConfig cfg = train_config_from(kv);
    CHECK(cfg.crop_size == 20);
    CHECK(cfg.batch_size == 8);
    CHECK(cfg.lr_schedule.size() == 2);
    CHECK(cfg.noise.kind == NoiseKind::salt_pepper_uniform);
    CHECK(cfg.search.num_neighbors == 3);
    CHECK(cfg.network.input_channels == 3);
    CHECK(cfg.network.trunk_depth == 3);

    CHECK_THROWS_AS(KeyValues::parse("crop = 3\n").require_known(train_config_keys()), Error);
    CHECK_THROWS_AS(KeyValues::parse("no equals sign\n"), Error);
    CHECK_THROWS_AS(train_config_from(KeyValues::parse("batch_size = many\n")), Error);
}
