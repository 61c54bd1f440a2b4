#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <omp.h>

#include "CLI11.hpp"
#include "vnlnet/bench.hpp"
#include "vnlnet/denoise.hpp"
#include "vnlnet/metrics.hpp"
#include "vnlnet/noise.hpp"
#include "vnlnet/synthetic.hpp"
#include "vnlnet/training.hpp"

namespace vnl {

namespace {

namespace fs = std::filesystem;

// Invalid flag values: reported like parse errors.
class UsageError : public Error {
public:
    using Error::Error;
};

Video read_dir(const fs::path& dir)
{
    if (!fs::is_directory(dir))
        throw Error("not a directory: " + dir.string());
    const auto files = list_sequence(dir);
    if (files.empty())
        throw Error("no .pgm/.ppm frames in " + dir.string());
    return read_sequence(files);
}

void set_threads(int threads)
{
    if (threads < 0)
        throw Error("--threads must be >= 0");
    if (threads > 0)
        omp_set_num_threads(threads);
}

// Search flags shared by `search` and `denoise`.
struct SearchFlags {
    int patch = 41;
    int window = 41;
    int frames = 15;
    int neighbors = -1;  // -1: w_t in one-per-frame mode, 15 in free mode
    std::string mode = "one-per-frame";
    std::string oracle;
    int threads = 0;

    void add_to(CLI::App& cmd)
    {
        cmd.add_option("--patch", patch, "patch size s (odd)")->capture_default_str();
        cmd.add_option("--window", window, "spatial search window w_s (odd)")->capture_default_str();
        cmd.add_option("--frames", frames, "temporal search window w_t (odd)")->capture_default_str();
        cmd.add_option("--neighbors", neighbors, "number of matches n (default: w_t, or 15 in free mode)");
        cmd.add_option("--mode", mode, "free | one-per-frame")->capture_default_str();
        cmd.add_option("--oracle", oracle, "directory of clean frames used for distances only");
        cmd.add_option("--threads", threads, "worker threads (0 = all)")->capture_default_str();
    }

    SearchConfig config() const
    {
        SearchConfig cfg;
        cfg.patch_size = patch;
        cfg.spatial_window = window;
        cfg.temporal_window = frames;
        try {
            cfg.mode = parse_search_mode(mode);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        cfg.num_neighbors = neighbors > 0 ? neighbors
                            : cfg.mode == SearchMode::one_per_frame ? frames
                                                                    : 15;
        return cfg;
    }
};

std::string describe(const SearchConfig& cfg)
{
    std::ostringstream os;
    os << "search: patch=" << cfg.patch_size << " window=" << cfg.spatial_window
       << " frames=" << cfg.temporal_window << " neighbors=" << cfg.num_neighbors
       << " mode=" << search_mode_name(cfg.mode) << " oracle=" << (cfg.oracle_guide ? "yes" : "no");
    return os.str();
}

// ---------------------------------------------------------------------------

struct AddNoiseArgs {
    std::string in, out, noise = "awgn";
    double sigma = std::nan("");
    double fraction = std::nan("");
    std::uint64_t seed = 0;
};

void cmd_add_noise(const AddNoiseArgs& a, std::ostream& out)
{
    NoiseSpec spec;
    try {
        spec.kind = parse_noise_kind(a.noise);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    spec.seed = a.seed;
    if (spec.kind == NoiseKind::salt_pepper_uniform) {
        if (std::isnan(a.fraction))
            throw UsageError("--noise sp needs --fraction");
        if (!std::isnan(a.sigma))
            throw UsageError("--sigma does not apply to --noise sp");
        spec.fraction = a.fraction;
    } else {
        if (std::isnan(a.sigma))
            throw UsageError("--noise " + a.noise + " needs --sigma");
        if (!std::isnan(a.fraction))
            throw UsageError("--fraction only applies to --noise sp");
        spec.sigma = a.sigma;
    }
    try {
        spec.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    const Video clean = read_dir(a.in);
    const Video noisy = add_noise(clean, spec);
    const auto files = write_sequence(noisy, a.out);
    std::ofstream side(fs::path(a.out) / "noise.txt");
    side << spec.describe();
    if (!side)
        throw Error("cannot write " + (fs::path(a.out) / "noise.txt").string());
    out << "wrote " << files.size() << " frames to " << a.out << '\n';
}

// ---------------------------------------------------------------------------

struct SearchArgs {
    std::string in, out, impl = "fast";
    SearchFlags flags;
};

void cmd_search(SearchArgs& a, std::ostream& out)
{
    set_threads(a.flags.threads);
    SearchConfig cfg = a.flags.config();
    if (a.impl != "fast" && a.impl != "naive")
        throw Error("--impl must be fast or naive");
    const Video v = read_dir(a.in);
    Video clean;
    if (!a.flags.oracle.empty()) {
        clean = read_dir(a.flags.oracle);
        cfg.oracle_guide = &clean;
    }
    cfg.validate(v);
    SearchOptions opts;
    opts.threads = a.flags.threads;
    const MatchTable table = a.impl == "fast" ? search_fast(v, cfg, opts) : search_naive(v, cfg, opts);
    save_match_table(table, a.out);
    out << describe(cfg) << '\n' << "wrote " << a.out << '\n';
}

// ---------------------------------------------------------------------------

struct DenoiseArgs {
    std::string in, out, weights, baseline = "none";
    SearchFlags flags;
};

void cmd_denoise(DenoiseArgs& a, std::ostream& out)
{
    set_threads(a.flags.threads);
    SearchConfig cfg = a.flags.config();
    if (a.baseline != "none" && a.baseline != "nl-mean")
        throw Error("--baseline must be none or nl-mean");
    if (a.baseline == "none" && a.weights.empty())
        throw Error("--weights is required unless --baseline nl-mean is given");

    const Video noisy = read_dir(a.in);
    Video clean;
    if (!a.flags.oracle.empty()) {
        clean = read_dir(a.flags.oracle);
        cfg.oracle_guide = &clean;
    }
    cfg.validate(noisy);
    SearchOptions opts;
    opts.threads = a.flags.threads;
    out << describe(cfg) << '\n';

    Video result;
    if (a.baseline == "nl-mean") {
        result = nl_mean_denoise(noisy, cfg, opts);
    } else {
        Network<float> net = load_weights(a.weights);
        check_network_matches(net.config(), cfg, noisy.channels());
        result = denoise(noisy, net, cfg, opts);
    }
    const auto files = write_sequence(result, a.out);
    out << "wrote " << files.size() << " frames to " << a.out << '\n';
}

// ---------------------------------------------------------------------------

const std::set<std::string>& data_keys()
{
    static const std::set<std::string> keys{
        "train_dirs", "val_dirs", "synthetic_train", "synthetic_val", "synthetic_frames",
        "synthetic_rows", "synthetic_cols", "synthetic_moving", "synthetic_seed"};
    return keys;
}

std::vector<Video> load_dirs(const std::string& list)
{
    std::vector<Video> out;
    std::istringstream in(list);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(' '), e = item.find_last_not_of(' ');
        if (b != std::string::npos)
            out.push_back(read_dir(item.substr(b, e - b + 1)));
    }
    return out;
}

struct TrainArgs {
    std::string config, weights, log;
    int threads = 0;
};

void cmd_train(const TrainArgs& a, std::ostream& out)
{
    set_threads(a.threads);
    const KeyValues kv = KeyValues::read(a.config);
    std::set<std::string> known = train_config_keys();
    known.insert(data_keys().begin(), data_keys().end());
    kv.require_known(known);
    const TrainConfig cfg = train_config_from(kv);

    std::vector<Video> train_set, val_set;
    if (kv.has("train_dirs")) {
        train_set = load_dirs(kv.get("train_dirs", ""));
        val_set = load_dirs(kv.get("val_dirs", ""));
    } else {
        const int frames = kv.get_int("synthetic_frames", 16);
        const int rows = kv.get_int("synthetic_rows", 64);
        const int cols = kv.get_int("synthetic_cols", 64);
        const double moving = kv.get_double("synthetic_moving", 0.5);
        const auto seed = static_cast<std::uint64_t>(kv.get_int("synthetic_seed", 1));
        const int C = cfg.network.color_channels;
        train_set = make_corpus(kv.get_int("synthetic_train", 8), frames, rows, cols, C, moving, seed);
        val_set = make_corpus(kv.get_int("synthetic_val", 2), frames, rows, cols, C, moving,
                              derive_seed(seed, 1));
    }
    if (train_set.empty())
        throw Error("no training videos (set train_dirs or synthetic_train)");

    std::ofstream log(a.log);
    if (!log)
        throw Error("cannot write " + a.log);
    log << "epoch,lr,train_loss,val_psnr\n";
    TrainResult result = train(train_set, val_set, cfg, [&](const EpochLog& e) {
        log << e.epoch << ',' << e.rate << ',' << e.train_loss << ',' << e.val_psnr << '\n';
        log.flush();
        out << "epoch " << e.epoch << " lr " << e.rate << " loss " << e.train_loss
            << " val_psnr " << e.val_psnr << '\n';
    });
    save_weights(result.network, a.weights);
    out << "noisy validation psnr " << result.noisy_val_psnr << '\n'
        << "wrote " << a.weights << " and " << a.log << '\n';
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string clean, test;
    bool csv = false;
};

void cmd_eval(const EvalArgs& a, std::ostream& out)
{
    const Video ref = read_dir(a.clean);
    const Video test = read_dir(a.test);
    if (!ref.same_shape(test))
        throw Error("eval: clean " + ref.shape_string() + " and test " + test.shape_string() +
                    " sequences differ in shape");
    const MetricReport report = evaluate(ref, test);
    if (a.csv)
        report.print_csv(out);
    else
        report.print_table(out);
}

// ---------------------------------------------------------------------------

struct BenchArgs {
    BenchGrid grid;
    std::string impl = "both";
    std::string csv;
};

void cmd_bench(BenchArgs& a, std::ostream& out)
{
    set_threads(a.grid.threads);
    if (a.impl != "both" && a.impl != "fast" && a.impl != "naive")
        throw Error("--impl must be both, fast or naive");
    a.grid.run_naive = a.impl != "fast";
    a.grid.run_fast = a.impl != "naive";
    for (int s : a.grid.patch_sizes)
        if (s < 1 || s % 2 == 0)
            throw Error("patch sizes must be odd and positive");
    for (int n : a.grid.sizes)
        if (n < 1)
            throw Error("frame sizes must be positive");

    const auto rows = run_search_bench(a.grid);
    if (a.csv.empty()) {
        write_bench_csv(rows, a.grid, out);
    } else {
        std::ofstream file(a.csv);
        write_bench_csv(rows, a.grid, file);
        if (!file)
            throw Error("cannot write " + a.csv);
    }
    for (const BenchSlopes& s : bench_slopes(rows)) {
        out << "# log-log slope of time vs patch size, " << s.size << "x" << s.size << ":";
        if (s.naive)
            out << " naive " << *s.naive;
        if (s.fast)
            out << " fast " << *s.fast;
        out << '\n';
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Non-local video denoising toolkit", "vnlnet"};
    app.require_subcommand(1);

    AddNoiseArgs noise_args;
    auto* add_noise_cmd = app.add_subcommand("add-noise", "add synthetic noise to a sequence");
    add_noise_cmd->add_option("--in", noise_args.in, "input frame directory")->required();
    add_noise_cmd->add_option("--out", noise_args.out, "output frame directory")->required();
    add_noise_cmd->add_option("--noise", noise_args.noise, "awgn | box | sp")->capture_default_str();
    add_noise_cmd->add_option("--sigma", noise_args.sigma, "standard deviation (awgn, box)");
    add_noise_cmd->add_option("--fraction", noise_args.fraction, "replaced fraction (sp)");
    add_noise_cmd->add_option("--seed", noise_args.seed, "random seed")->capture_default_str();

    SearchArgs search_args;
    auto* search_cmd = app.add_subcommand("search", "compute and save the match table");
    search_cmd->add_option("--in", search_args.in, "input frame directory")->required();
    search_cmd->add_option("--out", search_args.out, "match table file")->required();
    search_cmd->add_option("--impl", search_args.impl, "fast | naive")->capture_default_str();
    search_args.flags.add_to(*search_cmd);

    DenoiseArgs denoise_args;
    auto* denoise_cmd = app.add_subcommand("denoise", "denoise a sequence frame by frame");
    denoise_cmd->add_option("--in", denoise_args.in, "noisy frame directory")->required();
    denoise_cmd->add_option("--out", denoise_args.out, "output frame directory")->required();
    denoise_cmd->add_option("--weights", denoise_args.weights, "network weight file");
    denoise_cmd->add_option("--baseline", denoise_args.baseline, "none | nl-mean")->capture_default_str();
    denoise_args.flags.add_to(*denoise_cmd);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train a network from a key = value config file");
    train_cmd->add_option("--config", train_args.config, "configuration file")->required();
    train_cmd->add_option("--weights", train_args.weights, "output weight file")->required();
    train_cmd->add_option("--log", train_args.log, "output CSV log")->required();
    train_cmd->add_option("--threads", train_args.threads, "worker threads (0 = all)");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "PSNR and SSIM of a sequence against a reference");
    eval_cmd->add_option("--clean", eval_args.clean, "reference frame directory")->required();
    eval_cmd->add_option("--test", eval_args.test, "test frame directory")->required();
    eval_cmd->add_flag("--csv", eval_args.csv, "print CSV instead of a table");

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "time naive and fast patch search");
    bench_cmd->add_option("--sizes", bench_args.grid.sizes, "frame sides")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--patches", bench_args.grid.patch_sizes, "patch sizes")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--frames", bench_args.grid.frames, "clip length")->capture_default_str();
    bench_cmd->add_option("--window", bench_args.grid.spatial_window, "spatial window")->capture_default_str();
    bench_cmd->add_option("--temporal", bench_args.grid.temporal_window, "temporal window")->capture_default_str();
    bench_cmd->add_option("--reps", bench_args.grid.repetitions, "repetitions (minimum is kept)")->capture_default_str();
    bench_cmd->add_option("--impl", bench_args.impl, "both | fast | naive")->capture_default_str();
    bench_cmd->add_option("--csv", bench_args.csv, "write the CSV to a file instead of stdout");
    bench_cmd->add_option("--threads", bench_args.grid.threads, "worker threads (0 = all)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "vnlnet: usage error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*add_noise_cmd)
            cmd_add_noise(noise_args, out);
        else if (*search_cmd)
            cmd_search(search_args, out);
        else if (*denoise_cmd)
            cmd_denoise(denoise_args, out);
        else if (*train_cmd)
            cmd_train(train_args, out);
        else if (*eval_cmd)
            cmd_eval(eval_args, out);
        else if (*bench_cmd)
            cmd_bench(bench_args, out);
    } catch (const UsageError& e) {
        err << "vnlnet: usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "vnlnet: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace vnl
