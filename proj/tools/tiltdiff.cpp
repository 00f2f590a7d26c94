// tiltdiff command-line front end.
//
// Exit codes: 0 ok, 2 bad config or input, 3 numerical failure, 4 file
// system failure, 5 a score-gap inequality failed.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tiltdiff/errors.hpp"
#include "tiltdiff/experiments.hpp"
#include "tiltdiff/io.hpp"
#include "tiltdiff/rng.hpp"
#include "tiltdiff/synthdata.hpp"
#include "tiltdiff/transport.hpp"

namespace fs = std::filesystem;
using namespace tiltdiff;

namespace {

struct GlobalFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::optional<std::size_t> threads;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ExperimentConfig resolve_config(const GlobalFlags& flags, const std::string& command) {
    Json doc = flags.config.empty() ? default_config(command) : read_json_file(flags.config);
    if (flags.seed) doc["seed"] = *flags.seed;
    ExperimentConfig config = parse_config(doc);
    if (flags.threads) config.threads = *flags.threads;
    if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
    if (config.threads == 0) throw ConfigError("--threads must be >= 1");
    return config;
}

fs::path out_dir_of(const GlobalFlags& flags) { return flags.out_dir.empty() ? fs::path("out") : fs::path(flags.out_dir); }

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
    ensure_dir(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

std::string drop_header(const std::string& csv) { return csv.substr(csv.find('\n') + 1); }

int cmd_convergence(const GlobalFlags& flags) {
    Stopwatch clock;
    const ExperimentConfig config = resolve_config(flags, "convergence");
    const fs::path csv = config.out_dir / "convergence.csv";
    std::ofstream out = open_out(csv);
    out << format_convergence_csv({});
    out.flush();
    run_convergence(config, [&](std::span<const ConvergenceRow> block) {
        out << drop_header(format_convergence_csv({block.begin(), block.end()}));
        out.flush();
        if (!out) throw IoError("write failed: " + csv.string());
    });
    out.close();
    write_manifest(config.out_dir, {"convergence", config_hash(config), config.seed, {csv}, clock.seconds()});
    return 0;
}

int cmd_bounded_target(const GlobalFlags& flags) {
    Stopwatch clock;
    const ExperimentConfig config = resolve_config(flags, "bounded-target");
    ensure_dir(config.out_dir);
    const auto rows = run_bounded_target(config);
    const fs::path csv = config.out_dir / "bounded_target.csv";
    write_text_file(csv, format_compare_csv(rows));
    write_manifest(config.out_dir, {"bounded-target", config_hash(config), config.seed, {csv}, clock.seconds()});
    return 0;
}

int cmd_bounds(const GlobalFlags& flags) {
    Stopwatch clock;
    const ExperimentConfig config = resolve_config(flags, "bounds");
    ensure_dir(config.out_dir);
    const Json report = run_bounds_report(config);
    const fs::path path = config.out_dir / "bounds_report.json";
    write_text_file(path, report.dump(2) + "\n");
    write_manifest(config.out_dir, {"bounds", config_hash(config), config.seed, {path}, clock.seconds()});
    return 0;
}

int cmd_scoregap(const GlobalFlags& flags) {
    Stopwatch clock;
    const ExperimentConfig config = resolve_config(flags, "scoregap");
    ensure_dir(config.out_dir);
    const auto rows = run_scoregap(config);
    const fs::path csv = config.out_dir / "scoregap.csv";
    write_text_file(csv, format_scoregap_csv(rows));
    write_manifest(config.out_dir, {"scoregap", config_hash(config), config.seed, {csv}, clock.seconds()});
    std::size_t failed = 0;
    for (const auto& r : rows) {
        if (!r.holds) {
            ++failed;
            std::cerr << "violated: instance " << r.instance << " (" << r.label << ") " << to_string(r.bound)
                      << ": delta " << r.delta << " > rhs " << r.rhs << "\n";
        }
    }
    if (failed > 0) {
        std::cerr << failed << " of " << rows.size() << " rows violate their bound\n";
        return 5;
    }
    return 0;
}

int cmd_train(const GlobalFlags& flags) {
    Stopwatch clock;
    ExperimentConfig config = resolve_config(flags, "train");
    if (!(config.raw.contains("train") && config.raw.at("train").contains("seed"))) {
        config.train.seed = cell_seed(config.seed, 6, 0);
    }
    ensure_dir(config.out_dir);
    Rng rng = substream(config.seed, 0);
    const Dataset data = draw_target(config.target, config.n_base, rng);
    const fs::path trace_path = config.out_dir / "loss_trace.csv";
    const fs::path ckpt_path = config.out_dir / "checkpoint.json";
    TrainResult result = [&] {
        try {
            return train(data, config.tilt, config.schedule, config.train);
        } catch (const TrainingDivergedError& e) {
            write_text_file(trace_path, format_loss_trace(e.trace()));
            throw;
        }
    }();
    write_text_file(trace_path, format_loss_trace(result.trace));
    save_checkpoint(ckpt_path, {std::move(result.model), config.schedule, config.train});
    write_manifest(config.out_dir,
                   {"train", config_hash(config), config.seed, {ckpt_path, trace_path}, clock.seconds()});
    return 0;
}

struct SampleFlags {
    std::string checkpoint;
    std::size_t n = 1000;
    std::optional<std::size_t> steps;
    std::string out;
};

int cmd_sample(const GlobalFlags& flags, const SampleFlags& opts) {
    Stopwatch clock;
    const std::string text = read_text_file(opts.checkpoint);
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::exception& e) {
        throw ConfigError("malformed checkpoint " + opts.checkpoint + ": " + e.what());
    }
    Checkpoint cp = checkpoint_from_json(doc);
    if (opts.steps) {
        cp.schedule.steps = *opts.steps;
        cp.schedule.validate();
    }
    if (opts.n == 0) throw ConfigError("--n must be >= 1");
    const std::uint64_t seed = flags.seed.value_or(0);
    SampleOptions so;
    so.threads = flags.threads.value_or(1);
    const Dataset samples = reverse_sample(cp.model, cp.schedule, opts.n, seed, so);
    const fs::path out_dir = out_dir_of(flags);
    const fs::path path = opts.out.empty() ? out_dir / "samples.csv" : fs::path(opts.out);
    write_text_file(path, format_csv(samples));
    Json inputs{{"checkpoint", fnv1a(text)}, {"n", opts.n}, {"steps", cp.schedule.steps}};
    write_manifest(out_dir, {"sample", fnv1a(inputs.dump()), seed, {path}, clock.seconds()});
    return 0;
}

struct EvalFlags {
    std::string x, y, out;
    double p = 2.0;
    std::size_t n_proj = 128;
    std::size_t bins = 50;
};

int cmd_eval(const GlobalFlags& flags, const EvalFlags& opts) {
    Stopwatch clock;
    const Dataset x = load_csv(opts.x);
    const Dataset y = load_csv(opts.y);
    if (x.dim() != y.dim()) throw ConfigError("eval: --x and --y have different dimensions");
    const std::uint64_t seed = flags.seed.value_or(0);
    SlicedOptions so;
    so.n_proj = opts.n_proj;
    so.threads = flags.threads.value_or(1);
    Json metrics{{"p", opts.p}, {"n_proj", opts.n_proj}, {"n_x", x.size()}, {"n_y", y.size()}, {"dim", x.dim()}};
    metrics["sw_p"] = sliced_wp(x, y, opts.p, seed, so);
    if (x.dim() <= 3) {
        std::vector<AxisGrid> grid;
        for (std::size_t j = 0; j < x.dim(); ++j) {
            double lo = x(0, j), hi = x(0, j);
            for (const Dataset* ds : {&x, &y}) {
                for (std::size_t i = 0; i < ds->size(); ++i) {
                    lo = std::min(lo, (*ds)(i, j));
                    hi = std::max(hi, (*ds)(i, j));
                }
            }
            if (!(hi > lo)) hi = lo + 1.0;
            grid.push_back({opts.bins, lo, hi});
        }
        metrics["tv"] = tv_histogram(x, y, grid);
        metrics["bins"] = opts.bins;
    } else {
        metrics["tv"] = nullptr;
    }
    const fs::path out_dir = out_dir_of(flags);
    const fs::path path = opts.out.empty() ? out_dir / "metrics.json" : fs::path(opts.out);
    write_text_file(path, metrics.dump(2) + "\n");
    Json inputs{{"x", fnv1a(read_text_file(opts.x))}, {"y", fnv1a(read_text_file(opts.y))},
                {"p", opts.p}, {"n_proj", opts.n_proj}, {"bins", opts.bins}};
    write_manifest(out_dir, {"eval", fnv1a(inputs.dump()), seed, {path}, clock.seconds()});
    return 0;
}

template <class F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const TrainingDivergedError& e) {
        std::cerr << "error: training diverged: " << e.what() << "\n";
        return 3;
    } catch (const NumericsError& e) {
        std::cerr << "error: numerics: " << e.what() << "\n";
        return 3;
    } catch (const OverflowError& e) {
        std::cerr << "error: overflow: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "error: io: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Json::exception& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: io: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tilted sampling via reweighting and diffusion"};
    app.require_subcommand(1);
    GlobalFlags flags;
    app.add_option("--config", flags.config, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--seed", flags.seed, "Override the config seed");
    app.add_option("--out-dir", flags.out_dir, "Output directory");
    app.add_option("--threads", flags.threads, "Worker threads");

    auto* convergence = app.add_subcommand("convergence", "Empirical error and bounds across the N grid");
    auto* bounded = app.add_subcommand("bounded-target", "Reweigh, reweigh+diffusion and oracle samples per theta");
    auto* bounds = app.add_subcommand("bounds", "Tilt quantities and bound values as JSON");
    auto* scoregap = app.add_subcommand("scoregap", "Score-gap inequality battery");
    auto* train = app.add_subcommand("train", "Fit a denoiser to the tilted target");

    SampleFlags sample_flags;
    auto* sample = app.add_subcommand("sample", "Draw from a checkpoint");
    sample->add_option("--checkpoint", sample_flags.checkpoint)->required();
    sample->add_option("--n", sample_flags.n, "Number of samples");
    sample->add_option("--steps", sample_flags.steps, "Reverse steps (default: checkpoint schedule)");
    sample->add_option("--out", sample_flags.out, "Output CSV (default: <out-dir>/samples.csv)");

    EvalFlags eval_flags;
    auto* eval = app.add_subcommand("eval", "Sliced W_p and histogram TV between two CSVs");
    eval->add_option("--x", eval_flags.x)->required();
    eval->add_option("--y", eval_flags.y)->required();
    eval->add_option("--p", eval_flags.p);
    eval->add_option("--n-proj", eval_flags.n_proj);
    eval->add_option("--bins", eval_flags.bins);
    eval->add_option("--out", eval_flags.out, "Output JSON (default: <out-dir>/metrics.json)");

    for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    return guarded([&] {
        if (*convergence) return cmd_convergence(flags);
        if (*bounded) return cmd_bounded_target(flags);
        if (*bounds) return cmd_bounds(flags);
        if (*scoregap) return cmd_scoregap(flags);
        if (*train) return cmd_train(flags);
        if (*sample) return cmd_sample(flags, sample_flags);
        return cmd_eval(flags, eval_flags);
    });
}
