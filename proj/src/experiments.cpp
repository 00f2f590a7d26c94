#include "tiltdiff/experiments.hpp"

#include <boost/version.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include "tiltdiff/errors.hpp"
#include "tiltdiff/parallel.hpp"

namespace tiltdiff {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class T>
T get_as(const Json& j, const std::string& key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <class T>
T get_or(const Json& j, const std::string& key, T fallback, const std::string& where) {
    return j.contains(key) ? get_as<T>(j, key, where) : fallback;
}

TargetSpec parse_target(const Json& j) {
    const std::string where = "target";
    if (!j.is_object()) throw ConfigError("target: expected an object");
    TargetSpec t;
    const auto kind = get_or<std::string>(j, "kind", "beta_mix", where);
    if (kind == "beta_mix") {
        Json rest = j;
        rest.erase("kind");
        t.kind = TargetSpec::Kind::BetaMix;
        t.beta_mix = beta_mix_from_json(rest);
    } else if (kind == "gaussian") {
        check_keys(j, {"kind", "dim", "mean", "sd"}, where);
        t.kind = TargetSpec::Kind::Gaussian;
        t.dim = get_or<std::size_t>(j, "dim", 1, where);
        t.mean = get_or(j, "mean", 0.0, where);
        t.sd = get_or(j, "sd", 1.0, where);
        if (t.dim == 0 || !(t.sd > 0.0)) throw ConfigError("target: gaussian needs dim >= 1 and sd > 0");
    } else if (kind == "coin") {
        check_keys(j, {"kind"}, where);
        t.kind = TargetSpec::Kind::Coin;
    } else if (kind == "csv") {
        check_keys(j, {"kind", "path"}, where);
        t.kind = TargetSpec::Kind::Csv;
        t.csv = get_as<std::string>(j, "path", where);
    } else {
        throw ConfigError("target.kind: unknown kind '" + kind + "'");
    }
    return t;
}

Box parse_box(const Json& j) {
    Box b;
    try {
        for (const auto& pr : j) {
            const auto v = pr.get<std::vector<double>>();
            if (v.size() != 2 || !(v[0] <= v[1])) throw ConfigError("boxes: each axis needs [lo, hi] with lo <= hi");
            b.bounds.emplace_back(v[0], v[1]);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("boxes: ") + e.what());
    }
    return b;
}

// Max ||g(x)|| over a finite atom set.
double finite_g_max(const Dataset& atoms, const TiltFunction& g) {
    std::vector<double> out(g.output_dim(atoms.dim()));
    double m = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        g.evaluate(atoms.row(i), out);
        m = std::max(m, norm(out));
    }
    return m;
}

Dataset coin_atoms() { return Dataset(2, 1, {0.0, 1.0}); }

void require_oracle(const ExperimentConfig& c) {
    if (!c.target.has_oracle()) {
        throw ConfigError(c.experiment + ": needs a beta_mix target for the exact tilted sampler");
    }
    if (!c.tilt.is_exponential()) throw ConfigError(c.experiment + ": the tilted sampler needs the exponential family");
}

TiltSpec with_theta_multiplier(const TiltSpec& base, double mult) {
    TiltSpec t = base;
    std::fill(t.theta.begin(), t.theta.end(), mult);
    return t;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json number_or_null(const std::optional<double>& v) { return v ? number_or_null(*v) : Json(nullptr); }

}  // namespace

std::size_t TargetSpec::dimension() const {
    switch (kind) {
        case Kind::BetaMix: return beta_mix.d;
        case Kind::Gaussian: return dim;
        case Kind::Coin: return 1;
        case Kind::Csv: return load_csv(csv).dim();
    }
    return 1;
}

void ExperimentConfig::validate() const {
    if (N_grid.empty()) throw ConfigError("N_grid must not be empty");
    for (std::size_t i = 0; i < N_grid.size(); ++i) {
        if (N_grid[i] == 0) throw ConfigError("N_grid entries must be >= 1");
        if (i > 0 && !(N_grid[i] > N_grid[i - 1])) throw ConfigError("N_grid must be strictly ascending");
    }
    if (seeds == 0) throw ConfigError("seeds must be >= 1");
    if (!(metric.p >= 1.0) || metric.n_proj == 0 || metric.bins == 0) {
        throw ConfigError("metric: need p >= 1, n_proj >= 1 and bins >= 1");
    }
    if (n_ref == 0 || n_base == 0 || n_samples == 0) throw ConfigError("n_ref, n_base and n_samples must be >= 1");
    if (thetas.empty()) throw ConfigError("thetas must not be empty");
    if (bound) {
        const auto& b = *bound;
        const double d = static_cast<double>(target.dimension());
        if (!(b.p >= 1.0) || !(b.C > 0.0)) throw ConfigError("bound: need p >= 1 and C > 0");
        std::ostringstream msg;
        if (!(b.q > b.p)) {
            msg << "bound regime violated: need q > p, got q = " << b.q << ", p = " << b.p;
            throw ConfigError(msg.str());
        }
        if (!(d > b.q * b.p / (b.q - b.p))) {
            msg << "bound regime violated: need d > qp/(q-p) = " << b.q * b.p / (b.q - b.p) << ", got d = " << d;
            throw ConfigError(msg.str());
        }
        if (!(b.p < d / 2.0)) {
            msg << "bound regime violated: need p < d/2 for the untilted rate, got p = " << b.p << ", d = " << d;
            throw ConfigError(msg.str());
        }
    }
}

ExperimentConfig parse_config(const Json& j) {
    check_keys(j,
               {"experiment", "seed", "target", "tilt", "N_grid", "m", "seeds", "metric", "bound", "n_ref",
                "thetas", "n_base", "n_samples", "schedule", "train", "boxes", "battery", "threads", "out_dir"},
               "config");
    const std::string where = "config";
    ExperimentConfig c;
    c.raw = j;
    c.experiment = get_or<std::string>(j, "experiment", "", where);
    c.seed = get_or<std::uint64_t>(j, "seed", 0, where);
    if (j.contains("target")) c.target = parse_target(j.at("target"));
    const std::size_t d = c.target.dimension();

    Json tilt = j.contains("tilt") ? j.at("tilt") : Json{{"theta", 0.0}};
    if (tilt.is_object() && tilt.contains("g_max") && tilt.at("g_max").is_string()) {
        if (tilt.at("g_max").get<std::string>() != "auto") throw ConfigError("tilt.g_max: expected a number or \"auto\"");
        c.auto_g_max = true;
        tilt.erase("g_max");
    }
    c.tilt = tilt_from_json(tilt, d);
    if (c.auto_g_max) {
        switch (c.target.kind) {
            case TargetSpec::Kind::BetaMix: c.tilt.g_max = support_g_max(c.target.beta_mix, c.tilt.g); break;
            case TargetSpec::Kind::Coin: c.tilt.g_max = finite_g_max(coin_atoms(), c.tilt.g); break;
            case TargetSpec::Kind::Csv: c.tilt.g_max = finite_g_max(load_csv(c.target.csv), c.tilt.g); break;
            case TargetSpec::Kind::Gaussian: throw ConfigError("tilt.g_max: a gaussian target has unbounded support");
        }
    }

    c.N_grid = get_or(j, "N_grid", c.N_grid, where);
    c.m = get_or(j, "m", c.m, where);
    c.seeds = get_or(j, "seeds", c.seeds, where);
    if (j.contains("metric")) {
        const Json& m = j.at("metric");
        check_keys(m, {"p", "n_proj", "bins"}, "metric");
        c.metric.p = get_or(m, "p", c.metric.p, "metric");
        c.metric.n_proj = get_or(m, "n_proj", c.metric.n_proj, "metric");
        c.metric.bins = get_or(m, "bins", c.metric.bins, "metric");
    }
    if (j.contains("bound") && !j.at("bound").is_null()) {
        const Json& b = j.at("bound");
        check_keys(b, {"p", "q", "C"}, "bound");
        BoundParams bp;
        bp.p = get_or(b, "p", bp.p, "bound");
        bp.q = get_or(b, "q", bp.q, "bound");
        bp.C = get_or(b, "C", bp.C, "bound");
        c.bound = bp;
    }
    c.n_ref = get_or(j, "n_ref", c.n_ref, where);
    c.thetas = get_or(j, "thetas", c.thetas, where);
    c.n_base = get_or(j, "n_base", c.n_base, where);
    c.n_samples = get_or(j, "n_samples", c.n_samples, where);
    if (j.contains("schedule")) c.schedule = schedule_from_json(j.at("schedule"));
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    if (j.contains("boxes")) {
        for (const auto& b : j.at("boxes")) {
            Box box = parse_box(b);
            if (box.bounds.size() != d) throw ConfigError("boxes: dimension does not match the target");
            c.boxes.push_back(std::move(box));
        }
    }
    c.battery.seed = c.seed;
    if (j.contains("battery")) {
        const Json& b = j.at("battery");
        check_keys(b, {"instances", "n_t", "n_inner", "include_corrected"}, "battery");
        c.battery.instances = get_or(b, "instances", c.battery.instances, "battery");
        c.battery.n_t = get_or(b, "n_t", c.battery.n_t, "battery");
        c.battery.n_inner = get_or(b, "n_inner", c.battery.n_inner, "battery");
        c.battery.include_corrected = get_or(b, "include_corrected", c.battery.include_corrected, "battery");
    }
    c.threads = get_or(j, "threads", c.threads, where);
    c.out_dir = get_or<std::string>(j, "out_dir", c.out_dir.string(), where);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_json_file(path)); }

Json default_config(const std::string& experiment) {
    const Json beta10 = {{"kind", "beta_mix"}, {"d", 10}, {"seed", 7}, {"normalization", "row"}};
    if (experiment == "convergence") {
        return Json{{"experiment", "convergence"},
                    {"seed", 1},
                    {"target", beta10},
                    {"tilt", {{"family", "exponential"}, {"theta", 2.0}, {"g", "identity"}, {"g_max", "auto"}}},
                    {"N_grid", {100, 1000, 10000, 100000}},
                    {"seeds", 10},
                    {"metric", {{"p", 2.0}, {"n_proj", 128}}},
                    {"bound", {{"p", 2.0}, {"q", 4.0}, {"C", 1.0}}},
                    {"n_ref", 100000}};
    }
    if (experiment == "bounded-target") {
        return Json{{"experiment", "bounded-target"},
                    {"seed", 1},
                    {"target", beta10},
                    {"tilt", {{"family", "exponential"}, {"theta", 1.0}, {"g", "identity"}}},
                    {"thetas", {1.0, 2.0, 2.5}},
                    {"n_base", 10000},
                    {"n_samples", 10000},
                    {"seeds", 1},
                    {"metric", {{"p", 2.0}, {"n_proj", 128}, {"bins", 50}}},
                    {"schedule", {{"eta", 1.0}, {"sigma", 1.0}, {"T", 3.0}, {"steps", 1000}}},
                    {"train",
                     {{"steps", 20000},
                      {"batch_size", 512},
                      {"learning_rate", 2e-3},
                      {"standardize", true},
                      {"shape", {{"hidden", {64, 64}}}}}}};
    }
    if (experiment == "bounds") {
        return Json{{"experiment", "bounds"},
                    {"seed", 1},
                    {"target", {{"kind", "coin"}}},
                    {"tilt", {{"family", "exponential"}, {"theta", std::log(2.0)}, {"g_max", "auto"}}},
                    {"N_grid", {100, 1000}},
                    {"boxes", {{{0.5, 1.5}}}}};
    }
    if (experiment == "scoregap") {
        return Json{{"experiment", "scoregap"}, {"seed", 1}, {"battery", {{"instances", 60}, {"n_t", 2000}, {"n_inner", 32}}}};
    }
    if (experiment == "train") {
        return Json{{"experiment", "train"},
                    {"seed", 1},
                    {"target", {{"kind", "gaussian"}, {"dim", 1}, {"mean", 0.0}, {"sd", 1.0}}},
                    {"n_base", 10000},
                    {"schedule", {{"eta", 1.0}, {"sigma", 1.0}, {"T", 3.0}, {"steps", 500}}},
                    {"train", {{"steps", 3000}, {"batch_size", 256}, {"shape", {{"hidden", {64, 64}}}}}}};
    }
    throw ConfigError("no default config for '" + experiment + "'");
}

std::uint64_t config_hash(const ExperimentConfig& config) { return fnv1a(config.raw.dump()); }

std::uint64_t cell_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    Rng r = substream(seed, (a << 32) ^ b ^ 0x9e3779b97f4a7c15ull);
    return draw_seed(r);
}

Dataset draw_target(const TargetSpec& target, std::size_t n, Rng& rng) {
    switch (target.kind) {
        case TargetSpec::Kind::BetaMix: return sample_beta_mix(target.beta_mix, n, rng);
        case TargetSpec::Kind::Gaussian: {
            std::normal_distribution<double> normal(target.mean, target.sd);
            std::vector<double> v(n * target.dim);
            for (double& x : v) x = normal(rng);
            return Dataset(n, target.dim, std::move(v));
        }
        case TargetSpec::Kind::Coin: {
            std::bernoulli_distribution coin(0.5);
            std::vector<double> v(n);
            for (double& x : v) x = coin(rng) ? 1.0 : 0.0;
            return Dataset(n, 1, std::move(v));
        }
        case TargetSpec::Kind::Csv: {
            Dataset ds = load_csv(target.csv);
            if (n != 0 && ds.size() != n) {
                throw ConfigError("target csv has " + std::to_string(ds.size()) + " rows, expected " + std::to_string(n));
            }
            return ds;
        }
    }
    throw ConfigError("unknown target kind");
}

ConvergenceBounds convergence_bounds(const ExperimentConfig& config) {
    if (!config.bound) throw ConfigError("convergence bounds need bound parameters");
    const auto& b = *config.bound;
    MeasureSource source = [&]() -> MeasureSource {
        if (config.target.kind == TargetSpec::Kind::Coin) return FiniteMeasure(coin_atoms(), {0.5, 0.5});
        Rng rng = substream(config.seed, 0xb0b0);
        return MonteCarloSource{share(draw_target(config.target, config.n_ref, rng)), config.seed};
    }();
    ConvergenceBounds out;
    out.quantities = tilt_quantities(source, config.tilt);
    const double mq_theta = moment_q_tilted(source, config.tilt, b.q, 1.0);
    const double mq_2theta = moment_q_tilted(source, config.tilt, b.q, 2.0);
    const double mq = moment_q_tilted(source, config.tilt, b.q, 0.0);
    const std::size_t d = config.target.dimension();
    for (std::size_t N : config.N_grid) {
        const RateParams r{N, b.p, b.q, d, b.C};
        out.unbounded.push_back(bound_tilted_unbounded(r, out.quantities, mq_2theta));
        out.bounded.push_back(out.quantities.V ? bound_tilted_bounded(r, out.quantities, mq_theta) : kNaN);
        out.iid.push_back(bound_iid(r, mq));
    }
    return out;
}

std::vector<ConvergenceRow> run_convergence(const ExperimentConfig& config,
                                            const std::function<void(std::span<const ConvergenceRow>)>& sink) {
    require_oracle(config);
    const BetaMixSpec& spec = config.target.beta_mix;
    ConvergenceBounds bounds;
    if (config.bound) bounds = convergence_bounds(config);
    const std::size_t S = config.seeds;
    std::vector<ConvergenceRow> rows;
    for (std::size_t i = 0; i < config.N_grid.size(); ++i) {
        const std::size_t N = config.N_grid[i];
        const std::size_t m = config.m == 0 ? N : config.m;
        std::vector<ConvergenceRow> block(S);
        parallel_for(S, config.threads, [&](std::size_t s) {
            const std::uint64_t cs = cell_seed(config.seed, i, s);
            Rng rb = substream(cs, 0), rr = substream(cs, 1), ro = substream(cs, 2);
            const auto plug = plugin_measure(share(sample_beta_mix(spec, N, rb)), config.tilt);
            const Dataset resampled = resample(plug, m, rr);
            const auto oracle = ground_truth_tilted(spec, config.tilt, m, ro);
            ConvergenceRow& row = block[s];
            row.N = N;
            row.seed = s;
            row.sw_p = sliced_wp(resampled, oracle.samples, config.metric.p, cell_seed(cs, 3, 0),
                                 SlicedOptions{config.metric.n_proj, 1});
            row.ess = effective_sample_size(plug);
            row.acceptance_rate = oracle.acceptance_rate;
            row.bound_unbounded = config.bound ? bounds.unbounded[i] : kNaN;
            row.bound_bounded = config.bound ? bounds.bounded[i] : kNaN;
            row.bound_iid = config.bound ? bounds.iid[i] : kNaN;
        });
        if (sink) sink(block);
        rows.insert(rows.end(), block.begin(), block.end());
    }
    return rows;
}

std::string format_convergence_csv(const std::vector<ConvergenceRow>& rows) {
    std::string out = "N,seed,sw_p,bound_unbounded,bound_bounded,bound_iid,ess,acceptance_rate\n";
    for (const auto& r : rows) {
        out += std::to_string(r.N) + "," + std::to_string(r.seed) + "," + format_double(r.sw_p) + "," +
               format_double(r.bound_unbounded) + "," + format_double(r.bound_bounded) + "," +
               format_double(r.bound_iid) + "," + format_double(r.ess) + "," + format_double(r.acceptance_rate) + "\n";
    }
    return out;
}

std::vector<CompareRow> run_bounded_target(const ExperimentConfig& config) {
    require_oracle(config);
    const BetaMixSpec& spec = config.target.beta_mix;
    const std::size_t d = spec.d;
    std::vector<AxisGrid> grid;
    if (d <= 3) {
        const auto hi = spec.upper_corner();
        for (std::size_t j = 0; j < d; ++j) grid.push_back(AxisGrid{config.metric.bins, 0.0, hi[j]});
    }
    const SlicedOptions sliced{config.metric.n_proj, config.threads};
    std::vector<CompareRow> rows;
    for (std::size_t a = 0; a < config.thetas.size(); ++a) {
        const double mult = config.thetas[a];
        const TiltSpec tilt = with_theta_multiplier(config.tilt, mult);
        for (std::size_t s = 0; s < config.seeds; ++s) {
            const std::uint64_t cs = cell_seed(config.seed, a, s);
            Rng rb = substream(cs, 0), rr = substream(cs, 1), ro = substream(cs, 2), ro2 = substream(cs, 3);
            const Dataset base = sample_beta_mix(spec, config.n_base, rb);
            const Dataset reweigh = resample(plugin_measure(share(base), tilt), config.n_samples, rr);
            const Dataset oracle = ground_truth_tilted(spec, tilt, config.n_samples, ro).samples;
            const Dataset oracle2 = ground_truth_tilted(spec, tilt, config.n_samples, ro2).samples;
            const std::uint64_t metric_seed = cell_seed(cs, 5, 0);
            auto score = [&](const std::string& method, const Dataset& x) {
                CompareRow r;
                r.theta = mult;
                r.seed = s;
                r.method = method;
                r.sw_p = sliced_wp(x, oracle, config.metric.p, metric_seed, sliced);
                r.tv = grid.empty() ? kNaN : tv_histogram(x, oracle, grid);
                rows.push_back(r);
            };
            score("reweigh", reweigh);
            try {
                TrainConfig tc = config.train;
                tc.seed = cell_seed(cs, 4, 0);
                const auto trained = train_on(reweigh, config.schedule, tc);
                SampleOptions so;
                so.threads = config.threads;
                score("reweigh+diffusion", reverse_sample(trained.model, config.schedule, config.n_samples,
                                                          cell_seed(cs, 4, 1), so));
            } catch (const Error& e) {
                if (!dynamic_cast<const TrainingDivergedError*>(&e) && !dynamic_cast<const NumericsError*>(&e)) throw;
                rows.push_back(CompareRow{mult, s, "reweigh+diffusion", kNaN, kNaN, std::string("failed: ") + e.what()});
            }
            score("oracle", oracle2);
        }
    }
    return rows;
}

std::string format_compare_csv(const std::vector<CompareRow>& rows) {
    std::string out = "theta,seed,method,sw_p,tv,status\n";
    for (const auto& r : rows) {
        std::string status = r.status;
        std::replace(status.begin(), status.end(), ',', ';');
        std::replace(status.begin(), status.end(), '\n', ' ');
        out += format_double(r.theta) + "," + std::to_string(r.seed) + "," + r.method + "," +
               (std::isfinite(r.sw_p) ? format_double(r.sw_p) : "") + "," +
               (std::isfinite(r.tv) ? format_double(r.tv) : "") + "," + status + "\n";
    }
    return out;
}

Json run_bounds_report(const ExperimentConfig& config) {
    if (!config.tilt.is_exponential()) throw ConfigError("bounds: the report needs the exponential family");
    const bool finite = config.target.kind == TargetSpec::Kind::Coin || config.target.kind == TargetSpec::Kind::Csv;
    Dataset atoms = [&] {
        if (config.target.kind == TargetSpec::Kind::Coin) return coin_atoms();
        Rng rng = substream(config.seed, 0xb0b0);
        return draw_target(config.target, config.target.kind == TargetSpec::Kind::Csv ? 0 : config.n_ref, rng);
    }();
    std::vector<double> masses(atoms.size(), 1.0 / static_cast<double>(atoms.size()));
    const FiniteMeasure as_finite(atoms, masses);
    const MeasureSource source = finite ? MeasureSource(as_finite) : MeasureSource(MonteCarloSource{share(atoms), config.seed});
    const TiltQuantities tq = tilt_quantities(source, config.tilt);

    Json report;
    report["experiment"] = "bounds";
    report["config_hash"] = hex64(config_hash(config));
    report["mode"] = finite ? "exact" : "monte_carlo";
    report["n_ref"] = finite ? Json(nullptr) : Json(atoms.size());
    report["theta"] = config.tilt.theta;
    report["theta_norm"] = config.tilt.theta_norm();
    report["quantities"] = {{"M_theta", tq.M_theta},     {"M_2theta", tq.M_2theta}, {"M_minus2theta", tq.M_minus2theta},
                            {"C_w", tq.C_w},             {"W_2", tq.W_2},           {"V", number_or_null(tq.V)},
                            {"g_max", number_or_null(tq.g_max)}};
    if (config.bound) {
        const auto cb = convergence_bounds(config);
        Json bounded = Json::array();
        for (double v : cb.bounded) bounded.push_back(number_or_null(v));
        report["bounds"] = {{"p", config.bound->p},  {"q", config.bound->q},       {"C", config.bound->C},
                            {"d", atoms.dim()},      {"N", config.N_grid},         {"unbounded", cb.unbounded},
                            {"bounded", bounded},    {"iid", cb.iid}};
    } else {
        report["bounds"] = nullptr;
    }
    Json boxes = Json::array();
    for (const auto& box : config.boxes) {
        Json jb;
        Json axes = Json::array();
        for (const auto& [lo, hi] : box.bounds) axes.push_back({lo, hi});
        jb["bounds"] = axes;
        const double mu1 = mgf_restricted(source, config.tilt, 1.0, box) / tq.M_theta;
        const double mu2 = mgf_restricted(source, config.tilt, 2.0, box) / tq.M_2theta;
        jb["mu_theta_A"] = mu1;
        jb["mu_2theta_A"] = mu2;
        jb["clt_sigma2"] = plugin_clt_sigma(as_finite, config.tilt, box);
        Json lemma = Json::array();
        for (std::size_t n : config.N_grid) lemma.push_back({{"n", n}, {"rhs", lemma_discrepancy_rhs(n, tq, mu2, mu1)}});
        jb["discrepancy_rhs"] = lemma;
        boxes.push_back(jb);
    }
    report["boxes"] = boxes;
    return report;
}

std::vector<GapRow> run_scoregap(const ExperimentConfig& config) { return run_battery(config.battery); }

std::string format_scoregap_csv(const std::vector<GapRow>& rows) {
    std::string out = "instance,label,variant,delta_hat,rhs,margin,mc_stderr,holds\n";
    for (const auto& r : rows) {
        out += std::to_string(r.instance) + "," + r.label + "," + to_string(r.bound) + "," + format_double(r.delta) + "," +
               format_double(r.rhs) + "," + format_double(r.margin) + "," + format_double(r.std_error) + "," +
               (r.holds ? "true" : "false") + "\n";
    }
    return out;
}

Json RunManifest::to_json() const {
    Json outs = Json::array();
    for (const auto& p : outputs) outs.push_back(p.string());
    return Json{{"command", command},
                {"config_hash", hex64(config_hash)},
                {"seed", seed},
                {"outputs", outs},
                {"wall_seconds", wall_seconds},
                {"versions",
                 {{"tiltdiff", "0.1.0"},
                  {"compiler", __VERSION__},
                  {"boost", BOOST_LIB_VERSION},
                  {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}}};
}

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest) {
    write_text_file(out_dir / (manifest.command + ".manifest.json"), manifest.to_json().dump(2) + "\n");
}

}  // namespace tiltdiff
