#include "tiltdiff/io.hpp"

#include <fstream>
#include <sstream>

#include "tiltdiff/errors.hpp"

namespace tiltdiff {
namespace {

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

void require_object(const Json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
}

// Wraps library validation failures so callers see a config error.
template <class F>
auto validated(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const DomainError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace

void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
    require_object(j, where);
    for (const auto& item : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || item.key() == a;
        if (!ok) throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
}

TiltSpec tilt_from_json(const Json& j, std::size_t input_dim) {
    const std::string where = "tilt";
    check_keys(j, {"family", "alpha", "a", "b", "q", "c", "theta", "g", "g_max"}, where);
    TiltSpec t;
    const auto family = get_or<std::string>(j, "family", "exponential", where);
    if (family == "exponential") {
        t.family = ExponentialFamily{};
    } else if (family == "escort") {
        t.family = EscortFamily{get_or(j, "alpha", 2.0, where), get_or(j, "a", 1.0, where),
                                get_or(j, "b", 1.0, where)};
    } else if (family == "q_exponential") {
        t.family = QExponentialFamily{get_or(j, "q", 0.5, where), get_or(j, "c", 1.0, where)};
    } else {
        throw ConfigError(where + ".family: unknown family '" + family + "'");
    }
    if (j.contains("g")) {
        const Json& g = j.at("g");
        if (g.is_string()) {
            const auto name = g.get<std::string>();
            if (name == "identity") {
                t.g = TiltFunction::identity();
            } else if (name == "coordinate_mean") {
                t.g = TiltFunction::coordinate_mean();
            } else {
                throw ConfigError(where + ".g: unknown function '" + name + "'");
            }
        } else {
            check_keys(g, {"linear_map"}, where + ".g");
            const Json& m = g.at("linear_map");
            check_keys(m, {"rows", "cols", "b"}, where + ".g.linear_map");
            t.g = validated(where + ".g", [&] {
                return TiltFunction::linear_map(get_as<std::size_t>(m, "rows", where), get_as<std::size_t>(m, "cols", where),
                                                get_as<std::vector<double>>(m, "b", where));
            });
        }
    }
    const std::size_t out_dim = validated(where, [&] { return t.g.output_dim(input_dim); });
    if (!j.contains("theta")) throw ConfigError(where + ": theta is required");
    const Json& th = j.at("theta");
    if (th.is_number()) {
        t.theta.assign(out_dim, th.get<double>());
    } else {
        t.theta = get_as<std::vector<double>>(j, "theta", where);
        if (t.theta.size() != out_dim) {
            throw ConfigError(where + ".theta: expected " + std::to_string(out_dim) + " entries, got " +
                              std::to_string(t.theta.size()));
        }
    }
    if (j.contains("g_max")) t.g_max = get_as<double>(j, "g_max", where);
    validated(where, [&] {
        t.validate();
        return 0;
    });
    return t;
}

Json to_json(const TiltSpec& tilt) {
    Json j;
    std::visit(
        [&](const auto& fam) {
            using F = std::decay_t<decltype(fam)>;
            if constexpr (std::is_same_v<F, ExponentialFamily>) {
                j["family"] = "exponential";
            } else if constexpr (std::is_same_v<F, EscortFamily>) {
                j["family"] = "escort";
                j["alpha"] = fam.alpha;
                j["a"] = fam.a;
                j["b"] = fam.b;
            } else {
                j["family"] = "q_exponential";
                j["q"] = fam.q;
                j["c"] = fam.c;
            }
        },
        tilt.family);
    j["theta"] = tilt.theta;
    switch (tilt.g.kind()) {
        case TiltFunction::Kind::Identity: j["g"] = "identity"; break;
        case TiltFunction::Kind::CoordinateMean: j["g"] = "coordinate_mean"; break;
        case TiltFunction::Kind::LinearMap:
            j["g"] = {{"linear_map", {{"rows", tilt.g.map_rows()}, {"cols", tilt.g.map_cols()}, {"b", tilt.g.map()}}}};
            break;
        case TiltFunction::Kind::Custom: j["g"] = "custom:" + tilt.g.label(); break;
    }
    if (tilt.g_max) j["g_max"] = *tilt.g_max;
    return j;
}

BetaMixSpec beta_mix_from_json(const Json& j) {
    const std::string where = "beta_mix";
    check_keys(j, {"d", "seed", "normalization", "alpha", "beta", "A"}, where);
    const auto d = get_as<std::size_t>(j, "d", where);
    const auto norm_name = get_or<std::string>(j, "normalization", "row", where);
    Normalization norm;
    if (norm_name == "row") {
        norm = Normalization::RowStochastic;
    } else if (norm_name == "column") {
        norm = Normalization::ColumnStochastic;
    } else {
        throw ConfigError(where + ".normalization: expected 'row' or 'column'");
    }
    BetaMixSpec spec = validated(where, [&] {
        return gen_beta_mix_spec(d, get_or<std::uint64_t>(j, "seed", 0, where), norm);
    });
    if (j.contains("alpha")) spec.alpha = get_as<std::vector<double>>(j, "alpha", where);
    if (j.contains("beta")) spec.beta = get_as<std::vector<double>>(j, "beta", where);
    if (j.contains("A")) spec.A = get_as<std::vector<double>>(j, "A", where);
    validated(where, [&] {
        spec.validate();
        return 0;
    });
    return spec;
}

Json to_json(const BetaMixSpec& spec) {
    return Json{{"d", spec.d},
                {"seed", spec.seed},
                {"normalization", spec.normalization == Normalization::RowStochastic ? "row" : "column"},
                {"alpha", spec.alpha},
                {"beta", spec.beta},
                {"A", spec.A}};
}

NoiseSchedule schedule_from_json(const Json& j) {
    const std::string where = "schedule";
    check_keys(j, {"eta", "sigma", "T", "steps"}, where);
    NoiseSchedule s;
    s.eta = get_or(j, "eta", s.eta, where);
    s.sigma = get_or(j, "sigma", s.sigma, where);
    s.T = get_or(j, "T", s.T, where);
    s.steps = get_or(j, "steps", s.steps, where);
    validated(where, [&] {
        s.validate();
        return 0;
    });
    return s;
}

Json to_json(const NoiseSchedule& s) {
    return Json{{"eta", s.eta}, {"sigma", s.sigma}, {"T", s.T}, {"steps", s.steps}};
}

ModelShape shape_from_json(const Json& j) {
    const std::string where = "shape";
    check_keys(j, {"dim", "hidden", "n_freq", "freq_min", "freq_max"}, where);
    ModelShape s;
    s.dim = get_or(j, "dim", s.dim, where);
    s.hidden = get_or(j, "hidden", s.hidden, where);
    s.n_freq = get_or(j, "n_freq", s.n_freq, where);
    s.freq_min = get_or(j, "freq_min", s.freq_min, where);
    s.freq_max = get_or(j, "freq_max", s.freq_max, where);
    return s;
}

Json to_json(const ModelShape& s) {
    return Json{{"dim", s.dim}, {"hidden", s.hidden}, {"n_freq", s.n_freq}, {"freq_min", s.freq_min}, {"freq_max", s.freq_max}};
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
    const std::string where = "train";
    check_keys(j,
               {"batch_size", "steps", "learning_rate", "beta1", "beta2", "adam_eps", "clip_norm",
                "final_lr_fraction", "ema_decay", "log_every", "seed", "resample_size", "standardize", "shape"},
               where);
    c.batch_size = get_or(j, "batch_size", c.batch_size, where);
    c.steps = get_or(j, "steps", c.steps, where);
    c.learning_rate = get_or(j, "learning_rate", c.learning_rate, where);
    c.beta1 = get_or(j, "beta1", c.beta1, where);
    c.beta2 = get_or(j, "beta2", c.beta2, where);
    c.adam_eps = get_or(j, "adam_eps", c.adam_eps, where);
    c.clip_norm = get_or(j, "clip_norm", c.clip_norm, where);
    c.final_lr_fraction = get_or(j, "final_lr_fraction", c.final_lr_fraction, where);
    c.ema_decay = get_or(j, "ema_decay", c.ema_decay, where);
    c.log_every = get_or(j, "log_every", c.log_every, where);
    c.seed = get_or(j, "seed", c.seed, where);
    c.resample_size = get_or(j, "resample_size", c.resample_size, where);
    c.standardize = get_or(j, "standardize", c.standardize, where);
    if (j.contains("shape")) c.shape = shape_from_json(j.at("shape"));
    validated(where, [&] {
        c.validate();
        return 0;
    });
    return c;
}

Json to_json(const TrainConfig& c) {
    return Json{{"batch_size", c.batch_size},
                {"steps", c.steps},
                {"learning_rate", c.learning_rate},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"adam_eps", c.adam_eps},
                {"clip_norm", c.clip_norm},
                {"final_lr_fraction", c.final_lr_fraction},
                {"ema_decay", c.ema_decay},
                {"log_every", c.log_every},
                {"seed", c.seed},
                {"resample_size", c.resample_size},
                {"standardize", c.standardize},
                {"shape", to_json(c.shape)}};
}

Json checkpoint_to_json(const Checkpoint& cp) {
    const auto& m = cp.model;
    Json layers = Json::array();
    for (const auto& L : m.layers()) layers.push_back({L.out, L.in});
    return Json{{"format", "tiltdiff-checkpoint-1"},
                {"shape", to_json(m.shape())},
                {"horizon", m.horizon()},
                {"layer_dims", layers},
                {"params", std::vector<double>(m.params().begin(), m.params().end())},
                {"data_shift", m.data_shift()},
                {"data_scale", m.data_scale()},
                {"schedule", to_json(cp.schedule)},
                {"train", to_json(cp.config)},
                {"seed", cp.config.seed}};
}

Checkpoint checkpoint_from_json(const Json& j) {
    const std::string where = "checkpoint";
    check_keys(j, {"format", "shape", "horizon", "layer_dims", "params", "data_shift", "data_scale", "schedule", "train", "seed"},
               where);
    if (get_as<std::string>(j, "format", where) != "tiltdiff-checkpoint-1") {
        throw ConfigError(where + ": unsupported format");
    }
    const ModelShape shape = shape_from_json(j.at("shape"));
    DenoiserModel model = validated(where, [&] {
        return DenoiserModel(shape, get_as<double>(j, "horizon", where), get_as<std::vector<double>>(j, "params", where));
    });
    const auto dims = get_as<std::vector<std::vector<std::size_t>>>(j, "layer_dims", where);
    if (dims.size() != model.layers().size()) throw ConfigError(where + ": layer count does not match the shape");
    for (std::size_t l = 0; l < dims.size(); ++l) {
        const auto& L = model.layers()[l];
        if (dims[l].size() != 2 || dims[l][0] != L.out || dims[l][1] != L.in) {
            throw ConfigError(where + ": layer " + std::to_string(l) + " dimensions do not match the shape");
        }
    }
    validated(where, [&] {
        model.set_data_scaling(get_as<std::vector<double>>(j, "data_shift", where),
                               get_as<std::vector<double>>(j, "data_scale", where));
        return 0;
    });
    const NoiseSchedule schedule = schedule_from_json(j.at("schedule"));
    const TrainConfig config = train_config_from_json(j.at("train"));
    return Checkpoint{std::move(model), schedule, config};
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp) {
    write_text_file(path, checkpoint_to_json(cp).dump(1) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return checkpoint_from_json(read_json_file(path));
}

std::string format_loss_trace(const LossTrace& trace) {
    std::string out = "step,loss\n";
    for (const auto& p : trace) out += std::to_string(p.step) + "," + format_double(p.loss) + "\n";
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json read_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

std::uint64_t fnv1a(std::string_view bytes) noexcept {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace tiltdiff
