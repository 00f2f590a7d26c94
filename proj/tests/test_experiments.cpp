#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "tiltdiff/errors.hpp"
#include "tiltdiff/experiments.hpp"
#include "tiltdiff/io.hpp"
#include "tiltdiff/rng.hpp"

using namespace tiltdiff;

namespace {

Checkpoint small_checkpoint() {
    Rng rng = substream(11, 0);
    std::vector<double> v(400);
    std::normal_distribution<double> normal(3.0, 0.5);
    for (double& x : v) x = normal(rng);
    TrainConfig cfg;
    cfg.steps = 40;
    cfg.batch_size = 32;
    cfg.seed = 5;
    cfg.standardize = true;
    cfg.shape.dim = 2;
    cfg.shape.hidden = {8, 8};
    NoiseSchedule schedule{1.0, 1.0, 2.0, 50};
    TrainResult r = train_on(Dataset(200, 2, v), schedule, cfg);
    return Checkpoint{std::move(r.model), schedule, cfg};
}

Json coin_bounds_doc(double theta) {
    return Json{{"experiment", "bounds"},
                {"seed", 1},
                {"target", {{"kind", "coin"}}},
                {"tilt", {{"family", "exponential"}, {"theta", theta}, {"g_max", "auto"}}},
                {"N_grid", {100, 1000}},
                {"boxes", {{{0.5, 1.5}}}}};
}

std::vector<double> apply(const TiltFunction& g, const std::vector<double>& x) {
    std::vector<double> out(g.output_dim(x.size()));
    g.evaluate(x, out);
    return out;
}

Json small_convergence_doc() {
    return Json{{"experiment", "convergence"},
                {"seed", 4},
                {"target", {{"kind", "beta_mix"}, {"d", 10}, {"seed", 7}, {"normalization", "row"}}},
                {"tilt", {{"family", "exponential"}, {"theta", 2.0}, {"g", "identity"}, {"g_max", "auto"}}},
                {"N_grid", {50, 200}},
                {"seeds", 3},
                {"metric", {{"p", 2.0}, {"n_proj", 16}}},
                {"bound", {{"p", 2.0}, {"q", 4.0}, {"C", 1.0}}},
                {"n_ref", 2000}};
}

}  // namespace

TEST_CASE("checkpoint round trip is bit-exact") {
    const Checkpoint cp = small_checkpoint();
    const std::string text = checkpoint_to_json(cp).dump();
    const Checkpoint back = checkpoint_from_json(Json::parse(text));

    REQUIRE(back.model.param_count() == cp.model.param_count());
    for (std::size_t i = 0; i < cp.model.param_count(); ++i) CHECK(back.model.params()[i] == cp.model.params()[i]);
    CHECK(back.model.data_shift() == cp.model.data_shift());
    CHECK(back.model.data_scale() == cp.model.data_scale());
    CHECK(back.model.horizon() == cp.model.horizon());
    CHECK(back.schedule.T == cp.schedule.T);
    CHECK(back.schedule.steps == cp.schedule.steps);
    CHECK(back.config.shape.hidden == cp.config.shape.hidden);
    CHECK(checkpoint_to_json(back).dump() == text);

    const Dataset a = reverse_sample(cp.model, cp.schedule, 64, 9);
    const Dataset b = reverse_sample(back.model, back.schedule, 64, 9);
    CHECK(a == b);

    const auto path = std::filesystem::temp_directory_path() / "tiltdiff_test_ckpt" / "ckpt.json";
    save_checkpoint(path, cp);
    CHECK(checkpoint_to_json(load_checkpoint(path)).dump() == text);
    std::filesystem::remove_all(path.parent_path());
}

TEST_CASE("malformed checkpoints are config errors") {
    const Json good = checkpoint_to_json(small_checkpoint());
    CHECK_THROWS_AS(checkpoint_from_json(Json::object()), ConfigError);

    Json wrong_format = good;
    wrong_format["format"] = "something-else";
    CHECK_THROWS_AS(checkpoint_from_json(wrong_format), ConfigError);

    Json short_params = good;
    short_params["params"].erase(0);
    CHECK_THROWS_AS(checkpoint_from_json(short_params), ConfigError);

    Json bad_scale = good;
    bad_scale["data_scale"][0] = -1.0;
    CHECK_THROWS_AS(checkpoint_from_json(bad_scale), ConfigError);

    Json bad_type = good;
    bad_type["horizon"] = "long";
    CHECK_THROWS_AS(checkpoint_from_json(bad_type), ConfigError);

    CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/ckpt.json"), IoError);
}

TEST_CASE("tilt documents") {
    const TiltSpec t = tilt_from_json(Json{{"theta", 1.5}}, 3);
    CHECK(t.theta == std::vector<double>{1.5, 1.5, 1.5});
    CHECK(std::holds_alternative<ExponentialFamily>(t.family));
    CHECK_FALSE(t.g_max.has_value());

    const TiltSpec mean = tilt_from_json(Json{{"theta", 2.0}, {"g", "coordinate_mean"}, {"g_max", 1.0}}, 4);
    CHECK(mean.theta.size() == 1);
    CHECK(*mean.g_max == 1.0);

    const Json lm{{"theta", {1.0, -1.0}},
                  {"g", {{"linear_map", {{"rows", 2}, {"cols", 3}, {"b", {1, 0, 0, 0, 1, 1}}}}}}};
    const TiltSpec linear = tilt_from_json(lm, 3);
    const std::vector<double> x{1.0, 2.0, 3.0};
    CHECK(apply(linear.g, x) == std::vector<double>{1.0, 5.0});

    const TiltSpec escort = tilt_from_json(Json{{"family", "escort"}, {"alpha", 2.0}, {"a", 0.0}, {"b", 1.0}, {"theta", 0.5}}, 1);
    CHECK(std::holds_alternative<EscortFamily>(escort.family));

    // Round trip through the document form.
    const TiltSpec again = tilt_from_json(to_json(linear), 3);
    CHECK(again.theta == linear.theta);
    CHECK(apply(again.g, x) == apply(linear.g, x));

    CHECK_THROWS_AS(tilt_from_json(Json{{"theta", 1.0}, {"thetta", 2.0}}, 1), ConfigError);
    CHECK_THROWS_AS(tilt_from_json(Json{{"theta", {1.0, 2.0}}}, 3), ConfigError);
    CHECK_THROWS_AS(tilt_from_json(Json{{"family", "gamma"}, {"theta", 1.0}}, 1), ConfigError);
}

TEST_CASE("config validation") {
    CHECK_NOTHROW(parse_config(small_convergence_doc()));

    Json unknown = small_convergence_doc();
    unknown["N_grd"] = {1, 2};
    CHECK_THROWS_AS(parse_config(unknown), ConfigError);

    Json unsorted = small_convergence_doc();
    unsorted["N_grid"] = {200, 50};
    CHECK_THROWS_AS(parse_config(unsorted), ConfigError);

    Json no_seeds = small_convergence_doc();
    no_seeds["seeds"] = 0;
    CHECK_THROWS_AS(parse_config(no_seeds), ConfigError);

    Json q_le_p = small_convergence_doc();
    q_le_p["bound"]["q"] = 2.0;
    CHECK_THROWS_AS(parse_config(q_le_p), ConfigError);

    // d = 3 <= qp/(q-p) = 4.
    Json low_d = small_convergence_doc();
    low_d["target"]["d"] = 3;
    CHECK_THROWS_AS(parse_config(low_d), ConfigError);

    Json gauss_auto = small_convergence_doc();
    gauss_auto["target"] = Json{{"kind", "gaussian"}, {"dim", 10}};
    CHECK_THROWS_AS(parse_config(gauss_auto), ConfigError);

    Json bad_type = small_convergence_doc();
    bad_type["seeds"] = "ten";
    CHECK_THROWS_AS(parse_config(bad_type), ConfigError);

    CHECK_THROWS_AS(default_config("nope"), ConfigError);
    for (const char* name : {"convergence", "bounded-target", "bounds", "scoregap", "train"}) {
        CHECK_NOTHROW(parse_config(default_config(name)));
    }

    const ExperimentConfig c = parse_config(small_convergence_doc());
    REQUIRE(c.tilt.g_max.has_value());
    CHECK(*c.tilt.g_max == doctest::Approx(std::sqrt(10.0)));
    CHECK(config_hash(c) == config_hash(parse_config(small_convergence_doc())));
    Json other = small_convergence_doc();
    other["seed"] = 5;
    CHECK(config_hash(c) != config_hash(parse_config(other)));
}

TEST_CASE("bounds report on the fair coin") {
    const Json r = run_bounds_report(parse_config(coin_bounds_doc(std::log(2.0))));
    CHECK(r.at("mode") == "exact");
    const Json& q = r.at("quantities");
    CHECK(q.at("M_theta").get<double>() == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(q.at("C_w").get<double>() == doctest::Approx(1.5625).epsilon(1e-12));
    CHECK(q.at("W_2").get<double>() == doctest::Approx(1.05409).epsilon(1e-5));
    CHECK(q.at("V").get<double>() == doctest::Approx(10.0 / 3.0).epsilon(1e-12));
    CHECK(r.at("bounds").is_null());

    const Json& box = r.at("boxes").at(0);
    CHECK(box.at("mu_theta_A").get<double>() == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(box.at("mu_2theta_A").get<double>() == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(box.at("clt_sigma2").get<double>() == doctest::Approx(16.0 / 81.0).epsilon(1e-12));
    CHECK(box.at("discrepancy_rhs").at(0).at("rhs").get<double>() == doctest::Approx(0.19514).epsilon(1e-4));

    const Json zero = run_bounds_report(parse_config(coin_bounds_doc(0.0)));
    for (const char* k : {"C_w", "W_2", "V"}) CHECK(zero.at("quantities").at(k).get<double>() == doctest::Approx(1.0));
}

TEST_CASE("bounds report with bound curves") {
    Json doc = small_convergence_doc();
    doc["experiment"] = "bounds";
    const Json r = run_bounds_report(parse_config(doc));
    CHECK(r.at("mode") == "monte_carlo");
    const Json& b = r.at("bounds");
    REQUIRE(b.is_object());
    CHECK(b.at("d") == 10);
    for (const char* k : {"unbounded", "bounded", "iid"}) {
        REQUIRE(b.at(k).size() == 2);
        CHECK(b.at(k).at(1).get<double>() < b.at(k).at(0).get<double>());
    }
}

TEST_CASE("convergence rows, sink order and thread invariance") {
    ExperimentConfig c = parse_config(small_convergence_doc());
    std::vector<std::size_t> seen;
    const auto rows = run_convergence(c, [&](std::span<const ConvergenceRow> block) {
        for (const auto& r : block) seen.push_back(r.N);
    });
    REQUIRE(rows.size() == 6);
    CHECK(seen == std::vector<std::size_t>{50, 50, 50, 200, 200, 200});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].seed == i % 3);
        CHECK(rows[i].sw_p > 0.0);
        CHECK(rows[i].ess >= 1.0);
        CHECK(rows[i].ess <= static_cast<double>(rows[i].N));
        CHECK(rows[i].acceptance_rate > 0.0);
        CHECK(rows[i].acceptance_rate <= 1.0);
    }
    const std::string csv = format_convergence_csv(rows);
    CHECK(csv.rfind("N,seed,sw_p,bound_unbounded,bound_bounded,bound_iid,ess,acceptance_rate\n", 0) == 0);

    c.threads = 3;
    CHECK(format_convergence_csv(run_convergence(c)) == csv);
}

TEST_CASE("zero tilt convergence has full ESS and acceptance") {
    Json doc = small_convergence_doc();
    doc["tilt"] = Json{{"theta", 0.0}, {"g_max", "auto"}};
    doc["N_grid"] = {500};
    doc["seeds"] = 10;
    doc.erase("bound");
    const ExperimentConfig c = parse_config(doc);
    const auto rows = run_convergence(c);
    for (const auto& r : rows) {
        CHECK(r.ess == doctest::Approx(500.0).epsilon(1e-12));
        CHECK(r.acceptance_rate == doctest::Approx(1.0));
    }
}

TEST_CASE("scoregap rows") {
    Json doc = default_config("scoregap");
    doc["battery"]["instances"] = 12;
    doc["battery"]["n_t"] = 300;
    const auto rows = run_scoregap(parse_config(doc));
    CHECK(rows.size() == 48);
    for (const auto& r : rows) {
        CHECK(r.holds);
        if (r.instance < 2) CHECK(r.delta == 0.0);
    }
    const std::string csv = format_scoregap_csv(rows);
    CHECK(csv.rfind("instance,label,variant,delta_hat,rhs,margin,mc_stderr,holds\n", 0) == 0);
    CHECK(format_scoregap_csv(run_scoregap(parse_config(doc))) == csv);
}

TEST_CASE("manifest lists its outputs") {
    const auto dir = std::filesystem::temp_directory_path() / "tiltdiff_test_manifest";
    std::filesystem::remove_all(dir);
    write_manifest(dir, {"bounds", 0xabcdef, 3, {dir / "a.csv", dir / "b.json"}, 0.5});
    const Json m = read_json_file(dir / "bounds.manifest.json");
    CHECK(m.at("command") == "bounds");
    CHECK(m.at("config_hash") == "0000000000abcdef");
    CHECK(m.at("outputs").size() == 2);
    CHECK(m.at("versions").contains("tiltdiff"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("file helpers") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK_THROWS_AS(read_text_file("/nonexistent/x"), IoError);
    const auto p = std::filesystem::temp_directory_path() / "tiltdiff_test_io" / "deep" / "f.json";
    write_text_file(p, "{ not json");
    CHECK_THROWS_AS(read_json_file(p), ConfigError);
    std::filesystem::remove_all(p.parent_path().parent_path());
    CHECK(format_loss_trace({{0, 1.5}, {50, 0.25}}) == "step,loss\n0,1.5\n50,0.25\n");
}
