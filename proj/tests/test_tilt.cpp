#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "tiltdiff/errors.hpp"
#include "tiltdiff/logging.hpp"
#include "tiltdiff/tilt.hpp"
#include "tiltdiff/transport.hpp"

using namespace tiltdiff;

namespace {

const double kLn2 = std::numbers::ln2;

TiltSpec exp_tilt(std::vector<double> theta) {
    TiltSpec t;
    t.theta = std::move(theta);
    return t;
}

DatasetPtr coin_atoms() { return share(Dataset(2, 1, {0.0, 1.0})); }

BaseSampler coin_sampler() {
    return [](Rng& rng, std::span<double> out) { out[0] = uniform01(rng) < 0.5 ? 0.0 : 1.0; };
}

BaseSampler uniform_sampler() {
    return [](Rng& rng, std::span<double> out) { out[0] = uniform01(rng); };
}

Dataset uniform_sample(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = uniform01(rng);
    return Dataset(n, 1, std::move(v));
}

}  // namespace

TEST_CASE("tilt_weight for the three families") {
    const std::vector<double> x{1.0, 0.0};
    CHECK(tilt_weight(x, exp_tilt({0.0, 0.0})) == 1.0);
    CHECK(tilt_weight(x, exp_tilt({kLn2, 5.0})) == doctest::Approx(2.0).epsilon(1e-15));

    TiltSpec q;
    q.family = QExponentialFamily{1.0 + 1e-6, 1.0};
    q.theta = {1.0};
    const std::vector<double> one{1.0};
    CHECK(std::abs(tilt_weight(one, q) - std::numbers::e) < 1e-4);

    TiltSpec esc;
    esc.family = EscortFamily{2.0, 1.0, 1.0};
    esc.theta = {1.0};
    CHECK(tilt_weight(one, esc) == doctest::Approx(2.0));
    const std::vector<double> neg{-3.0};
    CHECK_THROWS_AS(tilt_weight(neg, esc, 4), DomainError);
    CHECK_THROWS_WITH(tilt_weight(neg, esc, 4), doctest::Contains("4"));

    CHECK_THROWS_AS(tilt_weight(one, exp_tilt({1000.0})), OverflowError);
}

TEST_CASE("invalid family parameters are rejected") {
    TiltSpec esc;
    esc.family = EscortFamily{1.0, 1.0, 1.0};
    esc.theta = {1.0};
    CHECK_THROWS_AS(esc.validate(), DomainError);
    TiltSpec q;
    q.family = QExponentialFamily{1.0, 1.0};
    q.theta = {1.0};
    CHECK_THROWS_AS(q.validate(), DomainError);
}

TEST_CASE("g_max is enforced when weights are evaluated") {
    auto t = exp_tilt({1.0});
    t.g_max = 0.5;
    const std::vector<double> x{0.75};
    CHECK_THROWS_AS(tilt_weight(x, t), BoundViolationError);
}

TEST_CASE("log_weights") {
    auto lw = log_weights(*coin_atoms(), exp_tilt({0.0}));
    CHECK(lw == std::vector<double>{0.0, 0.0});
    lw = log_weights(*coin_atoms(), exp_tilt({kLn2}));
    CHECK(lw[0] == 0.0);
    CHECK(lw[1] == doctest::Approx(kLn2).epsilon(1e-15));

    auto big = plugin_measure(coin_atoms(), exp_tilt({1000.0 * kLn2}));
    CHECK(std::isfinite(big.weights[0]));
    CHECK(big.weights[1] == 1.0);
}

TEST_CASE("plugin_measure") {
    SUBCASE("zero tilt gives exactly 1/n") {
        for (std::size_t n : {1u, 3u, 7u, 10u, 1000u}) {
            Rng rng(n);
            auto ds = share(uniform_sample(n, rng));
            auto m = plugin_measure(ds, exp_tilt({0.0}));
            for (double w : m.weights) CHECK(w == 1.0 / static_cast<double>(n));
        }
    }
    SUBCASE("two-point hand normalization") {
        auto m = plugin_measure(coin_atoms(), exp_tilt({kLn2}));
        CHECK(m.weights[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        CHECK(m.weights[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
        CHECK(m.atoms.get() != nullptr);
    }
    SUBCASE("constant data gives uniform weights") {
        auto ds = share(Dataset(5, 2, std::vector<double>(10, 0.3)));
        for (double th : {-4.0, 0.5, 17.0}) {
            auto m = plugin_measure(ds, exp_tilt({th, -th}));
            for (double w : m.weights) CHECK(w == 0.2);
        }
    }
    SUBCASE("all weights zero is degenerate") {
        TiltSpec esc;
        esc.family = EscortFamily{2.0, 0.0, 1.0};
        esc.theta = {1.0};
        auto ds = share(Dataset(2, 1, {0.0, 0.0}));
        CHECK_THROWS_AS(plugin_measure(ds, esc), DegenerateMeasureError);
    }
}

TEST_CASE("normalization holds over a fuzzing range") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 50;
        auto ds = share(uniform_sample(n, rng));
        const double th = (uniform01(rng) - 0.5) * 400.0;
        auto m = plugin_measure(ds, exp_tilt({th}));
        double s = 0.0;
        for (double w : m.weights) {
            CHECK(w >= 0.0);
            s += w;
        }
        CHECK(std::abs(s - 1.0) <= 1e-12);
    }
}

TEST_CASE("scaling every weight leaves the normalized weights unchanged") {
    Rng rng(5);
    std::vector<double> lw(64);
    // Dyadic log weights: adding an integer offset is exact in binary floating
    // point, so the max-subtracted values agree bit for bit.
    for (double& v : lw) v = std::ldexp(static_cast<double>(rng() % 4096), -6) - 32.0;
    const auto base = normalize_log_weights(lw);
    for (double offset : {1.0, -7.0, 300.0, -1000.0}) {
        auto shifted = lw;
        for (double& v : shifted) v += offset;
        CHECK(normalize_log_weights(shifted) == base);
    }
    for (double& v : lw) v = (uniform01(rng) - 0.5) * 20.0;
    const auto general = normalize_log_weights(lw);
    for (double offset : {0.1234, -3.7, 55.5}) {
        auto shifted = lw;
        for (double& v : shifted) v += offset;
        const auto w = normalize_log_weights(shifted);
        for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(w[i] - general[i]) <= 1e-15);
    }
}

TEST_CASE("plugin weights converge to the closed-form tilted masses") {
    Rng rng(2024);
    const std::size_t n = 100000;
    std::vector<double> v(n);
    for (double& x : v) x = uniform01(rng) < 0.5 ? 0.0 : 1.0;
    auto m = plugin_measure(share(Dataset(n, 1, std::move(v))), exp_tilt({kLn2}));
    double mass1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if ((*m.atoms)(i, 0) == 1.0) mass1 += m.weights[i];
    }
    CHECK(std::abs(mass1 - 2.0 / 3.0) < 0.01);
}

TEST_CASE("resample") {
    auto ds = coin_atoms();
    SUBCASE("degenerate weights") {
        auto m = WeightedMeasure::from_weights(ds, {1.0, 0.0});
        Rng rng(1);
        auto r = resample(m, 5, rng);
        CHECK(r.size() == 5);
        for (std::size_t i = 0; i < 5; ++i) CHECK(r(i, 0) == 0.0);
    }
    SUBCASE("frequencies within the binomial bound") {
        auto m = plugin_measure(ds, exp_tilt({kLn2}));
        Rng rng(77);
        const std::size_t count = 30000;
        auto r = resample(m, count, rng);
        double ones = 0.0;
        for (std::size_t i = 0; i < count; ++i) ones += r(i, 0);
        CHECK(std::abs(ones / count - 2.0 / 3.0) <= 0.0082);
    }
    SUBCASE("same seed, same output") {
        auto m = plugin_measure(ds, exp_tilt({0.3}));
        Rng a(9), b(9);
        CHECK(resample(m, 100, a) == resample(m, 100, b));
    }
}

TEST_CASE("effective sample size") {
    Rng rng(3);
    auto ds = share(uniform_sample(100, rng));
    CHECK(effective_sample_size(WeightedMeasure::empirical(ds)) == doctest::Approx(100.0));
    CHECK(effective_sample_size(WeightedMeasure::from_weights(coin_atoms(), {1.0, 0.0})) == 1.0);
    CHECK(effective_sample_size(WeightedMeasure::from_weights(coin_atoms(), {1.0 / 3.0, 2.0 / 3.0})) ==
          doctest::Approx(1.8));
}

TEST_CASE("rejection oracle") {
    SUBCASE("zero tilt accepts everything") {
        Rng rng(1);
        auto r = rejection_sample_tilted(uniform_sampler(), 1, exp_tilt({0.0}), 1.0, 500, rng);
        CHECK(r.proposals == 500);
        CHECK(r.acceptance_rate == 1.0);
    }
    SUBCASE("two-point law and acceptance rate") {
        Rng rng(42);
        const std::size_t n = 100000;
        auto r = rejection_sample_tilted(coin_sampler(), 1, exp_tilt({kLn2}), 2.0, n, rng);
        REQUIRE(r.samples.size() == n);
        double ones = 0.0;
        for (std::size_t i = 0; i < n; ++i) ones += r.samples(i, 0);
        CHECK(std::abs(ones / n - 2.0 / 3.0) < 0.01);
        // M(theta)/w_bound = 1.5/2
        CHECK(std::abs(r.acceptance_rate - 0.75) < 0.005);
    }
    SUBCASE("a weight above the bound is reported") {
        Rng rng(42);
        CHECK_THROWS_AS(rejection_sample_tilted(coin_sampler(), 1, exp_tilt({kLn2}), 1.5, 1000, rng),
                        BoundViolationError);
    }
    SUBCASE("low acceptance emits a warning") {
        std::vector<std::string> seen;
        auto previous = set_warning_sink([&](const std::string& m) { seen.push_back(m); });
        Rng rng(8);
        RejectionOptions opts;
        opts.min_acceptance_rate = 0.9;
        rejection_sample_tilted(coin_sampler(), 1, exp_tilt({kLn2}), 2.0, 100, rng, opts);
        set_warning_sink(previous);
        CHECK(seen.size() == 1);
    }
}

TEST_CASE("resampled plug-in approaches the rejection oracle") {
    // Uniform base on [0,1], theta = 2, weights bounded by e^2.
    auto tilt = exp_tilt({2.0});
    tilt.g_max = 1.0;
    const std::vector<std::size_t> sizes{100, 1000, 10000};
    std::vector<double> medians;
    for (std::size_t n : sizes) {
        std::vector<double> dists;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng = substream(seed, n);
            auto base = share(uniform_sample(n, rng));
            auto resampled = resample(plugin_measure(base, tilt), n, rng);
            auto oracle = rejection_sample_tilted(uniform_sampler(), 1, tilt, std::exp(2.0), n, rng);
            dists.push_back(wp_1d(DiscreteMeasure1D::uniform({resampled.values().begin(),
                                                              resampled.values().end()}),
                                  DiscreteMeasure1D::uniform({oracle.samples.values().begin(),
                                                              oracle.samples.values().end()}),
                                  1.0));
        }
        std::nth_element(dists.begin(), dists.begin() + 10, dists.end());
        medians.push_back(dists[10]);
    }
    CHECK(medians[1] < medians[0]);
    CHECK(medians[2] < medians[1]);
}
