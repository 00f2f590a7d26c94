#pragma once

// Experiment drivers behind the command-line tool: configuration parsing,
// the convergence study, the bounded-target method comparison, the bounds
// report, the score-gap battery, and run manifests.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tiltdiff/bounds.hpp"
#include "tiltdiff/dataset.hpp"
#include "tiltdiff/diffusion.hpp"
#include "tiltdiff/io.hpp"
#include "tiltdiff/scoregap.hpp"
#include "tiltdiff/synthdata.hpp"
#include "tiltdiff/tilt.hpp"
#include "tiltdiff/transport.hpp"

namespace tiltdiff {

struct TargetSpec {
    enum class Kind { BetaMix, Gaussian, Coin, Csv };
    Kind kind = Kind::BetaMix;
    BetaMixSpec beta_mix;
    /// Gaussian: N(mean, sd^2 I) in `dim` dimensions.
    std::size_t dim = 1;
    double mean = 0.0;
    double sd = 1.0;
    std::filesystem::path csv;

    std::size_t dimension() const;
    /// True when ground_truth_tilted can sample the tilted law exactly.
    bool has_oracle() const noexcept { return kind == Kind::BetaMix; }
};

struct MetricParams {
    double p = 2.0;
    std::size_t n_proj = 128;
    std::size_t bins = 50;
};

struct BoundParams {
    double p = 2.0;
    double q = 4.0;
    double C = 1.0;
};

struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 0;
    TargetSpec target;
    TiltSpec tilt;
    /// Take g_max from the support of the target.
    bool auto_g_max = false;
    std::vector<std::size_t> N_grid{100, 1000, 10000, 100000};
    /// Resample size; 0 means N.
    std::size_t m = 0;
    std::size_t seeds = 10;
    MetricParams metric;
    std::optional<BoundParams> bound;
    /// Reference sample size for Monte Carlo tilt quantities.
    std::size_t n_ref = 100000;
    /// Bounded target: multipliers of the all-ones theta, base size and
    /// sample count per method.
    std::vector<double> thetas{1.0, 2.0, 2.5};
    std::size_t n_base = 10000;
    std::size_t n_samples = 10000;
    NoiseSchedule schedule;
    TrainConfig train;
    BoxFamily boxes;
    BatteryOptions battery;
    std::size_t threads = 1;
    std::filesystem::path out_dir = "out";
    /// The parsed document, used for the config hash.
    Json raw;

    /// Throws ConfigError on an empty or unsorted N grid, zero seeds, or a
    /// bound regime that cannot hold.
    void validate() const;
};

/// Parses and validates a config document. Unknown keys are errors.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Built-in defaults by experiment name, as documents.
Json default_config(const std::string& experiment);

/// FNV-1a of the canonical dump of the config document.
std::uint64_t config_hash(const ExperimentConfig& config);

/// Seed for one cell of an experiment grid.
std::uint64_t cell_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

/// Draws n points from the target law (Coin: fair 0/1; Csv: the file rows,
/// which must number exactly n unless n is 0).
Dataset draw_target(const TargetSpec& target, std::size_t n, Rng& rng);

struct ConvergenceRow {
    std::size_t N = 0;
    std::size_t seed = 0;
    double sw_p = 0.0;
    double bound_unbounded = 0.0;
    double bound_bounded = 0.0;
    double bound_iid = 0.0;
    double ess = 0.0;
    double acceptance_rate = 0.0;
};

struct ConvergenceBounds {
    TiltQuantities quantities;
    std::vector<double> unbounded, bounded, iid;
};

/// Bound curves over the N grid with C, p, q from the config and tilt
/// quantities from a reference sample of size n_ref.
ConvergenceBounds convergence_bounds(const ExperimentConfig& config);

/// Per (N, seed): base sample, plug-in measure, resample of size m, sliced
/// W_p to a fresh oracle sample of the same size. Seeds run in parallel
/// within each N; `sink`, when set, receives each finished N block in order,
/// so a later failure leaves the earlier rows delivered.
std::vector<ConvergenceRow> run_convergence(
    const ExperimentConfig& config,
    const std::function<void(std::span<const ConvergenceRow>)>& sink = {});
std::string format_convergence_csv(const std::vector<ConvergenceRow>& rows);

struct CompareRow {
    double theta = 0.0;
    std::size_t seed = 0;
    std::string method;
    /// Against an oracle sample; the oracle row uses a second, independent one.
    double sw_p = 0.0;
    /// Histogram TV on the support box; NaN when d > 3.
    double tv = 0.0;
    std::string status = "ok";
};

/// Reweigh, reweigh+diffusion and oracle samples for each theta multiplier.
/// The diffusion model is trained on the reweigh sample itself.
std::vector<CompareRow> run_bounded_target(const ExperimentConfig& config);
std::string format_compare_csv(const std::vector<CompareRow>& rows);

/// Tilt quantities, the three bound curves (when bound params are set), the
/// plug-in CLT variance and discrepancy bounds for each configured box.
Json run_bounds_report(const ExperimentConfig& config);

std::vector<GapRow> run_scoregap(const ExperimentConfig& config);
std::string format_scoregap_csv(const std::vector<GapRow>& rows);

struct RunManifest {
    std::string command;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::vector<std::filesystem::path> outputs;
    double wall_seconds = 0.0;

    Json to_json() const;
};

/// Writes <command>.manifest.json into out_dir.
void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest);

}  // namespace tiltdiff
