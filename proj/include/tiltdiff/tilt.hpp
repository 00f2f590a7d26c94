#pragma once

// Tilted measures: weight functions, the self-normalized plug-in measure,
// multinomial resampling from it and an exact rejection sampler for the
// tilted law.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tiltdiff/dataset.hpp"
#include "tiltdiff/rng.hpp"

namespace tiltdiff {

/// The statistic g(x) that the tilt parameter is paired with.
class TiltFunction {
public:
    enum class Kind { Identity, LinearMap, CoordinateMean, Custom };

    /// Evaluates g(x) into `out` (size output_dim(input_dim)).
    using Evaluator = std::function<void(std::span<const double> x, std::span<double> out)>;

    static TiltFunction identity();
    /// g(x) = B x with B stored row-major, rows x cols.
    static TiltFunction linear_map(std::size_t rows, std::size_t cols, std::vector<double> b);
    /// g(x) = mean of the coordinates of x (scalar).
    static TiltFunction coordinate_mean();
    static TiltFunction custom(std::string label, std::size_t output_dim, Evaluator evaluator);

    Kind kind() const noexcept { return kind_; }
    const std::string& label() const noexcept { return label_; }
    std::size_t map_rows() const noexcept { return rows_; }
    std::size_t map_cols() const noexcept { return cols_; }
    const std::vector<double>& map() const noexcept { return b_; }

    /// Output dimension for inputs of dimension `input_dim`.
    std::size_t output_dim(std::size_t input_dim) const;
    void evaluate(std::span<const double> x, std::span<double> out) const;

    /// True when g is linear in x, in which case `as_matrix` returns its
    /// matrix for the given input dimension (row-major, output_dim x input_dim).
    bool is_linear() const noexcept { return kind_ != Kind::Custom; }
    std::vector<double> as_matrix(std::size_t input_dim) const;

private:
    Kind kind_ = Kind::Identity;
    std::string label_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> b_;
    std::size_t custom_dim_ = 0;
    Evaluator evaluator_;
};

struct ExponentialFamily {};

/// Weight (a + b s)^(1/(alpha-1)).
struct EscortFamily {
    double alpha = 2.0;
    double a = 1.0;
    double b = 1.0;
};

/// Weight [1 + (1-q) c s]^(1/(1-q)), the q-exponential of c s.
struct QExponentialFamily {
    double q = 0.5;
    double c = 1.0;
};

using TiltFamily = std::variant<ExponentialFamily, EscortFamily, QExponentialFamily>;

/// A tilt w(x) = phi(theta^T g(x)) with phi fixed by the family.
struct TiltSpec {
    TiltFamily family = ExponentialFamily{};
    std::vector<double> theta;
    TiltFunction g = TiltFunction::identity();
    /// Upper bound on ||g(x)||, checked whenever a weight is evaluated.
    std::optional<double> g_max;

    bool is_exponential() const noexcept {
        return std::holds_alternative<ExponentialFamily>(family);
    }

    /// Throws DomainError on invalid family parameters or negative g_max.
    void validate() const;

    /// Same spec with theta multiplied by `factor`.
    TiltSpec scaled(double factor) const;

    double theta_norm() const noexcept;

    /// theta^T g(x). Also checks g_max and the output dimension.
    double statistic(std::span<const double> x) const;
};

/// Atoms plus normalized weights. Atoms alias the dataset they came from.
struct WeightedMeasure {
    DatasetPtr atoms;
    std::vector<double> weights;

    std::size_t size() const noexcept { return weights.size(); }
    std::size_t dim() const noexcept { return atoms->dim(); }

    /// Uniform weights over a dataset (the empirical measure).
    static WeightedMeasure empirical(DatasetPtr atoms);
    /// Throws DomainError unless weights are nonnegative and sum to 1 within
    /// 1e-12 relative tolerance.
    static WeightedMeasure from_weights(DatasetPtr atoms, std::vector<double> weights);
};

/// Unnormalized weight of a single point. `atom_index` only labels errors.
double tilt_weight(std::span<const double> x, const TiltSpec& tilt,
                   std::optional<std::size_t> atom_index = std::nullopt);

/// Log of the weight of every row. Non-exponential families must give
/// strictly positive weights (DomainError otherwise).
std::vector<double> log_weights(const Dataset& dataset, const TiltSpec& tilt);

/// exp(lw - max lw) normalized to sum 1. Entries equal to -inf get weight 0.
/// Throws DegenerateMeasureError when every entry is -inf.
std::vector<double> normalize_log_weights(std::span<const double> lw);

/// The self-normalized plug-in estimate of the tilted law.
WeightedMeasure plugin_measure(DatasetPtr dataset, const TiltSpec& tilt);

/// m draws with replacement, atom i chosen with probability weights[i].
Dataset resample(const WeightedMeasure& measure, std::size_t m, Rng& rng);

/// 1 / sum of squared weights, in [1, n].
double effective_sample_size(const WeightedMeasure& measure);

/// Draws one proposal into `out`.
using BaseSampler = std::function<void(Rng& rng, std::span<double> out)>;

struct RejectionOptions {
    /// Below this acceptance rate a warning is emitted once sampling ends.
    double min_acceptance_rate = 1e-3;
    /// Hard cap on proposals; 0 means unlimited.
    std::uint64_t max_proposals = 0;
};

struct RejectionResult {
    Dataset samples;
    std::uint64_t proposals = 0;
    double acceptance_rate = 0.0;
    double log_w_bound = 0.0;
};

/// Exact sampler for the tilted law: a proposal x is accepted with
/// probability tilt_weight(x) / w_bound. The comparison runs in log space so
/// large exponential bounds do not overflow. Throws BoundViolationError when a
/// weight above w_bound is observed.
RejectionResult rejection_sample_tilted(const BaseSampler& base, std::size_t dim,
                                        const TiltSpec& tilt, double w_bound, std::size_t n,
                                        Rng& rng, const RejectionOptions& options = {});

/// Same, with the bound given as log(w_bound).
RejectionResult rejection_sample_tilted_log(const BaseSampler& base, std::size_t dim,
                                            const TiltSpec& tilt, double log_w_bound,
                                            std::size_t n, Rng& rng,
                                            const RejectionOptions& options = {});

}  // namespace tiltdiff
