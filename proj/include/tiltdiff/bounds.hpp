#pragma once

// Moment-generating functionals of a tilt and the finite-sample error bounds
// built from them. Bounds carry an unspecified multiplicative constant C that
// defaults to 1; only their dependence on N and theta is meaningful.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "tiltdiff/dataset.hpp"
#include "tiltdiff/tilt.hpp"
#include "tiltdiff/transport.hpp"

namespace tiltdiff {

/// A discrete law with known masses. Expectations against it are exact.
struct FiniteMeasure {
    Dataset atoms;
    std::vector<double> masses;

    /// Throws DomainError unless there is one nonnegative mass per atom and
    /// they sum to 1 within 1e-12 plus a few ulps per atom.
    FiniteMeasure(Dataset atoms, std::vector<double> masses);
};

/// An i.i.d. sample standing in for the law. `seed` records how it was drawn.
struct MonteCarloSource {
    DatasetPtr data;
    std::uint64_t seed = 0;
};

using MeasureSource = std::variant<FiniteMeasure, MonteCarloSource>;

enum class EstimationMode { ExactDiscrete, MonteCarlo };

EstimationMode mode_of(const MeasureSource& source) noexcept;

/// log M(k theta) = log E exp(k theta^T g(x)), computed with log-sum-exp.
double log_mgf(const MeasureSource& source, const TiltSpec& tilt, double k);

/// M(k theta). Throws OverflowError when the value is not representable.
double mgf(const MeasureSource& source, const TiltSpec& tilt, double k);

/// M(k theta, A) = E exp(k theta^T g(x)) 1{x in A}.
double mgf_restricted(const MeasureSource& source, const TiltSpec& tilt, double k, const Box& box);

/// q-th moment E||x||^q under the tilt at scale * theta, self-normalized.
double moment_q_tilted(const MeasureSource& source, const TiltSpec& tilt, double q,
                       double theta_scale = 1.0);

/// M(k theta)^(1/k) / M(k theta / 2)^(2/k).
double w_k(const MeasureSource& source, const TiltSpec& tilt, double k);

struct TiltQuantities {
    double M_theta = 1.0;
    double M_2theta = 1.0;
    double M_minus2theta = 1.0;
    double C_w = 1.0;
    double W_2 = 1.0;
    /// exp(||theta|| g_max) M(2 theta) / M(theta); present only with g_max.
    std::optional<double> V;
    std::optional<double> g_max;
    EstimationMode mode = EstimationMode::ExactDiscrete;
    /// Sample size and seed in MonteCarlo mode.
    std::size_t n = 0;
    std::uint64_t seed = 0;

    /// Throws MissingBoundError when V is absent.
    double require_V() const;
};

/// Exponential family only (DomainError otherwise).
TiltQuantities tilt_quantities(const MeasureSource& source, const TiltSpec& tilt);

/// Parameters shared by the three rate bounds.
struct RateParams {
    std::size_t N = 0;
    double p = 1.0;
    double q = 2.0;
    std::size_t d = 1;
    double C = 1.0;
};

/// Untilted rate: C Mq^(p/q) (N^(-p/d) + N^(-1/2)). Requires q > p,
/// d > qp/(q-p) and p < d/2.
double bound_iid(const RateParams& r, double Mq);

/// C Mq_2theta^(p/q) C_w (N^(-p/d) + W_2 N^(-1/2)). Requires q > p and
/// d > qp/(q-p).
double bound_tilted_unbounded(const RateParams& r, const TiltQuantities& tq, double Mq_2theta);

/// C Mq_theta^(p/q) (V N^(-p/d) + N^(-1/2)). Needs V.
double bound_tilted_bounded(const RateParams& r, const TiltQuantities& tq, double Mq_theta);

/// Bound on |mu_theta(A) - mu_{n,theta}(A)|:
/// sqrt(C_w / n) (sqrt(mu_2theta(A)) + mu_theta(A)).
double lemma_discrepancy_rhs(std::size_t n, const TiltQuantities& tq, double mu2theta_A,
                             double mutheta_A);

/// Asymptotic variance of sqrt(n) (mu_{n,theta}(A) - mu_theta(A)) by the delta
/// method on the ratio of two sample means. Returns the variance sigma^2.
double plugin_clt_sigma(const FiniteMeasure& measure, const TiltSpec& tilt, const Box& box);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace tiltdiff
