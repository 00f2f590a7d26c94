#pragma once

// Synthetic Lipschitz score-error fields, the score-gap functional Delta
// between two initial laws, and the transport upper bounds on it.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tiltdiff/dataset.hpp"
#include "tiltdiff/diffusion.hpp"
#include "tiltdiff/rng.hpp"

namespace tiltdiff {

enum class FieldKind {
    /// f_t(x) = c(t) x
    Linear,
    /// f_t(x) = c(t) x + b
    Affine,
    /// f_t(x) = c(t) clamp(x, -r, r), coordinatewise
    ClippedLinear
};

/// Error field with time profile c(t) = (c0 + c1 t) t^(-a). Its Lipschitz
/// constant at time t is |c(t)|.
struct ErrorFieldSpec {
    FieldKind kind = FieldKind::Linear;
    double c0 = 1.0;
    double c1 = 0.0;
    double a = 0.0;
    std::vector<double> offset;  // Affine only
    double clip = 1.0;           // ClippedLinear only

    /// Throws DomainError for a non-finite profile, a nonpositive clip radius
    /// or an empty offset on an affine field.
    void validate() const;
    double coefficient(double t) const;
    double lipschitz(double t) const { return std::abs(coefficient(t)); }
    void evaluate(std::span<const double> x, double t, std::span<double> out) const;
    bool is_zero() const noexcept;
    /// True when E||f_t(x_t)||^2 has a closed form in the first two moments.
    bool has_moment_form() const noexcept { return kind != FieldKind::ClippedLinear; }

    static ErrorFieldSpec zero() { return ErrorFieldSpec{FieldKind::Linear, 0.0, 0.0, 0.0, {}, 1.0}; }
};

std::string to_string(FieldKind kind);
FieldKind field_kind_from_string(const std::string& name);

/// (1/T) int_0^T L_t^2 exp(-2 eta t) dt; closed form for a constant profile,
/// tanh-sinh quadrature otherwise. Throws RegimeError when a >= 1/2.
double c_eta(const ErrorFieldSpec& field, const NoiseSchedule& schedule);

struct McValue {
    double value = 0.0;
    double std_error = 0.0;
};

/// Delta(mu, nu, f) = E_t |E_mu ||f_t(x_t)||^2 - E_nu ||f_t(y_t)||^2| with t
/// uniform on [0, T], mu and nu the empirical laws of the two datasets.
///
/// `delta_exact` integrates the closed-form inner expectations by quadrature
/// (linear and affine fields; DomainError otherwise). `delta_hat` draws n_t
/// times and, per time, n_inner noise vectors shared by every atom of both
/// laws; the standard error is over time draws. Atoms are put in canonical
/// order first, so the estimate ignores sample order.
double delta_exact(const ErrorFieldSpec& field, const Dataset& mu, const Dataset& nu,
                   const NoiseSchedule& schedule);
McValue delta_hat(const ErrorFieldSpec& field, const Dataset& mu, const Dataset& nu,
                  const NoiseSchedule& schedule, std::size_t n_t, Rng& rng,
                  std::size_t n_inner = 64);

/// The denoiser loss of the field under nu: (1/T) int E_nu ||f_t(y_t)||^2 dt.
double field_loss_exact(const ErrorFieldSpec& field, const Dataset& nu, const NoiseSchedule& schedule);
McValue field_loss_hat(const ErrorFieldSpec& field, const Dataset& nu, const NoiseSchedule& schedule,
                       std::size_t n_t, Rng& rng, std::size_t n_inner = 64);

enum class GapBound {
    /// C W2^2 + 2 sqrt(C) W2 eps
    UnboundedW2,
    /// (2 C M + 2 sqrt(C) eps) W2
    BoundedW2,
    /// K W1 + 2 sqrt(K eps) sqrt(W1), K = 2 M C
    BoundedW1,
    /// K W1 + 2 eps sqrt(K W1): the W2 form with W2^2 <= 2 M W1 substituted.
    BoundedW1Corrected
};

std::string to_string(GapBound bound);

/// Right-hand side of the score-gap inequality. `w` is W2 or W1 to match the
/// variant. Bounded variants throw MissingBoundError without M.
double score_gap_rhs(GapBound bound, double w, double c_eta_value, double eps,
                     std::optional<double> M = std::nullopt);

struct GapInstance {
    std::size_t id = 0;
    std::string label;
    Dataset mu;
    Dataset nu;
    ErrorFieldSpec field;
    NoiseSchedule schedule;
};

struct GapRow {
    std::size_t instance = 0;
    std::string label;
    GapBound bound = GapBound::UnboundedW2;
    double delta = 0.0;
    double rhs = 0.0;
    /// rhs + 3 se - delta
    double margin = 0.0;
    double std_error = 0.0;
    bool holds = true;
};

struct BatteryOptions {
    std::size_t instances = 60;
    std::uint64_t seed = 0;
    std::size_t n_t = 2000;
    std::size_t n_inner = 32;
    /// Also report BoundedW1Corrected.
    bool include_corrected = true;
};

/// Point masses and small uniform mixtures in d in {1, 2} under linear and
/// clipped fields; the first two instances use the zero field.
std::vector<GapInstance> make_battery(const BatteryOptions& options);

/// The 1-D instance mu = delta_1, nu = delta_0, f_t(x) = x, eta = sigma = T = 1.
GapInstance analytic_instance();

/// Evaluates every bound on one instance. W2 and W1 are exact; Delta is exact
/// for fields with a moment form and Monte Carlo otherwise; eps^2 is the
/// field loss under nu from the same harness.
std::vector<GapRow> evaluate_instance(const GapInstance& instance, const BatteryOptions& options);

std::vector<GapRow> run_battery(const BatteryOptions& options);

}  // namespace tiltdiff
