#include "tiltdiff/tilt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <type_traits>

#include "tiltdiff/errors.hpp"
#include "tiltdiff/logging.hpp"

namespace tiltdiff {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string atom_label(std::optional<std::size_t> atom_index) {
    return atom_index ? " at atom " + std::to_string(*atom_index) : std::string();
}

// Log of the weight, or -inf for a weight that is exactly zero.
double log_weight_or_zero(std::span<const double> x, const TiltSpec& tilt,
                          std::optional<std::size_t> atom_index) {
    const double s = tilt.statistic(x);
    auto power_log = [&](double base, double exponent, const char* family) {
        if (base < 0.0 || std::isnan(base)) {
            std::ostringstream msg;
            msg << family << " tilt base " << base << " is negative" << atom_label(atom_index);
            throw DomainError(msg.str());
        }
        if (base == 0.0) {
            if (exponent > 0.0) return kNegInf;
            std::ostringstream msg;
            msg << family << " tilt base is zero with negative exponent" << atom_label(atom_index);
            throw DomainError(msg.str());
        }
        return exponent * std::log(base);
    };
    return std::visit(
        [&](const auto& fam) -> double {
            using F = std::decay_t<decltype(fam)>;
            if constexpr (std::is_same_v<F, ExponentialFamily>) {
                return s;
            } else if constexpr (std::is_same_v<F, EscortFamily>) {
                return power_log(fam.a + fam.b * s, 1.0 / (fam.alpha - 1.0), "escort");
            } else {
                return power_log(1.0 + (1.0 - fam.q) * fam.c * s, 1.0 / (1.0 - fam.q),
                                 "q-exponential");
            }
        },
        tilt.family);
}

}  // namespace

// ---------------------------------------------------------------------------
// TiltFunction

TiltFunction TiltFunction::identity() { return TiltFunction{}; }

TiltFunction TiltFunction::linear_map(std::size_t rows, std::size_t cols, std::vector<double> b) {
    if (rows == 0 || cols == 0 || b.size() != rows * cols) {
        throw DomainError("linear_map: matrix shape does not match its data");
    }
    TiltFunction g;
    g.kind_ = Kind::LinearMap;
    g.rows_ = rows;
    g.cols_ = cols;
    g.b_ = std::move(b);
    return g;
}

TiltFunction TiltFunction::coordinate_mean() {
    TiltFunction g;
    g.kind_ = Kind::CoordinateMean;
    return g;
}

TiltFunction TiltFunction::custom(std::string label, std::size_t output_dim, Evaluator evaluator) {
    if (output_dim == 0 || !evaluator) {
        throw DomainError("custom tilt function needs an evaluator and output_dim >= 1");
    }
    TiltFunction g;
    g.kind_ = Kind::Custom;
    g.label_ = std::move(label);
    g.custom_dim_ = output_dim;
    g.evaluator_ = std::move(evaluator);
    return g;
}

std::size_t TiltFunction::output_dim(std::size_t input_dim) const {
    switch (kind_) {
        case Kind::Identity:
            return input_dim;
        case Kind::LinearMap:
            if (cols_ != input_dim) {
                throw DomainError("linear_map expects inputs of dimension " +
                                  std::to_string(cols_) + ", got " + std::to_string(input_dim));
            }
            return rows_;
        case Kind::CoordinateMean:
            return 1;
        case Kind::Custom:
            return custom_dim_;
    }
    return 0;
}

void TiltFunction::evaluate(std::span<const double> x, std::span<double> out) const {
    switch (kind_) {
        case Kind::Identity:
            std::copy(x.begin(), x.end(), out.begin());
            return;
        case Kind::LinearMap:
            for (std::size_t r = 0; r < rows_; ++r) {
                out[r] = dot(std::span<const double>(b_.data() + r * cols_, cols_), x);
            }
            return;
        case Kind::CoordinateMean: {
            double s = 0.0;
            for (double v : x) s += v;
            out[0] = s / static_cast<double>(x.size());
            return;
        }
        case Kind::Custom:
            evaluator_(x, out);
            return;
    }
}

std::vector<double> TiltFunction::as_matrix(std::size_t input_dim) const {
    const std::size_t rows = output_dim(input_dim);
    std::vector<double> m(rows * input_dim, 0.0);
    switch (kind_) {
        case Kind::Identity:
            for (std::size_t i = 0; i < input_dim; ++i) m[i * input_dim + i] = 1.0;
            break;
        case Kind::LinearMap:
            m = b_;
            break;
        case Kind::CoordinateMean:
            std::fill(m.begin(), m.end(), 1.0 / static_cast<double>(input_dim));
            break;
        case Kind::Custom:
            throw DomainError("custom tilt function '" + label_ + "' has no matrix form");
    }
    return m;
}

// ---------------------------------------------------------------------------
// TiltSpec

void TiltSpec::validate() const {
    if (theta.empty()) throw DomainError("tilt: theta is empty");
    for (double v : theta) {
        if (!std::isfinite(v)) throw DomainError("tilt: theta has a non-finite entry");
    }
    if (g_max && !(*g_max >= 0.0)) throw DomainError("tilt: g_max must be nonnegative");
    std::visit(
        [](const auto& fam) {
            using F = std::decay_t<decltype(fam)>;
            if constexpr (std::is_same_v<F, EscortFamily>) {
                if (!(fam.alpha > 0.0) || fam.alpha == 1.0) {
                    throw DomainError("escort tilt needs alpha > 0 and alpha != 1");
                }
            } else if constexpr (std::is_same_v<F, QExponentialFamily>) {
                if (!(fam.q > 0.0) || fam.q == 1.0) {
                    throw DomainError("q-exponential tilt needs q > 0 and q != 1");
                }
            }
        },
        family);
}

TiltSpec TiltSpec::scaled(double factor) const {
    TiltSpec out = *this;
    for (double& v : out.theta) v *= factor;
    return out;
}

double TiltSpec::theta_norm() const noexcept { return norm(theta); }

double TiltSpec::statistic(std::span<const double> x) const {
    if (g.kind() == TiltFunction::Kind::Identity) {
        if (x.size() != theta.size()) {
            throw DomainError("tilt: theta has dimension " + std::to_string(theta.size()) +
                              " but g(x) has dimension " + std::to_string(x.size()));
        }
        if (g_max && norm(x) > *g_max * (1.0 + 1e-12)) {
            throw BoundViolationError("tilt: ||g(x)|| exceeds g_max");
        }
        return dot(theta, x);
    }
    const std::size_t out_dim = g.output_dim(x.size());
    if (out_dim != theta.size()) {
        throw DomainError("tilt: theta has dimension " + std::to_string(theta.size()) +
                          " but g(x) has dimension " + std::to_string(out_dim));
    }
    double stack_buf[16];
    std::vector<double> heap_buf;
    std::span<double> gx;
    if (out_dim <= 16) {
        gx = std::span<double>(stack_buf, out_dim);
    } else {
        heap_buf.resize(out_dim);
        gx = heap_buf;
    }
    g.evaluate(x, gx);
    if (g_max && norm(gx) > *g_max * (1.0 + 1e-12)) {
        throw BoundViolationError("tilt: ||g(x)|| exceeds g_max");
    }
    return dot(theta, gx);
}

// ---------------------------------------------------------------------------
// WeightedMeasure

WeightedMeasure WeightedMeasure::empirical(DatasetPtr atoms) {
    const std::size_t n = atoms->size();
    return WeightedMeasure{std::move(atoms), std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

WeightedMeasure WeightedMeasure::from_weights(DatasetPtr atoms, std::vector<double> weights) {
    if (!atoms || weights.size() != atoms->size()) {
        throw DomainError("weighted measure: one weight per atom required");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw DomainError("weighted measure: weights must be finite and nonnegative");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw DomainError("weighted measure: weights sum to " + std::to_string(total) +
                          ", expected 1");
    }
    return WeightedMeasure{std::move(atoms), std::move(weights)};
}

// ---------------------------------------------------------------------------
// Weights

double tilt_weight(std::span<const double> x, const TiltSpec& tilt,
                   std::optional<std::size_t> atom_index) {
    const double lw = log_weight_or_zero(x, tilt, atom_index);
    if (lw == kNegInf) return 0.0;
    const double w = std::exp(lw);
    if (!std::isfinite(w)) {
        throw OverflowError("tilt weight exp(" + std::to_string(lw) + ") overflows" +
                            atom_label(atom_index) + "; use log_weights instead");
    }
    return w;
}

std::vector<double> log_weights(const Dataset& dataset, const TiltSpec& tilt) {
    tilt.validate();
    std::vector<double> lw(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        lw[i] = log_weight_or_zero(dataset.row(i), tilt, i);
        if (lw[i] == kNegInf) {
            throw DomainError("log_weights: weight is zero at atom " + std::to_string(i));
        }
    }
    return lw;
}

std::vector<double> normalize_log_weights(std::span<const double> lw) {
    double max_lw = kNegInf;
    for (double v : lw) {
        if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
            throw NumericsError("normalize_log_weights: non-finite log weight");
        }
        max_lw = std::max(max_lw, v);
    }
    if (max_lw == kNegInf) {
        throw DegenerateMeasureError("every weight is zero; the tilted measure is undefined");
    }
    std::vector<double> w(lw.size());
    double total = 0.0;
    for (std::size_t i = 0; i < lw.size(); ++i) {
        w[i] = lw[i] == kNegInf ? 0.0 : std::exp(lw[i] - max_lw);
        total += w[i];
    }
    for (double& v : w) v /= total;
    return w;
}

WeightedMeasure plugin_measure(DatasetPtr dataset, const TiltSpec& tilt) {
    tilt.validate();
    std::vector<double> lw(dataset->size());
    for (std::size_t i = 0; i < dataset->size(); ++i) {
        lw[i] = log_weight_or_zero(dataset->row(i), tilt, i);
    }
    auto weights = normalize_log_weights(lw);
    return WeightedMeasure{std::move(dataset), std::move(weights)};
}

Dataset resample(const WeightedMeasure& measure, std::size_t m, Rng& rng) {
    if (m == 0) throw DomainError("resample: m must be >= 1");
    const std::size_t n = measure.size();
    std::vector<double> cumulative(n);
    double running = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < n; ++i) {
        running += measure.weights[i];
        cumulative[i] = running;
        if (measure.weights[i] > 0.0) last_positive = i;
    }
    const std::size_t d = measure.dim();
    std::vector<double> out;
    out.reserve(m * d);
    for (std::size_t k = 0; k < m; ++k) {
        const double u = uniform01(rng) * running;
        auto idx = static_cast<std::size_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        if (idx >= n) idx = last_positive;
        const auto row = measure.atoms->row(idx);
        out.insert(out.end(), row.begin(), row.end());
    }
    return Dataset(m, d, std::move(out));
}

double effective_sample_size(const WeightedMeasure& measure) {
    double s = 0.0;
    for (double w : measure.weights) s += w * w;
    return 1.0 / s;
}

// ---------------------------------------------------------------------------
// Rejection oracle

RejectionResult rejection_sample_tilted_log(const BaseSampler& base, std::size_t dim,
                                            const TiltSpec& tilt, double log_w_bound,
                                            std::size_t n, Rng& rng,
                                            const RejectionOptions& options) {
    tilt.validate();
    if (n == 0 || dim == 0) throw DomainError("rejection sampler: n and dim must be >= 1");
    if (!std::isfinite(log_w_bound)) throw DomainError("rejection sampler: w_bound not finite");
    const double slack = 1e-12 * std::max(1.0, std::abs(log_w_bound));
    std::vector<double> out;
    out.reserve(n * dim);
    std::vector<double> x(dim);
    std::uint64_t proposals = 0;
    std::size_t accepted = 0;
    while (accepted < n) {
        if (options.max_proposals != 0 && proposals >= options.max_proposals) {
            throw NumericsError("rejection sampler: " + std::to_string(proposals) +
                                " proposals gave only " + std::to_string(accepted) +
                                " acceptances");
        }
        base(rng, x);
        ++proposals;
        const double lw = log_weight_or_zero(x, tilt, std::nullopt);
        if (lw > log_w_bound + slack) {
            std::ostringstream msg;
            msg << "rejection sampler: observed log weight " << lw << " exceeds log w_bound "
                << log_w_bound;
            throw BoundViolationError(msg.str());
        }
        const double u = uniform01(rng);
        if (lw != kNegInf && u < std::exp(lw - log_w_bound)) {
            out.insert(out.end(), x.begin(), x.end());
            ++accepted;
        }
    }
    const double rate = static_cast<double>(n) / static_cast<double>(proposals);
    if (rate < options.min_acceptance_rate) {
        std::ostringstream msg;
        msg << "rejection oracle is slow: acceptance rate " << rate << " over " << proposals
            << " proposals is below the floor " << options.min_acceptance_rate;
        warn(msg.str());
    }
    return RejectionResult{Dataset(n, dim, std::move(out)), proposals, rate, log_w_bound};
}

RejectionResult rejection_sample_tilted(const BaseSampler& base, std::size_t dim,
                                        const TiltSpec& tilt, double w_bound, std::size_t n,
                                        Rng& rng, const RejectionOptions& options) {
    if (!(w_bound > 0.0) || !std::isfinite(w_bound)) {
        throw DomainError("rejection sampler: w_bound must be positive and finite");
    }
    return rejection_sample_tilted_log(base, dim, tilt, std::log(w_bound), n, rng, options);
}

}  // namespace tiltdiff
