#include "tiltdiff/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "tiltdiff/errors.hpp"

namespace tiltdiff {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Atoms and masses of either source kind, viewed uniformly.
struct View {
    const Dataset& atoms;
    std::span<const double> masses;  // empty means uniform 1/n
    double log_mass(std::size_t i) const {
        return masses.empty() ? -std::log(static_cast<double>(atoms.size())) : std::log(masses[i]);
    }
};

View view_of(const MeasureSource& source) {
    if (const auto* f = std::get_if<FiniteMeasure>(&source)) return View{f->atoms, f->masses};
    const auto& mc = std::get<MonteCarloSource>(source);
    if (!mc.data) throw DomainError("Monte Carlo source has no data");
    return View{*mc.data, {}};
}

void require_exponential(const TiltSpec& tilt) {
    if (!tilt.is_exponential()) {
        throw DomainError("moment-generating quantities are defined for the exponential family only");
    }
}

double log_sum_exp(std::span<const double> v) {
    double m = kNegInf;
    for (double x : v) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

template <class Keep>
double log_mgf_where(const MeasureSource& source, const TiltSpec& tilt, double k, Keep keep) {
    require_exponential(tilt);
    tilt.validate();
    const View v = view_of(source);
    std::vector<double> terms;
    terms.reserve(v.atoms.size());
    for (std::size_t i = 0; i < v.atoms.size(); ++i) {
        const auto x = v.atoms.row(i);
        if (!keep(x)) continue;
        const double lm = v.log_mass(i);
        if (lm == kNegInf) continue;
        terms.push_back(lm + k * tilt.statistic(x));
    }
    return log_sum_exp(terms);
}

double checked_exp(double lv, const char* what) {
    const double v = std::exp(lv);
    if (!std::isfinite(v)) {
        throw OverflowError(std::string(what) + " overflows (log value " + std::to_string(lv) +
                            "); use log_mgf");
    }
    return v;
}

void check_rate(const RateParams& r, bool need_half_d) {
    if (r.N == 0) throw DomainError("bound: N must be >= 1");
    if (!(r.p >= 1.0)) throw DomainError("bound: p must be >= 1");
    if (!(r.C > 0.0)) throw DomainError("bound: C must be positive");
    const double d = static_cast<double>(r.d);
    if (!(r.q > r.p)) {
        std::ostringstream msg;
        msg << "bound regime violated: need q > p, got q = " << r.q << ", p = " << r.p;
        throw RegimeError(msg.str());
    }
    const double floor_d = r.q * r.p / (r.q - r.p);
    if (!(d > floor_d)) {
        std::ostringstream msg;
        msg << "bound regime violated: need d > qp/(q-p) = " << floor_d << ", got d = " << r.d;
        throw RegimeError(msg.str());
    }
    if (need_half_d && !(r.p < d / 2.0)) {
        std::ostringstream msg;
        msg << "bound regime violated: need p < d/2, got p = " << r.p << ", d = " << r.d;
        throw RegimeError(msg.str());
    }
}

double moment_factor(const RateParams& r, double Mq) {
    if (!(Mq >= 0.0) || !std::isfinite(Mq)) throw DomainError("bound: moment must be finite and >= 0");
    return r.C * std::pow(Mq, r.p / r.q);
}

}  // namespace

FiniteMeasure::FiniteMeasure(Dataset atoms_in, std::vector<double> masses_in)
    : atoms(std::move(atoms_in)), masses(std::move(masses_in)) {
    if (masses.size() != atoms.size()) throw DomainError("finite measure: one mass per atom required");
    double total = 0.0;
    for (double m : masses) {
        if (!(m >= 0.0) || !std::isfinite(m)) throw DomainError("finite measure: masses must be >= 0");
        total += m;
    }
    // Rounding in the sum grows with the atom count.
    const double tol = 1e-12 + 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(masses.size());
    if (std::abs(total - 1.0) > tol) {
        throw DomainError("finite measure: masses sum to " + std::to_string(total));
    }
}

EstimationMode mode_of(const MeasureSource& source) noexcept {
    return std::holds_alternative<FiniteMeasure>(source) ? EstimationMode::ExactDiscrete
                                                         : EstimationMode::MonteCarlo;
}

double log_mgf(const MeasureSource& source, const TiltSpec& tilt, double k) {
    if (k == 0.0 || tilt.theta_norm() == 0.0) {
        require_exponential(tilt);
        return 0.0;
    }
    return log_mgf_where(source, tilt, k, [](std::span<const double>) { return true; });
}

double mgf(const MeasureSource& source, const TiltSpec& tilt, double k) {
    return checked_exp(log_mgf(source, tilt, k), "M(k theta)");
}

double mgf_restricted(const MeasureSource& source, const TiltSpec& tilt, double k, const Box& box) {
    if (box.bounds.size() != view_of(source).atoms.dim()) throw DomainError("box dimension mismatch");
    const double lv =
        log_mgf_where(source, tilt, k, [&](std::span<const double> x) { return box.contains(x); });
    return lv == kNegInf ? 0.0 : checked_exp(lv, "M(k theta, A)");
}

double moment_q_tilted(const MeasureSource& source, const TiltSpec& tilt, double q,
                       double theta_scale) {
    if (!(q > 0.0)) throw DomainError("moment_q_tilted: q must be positive");
    require_exponential(tilt);
    const View v = view_of(source);
    const std::size_t n = v.atoms.size();
    std::vector<double> lw(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double lm = v.log_mass(i);
        lw[i] = lm == kNegInf ? kNegInf : lm + theta_scale * tilt.statistic(v.atoms.row(i));
    }
    const auto w = normalize_log_weights(lw);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (w[i] > 0.0) s += w[i] * std::pow(norm(v.atoms.row(i)), q);
    }
    return s;
}

double w_k(const MeasureSource& source, const TiltSpec& tilt, double k) {
    if (k == 0.0) throw DomainError("w_k: k must be nonzero");
    const double lv = log_mgf(source, tilt, k) / k - 2.0 * log_mgf(source, tilt, k / 2.0) / k;
    return checked_exp(lv, "W_k");
}

double TiltQuantities::require_V() const {
    if (!V) throw MissingBoundError("V needs a bound g_max on ||g(x)||");
    return *V;
}

TiltQuantities tilt_quantities(const MeasureSource& source, const TiltSpec& tilt) {
    require_exponential(tilt);
    TiltQuantities tq;
    const double l1 = log_mgf(source, tilt, 1.0);
    const double l2 = log_mgf(source, tilt, 2.0);
    const double lm2 = log_mgf(source, tilt, -2.0);
    tq.M_theta = checked_exp(l1, "M(theta)");
    tq.M_2theta = checked_exp(l2, "M(2 theta)");
    tq.M_minus2theta = checked_exp(lm2, "M(-2 theta)");
    tq.C_w = checked_exp(lm2 + l2, "C_w");
    tq.W_2 = checked_exp(0.5 * l2 - l1, "W_2");
    tq.g_max = tilt.g_max;
    if (tilt.g_max) tq.V = checked_exp(tilt.theta_norm() * *tilt.g_max + l2 - l1, "V");
    tq.mode = mode_of(source);
    if (const auto* mc = std::get_if<MonteCarloSource>(&source)) {
        tq.n = mc->data->size();
        tq.seed = mc->seed;
    }
    return tq;
}

double bound_iid(const RateParams& r, double Mq) {
    check_rate(r, true);
    const double N = static_cast<double>(r.N);
    return moment_factor(r, Mq) * (std::pow(N, -r.p / static_cast<double>(r.d)) + 1.0 / std::sqrt(N));
}

double bound_tilted_unbounded(const RateParams& r, const TiltQuantities& tq, double Mq_2theta) {
    check_rate(r, false);
    const double N = static_cast<double>(r.N);
    return moment_factor(r, Mq_2theta) * tq.C_w *
           (std::pow(N, -r.p / static_cast<double>(r.d)) + tq.W_2 / std::sqrt(N));
}

double bound_tilted_bounded(const RateParams& r, const TiltQuantities& tq, double Mq_theta) {
    const double V = tq.require_V();
    check_rate(r, false);
    const double N = static_cast<double>(r.N);
    return moment_factor(r, Mq_theta) *
           (V * std::pow(N, -r.p / static_cast<double>(r.d)) + 1.0 / std::sqrt(N));
}

double lemma_discrepancy_rhs(std::size_t n, const TiltQuantities& tq, double mu2theta_A,
                             double mutheta_A) {
    if (n == 0) throw DomainError("lemma_discrepancy_rhs: n must be >= 1");
    auto unit = [](double m) { return m >= 0.0 && m <= 1.0; };
    if (!unit(mu2theta_A) || !unit(mutheta_A)) {
        throw DomainError("lemma_discrepancy_rhs: masses must lie in [0, 1]");
    }
    return std::sqrt(tq.C_w / static_cast<double>(n)) * (std::sqrt(mu2theta_A) + mutheta_A);
}

double plugin_clt_sigma(const FiniteMeasure& measure, const TiltSpec& tilt, const Box& box) {
    const MeasureSource src = measure;
    const double m1 = mgf(src, tilt, 1.0);
    const double m2 = mgf(src, tilt, 2.0);
    const double m1a = mgf_restricted(src, tilt, 1.0, box);
    const double m2a = mgf_restricted(src, tilt, 2.0, box);
    const double var_u = m2a - m1a * m1a;
    const double var_v = m2 - m1 * m1;
    const double cov = m2a - m1 * m1a;
    const double s = var_u / (m1 * m1) - 2.0 * m1a / (m1 * m1 * m1) * cov +
                     m1a * m1a / (m1 * m1 * m1 * m1) * var_v;
    // The exact value is >= 0; clip cancellation noise.
    return std::max(s, 0.0);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw DomainError("loglog_slope: need at least two (x, y) pairs");
    }
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("loglog_slope: values must be positive");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx == 0.0) throw DomainError("loglog_slope: x values are all equal");
    return sxy / sxx;
}

}  // namespace tiltdiff
