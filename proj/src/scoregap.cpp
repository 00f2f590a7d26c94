#include "tiltdiff/scoregap.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tiltdiff/errors.hpp"
#include "tiltdiff/transport.hpp"

namespace tiltdiff {
namespace {

// First two moments of an empirical law: mean vector and mean squared norm.
struct Moments {
    std::vector<double> mean;
    double sq = 0.0;
};

Moments moments_of(const Dataset& ds) {
    Moments m{std::vector<double>(ds.dim(), 0.0), 0.0};
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j) m.mean[j] += ds(i, j);
        m.sq += squared_norm(ds.row(i));
    }
    const double n = static_cast<double>(ds.size());
    for (double& v : m.mean) v /= n;
    m.sq /= n;
    return m;
}

// Rows in lexicographic order.
Dataset canonical(const Dataset& ds) {
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const auto ra = ds.row(a), rb = ds.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    });
    std::vector<double> v;
    v.reserve(ds.size() * ds.dim());
    for (std::size_t i : idx) v.insert(v.end(), ds.row(i).begin(), ds.row(i).end());
    return Dataset(ds.size(), ds.dim(), std::move(v));
}

void check_pair(const ErrorFieldSpec& field, const Dataset& mu, const Dataset& nu) {
    field.validate();
    if (mu.dim() != nu.dim()) throw DomainError("score gap: mu and nu differ in dimension");
    if (field.kind == FieldKind::Affine && field.offset.size() != mu.dim()) {
        throw DomainError("score gap: affine offset does not match the dimension");
    }
}

void require_moment_form(const ErrorFieldSpec& field) {
    if (!field.has_moment_form()) {
        throw DomainError("score gap: no closed form for " + to_string(field.kind) + " fields; use the Monte Carlo estimate");
    }
}

// E||f_t(m x0 + s eps)||^2 under a law with the given moments.
double moment_energy(const ErrorFieldSpec& f, const Moments& mom, std::size_t d, double t,
                     const NoiseSchedule& schedule) {
    const double c = f.coefficient(t);
    const double m = schedule.mean_coeff(t);
    double e = c * c * (m * m * mom.sq + schedule.noise_var(t) * static_cast<double>(d));
    if (f.kind == FieldKind::Affine) {
        e += 2.0 * c * m * dot(f.offset, mom.mean) + squared_norm(f.offset);
    }
    return e;
}

template <class F>
double integrate(F&& f, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate(f, lo, hi, 1e-10);
}

// Integral of |g| on (0, T): g is split at sign changes found on a grid.
template <class F>
double integrate_abs(F&& g, double T) {
    constexpr int kGrid = 400;
    std::vector<double> cuts{0.0};
    auto at = [&](double t) { return g(std::max(t, 1e-300)); };
    double prev_t = T / kGrid, prev = at(prev_t);
    for (int k = 2; k <= kGrid; ++k) {
        const double t = T * k / kGrid;
        const double v = at(t);
        if ((prev < 0.0) != (v < 0.0) && prev != 0.0 && v != 0.0) {
            double lo = prev_t, hi = t, flo = prev;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * T; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = at(mid);
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            cuts.push_back(0.5 * (lo + hi));
        }
        prev_t = t;
        prev = v;
    }
    cuts.push_back(T);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        total += std::abs(integrate([&](double t) { return g(t); }, cuts[k], cuts[k + 1]));
    }
    return total;
}

// Mean over atoms of ||f_t(m x_i + s eps)||^2.
double atom_energy(const ErrorFieldSpec& f, const Dataset& ds, double t, double m, double s,
                   std::span<const double> eps, std::vector<double>& x, std::vector<double>& out) {
    double acc = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto r = ds.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) x[j] = m * r[j] + s * eps[j];
        f.evaluate(x, t, out);
        acc += squared_norm(out);
    }
    return acc / static_cast<double>(ds.size());
}

McValue summarize(const std::vector<double>& g) {
    const double n = static_cast<double>(g.size());
    double mean = 0.0;
    for (double v : g) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : g) var += (v - mean) * (v - mean);
    var = g.size() > 1 ? var / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

double max_norm(const Dataset& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, norm(a.row(i)));
    return m;
}

}  // namespace

void ErrorFieldSpec::validate() const {
    if (!std::isfinite(c0) || !std::isfinite(c1) || !std::isfinite(a)) {
        throw DomainError("error field: profile parameters must be finite");
    }
    if (kind == FieldKind::ClippedLinear && !(clip > 0.0)) {
        throw DomainError("error field: clip radius must be positive");
    }
    if (kind == FieldKind::Affine) {
        if (offset.empty()) throw DomainError("error field: affine field needs an offset");
        for (double b : offset) {
            if (!std::isfinite(b)) throw DomainError("error field: offset must be finite");
        }
    }
}

double ErrorFieldSpec::coefficient(double t) const {
    const double base = c0 + c1 * t;
    return a == 0.0 ? base : base * std::pow(t, -a);
}

void ErrorFieldSpec::evaluate(std::span<const double> x, double t, std::span<double> out) const {
    const double c = coefficient(t);
    for (std::size_t j = 0; j < x.size(); ++j) {
        switch (kind) {
            case FieldKind::Linear: out[j] = c * x[j]; break;
            case FieldKind::Affine: out[j] = c * x[j] + offset[j]; break;
            case FieldKind::ClippedLinear: out[j] = c * std::clamp(x[j], -clip, clip); break;
        }
    }
}

bool ErrorFieldSpec::is_zero() const noexcept {
    if (c0 != 0.0 || c1 != 0.0) return false;
    return kind != FieldKind::Affine ||
           std::all_of(offset.begin(), offset.end(), [](double b) { return b == 0.0; });
}

std::string to_string(FieldKind kind) {
    switch (kind) {
        case FieldKind::Linear: return "linear";
        case FieldKind::Affine: return "affine";
        case FieldKind::ClippedLinear: return "clipped_linear";
    }
    return "?";
}

FieldKind field_kind_from_string(const std::string& name) {
    if (name == "linear") return FieldKind::Linear;
    if (name == "affine") return FieldKind::Affine;
    if (name == "clipped_linear") return FieldKind::ClippedLinear;
    throw DomainError("unknown error field kind '" + name + "'");
}

double c_eta(const ErrorFieldSpec& field, const NoiseSchedule& schedule) {
    field.validate();
    schedule.validate();
    if (field.a >= 0.5) {
        throw RegimeError("C_eta diverges: L_t^2 ~ t^(-2a) is not integrable at 0 for a >= 1/2");
    }
    const double eta = schedule.eta, T = schedule.T;
    if (field.c1 == 0.0 && field.a == 0.0) {
        return field.c0 * field.c0 * -std::expm1(-2.0 * eta * T) / (2.0 * eta * T);
    }
    const double integral = integrate(
        [&](double t) {
            const double c = field.coefficient(t);
            return c * c * std::exp(-2.0 * eta * t);
        },
        0.0, T);
    return integral / T;
}

double delta_exact(const ErrorFieldSpec& field, const Dataset& mu, const Dataset& nu,
                   const NoiseSchedule& schedule) {
    check_pair(field, mu, nu);
    require_moment_form(field);
    schedule.validate();
    if (field.a >= 0.5) throw RegimeError("score gap: a >= 1/2 makes the time integral diverge");
    const Moments mm = moments_of(canonical(mu)), mn = moments_of(canonical(nu));
    const std::size_t d = mu.dim();
    auto g = [&](double t) {
        return moment_energy(field, mm, d, t, schedule) - moment_energy(field, mn, d, t, schedule);
    };
    return integrate_abs(g, schedule.T) / schedule.T;
}

McValue delta_hat(const ErrorFieldSpec& field, const Dataset& mu_in, const Dataset& nu_in,
                  const NoiseSchedule& schedule, std::size_t n_t, Rng& rng, std::size_t n_inner) {
    check_pair(field, mu_in, nu_in);
    schedule.validate();
    if (n_t < 2 || n_inner == 0) throw DomainError("delta_hat: need n_t >= 2 and n_inner >= 1");
    const Dataset mu = canonical(mu_in), nu = canonical(nu_in);
    const std::size_t d = mu.dim();
    std::uniform_real_distribution<double> unit;
    std::normal_distribution<double> normal;
    std::vector<double> eps(d), x(d), out(d), g(n_t);
    for (std::size_t k = 0; k < n_t; ++k) {
        const double t = schedule.T * (1.0 - unit(rng));
        const double m = schedule.mean_coeff(t), s = std::sqrt(schedule.noise_var(t));
        double diff = 0.0;
        for (std::size_t r = 0; r < n_inner; ++r) {
            for (double& e : eps) e = normal(rng);
            diff += atom_energy(field, mu, t, m, s, eps, x, out) - atom_energy(field, nu, t, m, s, eps, x, out);
        }
        g[k] = std::abs(diff) / static_cast<double>(n_inner);
    }
    return summarize(g);
}

double field_loss_exact(const ErrorFieldSpec& field, const Dataset& nu, const NoiseSchedule& schedule) {
    field.validate();
    require_moment_form(field);
    schedule.validate();
    if (field.a >= 0.5) throw RegimeError("field loss: a >= 1/2 makes the time integral diverge");
    const Moments mn = moments_of(nu);
    return integrate([&](double t) { return moment_energy(field, mn, nu.dim(), t, schedule); }, 0.0,
                     schedule.T) /
           schedule.T;
}

McValue field_loss_hat(const ErrorFieldSpec& field, const Dataset& nu_in, const NoiseSchedule& schedule,
                       std::size_t n_t, Rng& rng, std::size_t n_inner) {
    field.validate();
    schedule.validate();
    if (n_t < 2 || n_inner == 0) throw DomainError("field_loss_hat: need n_t >= 2 and n_inner >= 1");
    const Dataset nu = canonical(nu_in);
    const std::size_t d = nu.dim();
    std::uniform_real_distribution<double> unit;
    std::normal_distribution<double> normal;
    std::vector<double> eps(d), x(d), out(d), g(n_t);
    for (std::size_t k = 0; k < n_t; ++k) {
        const double t = schedule.T * (1.0 - unit(rng));
        const double m = schedule.mean_coeff(t), s = std::sqrt(schedule.noise_var(t));
        double acc = 0.0;
        for (std::size_t r = 0; r < n_inner; ++r) {
            for (double& e : eps) e = normal(rng);
            acc += atom_energy(field, nu, t, m, s, eps, x, out);
        }
        g[k] = acc / static_cast<double>(n_inner);
    }
    return summarize(g);
}

std::string to_string(GapBound bound) {
    switch (bound) {
        case GapBound::UnboundedW2: return "unbounded_w2";
        case GapBound::BoundedW2: return "bounded_w2";
        case GapBound::BoundedW1: return "bounded_w1";
        case GapBound::BoundedW1Corrected: return "bounded_w1_corrected";
    }
    return "?";
}

double score_gap_rhs(GapBound bound, double w, double c, double eps, std::optional<double> M) {
    if (!(w >= 0.0) || !(c >= 0.0) || !(eps >= 0.0)) {
        throw DomainError("score_gap_rhs: W, C_eta and eps must be >= 0");
    }
    if (bound == GapBound::UnboundedW2) return c * w * w + 2.0 * std::sqrt(c) * w * eps;
    if (!M) throw MissingBoundError("score_gap_rhs: " + to_string(bound) + " needs the support radius M");
    if (!(*M >= 0.0)) throw DomainError("score_gap_rhs: M must be >= 0");
    const double K = 2.0 * *M * c;
    switch (bound) {
        case GapBound::BoundedW2: return (2.0 * c * *M + 2.0 * std::sqrt(c) * eps) * w;
        case GapBound::BoundedW1: return K * w + 2.0 * std::sqrt(K * eps) * std::sqrt(w);
        case GapBound::BoundedW1Corrected: return K * w + 2.0 * eps * std::sqrt(K * w);
        default: break;
    }
    return 0.0;
}

std::vector<GapInstance> make_battery(const BatteryOptions& options) {
    if (options.instances == 0) throw DomainError("battery: need at least one instance");
    Rng rng = substream(options.seed, 0);
    std::uniform_real_distribution<double> box(-2.0, 2.0);
    auto U = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    std::vector<GapInstance> out;
    for (std::size_t k = 0; k < options.instances; ++k) {
        const std::size_t d = 1 + k % 2;
        const bool point = k % 3 == 0;
        const std::size_t atoms = point ? 1 : 2 + static_cast<std::size_t>(U(0.0, 3.0));
        auto draw = [&] {
            std::vector<double> v(atoms * d);
            for (double& x : v) x = box(rng);
            return Dataset(atoms, d, std::move(v));
        };
        Dataset mu = draw();
        Dataset nu = draw();
        ErrorFieldSpec f;
        if (k < 2) {
            f = ErrorFieldSpec::zero();
        } else {
            f.kind = k % 4 < 2 ? FieldKind::Linear : FieldKind::ClippedLinear;
            f.c0 = U(-2.0, 2.0);
            f.c1 = U(-1.0, 1.0);
            f.a = k % 5 == 0 ? U(0.0, 0.2) : 0.0;
            f.clip = U(0.3, 2.0);
        }
        NoiseSchedule s{U(0.5, 2.0), U(0.5, 1.5), U(0.5, 2.0), 100};
        std::string label = "d" + std::to_string(d) + (point ? "-point-" : "-mixture-") +
                            (f.is_zero() ? std::string("zero") : to_string(f.kind));
        out.push_back(GapInstance{k, std::move(label), std::move(mu), std::move(nu), f, s});
    }
    return out;
}

GapInstance analytic_instance() {
    return GapInstance{0, "d1-analytic-linear", Dataset(1, 1, {1.0}), Dataset(1, 1, {0.0}),
                       ErrorFieldSpec{}, NoiseSchedule{1.0, 1.0, 1.0, 100}};
}

std::vector<GapRow> evaluate_instance(const GapInstance& inst, const BatteryOptions& options) {
    if (inst.mu.size() != inst.nu.size() || inst.mu.size() > 8) {
        throw SizeError("score gap: exact transport needs equal sizes of at most 8 atoms");
    }
    const double w2 = exact_wp_small(inst.mu, inst.nu, 2.0);
    const double w1 = exact_wp_small(inst.mu, inst.nu, 1.0);
    const double M = std::max(max_norm(inst.mu), max_norm(inst.nu));
    const double C = c_eta(inst.field, inst.schedule);

    McValue delta, loss;
    if (inst.field.has_moment_form()) {
        delta.value = delta_exact(inst.field, inst.mu, inst.nu, inst.schedule);
        loss.value = field_loss_exact(inst.field, inst.nu, inst.schedule);
    } else {
        Rng rd = substream(options.seed, 2 * inst.id + 1);
        Rng rl = substream(options.seed, 2 * inst.id + 2);
        delta = delta_hat(inst.field, inst.mu, inst.nu, inst.schedule, options.n_t, rd, options.n_inner);
        loss = field_loss_hat(inst.field, inst.nu, inst.schedule, options.n_t, rl, options.n_inner);
    }
    const double eps = std::sqrt(std::max(loss.value, 0.0));

    std::vector<GapBound> bounds{GapBound::UnboundedW2, GapBound::BoundedW2, GapBound::BoundedW1};
    if (options.include_corrected) bounds.push_back(GapBound::BoundedW1Corrected);
    std::vector<GapRow> rows;
    for (GapBound b : bounds) {
        const bool uses_w1 = b == GapBound::BoundedW1 || b == GapBound::BoundedW1Corrected;
        GapRow r;
        r.instance = inst.id;
        r.label = inst.label;
        r.bound = b;
        r.delta = delta.value;
        r.std_error = delta.std_error;
        r.rhs = score_gap_rhs(b, uses_w1 ? w1 : w2, C, eps, M);
        r.margin = r.rhs + 3.0 * r.std_error - r.delta;
        // Quadrature and rounding slack for exact evaluations.
        r.holds = r.margin >= -1e-9 * std::max(1.0, r.rhs);
        rows.push_back(r);
    }
    return rows;
}

std::vector<GapRow> run_battery(const BatteryOptions& options) {
    std::vector<GapRow> rows;
    for (const auto& inst : make_battery(options)) {
        auto r = evaluate_instance(inst, options);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    return rows;
}

}  // namespace tiltdiff
