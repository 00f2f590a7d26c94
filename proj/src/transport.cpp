#include "tiltdiff/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <string>

#include "tiltdiff/errors.hpp"
#include "tiltdiff/logging.hpp"
#include "tiltdiff/parallel.hpp"

namespace tiltdiff {
namespace {

double pow_abs(double v, double p) {
    const double a = std::abs(v);
    if (p == 1.0) return a;
    if (p == 2.0) return a * a;
    return std::pow(a, p);
}

void check_p(double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw DomainError("W_p needs a finite p >= 1");
}

// Unit direction for projection k; in one dimension the sign is irrelevant to
// W_p so +1 is used.
std::vector<double> direction(std::size_t d, std::uint64_t seed, std::size_t k) {
    std::vector<double> u(d, 1.0);
    if (d == 1) return u;
    Rng rng = substream(seed, k);
    std::normal_distribution<double> normal;
    double len = 0.0;
    while (len == 0.0) {
        for (double& v : u) v = normal(rng);
        len = norm(u);
    }
    for (double& v : u) v /= len;
    return u;
}

DiscreteMeasure1D project(const WeightedMeasure& m, std::span<const double> u) {
    std::vector<double> pos(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) pos[i] = dot(u, m.atoms->row(i));
    return DiscreteMeasure1D(std::move(pos), m.weights);
}

}  // namespace

DiscreteMeasure1D::DiscreteMeasure1D(std::vector<double> positions, std::vector<double> masses) {
    if (positions.empty() || positions.size() != masses.size()) {
        throw DomainError("DiscreteMeasure1D: need one mass per position and at least one atom");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < masses.size(); ++i) {
        if (!(masses[i] >= 0.0) || !std::isfinite(positions[i])) {
            throw DomainError("DiscreteMeasure1D: masses must be nonnegative, positions finite");
        }
        total += masses[i];
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw DomainError("DiscreteMeasure1D: masses sum to " + std::to_string(total));
    }
    std::vector<std::size_t> order(positions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return positions[a] < positions[b]; });
    positions_.reserve(order.size());
    masses_.reserve(order.size());
    for (std::size_t idx : order) {
        if (masses[idx] == 0.0) continue;
        if (!positions_.empty() && positions_.back() == positions[idx]) {
            masses_.back() += masses[idx];
        } else {
            positions_.push_back(positions[idx]);
            masses_.push_back(masses[idx]);
        }
    }
}

DiscreteMeasure1D DiscreteMeasure1D::uniform(std::vector<double> positions) {
    const std::size_t n = positions.size();
    return DiscreteMeasure1D(std::move(positions),
                             std::vector<double>(n, 1.0 / static_cast<double>(std::max<std::size_t>(n, 1))));
}

double wp_1d(const DiscreteMeasure1D& a, const DiscreteMeasure1D& b, double p) {
    check_p(p);
    // Walk the merged sequence of cumulative-mass breakpoints; between two
    // consecutive breakpoints both quantile functions are constant.
    std::vector<double> fa(a.size()), fb(b.size());
    std::partial_sum(a.masses().begin(), a.masses().end(), fa.begin());
    std::partial_sum(b.masses().begin(), b.masses().end(), fb.begin());
    fa.back() = 1.0;
    fb.back() = 1.0;
    const auto& xa = a.positions();
    const auto& xb = b.positions();
    double cost = 0.0;
    double u_prev = 0.0;
    std::size_t i = 0, j = 0;
    while (i < fa.size() && j < fb.size()) {
        const double u_next = std::min(fa[i], fb[j]);
        if (u_next > u_prev) cost += (u_next - u_prev) * pow_abs(xa[i] - xb[j], p);
        u_prev = std::max(u_prev, u_next);
        if (fa[i] <= u_next) ++i;
        if (fb[j] <= u_next) ++j;
    }
    if (p == 1.0) return cost;
    if (p == 2.0) return std::sqrt(cost);
    return std::pow(cost, 1.0 / p);
}

std::vector<double> sliced_wp_terms(const WeightedMeasure& x, const WeightedMeasure& y, double p,
                                    std::uint64_t seed, const SlicedOptions& options) {
    check_p(p);
    if (x.dim() != y.dim()) throw DomainError("sliced_wp: dimension mismatch");
    if (options.n_proj == 0) throw DomainError("sliced_wp: n_proj must be >= 1");
    std::vector<double> terms(options.n_proj);
    parallel_for(options.n_proj, options.threads, [&](std::size_t k) {
        const auto u = direction(x.dim(), seed, k);
        const double w = wp_1d(project(x, u), project(y, u), p);
        terms[k] = pow_abs(w, p);
    });
    return terms;
}

double sliced_wp(const WeightedMeasure& x, const WeightedMeasure& y, double p,
                 std::uint64_t seed, const SlicedOptions& options) {
    const auto terms = sliced_wp_terms(x, y, p, seed, options);
    double mean = 0.0;
    for (double t : terms) mean += t;
    mean /= static_cast<double>(terms.size());
    return std::pow(mean, 1.0 / p);
}

double sliced_wp(const Dataset& x, const Dataset& y, double p, std::uint64_t seed,
                 const SlicedOptions& options) {
    // Non-owning aliases: the measures do not outlive this call.
    auto xp = DatasetPtr(std::shared_ptr<const Dataset>(), &x);
    auto yp = DatasetPtr(std::shared_ptr<const Dataset>(), &y);
    return sliced_wp(WeightedMeasure::empirical(xp), WeightedMeasure::empirical(yp), p, seed,
                     options);
}

double exact_wp_small(const Dataset& x, const Dataset& y, double p) {
    check_p(p);
    const std::size_t n = x.size();
    if (y.size() != n) throw SizeError("exact_wp_small: both sets need the same size");
    if (n > kExactWpMaxSize) {
        throw SizeError("exact_wp_small: n = " + std::to_string(n) + " exceeds " +
                        std::to_string(kExactWpMaxSize));
    }
    if (x.dim() != y.dim()) throw DomainError("exact_wp_small: dimension mismatch");
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < x.dim(); ++k) {
                const double diff = x(i, k) - y(j, k);
                s += diff * diff;
            }
            cost[i * n + j] = pow_abs(std::sqrt(s), p);
        }
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> terms(n);
    do {
        // Summing sorted terms makes the result exactly symmetric in (x, y).
        for (std::size_t i = 0; i < n; ++i) terms[i] = cost[i * n + perm[i]];
        std::sort(terms.begin(), terms.end());
        double s = 0.0;
        for (double t : terms) s += t;
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::pow(best / static_cast<double>(n), 1.0 / p);
}

TvResult tv_histogram_detailed(const Dataset& x, const Dataset& y,
                               const std::vector<AxisGrid>& grid) {
    const std::size_t d = x.dim();
    if (y.dim() != d) throw DomainError("tv_histogram: dimension mismatch");
    if (d > 3) throw SizeError("tv_histogram supports d <= 3, got d = " + std::to_string(d));
    if (grid.size() != d) throw DomainError("tv_histogram: one axis grid per dimension required");
    std::size_t cells = 1;
    for (const auto& g : grid) {
        if (g.bins == 0 || !(g.hi > g.lo)) throw DomainError("tv_histogram: invalid axis grid");
        cells *= g.bins;
    }
    TvResult result;
    auto histogram = [&](const Dataset& data) {
        std::vector<double> h(cells, 0.0);
        for (std::size_t i = 0; i < data.size(); ++i) {
            std::size_t cell = 0;
            bool outside = false;
            for (std::size_t k = 0; k < d; ++k) {
                const auto& g = grid[k];
                const double v = data(i, k);
                if (v < g.lo || v > g.hi) outside = true;
                const double pos = (v - g.lo) / (g.hi - g.lo) * static_cast<double>(g.bins);
                const double clamped = std::clamp(pos, 0.0, static_cast<double>(g.bins - 1));
                cell = cell * g.bins + static_cast<std::size_t>(clamped);
            }
            if (outside) ++result.out_of_range;
            h[cell] += 1.0;
        }
        for (double& v : h) v /= static_cast<double>(data.size());
        return h;
    };
    const auto hx = histogram(x);
    const auto hy = histogram(y);
    double s = 0.0;
    for (std::size_t c = 0; c < cells; ++c) s += std::abs(hx[c] - hy[c]);
    result.tv = 0.5 * s;
    if (result.out_of_range > 0) {
        warn("tv_histogram: " + std::to_string(result.out_of_range) +
             " points fell outside the grid and were counted in boundary cells");
    }
    return result;
}

double tv_histogram(const Dataset& x, const Dataset& y, const std::vector<AxisGrid>& grid) {
    return tv_histogram_detailed(x, y, grid).tv;
}

bool Box::contains(std::span<const double> x) const noexcept {
    for (std::size_t k = 0; k < bounds.size(); ++k) {
        if (!(x[k] >= bounds[k].first && x[k] < bounds[k].second)) return false;
    }
    return true;
}

double box_mass(const WeightedMeasure& mu, const Box& box) {
    if (box.bounds.size() != mu.dim()) throw DomainError("box dimension mismatch");
    double mass = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (box.contains(mu.atoms->row(i))) mass += mu.weights[i];
    }
    return mass;
}

std::vector<double> set_discrepancy(const WeightedMeasure& mu, const WeightedMeasure& nu,
                                    const BoxFamily& boxes) {
    if (mu.dim() != nu.dim()) throw DomainError("set_discrepancy: dimension mismatch");
    std::vector<double> out;
    out.reserve(boxes.size());
    for (const auto& box : boxes) out.push_back(std::abs(box_mass(mu, box) - box_mass(nu, box)));
    return out;
}

}  // namespace tiltdiff
