#include "tiltdiff/synthdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "tiltdiff/errors.hpp"

namespace tiltdiff {
namespace {

double beta_draw(double a, double b, Rng& rng) {
    const double x = std::gamma_distribution<double>(a, 1.0)(rng);
    const double y = std::gamma_distribution<double>(b, 1.0)(rng);
    return x / (x + y);
}

double line_sum(const BetaMixSpec& s, std::size_t k) {
    double total = 0.0;
    for (std::size_t j = 0; j < s.d; ++j) {
        total += s.normalization == Normalization::RowStochastic ? s.A[k * s.d + j] : s.A[j * s.d + k];
    }
    return total;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

void BetaMixSpec::validate() const {
    if (d == 0) throw DomainError("beta mixture: d must be >= 1");
    if (alpha.size() != d || beta.size() != d || A.size() != d * d) {
        throw DomainError("beta mixture: alpha, beta and A must match d");
    }
    for (std::size_t i = 0; i < d; ++i) {
        if (!(alpha[i] > 0.0) || !(beta[i] > 0.0)) {
            throw DomainError("beta mixture: Beta parameters must be positive");
        }
    }
    for (double a : A) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("beta mixture: A must be nonnegative");
    }
    for (std::size_t k = 0; k < d; ++k) {
        if (std::abs(line_sum(*this, k) - 1.0) > 1e-12) {
            throw DomainError(std::string("beta mixture: ") +
                              (normalization == Normalization::RowStochastic ? "row " : "column ") +
                              std::to_string(k) + " of A does not sum to 1");
        }
    }
}

std::vector<double> BetaMixSpec::upper_corner() const {
    std::vector<double> c(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) c[i] += A[i * d + j];
    }
    return c;
}

BetaMixSpec gen_beta_mix_spec(std::size_t d, std::uint64_t seed, Normalization normalization) {
    if (d == 0) throw DomainError("beta mixture: d must be >= 1");
    Rng rng = substream(seed, 0);
    std::uniform_real_distribution<double> params(1.0, 5.0);
    BetaMixSpec s;
    s.d = d;
    s.seed = seed;
    s.normalization = normalization;
    s.alpha.resize(d);
    s.beta.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        s.alpha[i] = params(rng);
        s.beta[i] = params(rng);
    }
    s.A.resize(d * d);
    for (double& a : s.A) a = uniform01(rng);
    for (std::size_t k = 0; k < d; ++k) {
        const double total = line_sum(s, k);
        for (std::size_t j = 0; j < d; ++j) {
            auto& a = normalization == Normalization::RowStochastic ? s.A[k * d + j] : s.A[j * d + k];
            a /= total;
        }
    }
    // A single entry divided by itself is exactly 1, so d = 1 gives A = [1].
    s.validate();
    return s;
}

namespace {

void draw_mixture(const BetaMixSpec& spec, Rng& rng, std::span<double> x, std::span<double> y) {
    const std::size_t d = spec.d;
    for (std::size_t j = 0; j < d; ++j) x[j] = beta_draw(spec.alpha[j], spec.beta[j], rng);
    for (std::size_t i = 0; i < d; ++i) {
        double v = 0.0;
        for (std::size_t j = 0; j < d; ++j) v += spec.A[i * d + j] * x[j];
        y[i] = v;
    }
}

}  // namespace

Dataset sample_beta_mix(const BetaMixSpec& spec, std::size_t n, Rng& rng) {
    spec.validate();
    const std::size_t d = spec.d;
    std::vector<double> out(n * d, 0.0);
    std::vector<double> x(d);
    for (std::size_t r = 0; r < n; ++r) draw_mixture(spec, rng, x, std::span(out).subspan(r * d, d));
    return Dataset(n, d, std::move(out));
}

double support_g_max(const BetaMixSpec& spec, const TiltFunction& g) {
    const auto corner = spec.upper_corner();
    switch (g.kind()) {
        case TiltFunction::Kind::Identity:
            return norm(corner);
        case TiltFunction::Kind::CoordinateMean: {
            double m = 0.0;
            for (double c : corner) m += c;
            return m / static_cast<double>(spec.d);
        }
        case TiltFunction::Kind::LinearMap: {
            // Y ranges over [0, corner] componentwise, so |(B y)_i| <= (|B| corner)_i.
            const auto B = g.as_matrix(spec.d);
            const std::size_t rows = B.size() / spec.d;
            std::vector<double> bound(rows, 0.0);
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t j = 0; j < spec.d; ++j) bound[i] += std::abs(B[i * spec.d + j]) * corner[j];
            }
            return norm(bound);
        }
        case TiltFunction::Kind::Custom:
            break;
    }
    throw DomainError("support_g_max: no bound is known for custom tilt function '" + g.label() +
                      "'; set g_max explicitly");
}

GroundTruthResult ground_truth_tilted(const BetaMixSpec& spec, const TiltSpec& tilt, std::size_t n,
                                      Rng& rng, GroundTruthStrategy strategy,
                                      const RejectionOptions& options) {
    spec.validate();
    tilt.validate();
    if (!tilt.is_exponential()) throw DomainError("ground truth needs the exponential family");
    if (strategy == GroundTruthStrategy::Auto) {
        strategy = tilt.g.is_linear() ? GroundTruthStrategy::Factorized : GroundTruthStrategy::Joint;
    }
    const std::size_t d = spec.d;

    if (strategy == GroundTruthStrategy::Joint) {
        const double g_max = tilt.g_max ? *tilt.g_max : support_g_max(spec, tilt.g);
        TiltSpec bounded = tilt;
        bounded.g_max = g_max;
        std::vector<double> scratch(d);
        BaseSampler base = [&spec, &scratch](Rng& r, std::span<double> out) {
            draw_mixture(spec, r, scratch, out);
        };
        auto res = rejection_sample_tilted_log(base, d, bounded, tilt.theta_norm() * g_max, n, rng,
                                               options);
        return {std::move(res.samples), res.acceptance_rate, res.proposals, strategy};
    }

    if (!tilt.g.is_linear()) throw DomainError("factorized ground truth needs a linear tilt function");
    const auto G = tilt.g.as_matrix(d);
    const std::size_t rows = G.size() / d;
    if (rows != tilt.theta.size()) throw DomainError("ground truth: theta does not match g");
    // lambda = A^T G^T theta
    std::vector<double> gt(d, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < d; ++j) gt[j] += G[i * d + j] * tilt.theta[i];
    }
    std::vector<double> lambda(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) lambda[j] += spec.A[i * d + j] * gt[i];
    }
    std::vector<double> x(n * d);
    double rate = 1.0;
    std::uint64_t proposals = 0;
    for (std::size_t j = 0; j < d; ++j) {
        Rng sub = substream(draw_seed(rng), j);
        TiltSpec coord;
        coord.theta = {lambda[j]};
        coord.g_max = 1.0;
        const double a = spec.alpha[j], b = spec.beta[j];
        BaseSampler base = [a, b](Rng& r, std::span<double> out) { out[0] = beta_draw(a, b, r); };
        auto res = rejection_sample_tilted_log(base, 1, coord, std::max(lambda[j], 0.0), n, sub, options);
        for (std::size_t r = 0; r < n; ++r) x[r * d + j] = res.samples(r, 0);
        rate *= res.acceptance_rate;
        proposals += res.proposals;
    }
    std::vector<double> y(n * d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < d; ++i) {
            double v = 0.0;
            for (std::size_t j = 0; j < d; ++j) v += spec.A[i * d + j] * x[r * d + j];
            y[r * d + i] = v;
        }
    }
    return {Dataset(n, d, std::move(y)), rate, proposals, strategy};
}

Dataset parse_csv(std::string_view text) {
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    std::size_t blank_run_start = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const std::string_view line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty()) {
            if (blank_run_start == 0) blank_run_start = line_no;
            continue;
        }
        if (blank_run_start != 0) throw ParseError("blank line inside CSV data", blank_run_start);
        std::size_t count = 0;
        std::string_view rest = line;
        for (;;) {
            const auto comma = rest.find(',');
            const std::string_view cell = trim(rest.substr(0, comma));
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
                throw ParseError("non-numeric cell '" + std::string(cell) + "'", line_no);
            }
            values.push_back(v);
            ++count;
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        if (rows == 0) {
            cols = count;
        } else if (count != cols) {
            throw ParseError("ragged row: expected " + std::to_string(cols) + " cells, found " +
                                 std::to_string(count),
                             line_no);
        }
        ++rows;
    }
    if (rows == 0) throw ParseError("CSV contains no data", std::max<std::size_t>(line_no, 1));
    return Dataset(rows, cols, std::move(values));
}

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string format_csv(const Dataset& data) {
    std::string out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < data.dim(); ++j) {
            if (j) out += ',';
            out += format_double(data(i, j));
        }
        out += '\n';
    }
    return out;
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

void store_csv(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << format_csv(data);
    if (!out.flush()) throw IoError("write failed for " + path.string());
}

}  // namespace tiltdiff
