#include "tiltdiff/diffusion.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <string>

#include "tiltdiff/parallel.hpp"

namespace tiltdiff {
namespace {

using Mat = Eigen::MatrixXd;
using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMajorMat>;
using Weights = Eigen::Map<RowMajorMat>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using Vec = Eigen::Map<Eigen::VectorXd>;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_finite(const Mat& m, std::size_t layer) {
    if (!m.allFinite()) {
        throw NumericsError("denoiser: non-finite activation in layer " + std::to_string(layer));
    }
}

constexpr double kTimeFloor = 1e-3;

}  // namespace

// ---------------------------------------------------------------------------
// Schedule and forward process

void NoiseSchedule::validate() const {
    if (!(eta > 0.0) || !(sigma > 0.0) || !(T > 0.0) || !std::isfinite(eta) ||
        !std::isfinite(sigma) || !std::isfinite(T)) {
        throw DomainError("noise schedule: eta, sigma and T must be positive and finite");
    }
    if (steps < 2) throw DomainError("noise schedule: at least 2 reverse steps are needed");
}

double NoiseSchedule::mean_coeff(double t) const noexcept { return std::exp(-eta * t); }

double NoiseSchedule::noise_var(double t) const noexcept {
    return stationary_var() * -std::expm1(-2.0 * eta * t);
}

NoisedPoint forward_noise(std::span<const double> x0, double t, const NoiseSchedule& schedule,
                          Rng& rng) {
    if (!(t >= 0.0)) throw DomainError("forward_noise: t must be >= 0");
    std::normal_distribution<double> normal;
    const double m = schedule.mean_coeff(t);
    const double s = std::sqrt(schedule.noise_var(t));
    NoisedPoint out{std::vector<double>(x0.size()), std::vector<double>(x0.size())};
    for (std::size_t j = 0; j < x0.size(); ++j) {
        out.eps[j] = normal(rng);
        out.x_t[j] = m * x0[j] + s * out.eps[j];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Model

DenoiserModel::DenoiserModel(ModelShape shape, double horizon, Rng& rng, bool zero_output)
    : shape_(std::move(shape)), horizon_(horizon) {
    build_layout();
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& L = layers_[l];
        const bool last = l + 1 == layers_.size();
        if (last && zero_output) continue;
        const double a = std::sqrt(6.0 / static_cast<double>(L.in + L.out));
        std::uniform_real_distribution<double> u(-a, a);
        for (std::size_t k = 0; k < L.in * L.out; ++k) params_[L.w_offset + k] = u(rng);
    }
}

DenoiserModel::DenoiserModel(ModelShape shape, double horizon, std::vector<double> params)
    : shape_(std::move(shape)), horizon_(horizon) {
    build_layout();
    if (params.size() != params_.size()) {
        throw DomainError("denoiser: expected " + std::to_string(params_.size()) +
                          " parameters, got " + std::to_string(params.size()));
    }
    for (double p : params) {
        if (!std::isfinite(p)) throw DomainError("denoiser: parameters must be finite");
    }
    params_ = std::move(params);
}

void DenoiserModel::build_layout() {
    if (shape_.dim == 0) throw DomainError("denoiser: dim must be >= 1");
    if (!(horizon_ > 0.0)) throw DomainError("denoiser: horizon must be positive");
    for (std::size_t h : shape_.hidden) {
        if (h == 0) throw DomainError("denoiser: hidden widths must be >= 1");
    }
    freqs_.clear();
    for (std::size_t k = 0; k < shape_.n_freq; ++k) {
        const double frac = shape_.n_freq == 1 ? 0.0 : static_cast<double>(k) / (shape_.n_freq - 1);
        freqs_.push_back(shape_.freq_min * std::pow(shape_.freq_max / shape_.freq_min, frac));
    }
    shift_.assign(shape_.dim, 0.0);
    scale_.assign(shape_.dim, 1.0);
    layers_.clear();
    std::size_t in = input_width();
    std::size_t offset = 0;
    auto add = [&](std::size_t out) {
        layers_.push_back({in, out, offset, offset + in * out});
        offset += in * out + out;
        in = out;
    };
    for (std::size_t h : shape_.hidden) add(h);
    add(shape_.dim);
    params_.assign(offset, 0.0);
}

void DenoiserModel::set_data_scaling(std::vector<double> shift, std::vector<double> scale) {
    if (shift.size() != shape_.dim || scale.size() != shape_.dim) {
        throw DomainError("denoiser: data scaling must match the dimension");
    }
    for (std::size_t j = 0; j < shape_.dim; ++j) {
        if (!std::isfinite(shift[j]) || !(scale[j] > 0.0) || !std::isfinite(scale[j])) {
            throw DomainError("denoiser: data scaling needs finite shifts and positive scales");
        }
    }
    shift_ = std::move(shift);
    scale_ = std::move(scale);
}

void DenoiserModel::embed(std::span<const double> x, std::span<const double> t,
                          std::vector<double>& input) const {
    const std::size_t n = t.size();
    const std::size_t d = shape_.dim;
    const std::size_t w = input_width();
    if (x.size() != n * d) throw DomainError("denoiser: x must hold one row per time");
    input.resize(w * n);
    for (std::size_t i = 0; i < n; ++i) {
        double* col = input.data() + i * w;
        for (std::size_t j = 0; j < d; ++j) col[j] = x[i * d + j];
        const double tau = std::sqrt(std::max(t[i], 0.0) / horizon_);
        for (std::size_t k = 0; k < freqs_.size(); ++k) {
            col[d + 2 * k] = std::sin(freqs_[k] * tau);
            col[d + 2 * k + 1] = std::cos(freqs_[k] * tau);
        }
    }
}

std::vector<double> DenoiserModel::forward(std::span<const double> x, double t) const {
    const double ts[1] = {t};
    return forward_batch(x, ts);
}

std::vector<double> DenoiserModel::forward_batch(std::span<const double> x,
                                                 std::span<const double> t) const {
    const auto n = static_cast<Eigen::Index>(t.size());
    std::vector<double> input;
    embed(x, t, input);
    Mat a = Eigen::Map<const Mat>(input.data(), static_cast<Eigen::Index>(input_width()), n);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& L = layers_[l];
        ConstWeights W(params_.data() + L.w_offset, L.out, L.in);
        ConstVec b(params_.data() + L.b_offset, L.out);
        Mat z = W * a;
        z.colwise() += b;
        if (l + 1 < layers_.size()) {
            a = z.unaryExpr([](double v) { return v * sigmoid(v); });
        } else {
            a = std::move(z);
        }
        check_finite(a, l);
    }
    return std::vector<double>(a.data(), a.data() + a.size());
}

double DenoiserModel::loss(std::span<const double> x, std::span<const double> t,
                           std::span<const double> eps) const {
    const auto out = forward_batch(x, t);
    if (eps.size() != out.size()) throw DomainError("denoiser: eps has the wrong size");
    double s = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) s += (eps[k] - out[k]) * (eps[k] - out[k]);
    return s / static_cast<double>(t.size());
}

double DenoiserModel::loss_and_grad(std::span<const double> x, std::span<const double> t,
                                    std::span<const double> eps, std::vector<double>& grad) const {
    const std::size_t nl = layers_.size();
    const auto n = static_cast<Eigen::Index>(t.size());
    if (n == 0) throw DomainError("denoiser: empty batch");
    if (eps.size() != t.size() * shape_.dim) throw DomainError("denoiser: eps has the wrong size");
    std::vector<double> input;
    embed(x, t, input);

    // acts[l] is the input of layer l; pre[l] its pre-activation.
    std::vector<Mat> acts(nl + 1), pre(nl);
    acts[0] = Eigen::Map<const Mat>(input.data(), static_cast<Eigen::Index>(input_width()), n);
    for (std::size_t l = 0; l < nl; ++l) {
        const auto& L = layers_[l];
        ConstWeights W(params_.data() + L.w_offset, L.out, L.in);
        ConstVec b(params_.data() + L.b_offset, L.out);
        pre[l] = W * acts[l];
        pre[l].colwise() += b;
        acts[l + 1] = l + 1 < nl ? pre[l].unaryExpr([](double v) { return v * sigmoid(v); }) : pre[l];
        check_finite(acts[l + 1], l);
    }

    Eigen::Map<const Mat> target(eps.data(), static_cast<Eigen::Index>(shape_.dim), n);
    Mat delta = acts[nl] - target;
    const double loss = delta.squaredNorm() / static_cast<double>(n);
    delta *= 2.0 / static_cast<double>(n);

    grad.assign(params_.size(), 0.0);
    for (std::size_t l = nl; l-- > 0;) {
        const auto& L = layers_[l];
        if (l + 1 < nl) {
            delta.array() *= pre[l].unaryExpr([](double v) {
                const double s = sigmoid(v);
                return s * (1.0 + v * (1.0 - s));
            }).array();
        }
        Weights gW(grad.data() + L.w_offset, L.out, L.in);
        Vec gb(grad.data() + L.b_offset, L.out);
        gW.noalias() = delta * acts[l].transpose();
        gb = delta.rowwise().sum();
        if (l > 0) {
            ConstWeights W(params_.data() + L.w_offset, L.out, L.in);
            Mat next = W.transpose() * delta;
            delta = std::move(next);
        }
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
    if (batch_size == 0 || steps == 0 || log_every == 0) {
        throw DomainError("train config: batch_size, steps and log_every must be >= 1");
    }
    if (!(learning_rate > 0.0) || !(clip_norm > 0.0) || !(adam_eps > 0.0)) {
        throw DomainError("train config: learning_rate, clip_norm and adam_eps must be positive");
    }
    auto unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!unit(beta1) || !unit(beta2)) throw DomainError("train config: Adam decay rates must lie in (0, 1)");
    if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw DomainError("train config: ema_decay must lie in [0, 1)");
    if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0)) {
        throw DomainError("train config: final_lr_fraction must lie in (0, 1]");
    }
}

TrainResult train_on(Dataset training_set, const NoiseSchedule& schedule, TrainConfig config) {
    schedule.validate();
    config.validate();
    config.shape.dim = training_set.dim();
    Rng rng = substream(config.seed, 1);
    DenoiserModel model(config.shape, schedule.T, rng);
    Dataset fit_set = training_set;
    if (config.standardize) {
        const std::size_t n = training_set.size(), d = training_set.dim();
        std::vector<double> mean(d, 0.0), sd(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) mean[j] += training_set(i, j);
        }
        for (double& m : mean) m /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) sd[j] += (training_set(i, j) - mean[j]) * (training_set(i, j) - mean[j]);
        }
        for (double& s : sd) {
            s = std::sqrt(s / static_cast<double>(n));
            if (!(s > 0.0)) s = 1.0;
        }
        std::vector<double> z(training_set.values().begin(), training_set.values().end());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) z[i * d + j] = (z[i * d + j] - mean[j]) / sd[j];
        }
        fit_set = Dataset(n, d, std::move(z));
        model.set_data_scaling(std::move(mean), std::move(sd));
    }

    const std::size_t P = model.param_count();
    const std::size_t B = config.batch_size;
    const std::size_t d = training_set.dim();
    std::vector<double> m(P, 0.0), v(P, 0.0), grad, ema(model.params().begin(), model.params().end());
    std::vector<double> xb(B * d), tb(B), eb(B * d);
    std::uniform_int_distribution<std::size_t> pick(0, fit_set.size() - 1);
    std::uniform_real_distribution<double> time(kTimeFloor * schedule.T, schedule.T);
    std::normal_distribution<double> normal;
    LossTrace trace;
    double b1t = 1.0, b2t = 1.0;

    for (std::size_t step = 0; step < config.steps; ++step) {
        for (std::size_t i = 0; i < B; ++i) {
            const auto x0 = fit_set.row(pick(rng));
            const double t = time(rng);
            const double mc = schedule.mean_coeff(t);
            const double sd = std::sqrt(schedule.noise_var(t));
            tb[i] = t;
            for (std::size_t j = 0; j < d; ++j) {
                const double e = normal(rng);
                eb[i * d + j] = e;
                xb[i * d + j] = mc * x0[j] + sd * e;
            }
        }
        double loss = 0.0;
        try {
            loss = model.loss_and_grad(xb, tb, eb, grad);
        } catch (const NumericsError& e) {
            throw TrainingDivergedError(std::string("training diverged at step ") +
                                            std::to_string(step) + ": " + e.what(),
                                        trace);
        }
        if (!std::isfinite(loss)) {
            trace.push_back({step, loss});
            throw TrainingDivergedError("training diverged at step " + std::to_string(step), trace);
        }
        if (step % config.log_every == 0 || step + 1 == config.steps) trace.push_back({step, loss});

        double gnorm = 0.0;
        for (double g : grad) gnorm += g * g;
        gnorm = std::sqrt(gnorm);
        const double scale = gnorm > config.clip_norm ? config.clip_norm / gnorm : 1.0;

        const double progress = static_cast<double>(step) / static_cast<double>(config.steps);
        const double f = config.final_lr_fraction;
        const double lr = config.learning_rate *
                          (f + (1.0 - f) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
        b1t *= config.beta1;
        b2t *= config.beta2;
        auto params = model.mutable_params();
        const double decay = std::min(config.ema_decay, (1.0 + step) / (10.0 + step));
        for (std::size_t k = 0; k < P; ++k) {
            const double g = grad[k] * scale;
            m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g;
            v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g * g;
            const double mh = m[k] / (1.0 - b1t);
            const double vh = v[k] / (1.0 - b2t);
            params[k] -= lr * mh / (std::sqrt(vh) + config.adam_eps);
            ema[k] = decay * ema[k] + (1.0 - decay) * params[k];
        }
    }
    if (config.ema_decay > 0.0) {
        auto params = model.mutable_params();
        std::copy(ema.begin(), ema.end(), params.begin());
    }
    return TrainResult{std::move(model), std::move(trace), std::move(training_set)};
}

TrainResult train(const Dataset& dataset, const TiltSpec& tilt, const NoiseSchedule& schedule,
                  TrainConfig config) {
    // Non-owning alias: the plug-in measure does not outlive this call.
    const auto atoms = DatasetPtr(std::shared_ptr<const Dataset>(), &dataset);
    const auto measure = plugin_measure(atoms, tilt);
    Rng rng = substream(config.seed, 0);
    const std::size_t m = config.resample_size == 0 ? dataset.size() : config.resample_size;
    return train_on(resample(measure, m, rng), schedule, std::move(config));
}

// ---------------------------------------------------------------------------
// Scores and sampling

std::vector<double> score_from_eps(const DenoiserModel& model, std::span<const double> x, double t,
                                   const NoiseSchedule& schedule) {
    if (!(t > 0.0)) throw SingularTimeError("score is undefined at t <= 0 (noise variance is zero)");
    auto e = model.forward(x, t);
    const double s = std::sqrt(schedule.noise_var(t));
    for (double& v : e) v = -v / s;
    return e;
}

ScoreFunction model_score(const DenoiserModel& model, const NoiseSchedule& schedule) {
    return [&model, schedule](std::span<const double> x, std::size_t n, double t, std::span<double> out) {
        if (!(t > 0.0)) throw SingularTimeError("score is undefined at t <= 0 (noise variance is zero)");
        const std::vector<double> ts(n, t);
        const auto e = model.forward_batch(x, ts);
        const double s = std::sqrt(schedule.noise_var(t));
        for (std::size_t k = 0; k < e.size(); ++k) out[k] = -e[k] / s;
    };
}

Dataset reverse_sample(const ScoreFunction& score, std::size_t dim, const NoiseSchedule& schedule,
                       std::size_t n, std::uint64_t seed, const SampleOptions& options) {
    schedule.validate();
    if (n == 0 || dim == 0) throw DomainError("reverse_sample: n and dim must be >= 1");
    const std::size_t block = std::max<std::size_t>(1, options.block_size);
    const std::size_t blocks = (n + block - 1) / block;
    const double h = schedule.T / static_cast<double>(schedule.steps);
    const double noise = std::sqrt(2.0 * h) * schedule.sigma;
    const double s2 = schedule.sigma * schedule.sigma;
    std::vector<double> out(n * dim);
    parallel_for(blocks, options.threads, [&](std::size_t b) {
        Rng rng = substream(seed, b);
        std::normal_distribution<double> normal;
        const std::size_t first = b * block;
        const std::size_t count = std::min(block, n - first);
        std::span<double> x(out.data() + first * dim, count * dim);
        const double sd0 = std::sqrt(schedule.stationary_var());
        for (double& v : x) v = sd0 * normal(rng);
        std::vector<double> s(count * dim);
        for (std::size_t k = 0; k < schedule.steps; ++k) {
            const double t = schedule.T - static_cast<double>(k) * h;
            score(x, count, t, s);
            const bool last = k + 1 == schedule.steps;
            for (std::size_t i = 0; i < x.size(); ++i) {
                x[i] += h * (schedule.eta * x[i] + 2.0 * s2 * s[i]);
                if (!last) x[i] += noise * normal(rng);
                if (!std::isfinite(x[i])) {
                    throw NumericsError("reverse_sample: state became non-finite at step " +
                                        std::to_string(k));
                }
            }
        }
    });
    return Dataset(n, dim, std::move(out));
}

Dataset reverse_sample(const DenoiserModel& model, const NoiseSchedule& schedule, std::size_t n,
                       std::uint64_t seed, const SampleOptions& options) {
    const std::size_t d = model.shape().dim;
    const Dataset raw = reverse_sample(model_score(model, schedule), d, schedule, n, seed, options);
    std::vector<double> out(raw.values().begin(), raw.values().end());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            out[i * d + j] = model.data_shift()[j] + model.data_scale()[j] * out[i * d + j];
        }
    }
    return Dataset(n, d, std::move(out));
}

// ---------------------------------------------------------------------------
// Score oracles and the denoiser loss

ScoreOracle ScoreOracle::gaussian(std::vector<double> mean, double var) {
    return gaussian_mixture({std::move(mean)}, {var}, {1.0});
}

ScoreOracle ScoreOracle::gaussian_mixture(std::vector<std::vector<double>> means,
                                          std::vector<double> vars, std::vector<double> weights) {
    if (means.empty() || means.size() != vars.size() || means.size() != weights.size()) {
        throw DomainError("score oracle: one mean, variance and weight per component");
    }
    ScoreOracle o;
    double total = 0.0;
    for (std::size_t k = 0; k < means.size(); ++k) {
        if (means[k].size() != means[0].size() || means[k].empty()) {
            throw DomainError("score oracle: component means must share a nonzero dimension");
        }
        if (!(vars[k] >= 0.0) || !(weights[k] > 0.0)) {
            throw DomainError("score oracle: variances must be >= 0 and weights > 0");
        }
        total += weights[k];
    }
    for (double w : weights) o.log_weights_.push_back(std::log(w / total));
    o.means_ = std::move(means);
    o.vars_ = std::move(vars);
    return o;
}

void ScoreOracle::score(std::span<const double> x, double t, const NoiseSchedule& schedule,
                        std::span<double> out) const {
    if (!(t > 0.0)) throw SingularTimeError("score oracle: t must be > 0");
    const std::size_t d = dim();
    const double m = schedule.mean_coeff(t);
    const std::size_t K = means_.size();
    std::vector<double> logr(K), var_t(K);
    double max_lr = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
        var_t[k] = m * m * vars_[k] + schedule.noise_var(t);
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double r = x[j] - m * means_[k][j];
            sq += r * r;
        }
        logr[k] = log_weights_[k] - 0.5 * static_cast<double>(d) * std::log(var_t[k]) - 0.5 * sq / var_t[k];
        max_lr = std::max(max_lr, logr[k]);
    }
    double z = 0.0;
    for (double& v : logr) z += (v = std::exp(v - max_lr));
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        const double r = logr[k] / z;
        for (std::size_t j = 0; j < d; ++j) out[j] -= r * (x[j] - m * means_[k][j]) / var_t[k];
    }
}

void ScoreOracle::sample(Rng& rng, std::span<double> out) const {
    std::vector<double> w(log_weights_.size());
    std::transform(log_weights_.begin(), log_weights_.end(), w.begin(), [](double l) { return std::exp(l); });
    const std::size_t k = std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
    std::normal_distribution<double> normal;
    const double sd = std::sqrt(vars_[k]);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = means_[k][j] + sd * normal(rng);
}

DenoiserLossEstimate empirical_denoiser_loss(const DenoiserModel& model, const Dataset& dataset,
                                             const TiltSpec& tilt, const NoiseSchedule& schedule,
                                             std::size_t n_mc, Rng& rng, LossMode mode,
                                             const ScoreOracle* oracle) {
    schedule.validate();
    if (n_mc < 2) throw DomainError("empirical_denoiser_loss: n_mc must be >= 2");
    if (mode == LossMode::Oracle && oracle == nullptr) {
        throw OracleUnavailableError("no score oracle for this target; request the surrogate loss");
    }
    const std::size_t d = dataset.dim();
    if (d != model.shape().dim || (oracle && oracle->dim() != d)) {
        throw DomainError("empirical_denoiser_loss: dimension mismatch");
    }
    bool identity = true;
    for (std::size_t j = 0; j < d; ++j) {
        identity = identity && model.data_shift()[j] == 0.0 && model.data_scale()[j] == 1.0;
    }
    if (mode == LossMode::Oracle && !identity) {
        throw DomainError("empirical_denoiser_loss: oracle mode needs a model without data scaling");
    }
    const auto atoms = DatasetPtr(std::shared_ptr<const Dataset>(), &dataset);
    Dataset x0s = resample(plugin_measure(atoms, tilt), n_mc, rng);
    if (!identity) {
        std::vector<double> z(x0s.values().begin(), x0s.values().end());
        for (std::size_t i = 0; i < n_mc; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                z[i * d + j] = (z[i * d + j] - model.data_shift()[j]) / model.data_scale()[j];
            }
        }
        x0s = Dataset(n_mc, d, std::move(z));
    }
    std::uniform_real_distribution<double> time(kTimeFloor * schedule.T, schedule.T);
    std::vector<double> vals(n_mc), truth(d);
    for (std::size_t i = 0; i < n_mc; ++i) {
        const double t = time(rng);
        const auto noised = forward_noise(x0s.row(i), t, schedule, rng);
        double s = 0.0;
        if (mode == LossMode::Oracle) {
            const auto est = score_from_eps(model, noised.x_t, t, schedule);
            oracle->score(noised.x_t, t, schedule, truth);
            for (std::size_t j = 0; j < d; ++j) s += (est[j] - truth[j]) * (est[j] - truth[j]);
        } else {
            const auto e = model.forward(noised.x_t, t);
            for (std::size_t j = 0; j < d; ++j) s += (noised.eps[j] - e[j]) * (noised.eps[j] - e[j]);
            s /= schedule.noise_var(t);
        }
        vals[i] = s;
    }
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(n_mc);
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n_mc - 1);
    return {mean, std::sqrt(var / static_cast<double>(n_mc))};
}

}  // namespace tiltdiff
