#pragma once

// Ornstein-Uhlenbeck forward noising, an epsilon-prediction MLP trained by
// hand-written backpropagation, and the Euler-Maruyama reverse sampler.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tiltdiff/dataset.hpp"
#include "tiltdiff/errors.hpp"
#include "tiltdiff/rng.hpp"
#include "tiltdiff/tilt.hpp"

namespace tiltdiff {

/// dx = -eta x dt + sqrt(2) sigma dB on [0, T]; `steps` uniform reverse steps.
struct NoiseSchedule {
    double eta = 1.0;
    double sigma = 1.0;
    double T = 1.0;
    std::size_t steps = 200;

    void validate() const;
    double mean_coeff(double t) const noexcept;
    double noise_var(double t) const noexcept;
    /// sigma^2 / eta, the variance of the stationary law.
    double stationary_var() const noexcept { return sigma * sigma / eta; }
};

struct NoisedPoint {
    std::vector<double> x_t;
    std::vector<double> eps;
};

/// x_t = mean_coeff(t) x0 + sqrt(noise_var(t)) eps with eps ~ N(0, I).
NoisedPoint forward_noise(std::span<const double> x0, double t, const NoiseSchedule& schedule,
                          Rng& rng);

struct ModelShape {
    std::size_t dim = 1;
    std::vector<std::size_t> hidden{128, 128};
    /// Sin/cos pairs of the time embedding; frequencies are geometric.
    std::size_t n_freq = 8;
    double freq_min = 0.5;
    double freq_max = 16.0;
};

/// MLP eps_hat(x, t) on [x, sin(w_k tau), cos(w_k tau)] with tau = sqrt(t / T)
/// and SiLU activations. Parameters live in one flat vector.
class DenoiserModel {
public:
    struct Layer {
        std::size_t in;
        std::size_t out;
        std::size_t w_offset;  // out x in, row-major
        std::size_t b_offset;
    };

    /// Glorot-uniform hidden layers; the output layer starts at zero unless
    /// `zero_output` is false.
    DenoiserModel(ModelShape shape, double horizon, Rng& rng, bool zero_output = true);
    /// From explicit parameters (e.g. a checkpoint).
    DenoiserModel(ModelShape shape, double horizon, std::vector<double> params);

    const ModelShape& shape() const noexcept { return shape_; }
    double horizon() const noexcept { return horizon_; }
    std::size_t input_width() const noexcept { return shape_.dim + 2 * shape_.n_freq; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    const std::vector<double>& frequencies() const noexcept { return freqs_; }

    /// Per-coordinate affine map from model coordinates back to data
    /// coordinates: data = shift + scale * model. Identity unless training
    /// standardized the data.
    const std::vector<double>& data_shift() const noexcept { return shift_; }
    const std::vector<double>& data_scale() const noexcept { return scale_; }
    void set_data_scaling(std::vector<double> shift, std::vector<double> scale);

    std::span<const double> params() const noexcept { return params_; }
    std::span<double> mutable_params() noexcept { return params_; }
    std::size_t param_count() const noexcept { return params_.size(); }

    /// eps_hat for one point. Throws NumericsError naming the layer when an
    /// activation is not finite.
    std::vector<double> forward(std::span<const double> x, double t) const;

    /// eps_hat for a batch: rows of x (n x dim, row-major) with times t.
    std::vector<double> forward_batch(std::span<const double> x, std::span<const double> t) const;

    /// Mean over the batch of ||eps - eps_hat||^2 and its exact gradient with
    /// respect to params (written into `grad`, resized as needed).
    double loss_and_grad(std::span<const double> x, std::span<const double> t,
                         std::span<const double> eps, std::vector<double>& grad) const;

    /// Same objective without the gradient.
    double loss(std::span<const double> x, std::span<const double> t,
                std::span<const double> eps) const;

private:
    void build_layout();
    void embed(std::span<const double> x, std::span<const double> t, std::vector<double>& input) const;

    ModelShape shape_;
    double horizon_;
    std::vector<Layer> layers_;
    std::vector<double> freqs_;
    std::vector<double> params_;
    std::vector<double> shift_;
    std::vector<double> scale_;
};

struct TrainConfig {
    std::size_t batch_size = 256;
    std::size_t steps = 4000;
    double learning_rate = 2e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double clip_norm = 1.0;
    /// Cosine decay of the learning rate to this fraction at the last step.
    double final_lr_fraction = 0.05;
    /// Exponential moving average of the parameters, with decay capped at
    /// (1 + step) / (10 + step) early on; 0 disables it.
    double ema_decay = 0.999;
    /// Record the loss every this many steps.
    std::size_t log_every = 50;
    std::uint64_t seed = 0;
    /// Size of the resampled training set; 0 means the dataset size.
    std::size_t resample_size = 0;
    /// Fit the model to per-coordinate standardized data and record the map
    /// back in the model.
    bool standardize = false;
    ModelShape shape;

    void validate() const;
};

struct TrainResult {
    DenoiserModel model;
    LossTrace trace;
    /// The resampled training set.
    Dataset training_set;
};

/// Resamples the plug-in tilted measure into a training set (substream 0 of
/// the seed), then fits eps-prediction with Adam (substream 1). Times are
/// drawn uniformly on [1e-3 T, T]. Throws TrainingDivergedError with the trace
/// when the loss stops being finite.
TrainResult train(const Dataset& dataset, const TiltSpec& tilt, const NoiseSchedule& schedule,
                  TrainConfig config);

/// Trains on the given points directly, skipping the resampling step.
TrainResult train_on(Dataset training_set, const NoiseSchedule& schedule, TrainConfig config);

/// Score estimate -eps_hat / sqrt(noise_var(t)) in model coordinates. Throws
/// SingularTimeError at t <= 0.
std::vector<double> score_from_eps(const DenoiserModel& model, std::span<const double> x, double t,
                                   const NoiseSchedule& schedule);

/// Batched score: x is n x dim row-major, all at time t; writes into `out`.
using ScoreFunction =
    std::function<void(std::span<const double> x, std::size_t n, double t, std::span<double> out)>;

ScoreFunction model_score(const DenoiserModel& model, const NoiseSchedule& schedule);

struct SampleOptions {
    /// Chains are advanced in blocks, each with its own substream.
    std::size_t block_size = 1024;
    std::size_t threads = 1;
};

/// Euler-Maruyama for the reversed process started from N(0, sigma^2/eta I):
/// x <- x + h (eta x + 2 sigma^2 score(x, T - k h)) + sqrt(2 h) sigma xi, with
/// no noise on the final step. Throws NumericsError with the step index when
/// the state stops being finite. The model overload maps its output through
/// the model's data scaling.
Dataset reverse_sample(const ScoreFunction& score, std::size_t dim, const NoiseSchedule& schedule,
                       std::size_t n, std::uint64_t seed, const SampleOptions& options = {});
Dataset reverse_sample(const DenoiserModel& model, const NoiseSchedule& schedule, std::size_t n,
                       std::uint64_t seed, const SampleOptions& options = {});

/// Exact score of the noised marginal q_t for targets with a closed form.
class ScoreOracle {
public:
    /// Data law N(mean, var I).
    static ScoreOracle gaussian(std::vector<double> mean, double var);
    /// Mixture of isotropic Gaussians; a zero variance gives point masses.
    static ScoreOracle gaussian_mixture(std::vector<std::vector<double>> means,
                                        std::vector<double> vars, std::vector<double> weights);

    std::size_t dim() const noexcept { return means_.front().size(); }
    void score(std::span<const double> x, double t, const NoiseSchedule& schedule,
               std::span<double> out) const;
    /// Draws one point from the data law.
    void sample(Rng& rng, std::span<double> out) const;

private:
    std::vector<std::vector<double>> means_;
    std::vector<double> vars_;
    std::vector<double> log_weights_;
};

enum class LossMode { Oracle, Surrogate };

struct DenoiserLossEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo estimate of (1/T) int E||score_model - score_true||^2 dt over
/// the data in `dataset` (its plug-in tilted measure when tilt is non-zero).
/// Surrogate mode returns E||eps - eps_hat||^2 / noise_var(t), which differs
/// from the oracle value by a model-independent constant. Oracle mode without
/// an oracle throws OracleUnavailableError. A model with data scaling is
/// evaluated in its standardized coordinates (surrogate mode only).
DenoiserLossEstimate empirical_denoiser_loss(const DenoiserModel& model, const Dataset& dataset,
                                             const TiltSpec& tilt, const NoiseSchedule& schedule,
                                             std::size_t n_mc, Rng& rng, LossMode mode,
                                             const ScoreOracle* oracle = nullptr);

}  // namespace tiltdiff
