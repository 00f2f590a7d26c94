#pragma once

// Synthetic targets: a bounded, correlated mixture Y = A X of independent Beta
// coordinates, its exactly tilted counterpart, and headerless CSV I/O.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tiltdiff/dataset.hpp"
#include "tiltdiff/rng.hpp"
#include "tiltdiff/tilt.hpp"

namespace tiltdiff {

enum class Normalization { RowStochastic, ColumnStochastic };

struct BetaMixSpec {
    std::size_t d = 1;
    std::vector<double> alpha;
    std::vector<double> beta;
    /// d x d mixing matrix, row-major, nonnegative.
    std::vector<double> A;
    Normalization normalization = Normalization::RowStochastic;
    std::uint64_t seed = 0;

    /// Throws DomainError on bad shapes, nonpositive Beta parameters, negative
    /// entries of A, or line sums off by more than 1e-12.
    void validate() const;

    /// A times the all-ones vector: the componentwise supremum of Y.
    std::vector<double> upper_corner() const;
};

/// alpha_i, beta_i ~ U[1, 5]; A_ij ~ U[0, 1], then normalized.
BetaMixSpec gen_beta_mix_spec(std::size_t d, std::uint64_t seed,
                              Normalization normalization = Normalization::RowStochastic);

Dataset sample_beta_mix(const BetaMixSpec& spec, std::size_t n, Rng& rng);

/// Sup of ||g(y)|| over the support of Y, for the built-in tilt functions.
/// Throws DomainError for custom functions.
double support_g_max(const BetaMixSpec& spec, const TiltFunction& g);

enum class GroundTruthStrategy {
    /// Factorized when possible, otherwise Joint.
    Auto,
    /// Rejection on Y with w_bound = exp(||theta|| g_max).
    Joint,
    /// For linear g the tilt acts on X through lambda = A^T G^T theta and
    /// factorizes over the independent coordinates; each coordinate is drawn
    /// by rejection from its Beta law with bound exp(max(lambda_j, 0)).
    Factorized
};

struct GroundTruthResult {
    Dataset samples;
    /// Overall acceptance probability: the per-coordinate product when
    /// factorized.
    double acceptance_rate = 0.0;
    std::uint64_t proposals = 0;
    GroundTruthStrategy strategy = GroundTruthStrategy::Joint;
};

/// Exact i.i.d. sample of the tilted mixture law. Exponential family only.
GroundTruthResult ground_truth_tilted(const BetaMixSpec& spec, const TiltSpec& tilt, std::size_t n,
                                      Rng& rng,
                                      GroundTruthStrategy strategy = GroundTruthStrategy::Auto,
                                      const RejectionOptions& options = {});

/// Headerless CSV, one row per sample. ParseError carries the 1-based line.
Dataset parse_csv(std::string_view text);
std::string format_csv(const Dataset& data);

Dataset load_csv(const std::filesystem::path& path);
/// Throws IoError when the file cannot be written.
void store_csv(const std::filesystem::path& path, const Dataset& data);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace tiltdiff
