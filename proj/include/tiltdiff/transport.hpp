#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tiltdiff/dataset.hpp"
#include "tiltdiff/rng.hpp"
#include "tiltdiff/tilt.hpp"

namespace tiltdiff {

/// Atoms on the real line with strictly increasing positions.
class DiscreteMeasure1D {
public:
    /// Sorts, merges coincident positions and drops zero-mass atoms. Masses
    /// must be nonnegative and sum to 1 within 1e-9.
    DiscreteMeasure1D(std::vector<double> positions, std::vector<double> masses);

    /// Equal masses 1/n.
    static DiscreteMeasure1D uniform(std::vector<double> positions);

    const std::vector<double>& positions() const noexcept { return positions_; }
    const std::vector<double>& masses() const noexcept { return masses_; }
    std::size_t size() const noexcept { return positions_.size(); }

private:
    std::vector<double> positions_;
    std::vector<double> masses_;
};

/// Exact W_p on the line via the quantile coupling.
double wp_1d(const DiscreteMeasure1D& a, const DiscreteMeasure1D& b, double p);

struct SlicedOptions {
    std::size_t n_proj = 128;
    std::size_t threads = 1;
};

/// Sliced W_p: the p-power mean of wp_1d over random unit directions.
/// Projection k uses substream (seed, k), so the value depends only on the
/// seed and not on the thread count.
double sliced_wp(const WeightedMeasure& x, const WeightedMeasure& y, double p,
                 std::uint64_t seed, const SlicedOptions& options = {});
double sliced_wp(const Dataset& x, const Dataset& y, double p, std::uint64_t seed,
                 const SlicedOptions& options = {});

/// Per-projection values wp_1d^p, for standard-error reporting.
std::vector<double> sliced_wp_terms(const WeightedMeasure& x, const WeightedMeasure& y, double p,
                                    std::uint64_t seed, const SlicedOptions& options = {});

inline constexpr std::size_t kExactWpMaxSize = 8;

/// Exact W_p between two equal-size, equal-weight point sets by enumerating
/// every matching. Test oracle; throws SizeError beyond kExactWpMaxSize.
double exact_wp_small(const Dataset& x, const Dataset& y, double p);

struct AxisGrid {
    std::size_t bins = 50;
    double lo = 0.0;
    double hi = 1.0;
};

struct TvResult {
    double tv = 0.0;
    /// Points that fell outside the grid and were counted in a boundary cell.
    std::size_t out_of_range = 0;
};

/// Histogram plug-in estimate of total variation, d <= 3. Out-of-range points
/// go to the nearest boundary cell and trigger a coverage warning.
TvResult tv_histogram_detailed(const Dataset& x, const Dataset& y,
                               const std::vector<AxisGrid>& grid);
double tv_histogram(const Dataset& x, const Dataset& y, const std::vector<AxisGrid>& grid);

/// Axis-aligned box, lo-inclusive and hi-exclusive on every axis.
struct Box {
    std::vector<std::pair<double, double>> bounds;

    bool contains(std::span<const double> x) const noexcept;
};
using BoxFamily = std::vector<Box>;

double box_mass(const WeightedMeasure& mu, const Box& box);

/// |mu(box_j) - nu(box_j)| for every box.
std::vector<double> set_discrepancy(const WeightedMeasure& mu, const WeightedMeasure& nu,
                                    const BoxFamily& boxes);

}  // namespace tiltdiff
