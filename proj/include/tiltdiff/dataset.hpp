#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace tiltdiff {

/// An n x d matrix of finite reals, one sample per row, stored row-major.
/// Immutable once built; share it through DatasetPtr.
class Dataset {
public:
    /// Throws DomainError unless n >= 1, d >= 1, values.size() == n*d and every
    /// entry is finite.
    Dataset(std::size_t n, std::size_t d, std::vector<double> values);

    /// One row per inner vector; all rows must have the same length.
    static Dataset from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t size() const noexcept { return n_; }
    std::size_t dim() const noexcept { return d_; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {values_.data() + i * d_, d_};
    }
    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * d_ + j]; }

    std::span<const double> values() const noexcept { return values_; }

    bool operator==(const Dataset& other) const = default;

private:
    std::size_t n_;
    std::size_t d_;
    std::vector<double> values_;
};

using DatasetPtr = std::shared_ptr<const Dataset>;

inline DatasetPtr share(Dataset ds) { return std::make_shared<const Dataset>(std::move(ds)); }

double squared_norm(std::span<const double> x) noexcept;
double norm(std::span<const double> x) noexcept;
double dot(std::span<const double> a, std::span<const double> b) noexcept;

}  // namespace tiltdiff
