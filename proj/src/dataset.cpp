#include "tiltdiff/dataset.hpp"

#include <cmath>
#include <string>

#include "tiltdiff/errors.hpp"

namespace tiltdiff {

Dataset::Dataset(std::size_t n, std::size_t d, std::vector<double> values)
    : n_(n), d_(d), values_(std::move(values)) {
    if (n_ == 0 || d_ == 0) {
        throw DomainError("Dataset needs n >= 1 and d >= 1");
    }
    if (values_.size() != n_ * d_) {
        throw DomainError("Dataset: expected " + std::to_string(n_ * d_) + " values, got " +
                          std::to_string(values_.size()));
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (!std::isfinite(values_[k])) {
            throw DomainError("Dataset: non-finite entry at row " + std::to_string(k / d_) +
                              ", column " + std::to_string(k % d_));
        }
    }
}

Dataset Dataset::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) {
        throw DomainError("Dataset::from_rows: no rows");
    }
    const std::size_t d = rows.front().size();
    std::vector<double> values;
    values.reserve(rows.size() * d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != d) {
            throw DomainError("Dataset::from_rows: row " + std::to_string(i) + " has " +
                              std::to_string(rows[i].size()) + " entries, expected " +
                              std::to_string(d));
        }
        values.insert(values.end(), rows[i].begin(), rows[i].end());
    }
    return Dataset(rows.size(), d, std::move(values));
}

double squared_norm(std::span<const double> x) noexcept {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

double norm(std::span<const double> x) noexcept { return std::sqrt(squared_norm(x)); }

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace tiltdiff
