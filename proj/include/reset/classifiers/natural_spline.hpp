#pragma once

// Natural cubic spline basis (truncated-power form) with knots at sample
// quantiles, spanning the same space as a df-column `ns()` basis without
// intercept: linear beyond the boundary knots.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "reset/model.hpp"

namespace reset {

/// Sample quantile, linear interpolation between order statistics (R type 7).
inline double quantile_type7(std::span<const double> sorted, double prob) {
    if (sorted.empty()) return 0.0;
    const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

class NaturalSplineBasis {
public:
    NaturalSplineBasis() = default;

    /// Basis with `df` columns (df - 1 interior knots) fitted to the values `x`.
    /// Duplicate knots are merged, so heavily tied data yield fewer columns.
    NaturalSplineBasis(std::span<const double> x, int df) {
        std::vector<double> sorted(x.begin(), x.end());
        std::sort(sorted.begin(), sorted.end());
        lo_ = sorted.front();
        const double hi = sorted.back();
        scale_ = hi > lo_ ? hi - lo_ : 1.0;

        std::vector<double> knots{0.0};
        for (int k = 1; k < df; ++k) {
            const double q = quantile_type7(sorted, static_cast<double>(k) / static_cast<double>(df));
            knots.push_back((q - lo_) / scale_);
        }
        knots.push_back((hi - lo_) / scale_);
        std::sort(knots.begin(), knots.end());
        knots.erase(std::unique(knots.begin(), knots.end(),
                                [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                    knots.end());
        knots_ = std::move(knots);
    }

    /// Number of basis columns (no intercept).
    int columns() const noexcept { return knots_.size() < 2 ? 1 : static_cast<int>(knots_.size()) - 1; }

    /// Writes the basis row for value `v` into `out[0..columns())`.
    void evaluate(double v, double* out) const {
        const double x = (v - lo_) / scale_;
        out[0] = x;
        const auto K = knots_.size();
        if (K < 3) return;
        const double d_last = truncated_diff(x, K - 2);
        for (std::size_t k = 0; k + 2 < K; ++k) {
            out[k + 1] = truncated_diff(x, k) - d_last;
        }
    }

    /// Basis matrix for a column of values.
    Matrix evaluate(std::span<const double> values) const {
        Matrix B(static_cast<Eigen::Index>(values.size()), columns());
        std::vector<double> row(static_cast<std::size_t>(columns()));
        for (std::size_t i = 0; i < values.size(); ++i) {
            evaluate(values[i], row.data());
            for (int j = 0; j < columns(); ++j) B(static_cast<Eigen::Index>(i), j) = row[static_cast<std::size_t>(j)];
        }
        return B;
    }

    const std::vector<double>& knots() const noexcept { return knots_; }

private:
    // d_k(x) = ((x - t_k)^3_+ - (x - t_K)^3_+) / (t_K - t_k)
    double truncated_diff(double x, std::size_t k) const {
        const double tk = knots_[k];
        const double tK = knots_.back();
        auto cube = [](double u) { return u > 0.0 ? u * u * u : 0.0; };
        return (cube(x - tk) - cube(x - tK)) / (tK - tk);
    }

    double lo_ = 0.0;
    double scale_ = 1.0;
    std::vector<double> knots_;
};

}  // namespace reset
