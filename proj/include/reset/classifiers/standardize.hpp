#pragma once

#include <cmath>
#include <vector>

#include "reset/model.hpp"

namespace reset {

/// Centers and scales columns to unit sample sd; constant columns are dropped.
class Standardizer {
public:
    static Standardizer fit(const Matrix& x) {
        Standardizer s;
        s.input_dims_ = x.cols();
        const auto n = static_cast<double>(x.rows());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double mean = x.rows() > 0 ? x.col(j).mean() : 0.0;
            const double ss = (x.col(j).array() - mean).square().sum();
            const double sd = n > 1.0 ? std::sqrt(ss / (n - 1.0)) : 0.0;
            if (sd > 1e-12 * (1.0 + std::abs(mean))) {
                s.keep_.push_back(j);
                s.mean_.push_back(mean);
                s.sd_.push_back(sd);
            }
        }
        return s;
    }

    Matrix transform(const Matrix& x) const {
        Matrix z(x.rows(), static_cast<Eigen::Index>(keep_.size()));
        for (std::size_t k = 0; k < keep_.size(); ++k) {
            z.col(static_cast<Eigen::Index>(k)) = (x.col(keep_[k]).array() - mean_[k]) / sd_[k];
        }
        return z;
    }

    Eigen::Index input_dims() const noexcept { return input_dims_; }
    Eigen::Index output_dims() const noexcept { return static_cast<Eigen::Index>(keep_.size()); }
    Eigen::Index dropped() const noexcept { return input_dims_ - output_dims(); }
    const std::vector<Eigen::Index>& kept() const noexcept { return keep_; }

private:
    Eigen::Index input_dims_ = 0;
    std::vector<Eigen::Index> keep_;
    std::vector<double> mean_;
    std::vector<double> sd_;
};

}  // namespace reset
