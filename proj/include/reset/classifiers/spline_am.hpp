#pragma once

// Logistic additive model: one natural cubic spline per feature, fit by IRLS.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "reset/classifiers/natural_spline.hpp"
#include "reset/classifiers/standardize.hpp"
#include "reset/log.hpp"
#include "reset/model.hpp"

namespace reset {

struct SplineAmParams {
    int df = 5;
    bool linear = false;  ///< identity basis per feature (plain logistic regression)
    int max_iter = 50;
    double tol = 1e-8;
    double ridge = 1e-8;
};

/// Iteratively reweighted least squares for logistic regression on a design
/// whose first column is the intercept. Returns the coefficient vector.
inline Vector logistic_irls(const Matrix& design, const Vector& y, int max_iter, double tol, double ridge) {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    auto deviance = [&](const Vector& eta) {
        double dev = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t = eta[i];
            const double softplus = t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
            dev += 2.0 * (softplus - y[i] * t);
        }
        return dev;
    };

    Vector beta = Vector::Zero(p);
    const double ybar = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
    beta[0] = std::log(ybar / (1.0 - ybar));
    Vector eta = design * beta;
    double dev = deviance(eta);
    Vector w(n), z(n);
    for (int iter = 0; iter < max_iter; ++iter) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mu = 1.0 / (1.0 + std::exp(-eta[i]));
            const double wi = std::max(mu * (1.0 - mu), 1e-10);
            w[i] = wi;
            z[i] = eta[i] + (y[i] - mu) / wi;
        }
        Matrix xtwx = design.transpose() * w.asDiagonal() * design;
        const double scale = std::max(1.0, xtwx.diagonal().maxCoeff());
        for (Eigen::Index j = 1; j < p; ++j) xtwx(j, j) += ridge * scale;
        const Vector rhs = design.transpose() * w.cwiseProduct(z);
        Eigen::LDLT<Matrix> ldlt(xtwx);
        if (ldlt.info() != Eigen::Success) throw TrainingError("spline model: singular weighted normal equations");
        Vector beta_new = ldlt.solve(rhs);
        if (!beta_new.allFinite()) throw TrainingError("spline model: non-finite coefficients");

        Vector eta_new = design * beta_new;
        double dev_new = deviance(eta_new);
        for (int halving = 0; halving < 30 && !(dev_new <= dev + 1e-12 * std::abs(dev)); ++halving) {
            beta_new = 0.5 * (beta_new + beta);
            eta_new = design * beta_new;
            dev_new = deviance(eta_new);
        }
        if (!std::isfinite(dev_new)) throw TrainingError("spline model: non-finite deviance");
        const double change = std::abs(dev_new - dev) / (std::abs(dev_new) + 0.1);
        beta.swap(beta_new);
        eta.swap(eta_new);
        dev = dev_new;
        if (change < tol) break;
    }
    return beta;
}

class SplineAdditiveModel {
public:
    SplineAdditiveModel() = default;

    static SplineAdditiveModel fit(const Matrix& x, std::span<const std::uint8_t> y, const SplineAmParams& params) {
        if (params.df < 1) throw ConfigError("spline model: df must be >= 1");
        SplineAdditiveModel model;
        model.linear_ = params.linear;
        model.scaler_ = Standardizer::fit(x);
        if (model.scaler_.dropped() > 0) {
            log::warn("spline model: dropped " + std::to_string(model.scaler_.dropped()) + " zero-variance feature(s)");
        }
        const Matrix z = model.scaler_.transform(x);
        if (!params.linear) {
            for (Eigen::Index j = 0; j < z.cols(); ++j) {
                const Vector col = z.col(j);
                model.bases_.emplace_back(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())),
                                          params.df);
            }
        }
        Vector target(static_cast<Eigen::Index>(y.size()));
        for (std::size_t i = 0; i < y.size(); ++i) target[static_cast<Eigen::Index>(i)] = y[i] ? 1.0 : 0.0;
        model.beta_ = logistic_irls(model.design(z), target, params.max_iter, params.tol, params.ridge);
        return model;
    }

    /// Predicted positive-class probability for each row.
    Vector predict(const Matrix& x) const {
        if (x.cols() != scaler_.input_dims()) throw DataError("spline model: feature dimension mismatch");
        const Vector eta = design(scaler_.transform(x)) * beta_;
        return eta.unaryExpr([](double t) { return 1.0 / (1.0 + std::exp(-t)); });
    }

    const Vector& coefficients() const noexcept { return beta_; }

private:
    Matrix design(const Matrix& z) const {
        if (linear_) {
            Matrix d(z.rows(), z.cols() + 1);
            d.col(0).setOnes();
            d.rightCols(z.cols()) = z;
            return d;
        }
        Eigen::Index cols = 1;
        for (const auto& b : bases_) cols += b.columns();
        Matrix d(z.rows(), cols);
        d.col(0).setOnes();
        Eigen::Index at = 1;
        for (std::size_t j = 0; j < bases_.size(); ++j) {
            const Vector col = z.col(static_cast<Eigen::Index>(j));
            const int w = bases_[j].columns();
            d.middleCols(at, w) = bases_[j].evaluate(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
            at += w;
        }
        return d;
    }

    Standardizer scaler_;
    std::vector<NaturalSplineBasis> bases_;
    Vector beta_;
    bool linear_ = false;
};

}  // namespace reset
