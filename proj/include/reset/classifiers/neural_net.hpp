#pragma once

// Single-hidden-layer logistic network, full-batch BFGS on penalized
// cross-entropy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "reset/classifiers/standardize.hpp"
#include "reset/log.hpp"
#include "reset/model.hpp"

namespace reset {

struct NeuralNetParams {
    int hidden = 5;
    double decay = 0.0;
    int max_iter = 500;
    double grad_tol = 1e-5;
    double rel_tol = 1e-8;
    double init_range = 0.7;
};

/// Minimizes f with BFGS (inverse-Hessian form) and backtracking line search.
/// `fg(x, grad)` returns f(x) and writes its gradient. Returns iterations used.
template <class FG>
int bfgs_minimize(Vector& x, FG&& fg, int max_iter, double grad_tol, double rel_tol) {
    constexpr double step_shrink = 0.2;
    constexpr double accept_tol = 1e-4;
    const Eigen::Index n = x.size();
    Vector g(n), g_new(n), x_new(n), dir(n), s(n), y(n), By(n);
    Matrix B = Matrix::Identity(n, n);
    double f = fg(x, g);
    if (!std::isfinite(f)) throw TrainingError("bfgs: non-finite objective at start");
    bool fresh = true;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        if (g.norm() < grad_tol) break;
        dir.noalias() = -B * g;
        double slope = g.dot(dir);
        if (!(slope < 0.0)) {
            B.setIdentity();
            dir = -g;
            slope = -g.squaredNorm();
            fresh = true;
        }
        double step = 1.0;
        bool accepted = false;
        double f_new = f;
        while (true) {
            x_new = x + step * dir;
            if (x_new == x) break;
            f_new = fg(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= f + accept_tol * step * slope) {
                accepted = true;
                break;
            }
            step *= step_shrink;
        }
        if (!accepted) {
            if (fresh) break;
            B.setIdentity();
            fresh = true;
            continue;
        }
        s = x_new - x;
        y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 0.0) {
            By.noalias() = B * y;
            const double yBy = y.dot(By);
            B.noalias() += ((1.0 + yBy / sy) / sy) * (s * s.transpose());
            B.noalias() -= (By * s.transpose() + s * By.transpose()) / sy;
            fresh = false;
        }
        const double f_old = f;
        x.swap(x_new);
        g.swap(g_new);
        f = f_new;
        if (std::abs(f_old - f) <= rel_tol * (std::abs(f_old) + rel_tol)) {
            ++iter;
            break;
        }
    }
    return iter;
}

class NeuralNet {
public:
    NeuralNet() = default;

    /// Penalized cross-entropy and its gradient for parameter vector `w`.
    /// Layout: the hidden layer as a column-major hidden x (d+1) matrix whose
    /// first column holds the biases, then the output bias and output weights.
    /// `x` is n-by-d, `y` holds 0/1 targets.
    static double objective_and_gradient(const Vector& w, const Matrix& x, const Vector& y, int hidden, double decay,
                                         Vector& grad) {
        Workspace ws;
        return ws.evaluate(w, x, y, hidden, decay, &grad);
    }

    static std::size_t parameter_count(Eigen::Index d, int hidden) {
        return static_cast<std::size_t>(hidden) * static_cast<std::size_t>(d + 1) + static_cast<std::size_t>(hidden) + 1;
    }

    /// Fits on rows of `x` with 0/1 targets `y`.
    static NeuralNet fit(const Matrix& x, std::span<const std::uint8_t> y, const NeuralNetParams& params, Rng& rng) {
        if (params.hidden < 1) throw ConfigError("neural net: hidden units must be >= 1");
        if (params.decay < 0.0) throw ConfigError("neural net: decay must be >= 0");
        NeuralNet net;
        net.hidden_ = params.hidden;
        net.scaler_ = Standardizer::fit(x);
        if (net.scaler_.dropped() > 0) {
            log::warn("neural net: dropped " + std::to_string(net.scaler_.dropped()) + " zero-variance feature(s)");
        }
        const Matrix z = net.scaler_.transform(x);
        Vector target(static_cast<Eigen::Index>(y.size()));
        for (std::size_t i = 0; i < y.size(); ++i) target[static_cast<Eigen::Index>(i)] = y[i] ? 1.0 : 0.0;

        const auto np = static_cast<Eigen::Index>(parameter_count(z.cols(), params.hidden));
        Vector w(np);
        for (Eigen::Index k = 0; k < np; ++k) w[k] = rng.uniform(-params.init_range, params.init_range);

        Workspace ws;
        auto fg = [&](const Vector& p, Vector& g) { return ws.evaluate(p, z, target, params.hidden, params.decay, &g); };
        net.iterations_ = bfgs_minimize(w, fg, params.max_iter, params.grad_tol, params.rel_tol);
        if (!w.allFinite()) throw TrainingError("neural net: non-finite weights");
        net.weights_ = std::move(w);
        return net;
    }

    /// Predicted positive-class probability for each row.
    Vector predict(const Matrix& x) const {
        if (x.cols() != scaler_.input_dims()) throw DataError("neural net: feature dimension mismatch");
        const Matrix z = scaler_.transform(x);
        Workspace ws;
        ws.forward(weights_, z, hidden_);
        return ws.out;
    }

    int iterations() const noexcept { return iterations_; }
    const Vector& weights() const noexcept { return weights_; }

private:
    struct Workspace {
        Matrix h;    // n x hidden activations
        Vector out;  // n output probabilities
        Vector logit;
        Matrix dh;

        static double sigmoid(double v) { return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); }

        void forward(const Vector& w, const Matrix& x, int hidden) {
            const Eigen::Index d = x.cols();
            const Eigen::Index H = hidden;
            Eigen::Map<const Matrix> layer1(w.data(), H, d + 1);
            h.resize(x.rows(), H);
            h.noalias() = x * layer1.rightCols(d).transpose();
            h.rowwise() += layer1.col(0).transpose();
            h = h.unaryExpr([](double v) { return sigmoid(v); });
            const double* o = w.data() + H * (d + 1);
            Eigen::Map<const Vector> v(o + 1, H);
            logit.noalias() = h * v;
            logit.array() += o[0];
            out = logit.unaryExpr([](double t) { return sigmoid(t); });
        }

        double evaluate(const Vector& w, const Matrix& x, const Vector& y, int hidden, double decay, Vector* grad) {
            forward(w, x, hidden);
            const Eigen::Index d = x.cols();
            const Eigen::Index H = hidden;
            // Cross-entropy as softplus(t) - y t, stable for large |t|.
            double loss = 0.0;
            for (Eigen::Index i = 0; i < logit.size(); ++i) {
                const double t = logit[i];
                const double softplus = t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
                loss += softplus - y[i] * t;
            }
            loss += decay * w.squaredNorm();
            if (grad == nullptr) return loss;

            grad->resize(w.size());
            const Vector r = out - y;
            const double* o = w.data() + H * (d + 1);
            Eigen::Map<const Vector> v(o + 1, H);
            double* go = grad->data() + H * (d + 1);
            go[0] = r.sum();
            Eigen::Map<Vector>(go + 1, H).noalias() = h.transpose() * r;

            dh = (r * v.transpose()).cwiseProduct(h.cwiseProduct((1.0 - h.array()).matrix()));
            Eigen::Map<Matrix> g1(grad->data(), H, d + 1);
            g1.col(0) = dh.colwise().sum().transpose();
            g1.rightCols(d).noalias() = dh.transpose() * x;
            *grad += (2.0 * decay) * w;
            return loss;
        }
    };

    Standardizer scaler_;
    Vector weights_;
    int hidden_ = 0;
    int iterations_ = 0;
};

}  // namespace reset
