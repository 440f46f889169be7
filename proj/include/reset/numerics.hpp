#pragma once

// Special functions used by the filters: binomial CDF, Beta quantile,
// standard normal CDF/quantile, and F-test tail probabilities.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/beta.hpp>

#include "reset/model.hpp"

namespace reset::numerics {

struct NumericTolerances {
    double quantile_abs_tol = 1e-12;
    double cdf_rel_tol = 1e-14;
};

inline constexpr NumericTolerances kDefaultTolerances{};

namespace detail {

// Safeguarded Newton iteration for a root of an increasing function on a
// bracket [lo, hi] with f(lo) <= q <= f(hi). Falls back to bisection whenever
// the Newton step leaves the bracket or the derivative vanishes. Stops once
// the step is below tol relative to |x| (absolute below |x| = 1).
template <class F, class Deriv>
double invert_cdf(F f, Deriv deriv, double q, double lo, double hi, double tol) {
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 400; ++iter) {
        const double r = f(x) - q;
        if (r == 0.0) return x;
        if (r < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        const double d = deriv(x);
        double next = (d > 0.0 && std::isfinite(d) && std::isfinite(r)) ? x - r / d : lo - 1.0;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double scale = std::min(1.0, std::abs(next));
        if (std::abs(next - x) <= tol * scale || hi - lo <= tol * scale) return next;
        x = next;
    }
    return x;
}

}  // namespace detail

/// P(X <= d) for X ~ Binomial(n, p), via the regularized incomplete beta.
inline double binom_cdf(std::int64_t d, std::int64_t n, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("binom_cdf: p outside [0,1]");
    if (n < 0) throw ConfigError("binom_cdf: negative trial count");
    if (d < 0) return 0.0;
    if (d >= n) return 1.0;
    if (p == 0.0) return 1.0;
    if (p == 1.0) return 0.0;
    // P(X <= d) = 1 - I_p(d + 1, n - d)
    return boost::math::ibetac(static_cast<double>(d + 1), static_cast<double>(n - d), p);
}

/// Regularized incomplete beta I_x(a, b), i.e. the Beta(a, b) CDF.
inline double beta_cdf(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return boost::math::ibeta(a, b, x);
}

inline double beta_pdf(double a, double b, double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return boost::math::ibeta_derivative(a, b, x);
}

/// x with BetaCDF(a, b)(x) = q.
inline double beta_quantile(double a, double b, double q, const NumericTolerances& tol = kDefaultTolerances) {
    if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("beta_quantile: shape parameters must be positive");
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("beta_quantile: q must lie in (0,1)");
    return detail::invert_cdf([&](double x) { return beta_cdf(a, b, x); },
                              [&](double x) { return beta_pdf(a, b, x); }, q, 0.0, 1.0, tol.quantile_abs_tol);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Upper tail 1 - Phi(x), accurate for large x.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
    constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343818684758586311649;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Phi^{-1}(q). Returns -inf / +inf for q = 0 / q = 1.
inline double normal_quantile(double q, const NumericTolerances& tol = kDefaultTolerances) {
    if (q == 0.0) return -std::numeric_limits<double>::infinity();
    if (q == 1.0) return std::numeric_limits<double>::infinity();
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("normal_quantile: q outside [0,1]");
    if (q > 0.5) return -normal_quantile(1.0 - q, tol);
    if (q == 0.5) return 0.0;
    // Lower half, solved on log Phi (concave, so Newton converges without
    // overshoot and deep tails keep full relative accuracy). The root lies in
    // [-39, 0]; Phi underflows below about -38.5.
    auto log_cdf = [](double x) { return std::log(normal_cdf(x)); };
    auto dlog_cdf = [](double x) { return normal_pdf(x) / normal_cdf(x); };
    return detail::invert_cdf(log_cdf, dlog_cdf, std::log(q), -39.0, 0.0, tol.quantile_abs_tol);
}

/// P(F > f) for F ~ F(df1, df2).
inline double f_sf(double f, double df1, double df2) {
    if (!(f > 0.0)) return 1.0;
    if (!std::isfinite(f)) return 0.0;
    const double x = df2 / (df2 + df1 * f);
    return boost::math::ibeta(0.5 * df2, 0.5 * df1, x);
}

}  // namespace reset::numerics
