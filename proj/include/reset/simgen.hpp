#pragma once

// Simulation generators (geometric p-values, two-group beta mixture,
// target-decoy competition) and a Monte Carlo FDR/FDP/power harness.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "reset/model.hpp"
#include "reset/numerics.hpp"
#include "reset/parallel.hpp"

namespace reset {

struct GroundTruth {
    std::vector<bool> false_null;
    std::vector<double> statistic;  ///< generator-specific draw per hypothesis (z for geometric)

    std::size_t false_nulls() const {
        return static_cast<std::size_t>(std::count(false_null.begin(), false_null.end(), true));
    }
};

struct PValueSimulation {
    PValueTable table;
    GroundTruth truth;
};

struct CompetitionSimulation {
    HypothesisTable table;
    GroundTruth truth;
};

// ---------------------------------------------------------------------------
// Geometric side information on a lattice

enum class GeometricScenario { circle_center, circle_corner, ellipse };

inline GeometricScenario parse_scenario(const std::string& name) {
    if (name == "circle_center" || name == "a") return GeometricScenario::circle_center;
    if (name == "circle_corner" || name == "b") return GeometricScenario::circle_corner;
    if (name == "ellipse" || name == "c") return GeometricScenario::ellipse;
    throw ConfigError("unknown geometric scenario '" + name + "'");
}

inline std::string scenario_name(GeometricScenario s) {
    switch (s) {
        case GeometricScenario::circle_center: return "circle_center";
        case GeometricScenario::circle_corner: return "circle_corner";
        case GeometricScenario::ellipse: return "ellipse";
    }
    return "?";
}

struct GeometricSimSpec {
    GeometricScenario scenario = GeometricScenario::circle_center;
    int grid = 50;
    double lo = -100.0;
    double hi = 100.0;
    double mu = 2.0;
    // Region geometry, per scenario.
    double circle_radius = 30.0;
    double corner_center = 65.0;
    double ellipse_a = 60.0;
    double ellipse_b = 20.0;

    std::size_t m() const { return static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid); }

    bool inside(double x1, double x2) const {
        switch (scenario) {
            case GeometricScenario::circle_center: return x1 * x1 + x2 * x2 <= circle_radius * circle_radius;
            case GeometricScenario::circle_corner: {
                const double u = x1 - corner_center, v = x2 - corner_center;
                return u * u + v * v <= circle_radius * circle_radius;
            }
            case GeometricScenario::ellipse:
                return (x1 / ellipse_a) * (x1 / ellipse_a) + (x2 / ellipse_b) * (x2 / ellipse_b) <= 1.0;
        }
        return false;
    }
};

/// p_i = 1 - Phi(z_i), z_i ~ N(mu_i, 1) with mu_i = mu inside the region.
inline PValueSimulation simulate_geometric(const GeometricSimSpec& spec, Rng& rng) {
    if (spec.grid < 2) throw ConfigError("geometric simulation: grid must be >= 2");
    const std::size_t m = spec.m();
    std::vector<double> p(m);
    Matrix x(static_cast<Eigen::Index>(m), 2);
    GroundTruth truth{std::vector<bool>(m), std::vector<double>(m)};
    const double step = (spec.hi - spec.lo) / (spec.grid - 1);
    std::size_t i = 0;
    for (int a = 0; a < spec.grid; ++a) {
        for (int b = 0; b < spec.grid; ++b, ++i) {
            const double x1 = spec.lo + step * a;
            const double x2 = spec.lo + step * b;
            x(static_cast<Eigen::Index>(i), 0) = x1;
            x(static_cast<Eigen::Index>(i), 1) = x2;
            truth.false_null[i] = spec.inside(x1, x2);
            const double z = rng.normal(truth.false_null[i] ? spec.mu : 0.0, 1.0);
            truth.statistic[i] = z;
            p[i] = numerics::normal_sf(z);
        }
    }
    return {PValueTable(std::move(p), std::move(x)), std::move(truth)};
}

// ---------------------------------------------------------------------------
// Two-group beta mixture

struct BetaMixtureSpec {
    std::size_t m = 2000;
    std::size_t d = 100;
    std::vector<double> theta = {3.0, 3.0};  ///< leading nonzero coefficients; the rest are 0
    std::vector<double> beta = {2.0, 2.0};
    double mean_pi = 0.3;
    int max_bisection = 200;
};

inline double logistic(double t) { return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }

inline double dot_prefix(const Matrix& x, Eigen::Index row, const std::vector<double>& coef) {
    double s = 0.0;
    for (std::size_t j = 0; j < coef.size() && static_cast<Eigen::Index>(j) < x.cols(); ++j) {
        s += x(row, static_cast<Eigen::Index>(j)) * coef[j];
    }
    return s;
}

/// Intercept theta0 with mean_i logistic(theta0 + x_i' theta) = target, by bisection.
inline double solve_intercept(const Matrix& x, const std::vector<double>& theta, double target, int max_iter = 200) {
    if (!(target > 0.0 && target < 1.0)) throw ConfigError("beta mixture: mean_pi must lie in (0,1)");
    std::vector<double> lin(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) lin[static_cast<std::size_t>(i)] = dot_prefix(x, i, theta);
    auto mean_pi = [&](double t0) {
        double s = 0.0;
        for (double v : lin) s += logistic(t0 + v);
        return s / static_cast<double>(lin.size());
    };
    double lo = -50.0, hi = 50.0;
    for (int it = 0; it < max_iter && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mean_pi(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct BetaMixtureDetails {
    double theta0 = 0.0;
    std::vector<double> pi;
    std::vector<double> mu;
};

/// x ~ U[0,1]^d; false null with probability pi(x) = logistic(theta0 + x'theta);
/// false-null p ~ Beta(1/mu(x), 1) with mu(x) = max(x'beta, 1); true-null p ~ U[0,1].
inline PValueSimulation simulate_beta_mixture(const BetaMixtureSpec& spec, Rng& rng,
                                              BetaMixtureDetails* details = nullptr) {
    if (spec.m == 0) throw ConfigError("beta mixture: m must be positive");
    if (spec.theta.size() > spec.d || spec.beta.size() > spec.d) {
        throw ConfigError("beta mixture: more coefficients than side-information columns");
    }
    const auto m = static_cast<Eigen::Index>(spec.m);
    Matrix x(m, static_cast<Eigen::Index>(spec.d));
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.uniform();
    }
    const double theta0 = solve_intercept(x, spec.theta, spec.mean_pi, spec.max_bisection);
    std::vector<double> p(spec.m);
    GroundTruth truth{std::vector<bool>(spec.m), std::vector<double>(spec.m)};
    BetaMixtureDetails local;
    BetaMixtureDetails& det = details ? *details : local;
    det = {theta0, std::vector<double>(spec.m), std::vector<double>(spec.m)};
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto k = static_cast<std::size_t>(i);
        det.pi[k] = logistic(theta0 + dot_prefix(x, i, spec.theta));
        det.mu[k] = std::max(dot_prefix(x, i, spec.beta), 1.0);
        truth.false_null[k] = rng.bernoulli(det.pi[k]);
        const double u = rng.uniform();
        // Beta(1/mu, 1) has CDF p^(1/mu), so p = U^mu.
        p[k] = truth.false_null[k] ? std::pow(u, det.mu[k]) : u;
        truth.statistic[k] = det.mu[k];
    }
    return {PValueTable(std::move(p), std::move(x)), std::move(truth)};
}

// ---------------------------------------------------------------------------
// Target-decoy competition

struct CompetitionSimSpec {
    std::size_t m = 500;
    double false_null_fraction = 0.0;
    double signal = 2.0;             ///< mean shift of a false null's target score
    double null_target_prob = 0.5;   ///< P(L = +1) for a true null
    double side_shift = 2.0;         ///< false-null side information centred at +-(shift, shift)
    std::size_t side_dims = 2;
};

/// Nulls: Z, Z~ i.i.d. N(0,1). False nulls: Z ~ N(signal, 1), Z~ ~ N(0,1).
/// W = max(Z, Z~), L = sign(Z - Z~) with ties split at random. With
/// null_target_prob != 1/2, a true null's label is drawn independently of W
/// at that probability. Side information is N(0, I) for true nulls and
/// N(+-(shift, shift, ...), I) with a random sign for false nulls.
inline CompetitionSimulation simulate_competition(const CompetitionSimSpec& spec, Rng& rng) {
    if (!(spec.false_null_fraction >= 0.0 && spec.false_null_fraction <= 1.0)) {
        throw ConfigError("competition simulation: false_null_fraction must lie in [0,1]");
    }
    if (!(spec.null_target_prob > 0.0 && spec.null_target_prob < 1.0)) {
        throw ConfigError("competition simulation: null_target_prob must lie in (0,1)");
    }
    const std::size_t m = spec.m;
    const auto n_false = static_cast<std::size_t>(std::llround(spec.false_null_fraction * static_cast<double>(m)));
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    std::vector<bool> is_false(m, false);
    for (std::size_t k = 0; k < n_false; ++k) is_false[perm[k]] = true;

    std::vector<Label> labels(m);
    std::vector<double> w(m);
    Matrix x(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(spec.side_dims));
    GroundTruth truth{is_false, std::vector<double>(m)};
    const bool symmetric = spec.null_target_prob == 0.5;
    for (std::size_t i = 0; i < m; ++i) {
        const double z = rng.normal(is_false[i] ? spec.signal : 0.0, 1.0);
        const double zt = rng.normal();
        w[i] = std::max(z, zt);
        if (is_false[i] || symmetric) {
            labels[i] = z > zt ? kTarget : z < zt ? kDecoy : (rng.bernoulli(0.5) ? kTarget : kDecoy);
        } else {
            labels[i] = rng.bernoulli(spec.null_target_prob) ? kTarget : kDecoy;
        }
        truth.statistic[i] = z;
        const double centre = is_false[i] ? (rng.bernoulli(0.5) ? spec.side_shift : -spec.side_shift) : 0.0;
        for (std::size_t j = 0; j < spec.side_dims; ++j) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng.normal(centre, 1.0);
        }
    }
    return {HypothesisTable(std::move(labels), std::move(w), std::move(x)), std::move(truth)};
}

// ---------------------------------------------------------------------------
// Monte Carlo harness

struct RunMetrics {
    double fdp = 0.0;
    double power = 0.0;
};

/// FDP and power of `discoveries` (rows of the ground-truth table).
inline RunMetrics score_discoveries(std::span<const std::size_t> discoveries, const GroundTruth& truth) {
    std::size_t false_disc = 0, true_disc = 0;
    for (auto r : discoveries) (truth.false_null.at(r) ? true_disc : false_disc) += 1;
    RunMetrics out;
    if (!discoveries.empty()) out.fdp = static_cast<double>(false_disc) / static_cast<double>(discoveries.size());
    const auto f = truth.false_nulls();
    if (f > 0) out.power = static_cast<double>(true_disc) / static_cast<double>(f);
    return out;
}

struct MonteCarloReport {
    std::size_t runs = 0;
    double alpha = 0.0;
    double fdr = 0.0;
    double fdr_se = 0.0;
    double p_fdp_exceed = 0.0;
    double p_fdp_exceed_se = 0.0;
    double power = 0.0;
    double power_se = 0.0;
    std::vector<RunMetrics> per_run;
};

inline double standard_error(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

inline MonteCarloReport summarize_runs(std::vector<RunMetrics> runs, double alpha) {
    MonteCarloReport r;
    r.runs = runs.size();
    r.alpha = alpha;
    std::vector<double> fdp, exceed, power;
    for (const auto& m : runs) {
        fdp.push_back(m.fdp);
        exceed.push_back(m.fdp > alpha ? 1.0 : 0.0);
        power.push_back(m.power);
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    r.fdr = mean(fdp);
    r.fdr_se = standard_error(fdp);
    r.p_fdp_exceed = mean(exceed);
    r.p_fdp_exceed_se = standard_error(exceed);
    r.power = mean(power);
    r.power_se = standard_error(power);
    r.per_run = std::move(runs);
    return r;
}

/// Runs `trial(run_index, child_seed)` -> RunMetrics for `runs` replicates
/// (concurrently, one child seed per run) and aggregates in run order.
inline MonteCarloReport monte_carlo_validate(std::size_t runs, const SeedSpec& seed, double alpha,
                                             const std::function<RunMetrics(std::size_t, const SeedSpec&)>& trial,
                                             int threads = 1) {
    if (runs == 0) throw ConfigError("monte carlo: runs must be >= 1");
    std::vector<RunMetrics> results(runs);
    parallel_for(runs, threads, [&](std::size_t i) { results[i] = trial(i, seed.child(i)); });
    return summarize_runs(std::move(results), alpha);
}

}  // namespace reset
