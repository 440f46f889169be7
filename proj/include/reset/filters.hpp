#pragma once

// Error-controlling selection procedures on ranked labels and on p-values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "reset/model.hpp"
#include "reset/numerics.hpp"

namespace reset {

/// Labels in descending score order with their cumulative decoy/target counts.
class RankedLabels {
public:
    RankedLabels() = default;

    /// `order[r]` is the table row holding rank r (0-based).
    RankedLabels(std::span<const Label> labels, std::vector<std::size_t> order) : order_(std::move(order)) {
        const auto n = order_.size();
        labels_.reserve(n);
        decoys_.assign(n + 1, 0);
        targets_.assign(n + 1, 0);
        for (std::size_t r = 0; r < n; ++r) {
            const Label l = labels[order_[r]];
            labels_.push_back(l);
            decoys_[r + 1] = decoys_[r] + (l == kDecoy ? 1 : 0);
            targets_[r + 1] = targets_[r] + (l == kTarget ? 1 : 0);
        }
    }

    /// Ranks `labels` by `scores` (descending, ties via `tie_rng`).
    static RankedLabels rank(std::span<const Label> labels, std::span<const double> scores, Rng& tie_rng) {
        return RankedLabels(labels, sort_by_score_desc(scores, tie_rng));
    }

    /// Labels already in rank order.
    static RankedLabels presorted(std::span<const Label> labels) {
        std::vector<std::size_t> order(labels.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        return RankedLabels(labels, std::move(order));
    }

    std::size_t size() const noexcept { return labels_.size(); }
    Label label_at(std::size_t rank) const { return labels_[rank]; }
    std::size_t row_at(std::size_t rank) const { return order_[rank]; }

    /// Number of decoy wins among the top k.
    std::int64_t decoys(std::size_t k) const { return decoys_[k]; }
    /// Number of target wins among the top k.
    std::int64_t targets(std::size_t k) const { return targets_[k]; }

    /// Rows of target wins among the top k, in rank order.
    std::vector<std::size_t> targets_in_top(std::size_t k) const {
        std::vector<std::size_t> rows;
        rows.reserve(static_cast<std::size_t>(targets_[k]));
        for (std::size_t r = 0; r < k; ++r) {
            if (labels_[r] == kTarget) rows.push_back(order_[r]);
        }
        return rows;
    }

private:
    std::vector<Label> labels_;
    std::vector<std::size_t> order_;
    std::vector<std::int64_t> decoys_;
    std::vector<std::int64_t> targets_;
};

// ---------------------------------------------------------------------------
// Selective SeqStep / SeqStep+

/// Largest k with (D_k + plus) / max(T_k, 1) * c / (1 - c) <= alpha, or 0.
inline std::size_t seqstep_cutoff(const RankedLabels& ranked, double c, double alpha, bool plus) {
    const double odds = c / (1.0 - c);
    const double offset = plus ? 1.0 : 0.0;
    for (std::size_t k = ranked.size(); k >= 1; --k) {
        const double d = static_cast<double>(ranked.decoys(k));
        const double t = static_cast<double>(std::max<std::int64_t>(ranked.targets(k), 1));
        if ((d + offset) / t * odds <= alpha) return k;
    }
    return 0;
}

inline DiscoveryList seqstep(const RankedLabels& ranked, const FilterParams& params, bool plus) {
    const auto k0 = seqstep_cutoff(ranked, params.c, params.alpha, plus);
    return {ranked.targets_in_top(k0), {}, k0};
}

// ---------------------------------------------------------------------------
// FDP-stepdown

/// Precomputed stepdown bounds delta_i on the number of decoys in the top i.
struct FdpSdBounds {
    double alpha = 0.0;
    double gamma = 0.0;
    double c = 0.0;
    double lambda = 0.0;            ///< decoy-region threshold; equals c here
    double R = 0.0;                 ///< probability a null is a decoy, (1 - lambda) / (c + 1 - lambda)
    std::size_t i0 = 1;             ///< first index at which the bound can be met
    std::vector<std::int64_t> delta;  ///< delta[i] for i = 0..m; -1 marks "no admissible d"

    std::size_t m() const noexcept { return delta.empty() ? 0 : delta.size() - 1; }
};

/// Trial count floor((i - d) * alpha) + 1 + d of the binomial bound at (i, d).
inline std::int64_t fdp_sd_trials(std::int64_t i, std::int64_t d, double alpha) {
    return static_cast<std::int64_t>(std::floor(static_cast<double>(i - d) * alpha)) + 1 + d;
}

/// Decoy probability R for a given target-win probability c.
inline double fdp_sd_decoy_rate(double c) {
    const double lambda = c;
    return (1.0 - lambda) / (c + 1.0 - lambda);
}

/// First testable index max{1, ceil(ceil(log_{1-R}(gamma)) / alpha)}.
inline std::size_t fdp_sd_first_index(double alpha, double gamma, double R) {
    const double k = std::ceil(std::log(gamma) / std::log(1.0 - R));
    return static_cast<std::size_t>(std::max(1.0, std::ceil(k / alpha)));
}

/// delta_i = max{d in 0..i : BinomCDF(d; floor((i-d)alpha)+1+d, R) <= gamma}.
///
/// For fixed i the CDF is non-decreasing in d (more decoys allowed, fewer
/// targets required), and for fixed d it is non-increasing in i, so the
/// admissible set is a prefix of 0..i and delta_i is non-decreasing in i.
/// The scan therefore resumes from delta_{i-1}.
inline FdpSdBounds fdp_sd_bounds(std::size_t m, const FilterParams& params) {
    params.validate();
    FdpSdBounds b;
    b.alpha = params.alpha;
    b.gamma = params.gamma;
    b.c = params.c;
    b.lambda = params.c;
    b.R = fdp_sd_decoy_rate(params.c);
    b.i0 = fdp_sd_first_index(params.alpha, params.gamma, b.R);
    b.delta.assign(m + 1, -1);

    auto admissible = [&](std::int64_t i, std::int64_t d) {
        return numerics::binom_cdf(d, fdp_sd_trials(i, d, params.alpha), b.R) <= params.gamma;
    };
    std::int64_t d = 0;
    for (std::size_t ii = 1; ii <= m; ++ii) {
        const auto i = static_cast<std::int64_t>(ii);
        if (!admissible(i, d)) {
            b.delta[ii] = d == 0 ? -1 : d - 1;
            continue;
        }
        while (d + 1 <= i && admissible(i, d + 1)) ++d;
        b.delta[ii] = d;
    }
    return b;
}

struct FdpSdOptions {
    bool coinflip = true;  ///< randomize delta_bar in {delta, delta + 1}; false gives the plain bounds
};

/// FDP-stepdown walk. Uses `bounds` computed for at least ranked.size() indices.
inline DiscoveryList fdp_sd(const RankedLabels& ranked, const FdpSdBounds& bounds, Rng& coin_rng,
                            FdpSdOptions options = {}) {
    const std::size_t m = ranked.size();
    if (bounds.m() < m) throw ConfigError("fdp_sd: bounds computed for fewer indices than hypotheses");
    const std::size_t i0 = bounds.i0;
    if (m == 0 || i0 > m) return {{}, {}, 0};

    const double alpha = bounds.alpha;
    const double gamma = bounds.gamma;
    const double R = bounds.R;

    std::int64_t delta_prev = -1;
    std::int64_t delta_bar_prev = 0;
    double w_prev = 1.0;
    std::int64_t delta_bar_i0 = -1;

    std::size_t i = i0;
    while (i <= m) {
        const std::int64_t delta = bounds.delta[i];
        if (delta < 0) break;
        std::int64_t delta_bar = delta;
        if (options.coinflip) {
            const auto ii = static_cast<std::int64_t>(i);
            const std::int64_t k0 = static_cast<std::int64_t>(std::floor(static_cast<double>(ii - delta) * alpha)) + 1;
            const std::int64_t k1 =
                static_cast<std::int64_t>(std::floor(static_cast<double>(ii - (delta + 1)) * alpha)) + 1;
            const double p0 = numerics::binom_cdf(delta, k0 + delta, R);
            const double p1 = numerics::binom_cdf(delta + 1, k1 + delta + 1, R);
            const double w = p1 > p0 ? std::clamp((p1 - gamma) / (p1 - p0), 0.0, 1.0) : 1.0;
            if (delta_bar_prev == delta + 1) {
                delta_bar = delta_bar_prev;
            } else {
                double w_prime = w;
                if (delta <= delta_prev) w_prime = w_prev > 0.0 ? w / w_prev : 1.0;
                w_prime = std::clamp(w_prime, 0.0, 1.0);
                delta_bar = coin_rng.uniform() < w_prime ? delta : delta + 1;
            }
            w_prev = w;
        }
        if (i == i0) delta_bar_i0 = delta_bar;
        delta_prev = delta;
        delta_bar_prev = delta_bar;
        if (ranked.decoys(i) <= delta_bar) {
            ++i;
        } else {
            break;
        }
    }
    const bool passed_first = delta_bar_i0 >= 0 && ranked.decoys(i0) <= delta_bar_i0;
    const std::size_t k = passed_first ? i - 1 : 0;
    return {ranked.targets_in_top(k), {}, k};
}

inline DiscoveryList fdp_sd(const RankedLabels& ranked, const FilterParams& params, Rng& coin_rng,
                            FdpSdOptions options = {}) {
    return fdp_sd(ranked, fdp_sd_bounds(ranked.size(), params), coin_rng, options);
}

// ---------------------------------------------------------------------------
// p-value procedures

namespace detail {

inline std::vector<std::size_t> ascending_order(std::span<const double> p, Rng* tie_rng) {
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (tie_rng != nullptr) tie_rng->shuffle(order);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    return order;
}

inline void check_pvalues(std::span<const double> p) {
    for (double v : p) {
        if (!(v >= 0.0 && v <= 1.0)) throw DataError("p-values must lie in [0,1]");
    }
}

}  // namespace detail

/// Guo-Romano stepdown thresholds delta_i = BetaQuantile(floor(alpha i) + 1, m - i + 1)(gamma), i = 1..m.
inline std::vector<double> gr_sd_thresholds(std::size_t m, double alpha, double gamma) {
    std::vector<double> delta(m + 1, 0.0);
    for (std::size_t i = 1; i <= m; ++i) {
        const double k = std::floor(alpha * static_cast<double>(i)) + 1.0;
        delta[i] = numerics::beta_quantile(k, static_cast<double>(m - i + 1), gamma);
    }
    return delta;
}

/// Guo-Romano stepdown: report the k smallest p-values, k the longest prefix with p_(j) <= delta_j.
inline DiscoveryList gr_sd(std::span<const double> pvalues, double alpha, double gamma, Rng* tie_rng = nullptr) {
    detail::check_pvalues(pvalues);
    const auto order = detail::ascending_order(pvalues, tie_rng);
    const auto delta = gr_sd_thresholds(pvalues.size(), alpha, gamma);
    std::size_t k = 0;
    while (k < order.size() && pvalues[order[k]] <= delta[k + 1]) ++k;
    return {std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k)), {}, k};
}

/// Benjamini-Hochberg step-up.
inline DiscoveryList bh(std::span<const double> pvalues, double alpha, Rng* tie_rng = nullptr) {
    detail::check_pvalues(pvalues);
    const auto order = detail::ascending_order(pvalues, tie_rng);
    const double m = static_cast<double>(pvalues.size());
    std::size_t k = 0;
    for (std::size_t i = order.size(); i >= 1; --i) {
        if (pvalues[order[i - 1]] <= static_cast<double>(i) * alpha / m) {
            k = i;
            break;
        }
    }
    return {std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k)), {}, k};
}

}  // namespace reset
