#pragma once

// Converts p-values into (label, winning score) pairs using a target region
// [0, a) and a mirrored decoy region (b1, b2].

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "reset/model.hpp"
#include "reset/numerics.hpp"

namespace reset {

struct ConversionRegions {
    double a = 0.5;
    double b1 = 0.5;
    double b2 = 1.0;

    void validate() const {
        if (!(a > 0.0 && a <= b1 && b1 < b2 && b2 <= 1.0)) {
            throw ConfigError("conversion regions must satisfy 0 < a <= b1 < b2 <= 1");
        }
    }

    bool in_target(double p) const { return p >= 0.0 && p < a; }
    bool in_decoy(double p) const { return p > b1 && p <= b2; }
};

/// A converted table plus, for each of its rows, the row of the source table.
struct ConvertedTable {
    HypothesisTable table;
    std::vector<std::size_t> kept;
};

/// Probability bound c0 that a true null (with non-decreasing density) lands
/// in the target region given that it is kept.
inline double null_win_prob(const ConversionRegions& regions) {
    regions.validate();
    return regions.a / (regions.a + regions.b2 - regions.b1);
}

/// Replaces non-finite scores with the largest finite score.
inline std::vector<double> replace_infinite_scores(std::vector<double> scores) {
    double max_finite = -std::numeric_limits<double>::infinity();
    bool any_finite = false;
    for (double w : scores) {
        if (std::isfinite(w)) {
            max_finite = any_finite ? std::max(max_finite, w) : w;
            any_finite = true;
        }
    }
    if (!any_finite && !scores.empty()) {
        throw DataError("all scores are non-finite; cannot replace infinities");
    }
    for (double& w : scores) {
        if (!std::isfinite(w)) w = max_finite;
    }
    return scores;
}

/// Winning score of a single p-value, or NaN when it falls outside both regions.
inline double converted_score(double p, const ConversionRegions& regions) {
    if (regions.in_target(p)) return std::abs(numerics::normal_quantile(p));
    if (regions.in_decoy(p)) {
        const double mirrored = (regions.b2 - p) * regions.a / (regions.b2 - regions.b1);
        return std::abs(numerics::normal_quantile(std::clamp(mirrored, 0.0, 1.0)));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

inline ConvertedTable convert_pvalues(const PValueTable& pt, const ConversionRegions& regions = {}) {
    regions.validate();
    std::vector<Label> labels;
    std::vector<double> scores;
    std::vector<std::size_t> kept;
    const auto p = pt.pvalues();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (regions.in_target(p[i])) {
            labels.push_back(kTarget);
        } else if (regions.in_decoy(p[i])) {
            labels.push_back(kDecoy);
        } else {
            continue;
        }
        scores.push_back(converted_score(p[i], regions));
        kept.push_back(i);
    }
    scores = replace_infinite_scores(std::move(scores));

    Matrix x(static_cast<Eigen::Index>(kept.size()), pt.side_info().cols());
    std::vector<std::string> ids;
    ids.reserve(kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) {
        x.row(static_cast<Eigen::Index>(k)) = pt.side_info().row(static_cast<Eigen::Index>(kept[k]));
        ids.push_back(pt.ids()[kept[k]]);
    }
    return {HypothesisTable(std::move(labels), std::move(scores), std::move(x), std::move(ids)), std::move(kept)};
}

}  // namespace reset
