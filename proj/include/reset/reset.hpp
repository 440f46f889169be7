#pragma once

// The RESET wrapper: split decoys, rescore on the learning view, discard the
// training decoys and filter the pseudo targets by the rescored values.

#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "reset/ensemble.hpp"
#include "reset/filters.hpp"
#include "reset/model.hpp"

namespace reset {

struct ResetConfig {
    double s = 0.5;   ///< probability a decoy joins the training set
    double c0 = 0.5;  ///< bound on a true null's target-win probability
    ControlMode mode = ControlMode::fdr;
    double alpha = 0.1;
    double gamma = 0.1;
    EnsembleConfig ensemble;  ///< its alpha and selection_c are set from this config
    SeedSpec seed;
    bool deterministic_fdpsd = false;
    /// Use c = 1 - s(1 - c0) in the ensemble's internal SeqStep; otherwise c0.
    bool adjust_selection_c = true;

    void validate() const {
        if (!(s >= 0.0 && s < 1.0)) throw ConfigError("s must lie in [0,1)");
        if (!(c0 > 0.0 && c0 < 1.0)) throw ConfigError("c0 must lie in (0,1)");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
        if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0,1)");
    }
};

/// Target-win probability of a true null among the pseudo targets.
inline double adjust_c(double c0, double s) { return c0 / (1.0 - s * (1.0 - c0)); }

/// c of the ensemble's internal SeqStep.
inline double selection_c(double c0, double s) { return 1.0 - s * (1.0 - c0); }

/// Sends each decoy to the training set independently with probability `s`.
inline PseudoLabeling split_decoys(std::span<const Label> labels, double s, Rng& rng) {
    std::vector<bool> training(labels.size(), false);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == kDecoy) training[i] = rng.bernoulli(s);
    }
    return PseudoLabeling::from_training_mask(training);
}

/// The only path from a hypothesis table to the ensemble: W, x and pseudo
/// labels of the nonzero rows plus the side information of the zero rows.
inline LearningView learning_view(const HypothesisTable& nonzero, const PseudoLabeling& pseudo,
                                  const Matrix& zero_side_info = {}) {
    return LearningView(std::vector<double>(nonzero.scores().begin(), nonzero.scores().end()), nonzero.side_info(),
                        pseudo, zero_side_info.rows() > 0 ? zero_side_info : Matrix(0, nonzero.dims()));
}

/// Everything up to the final filter; shared by the FDR and FDP modes.
struct Rescoring {
    std::vector<std::size_t> nonzero;  ///< input rows with W != 0
    PseudoLabeling pseudo;             ///< over the nonzero rows
    EnsembleResult ensemble;           ///< rescored values over the nonzero rows
    HypothesisTable pseudo_targets;    ///< training decoys physically removed
    std::vector<std::size_t> pseudo_target_rows;  ///< input row of each pseudo target
    std::vector<double> rescored;      ///< W-tilde of each pseudo target
    double c = 0.5;                    ///< adjusted c for the final filter
};

inline Rescoring rescore_table(const HypothesisTable& table, const ResetConfig& config) {
    config.validate();
    Rescoring out;
    out.c = adjust_c(config.c0, config.s);

    std::vector<std::size_t> zero;
    for (std::size_t i = 0; i < table.size(); ++i) (table.scores()[i] != 0.0 ? out.nonzero : zero).push_back(i);
    const HypothesisTable nonzero = table.subset(out.nonzero);
    Matrix zero_x(static_cast<Eigen::Index>(zero.size()), table.dims());
    for (std::size_t k = 0; k < zero.size(); ++k) {
        zero_x.row(static_cast<Eigen::Index>(k)) = table.side_info().row(static_cast<Eigen::Index>(zero[k]));
    }

    auto split_rng = config.seed.stream(Stream::decoy_split);
    out.pseudo = split_decoys(nonzero.labels(), config.s, split_rng);

    EnsembleConfig ens = config.ensemble;
    ens.alpha = config.alpha;
    // With s = 0 there is nothing to learn from and the adjusted value degenerates to 1.
    ens.selection_c = config.adjust_selection_c && config.s > 0.0 ? selection_c(config.c0, config.s) : config.c0;
    if (nonzero.size() > 0) {
        out.ensemble = run_ensemble(learning_view(nonzero, out.pseudo, zero_x), ens, config.seed);
    }

    out.pseudo_targets = nonzero.subset(out.pseudo.pseudo_targets);
    for (auto r : out.pseudo.pseudo_targets) {
        out.pseudo_target_rows.push_back(out.nonzero[r]);
        out.rescored.push_back(out.ensemble.rescored[r]);
    }
    return out;
}

/// Ranks by `primary` descending, then by `secondary` descending, with full
/// ties in a uniformly random order from `tie_rng`.
inline std::vector<std::size_t> rank_two_keys(std::span<const double> primary, std::span<const double> secondary,
                                              Rng& tie_rng) {
    std::vector<std::size_t> order(primary.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    tie_rng.shuffle(order);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (primary[a] != primary[b]) return primary[a] > primary[b];
        return secondary[a] > secondary[b];
    });
    return order;
}

struct ResetResult {
    DiscoveryList list;  ///< discoveries as input-table rows; rescored indexed like pseudo_target_rows
    ControlMode mode = ControlMode::fdr;
    double alpha = 0.0;
    double gamma = 0.0;
};

/// Applies SeqStep+ (FDR) or FDP-SD (FDP) at the adjusted c to the pseudo
/// targets ranked by their rescored values (ties broken by the original score).
inline ResetResult finalize(const Rescoring& stage, ControlMode mode, double alpha, double gamma,
                            const SeedSpec& seed, bool deterministic_fdpsd = false) {
    ResetResult result{{}, mode, alpha, gamma};
    result.list.rescored = stage.rescored;
    if (stage.pseudo_target_rows.empty()) return result;

    FilterParams params{alpha, gamma, stage.c, mode};
    params.validate();
    auto tie = seed.stream(Stream::tie_break, {2});
    const RankedLabels ranked(stage.pseudo_targets.labels(),
                              rank_two_keys(stage.rescored, stage.pseudo_targets.scores(), tie));
    DiscoveryList found;
    if (mode == ControlMode::fdr) {
        found = seqstep(ranked, params, true);
    } else {
        auto coin = seed.stream(Stream::coinflip);
        found = fdp_sd(ranked, params, coin, FdpSdOptions{!deterministic_fdpsd});
    }
    result.list.cutoff = found.cutoff;
    for (auto r : found.discoveries) result.list.discoveries.push_back(stage.pseudo_target_rows[r]);
    return result;
}

inline ResetResult run_reset(const HypothesisTable& table, const ResetConfig& config) {
    const auto stage = rescore_table(table, config);
    return finalize(stage, config.mode, config.alpha, config.gamma, config.seed, config.deterministic_fdpsd);
}

// ---------------------------------------------------------------------------
// Bound comparison

struct BoundRow {
    std::size_t index = 0;
    std::int64_t fdpsd = 0;         ///< FDP-SD bound at c_fdpsd
    std::int64_t reset_doubled = 0;  ///< twice the bound at c_reset
    double ratio = std::numeric_limits<double>::quiet_NaN();
};

/// FDP-SD bounds next to doubled RESET bounds at the same indices. RESET
/// keeps only about half of the decoys, so its bound is doubled to compare.
inline std::vector<BoundRow> compare_bounds(double alpha, double gamma, double c_fdpsd, double c_reset,
                                            std::span<const std::size_t> indices) {
    std::size_t m = 0;
    for (auto i : indices) m = std::max(m, i);
    const auto plain = fdp_sd_bounds(m, FilterParams{alpha, gamma, c_fdpsd, ControlMode::fdp});
    const auto reset = fdp_sd_bounds(m, FilterParams{alpha, gamma, c_reset, ControlMode::fdp});
    std::vector<BoundRow> rows;
    for (auto i : indices) {
        BoundRow row;
        row.index = i;
        row.fdpsd = plain.delta[i];
        row.reset_doubled = reset.delta[i] < 0 ? -1 : 2 * reset.delta[i];
        if (row.fdpsd > 0 && row.reset_doubled >= 0) {
            row.ratio = static_cast<double>(row.reset_doubled) / static_cast<double>(row.fdpsd);
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace reset
