#pragma once

// Semi-supervised ensemble rescoring: side-information heuristics, K-fold x r
// model evaluation on pseudo labels, model selection, and a second pass on a
// refined positive set.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reset/classifiers.hpp"
#include "reset/classifiers/natural_spline.hpp"
#include "reset/filters.hpp"
#include "reset/log.hpp"
#include "reset/model.hpp"
#include "reset/numerics.hpp"
#include "reset/parallel.hpp"

namespace reset {

struct EnsembleConfig {
    int folds = 3;
    int repetitions = 10;
    double alpha = 0.1;   ///< level of the internal pseudo-discovery counts
    double alpha0 = 0.5;  ///< level defining the initial positive set
    double alpha_step = 0.01;
    std::size_t min_positive = 50;
    std::size_t knn = 20;
    double sideinfo_p_cutoff = 0.01;
    int sideinfo_df = 5;
    std::vector<ClassifierSpec> grid = default_classifier_grid();
    double selection_c = 0.5;  ///< c used by the internal SeqStep
    int threads = 0;           ///< 0 means hardware concurrency

    void validate() const {
        if (folds < 2) throw ConfigError("ensemble: folds must be >= 2");
        if (repetitions < 1) throw ConfigError("ensemble: repetitions must be >= 1");
        if (min_positive < 1) throw ConfigError("ensemble: min_positive must be >= 1");
        if (!(alpha0 > 0.0 && alpha0 <= 1.0)) throw ConfigError("ensemble: alpha0 must lie in (0,1]");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("ensemble: alpha must lie in (0,1)");
        if (!(alpha_step > 0.0)) throw ConfigError("ensemble: alpha_step must be positive");
        if (!(selection_c > 0.0 && selection_c < 1.0)) throw ConfigError("ensemble: selection_c must lie in (0,1)");
        if (grid.empty()) throw ConfigError("ensemble: empty classifier grid");
        for (const auto& spec : grid) spec.validate();
    }
};

/// Training-decoy split: pseudo label -1 on the training decoys I, +1 on the
/// pseudo targets J.
struct PseudoLabeling {
    std::vector<Label> labels;
    std::vector<std::size_t> training;
    std::vector<std::size_t> pseudo_targets;

    static PseudoLabeling from_training_mask(const std::vector<bool>& is_training) {
        PseudoLabeling p;
        p.labels.resize(is_training.size());
        for (std::size_t i = 0; i < is_training.size(); ++i) {
            p.labels[i] = is_training[i] ? kDecoy : kTarget;
            (is_training[i] ? p.training : p.pseudo_targets).push_back(i);
        }
        return p;
    }
};

/// Everything the ensemble may see: scores, side information, pseudo labels
/// and the side information of removed zero-score hypotheses. The original
/// competition labels are deliberately not part of this type.
class LearningView {
public:
    LearningView(std::vector<double> scores, Matrix side_info, PseudoLabeling pseudo, Matrix zero_side_info = {})
        : scores_(std::move(scores)),
          side_info_(std::move(side_info)),
          pseudo_(std::move(pseudo)),
          zero_side_info_(std::move(zero_side_info)) {
        if (side_info_.rows() != static_cast<Eigen::Index>(scores_.size()) || pseudo_.labels.size() != scores_.size()) {
            throw DataError("learning view: row counts differ");
        }
        if (zero_side_info_.rows() > 0 && zero_side_info_.cols() != side_info_.cols()) {
            throw DataError("learning view: zero-score side information has the wrong width");
        }
    }

    std::size_t size() const noexcept { return scores_.size(); }
    std::span<const double> scores() const noexcept { return scores_; }
    const Matrix& side_info() const noexcept { return side_info_; }
    std::span<const Label> pseudo_labels() const noexcept { return pseudo_.labels; }
    const PseudoLabeling& pseudo() const noexcept { return pseudo_; }
    const Matrix& zero_side_info() const noexcept { return zero_side_info_; }

private:
    std::vector<double> scores_;
    Matrix side_info_;
    PseudoLabeling pseudo_;
    Matrix zero_side_info_;
};

// ---------------------------------------------------------------------------
// Heuristic I: zero-score neighbourhood counts

/// For each row of `x`, the number of rows flagged in `is_zero` among its `k`
/// nearest other rows (Euclidean; ties by row index).
inline std::vector<double> knn_zero_counts(const Matrix& x, const std::vector<bool>& is_zero, std::size_t k,
                                           int threads = 1) {
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<double> out(n, 0.0);
    if (std::none_of(is_zero.begin(), is_zero.end(), [](bool z) { return z; })) return out;
    const std::size_t kk = std::min(k, n > 0 ? n - 1 : 0);
    if (kk == 0) return out;
    constexpr std::size_t block = 64;
    parallel_for((n + block - 1) / block, threads, [&](std::size_t b) {
        std::vector<std::pair<double, std::size_t>> dist(n);
        for (std::size_t i = b * block; i < std::min(n, (b + 1) * block); ++i) {
            const auto ri = static_cast<Eigen::Index>(i);
            for (std::size_t j = 0; j < n; ++j) {
                const auto rj = static_cast<Eigen::Index>(j);
                dist[j] = {(x.row(ri) - x.row(rj)).squaredNorm(), j};
            }
            dist[i].first = std::numeric_limits<double>::infinity();
            std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk - 1), dist.end());
            int count = 0;
            for (std::size_t r = 0; r < kk; ++r) count += is_zero[dist[r].second] ? 1 : 0;
            out[i] = count;
        }
    });
    return out;
}

/// Zero-score neighbour counts for the nonzero rows `x`, with neighbours
/// searched among the rows of `x` and `zero_x` together.
inline std::vector<double> knn_zero_feature(const Matrix& x, const Matrix& zero_x, std::size_t k, int threads = 1) {
    if (zero_x.rows() == 0) return std::vector<double>(static_cast<std::size_t>(x.rows()), 0.0);
    Matrix all(x.rows() + zero_x.rows(), x.cols());
    all << x, zero_x;
    std::vector<bool> is_zero(static_cast<std::size_t>(all.rows()), false);
    std::fill(is_zero.begin() + x.rows(), is_zero.end(), true);
    auto counts = knn_zero_counts(all, is_zero, k, threads);
    counts.resize(static_cast<std::size_t>(x.rows()));
    return counts;
}

// ---------------------------------------------------------------------------
// Heuristic II: side-information screening

struct ColumnTest {
    double p_value = 1.0;
    bool spline = true;  ///< false when the linear fallback was used
};

/// F-test p-value of `y` regressed on a natural spline of `x` (with intercept)
/// against the intercept-only model; falls back to a straight line when the
/// spline design is rank deficient or leaves no residual degrees of freedom.
inline ColumnTest column_association(std::span<const double> x, const Vector& y, int df) {
    const auto n = static_cast<Eigen::Index>(x.size());
    const double ybar = y.mean();
    const double rss0 = (y.array() - ybar).square().sum();
    auto test = [&](const Matrix& basis) -> std::optional<double> {
        Matrix design(n, basis.cols() + 1);
        design.col(0).setOnes();
        design.rightCols(basis.cols()) = basis;
        Eigen::ColPivHouseholderQR<Matrix> qr(design);
        const auto rank = qr.rank();
        if (rank < design.cols() || n - rank < 1) return std::nullopt;
        const Vector beta = qr.solve(y);
        const double rss1 = (y - design * beta).squaredNorm();
        const double df1 = static_cast<double>(rank - 1);
        const double df2 = static_cast<double>(n - rank);
        if (df1 <= 0.0) return 1.0;
        if (rss1 <= 0.0) return rss0 > 0.0 ? 0.0 : 1.0;
        const double f = ((rss0 - rss1) / df1) / (rss1 / df2);
        return numerics::f_sf(f, df1, df2);
    };
    if (!(rss0 > 0.0)) return {1.0, true};
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    if (x.empty() || *mn == *mx) return {1.0, true};

    const NaturalSplineBasis basis(x, df);
    if (basis.columns() >= 1) {
        if (auto p = test(basis.evaluate(x))) return {*p, true};
    }
    Matrix linear(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) linear(i, 0) = x[static_cast<std::size_t>(i)];
    if (auto p = test(linear)) return {*p, false};
    return {1.0, false};
}

struct SideInfoSelection {
    std::vector<Eigen::Index> retained;
    std::vector<ColumnTest> tests;
};

/// Screens each column of `x` against `response` and keeps those with p < cutoff.
inline SideInfoSelection select_side_info(const Matrix& x, const Vector& response, double cutoff, int df = 5) {
    SideInfoSelection sel;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const Vector col = x.col(j);
        sel.tests.push_back(column_association(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())),
                                               response, df));
        if (sel.tests.back().p_value < cutoff) sel.retained.push_back(j);
    }
    return sel;
}

/// Screening on a learning view: response W * pseudo label, with removed
/// zero-score hypotheses (rows of `x_zero`) included at response 0.
inline SideInfoSelection select_side_info(const LearningView& view, const Matrix& x_nonzero, const Matrix& x_zero,
                                          double cutoff, int df = 5) {
    const auto n = static_cast<Eigen::Index>(view.size());
    Matrix x(n + x_zero.rows(), x_nonzero.cols());
    if (x_zero.rows() > 0) {
        x << x_nonzero, x_zero;
    } else {
        x = x_nonzero;
    }
    Vector response = Vector::Zero(x.rows());
    for (Eigen::Index i = 0; i < n; ++i) {
        response[i] = view.scores()[static_cast<std::size_t>(i)] * view.pseudo_labels()[static_cast<std::size_t>(i)];
    }
    return select_side_info(x, response, cutoff, df);
}

// ---------------------------------------------------------------------------
// Positive sets

struct PositiveSet {
    std::vector<std::size_t> rows;  ///< pseudo targets, in rank order
    double alpha = 0.0;             ///< level at which the set was read off
    std::size_t filled = 0;         ///< members added after the level reached 1
};

/// Pseudo targets discovered by SeqStep (no +1) at `start`, raising the level
/// in `step` increments (capped at 1) until at least min(min_size, |J|) are
/// found; any remaining shortfall is filled with the next pseudo targets in
/// rank order.
inline PositiveSet escalate_positive_set(const RankedLabels& ranked, double c, double start, double step,
                                         std::size_t min_size) {
    std::size_t total = static_cast<std::size_t>(ranked.targets(ranked.size()));
    const std::size_t need = std::min(min_size, total);
    PositiveSet out;
    std::size_t k = 0;
    for (std::int64_t j = 0;; ++j) {
        out.alpha = std::min(1.0, start + static_cast<double>(j) * step);
        k = seqstep_cutoff(ranked, c, out.alpha, false);
        if (static_cast<std::size_t>(ranked.targets(k)) >= need || out.alpha >= 1.0) break;
    }
    out.rows = ranked.targets_in_top(k);
    for (std::size_t r = k; r < ranked.size() && out.rows.size() < need; ++r) {
        if (ranked.label_at(r) == kTarget) {
            out.rows.push_back(ranked.row_at(r));
            ++out.filled;
        }
    }
    return out;
}

struct InitialPositiveSet {
    PositiveSet set;
    std::size_t ordering = 0;             ///< index into the candidate orderings
    std::vector<std::size_t> discoveries;  ///< pseudo-discoveries per candidate ordering
};

/// Candidate orderings: W descending, then each retained column descending
/// and ascending. Picks the ordering with the most pseudo-discoveries at
/// `config.alpha` (first wins ties) and reads the positive set off it.
inline InitialPositiveSet initial_positive_set(const LearningView& view, const Matrix& retained_columns,
                                               const EnsembleConfig& config, const SeedSpec& seed) {
    std::vector<std::vector<double>> keys;
    keys.emplace_back(view.scores().begin(), view.scores().end());
    for (Eigen::Index j = 0; j < retained_columns.cols(); ++j) {
        std::vector<double> up(static_cast<std::size_t>(retained_columns.rows()));
        std::vector<double> down(up.size());
        for (std::size_t i = 0; i < up.size(); ++i) {
            up[i] = retained_columns(static_cast<Eigen::Index>(i), j);
            down[i] = -up[i];
        }
        keys.push_back(std::move(up));
        keys.push_back(std::move(down));
    }
    InitialPositiveSet out;
    std::vector<RankedLabels> rankings;
    for (std::size_t o = 0; o < keys.size(); ++o) {
        auto tie = seed.stream(Stream::tie_break, {1, 0, o});
        rankings.push_back(RankedLabels::rank(view.pseudo_labels(), keys[o], tie));
        const auto k = seqstep_cutoff(rankings.back(), config.selection_c, config.alpha, false);
        out.discoveries.push_back(static_cast<std::size_t>(rankings.back().targets(k)));
        if (out.discoveries.back() > out.discoveries[out.ordering]) out.ordering = o;
    }
    out.set = escalate_positive_set(rankings[out.ordering], config.selection_c, config.alpha0, config.alpha_step,
                                    config.min_positive);
    return out;
}

// ---------------------------------------------------------------------------
// Model evaluation and rescoring

struct ModelEvaluation {
    std::vector<std::int64_t> counts;  ///< summed pseudo-discoveries per grid entry
    std::vector<Matrix> scores;        ///< per grid entry: n x r out-of-fold decision values
    std::vector<std::size_t> failures;  ///< folds that could not be trained, per grid entry

    std::size_t winner() const {
        std::size_t best = 0;
        for (std::size_t g = 1; g < counts.size(); ++g) {
            if (counts[g] > counts[best]) best = g;
        }
        return best;
    }
};

/// Fold label of every row for repetition `rep`: a random permutation dealt
/// round-robin, so fold sizes differ by at most one.
inline std::vector<int> assign_folds(std::size_t n, int folds, Rng& rng) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    std::vector<int> fold(n);
    for (std::size_t i = 0; i < n; ++i) fold[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
    return fold;
}

/// Trains every grid entry on every (repetition, fold) split and counts the
/// pseudo-discoveries SeqStep (no +1) makes on each held-out fold.
inline ModelEvaluation evaluate_models(const LearningView& view, const Matrix& features,
                                       std::span<const std::size_t> positive, const EnsembleConfig& config,
                                       const SeedSpec& seed, std::uint64_t pass = 0) {
    config.validate();
    const std::size_t n = view.size();
    const auto G = config.grid.size();
    const auto R = static_cast<std::size_t>(config.repetitions);
    const auto K = static_cast<std::size_t>(config.folds);
    const auto labels = view.pseudo_labels();

    std::vector<std::vector<int>> folds(R);
    for (std::size_t r = 0; r < R; ++r) {
        auto rng = seed.stream(Stream::fold_assignment, {pass, r});
        folds[r] = assign_folds(n, config.folds, rng);
    }
    std::vector<bool> in_positive(n, false);
    for (auto i : positive) in_positive[i] = true;

    ModelEvaluation eval;
    eval.counts.assign(G, 0);
    eval.failures.assign(G, 0);
    eval.scores.assign(G, Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(R)));
    std::vector<std::int64_t> task_counts(G * R * K, 0);
    std::vector<std::uint8_t> task_failed(G * R * K, 0);

    parallel_for(G * R * K, config.threads, [&](std::size_t task) {
        const std::size_t g = task / (R * K);
        const std::size_t r = (task / K) % R;
        const std::size_t k = task % K;
        const auto& fold = folds[r];
        std::vector<std::size_t> train_rows, test_rows;
        for (std::size_t i = 0; i < n; ++i) {
            if (fold[i] == static_cast<int>(k)) {
                test_rows.push_back(i);
            } else if (in_positive[i] || labels[i] == kDecoy) {
                train_rows.push_back(i);
            }
        }
        Matrix x_train(static_cast<Eigen::Index>(train_rows.size()), features.cols());
        std::vector<Label> y_train(train_rows.size());
        for (std::size_t t = 0; t < train_rows.size(); ++t) {
            x_train.row(static_cast<Eigen::Index>(t)) = features.row(static_cast<Eigen::Index>(train_rows[t]));
            y_train[t] = in_positive[train_rows[t]] ? kTarget : kDecoy;
        }
        Matrix x_test(static_cast<Eigen::Index>(test_rows.size()), features.cols());
        for (std::size_t t = 0; t < test_rows.size(); ++t) {
            x_test.row(static_cast<Eigen::Index>(t)) = features.row(static_cast<Eigen::Index>(test_rows[t]));
        }

        const auto& spec = config.grid[g];
        auto init = seed.stream(Stream::classifier_init, {pass, g, r, k});
        Vector s;
        try {
            try {
                s = train(spec, x_train, y_train, init).score(x_test);
            } catch (const TrainingError& e) {
                if (spec.kind != ClassifierKind::spline_am) throw;
                log::warn(std::string("spline model failed (") + e.what() + "); using a random forest for this fold");
                auto fallback = seed.stream(Stream::classifier_init, {pass, g, r, k, 1});
                s = train(ClassifierSpec::forest(spec.rf_trees), x_train, y_train, fallback).score(x_test);
            }
        } catch (const TrainingError& e) {
            log::warn(spec.name() + " failed on a fold (" + e.what() + "); counting 0 discoveries");
            task_failed[task] = 1;
            s = Vector::Zero(static_cast<Eigen::Index>(test_rows.size()));
        }

        std::vector<Label> fold_labels(test_rows.size());
        std::vector<double> fold_scores(test_rows.size());
        for (std::size_t t = 0; t < test_rows.size(); ++t) {
            fold_labels[t] = labels[test_rows[t]];
            fold_scores[t] = s[static_cast<Eigen::Index>(t)];
            eval.scores[g](static_cast<Eigen::Index>(test_rows[t]), static_cast<Eigen::Index>(r)) = fold_scores[t];
        }
        if (!task_failed[task]) {
            auto tie = seed.stream(Stream::tie_break, {1, pass + 1, g, r, k});
            const auto ranked = RankedLabels::rank(fold_labels, fold_scores, tie);
            task_counts[task] = ranked.targets(seqstep_cutoff(ranked, config.selection_c, config.alpha, false));
        }
    });

    for (std::size_t task = 0; task < task_counts.size(); ++task) {
        eval.counts[task / (R * K)] += task_counts[task];
        eval.failures[task / (R * K)] += task_failed[task];
    }
    return eval;
}

/// Average of the stored out-of-fold decision values of grid entry `model`.
inline std::vector<double> rescore(const ModelEvaluation& eval, std::size_t model) {
    const Matrix& s = eval.scores.at(model);
    std::vector<double> out(static_cast<std::size_t>(s.rows()));
    for (Eigen::Index i = 0; i < s.rows(); ++i) out[static_cast<std::size_t>(i)] = s.row(i).mean();
    return out;
}

// ---------------------------------------------------------------------------
// Full engine

struct EnsemblePass {
    std::vector<std::int64_t> counts;
    std::size_t winner = 0;
    std::size_t positive_size = 0;
    double positive_alpha = 0.0;
};

struct EnsembleResult {
    std::vector<double> rescored;          ///< final W-tilde per view row
    std::vector<Eigen::Index> retained;    ///< side-information columns kept by the screening
    bool knn_feature = false;              ///< zero-score neighbour counts appended as a feature
    std::size_t ordering = 0;              ///< heuristic ordering chosen for the first positive set
    std::vector<EnsemblePass> passes;
    std::string skipped;                   ///< non-empty when rescoring was not possible
};

/// Runs the two-pass engine and returns the rescored values.
inline EnsembleResult run_ensemble(const LearningView& view, const EnsembleConfig& config, const SeedSpec& seed) {
    config.validate();
    EnsembleResult result;
    const std::size_t n = view.size();
    const auto& pseudo = view.pseudo();
    if (pseudo.training.empty() || pseudo.pseudo_targets.empty()) {
        result.skipped = pseudo.training.empty() ? "no training decoys" : "no pseudo targets";
        log::warn("rescoring skipped: " + result.skipped + "; using the original scores");
        result.rescored.assign(view.scores().begin(), view.scores().end());
        return result;
    }

    // Heuristic II on the user-provided columns.
    const auto selection = select_side_info(view, view.side_info(), view.zero_side_info(), config.sideinfo_p_cutoff,
                                            config.sideinfo_df);
    result.retained = selection.retained;
    Matrix retained(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(result.retained.size()));
    for (std::size_t j = 0; j < result.retained.size(); ++j) {
        retained.col(static_cast<Eigen::Index>(j)) = view.side_info().col(result.retained[j]);
    }

    // Heuristic I: appended whenever zero-score hypotheses were removed.
    if (view.zero_side_info().rows() > 0 && view.side_info().cols() > 0) {
        const auto counts = knn_zero_feature(view.side_info(), view.zero_side_info(), config.knn, config.threads);
        retained.conservativeResize(Eigen::NoChange, retained.cols() + 1);
        for (std::size_t i = 0; i < n; ++i) retained(static_cast<Eigen::Index>(i), retained.cols() - 1) = counts[i];
        result.knn_feature = true;
    }

    Matrix features(static_cast<Eigen::Index>(n), retained.cols() + 1);
    for (std::size_t i = 0; i < n; ++i) features(static_cast<Eigen::Index>(i), 0) = view.scores()[i];
    features.rightCols(retained.cols()) = retained;

    // Heuristic III and the first pass.
    const auto initial = initial_positive_set(view, retained, config, seed);
    result.ordering = initial.ordering;
    auto eval = evaluate_models(view, features, initial.set.rows, config, seed, 0);
    EnsemblePass first{eval.counts, eval.winner(), initial.set.rows.size(), initial.set.alpha};
    auto rescored = rescore(eval, first.winner);
    result.passes.push_back(first);

    // Refined positive set from the first-pass scores, then the second pass.
    auto tie = seed.stream(Stream::tie_break, {1, 0, 1000});
    const auto ranked = RankedLabels::rank(view.pseudo_labels(), rescored, tie);
    const auto refined = escalate_positive_set(ranked, config.selection_c, config.alpha, config.alpha_step,
                                               config.min_positive);
    eval = evaluate_models(view, features, refined.rows, config, seed, 1);
    EnsemblePass second{eval.counts, eval.winner(), refined.rows.size(), refined.alpha};
    result.rescored = rescore(eval, second.winner);
    result.passes.push_back(second);
    return result;
}

}  // namespace reset
