#pragma once

// Random forest of Gini classification trees with plain bagging.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "reset/model.hpp"

namespace reset {

struct ForestParams {
    int trees = 500;
    int mtry = 0;  ///< features tried per split; 0 means ceil(sqrt(d))
    double min_node_size = 1.0;
};

class RandomForest {
public:
    /// Internal nodes send rows with x[feature] <= value left (to `left`) and
    /// the rest to `left + 1`; leaves have feature -1 and hold the positive
    /// fraction in `value`. A split between observed values u < v stores u or
    /// the double just below v with equal probability, so points in the gap go
    /// either way and the tree depends only on the order of each feature.
    struct Node {
        std::int32_t feature = -1;
        std::int32_t left = -1;
        double value = 0.0;
    };
    using Tree = std::vector<Node>;

    RandomForest() = default;

    /// Fits on rows of `x` with 0/1 targets `y`.
    static RandomForest fit(const Matrix& x, std::span<const std::uint8_t> y, const ForestParams& params, Rng& rng) {
        RandomForest forest;
        forest.dims_ = x.cols();
        const auto n = static_cast<std::size_t>(x.rows());
        if (n == 0) throw TrainingError("random forest: empty training set");
        const int d = static_cast<int>(x.cols());
        int mtry = params.mtry > 0 ? params.mtry : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
        mtry = std::clamp(mtry, std::min(d, 1), d);

        // Global per-feature order; each tree filters it by its bootstrap sample.
        std::vector<std::vector<std::uint32_t>> presorted(static_cast<std::size_t>(d));
        for (int f = 0; f < d; ++f) {
            auto& ord = presorted[static_cast<std::size_t>(f)];
            ord.resize(n);
            std::iota(ord.begin(), ord.end(), 0U);
            std::stable_sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
        }

        Builder builder{x, y, presorted, mtry, params.min_node_size, rng};
        forest.trees_.reserve(static_cast<std::size_t>(params.trees));
        for (int t = 0; t < params.trees; ++t) forest.trees_.push_back(builder.grow());
        return forest;
    }

    /// Mean leaf positive fraction over trees, in [0, 1].
    Vector predict(const Matrix& x) const {
        if (x.cols() != dims_) throw DataError("random forest: feature dimension mismatch");
        Vector out = Vector::Zero(x.rows());
        for (const auto& tree : trees_) {
            const Node* nodes = tree.data();
            for (Eigen::Index r = 0; r < x.rows(); ++r) {
                const Node* node = nodes;
                while (node->feature >= 0) node = nodes + node->left + (x(r, node->feature) <= node->value ? 0 : 1);
                out[r] += node->value;
            }
        }
        if (!trees_.empty()) out /= static_cast<double>(trees_.size());
        return out;
    }

    std::size_t tree_count() const noexcept { return trees_.size(); }
    Eigen::Index dims() const noexcept { return dims_; }

private:
    struct Builder {
        const Matrix& x;
        std::span<const std::uint8_t> y;
        const std::vector<std::vector<std::uint32_t>>& presorted;
        int mtry;
        double min_node_size;
        Rng& rng;

        struct Entry {
            double value;
            double weight;  // bootstrap multiplicity
            double pos;     // weight if positive, else 0
            std::uint32_t row;
        };

        struct Pending {
            std::int32_t node;
            std::size_t begin, end;
            double w_total, w_pos;
        };

        std::vector<double> weight;
        std::vector<std::vector<Entry>> lists;  // per feature, sampled rows sorted by value
        std::vector<std::uint8_t> goes_left;
        std::vector<Entry> scratch;
        std::vector<int> features;
        std::vector<Pending> stack;

        Tree grow() {
            const auto n = static_cast<std::size_t>(x.rows());
            const auto d = presorted.size();
            weight.assign(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) weight[rng.below(n)] += 1.0;

            double w_pos = 0.0;
            std::size_t used = 0;
            for (std::size_t r = 0; r < n; ++r) {
                if (weight[r] > 0.0) {
                    ++used;
                    if (y[r]) w_pos += weight[r];
                }
            }
            lists.resize(d);
            for (std::size_t f = 0; f < d; ++f) {
                auto& list = lists[f];
                list.clear();
                list.reserve(used);
                for (auto r : presorted[f]) {
                    if (weight[r] > 0.0) {
                        list.push_back({x(r, static_cast<Eigen::Index>(f)), weight[r], y[r] ? weight[r] : 0.0, r});
                    }
                }
            }
            goes_left.assign(n, 0);
            features.resize(d);
            std::iota(features.begin(), features.end(), 0);

            Tree tree;
            tree.reserve(2 * used + 1);
            tree.emplace_back();
            stack.clear();
            stack.push_back({0, 0, used, static_cast<double>(n), w_pos});
            while (!stack.empty()) {
                const Pending job = stack.back();
                stack.pop_back();
                const double w_total = job.w_total;
                const double p_total = job.w_pos;
                tree[static_cast<std::size_t>(job.node)].value = w_total > 0.0 ? p_total / w_total : 0.0;
                if (d == 0 || p_total == 0.0 || p_total == w_total || w_total <= min_node_size) continue;

                const double parent = (p_total * p_total + (w_total - p_total) * (w_total - p_total)) / w_total;
                double best = parent + 1e-12 * w_total;
                int best_feature = -1;
                std::size_t best_split = 0;  // entries [begin, best_split) go left
                double best_threshold = 0.0, best_wl = 0.0, best_pl = 0.0;

                // Partial Fisher-Yates: the first mtry entries are the sampled features.
                for (int k = 0; k < mtry; ++k) {
                    const auto pick = static_cast<std::size_t>(k) + rng.below(d - static_cast<std::size_t>(k));
                    std::swap(features[static_cast<std::size_t>(k)], features[pick]);
                }
                for (int k = 0; k < mtry; ++k) {
                    const int f = features[static_cast<std::size_t>(k)];
                    const Entry* list = lists[static_cast<std::size_t>(f)].data();
                    double wl = 0.0, pl = 0.0;
                    for (std::size_t j = job.begin; j + 1 < job.end; ++j) {
                        wl += list[j].weight;
                        pl += list[j].pos;
                        if (!(list[j].value < list[j + 1].value)) continue;
                        const double wr = w_total - wl;
                        const double pr = p_total - pl;
                        const double score =
                            (pl * pl + (wl - pl) * (wl - pl)) / wl + (pr * pr + (wr - pr) * (wr - pr)) / wr;
                        if (score > best) {
                            best = score;
                            best_feature = f;
                            best_split = j + 1;
                            best_threshold = list[j].value;
                            best_wl = wl;
                            best_pl = pl;
                        }
                    }
                }
                if (best_feature < 0) continue;

                const auto& split_list = lists[static_cast<std::size_t>(best_feature)];
                for (std::size_t j = job.begin; j < job.end; ++j) goes_left[split_list[j].row] = j < best_split ? 1 : 0;
                const std::size_t n_left = best_split - job.begin;
                for (std::size_t f = 0; f < d; ++f) {
                    if (static_cast<int>(f) == best_feature) continue;
                    // Stable partition keeps each child's entries sorted by value.
                    auto& list = lists[f];
                    scratch.clear();
                    std::size_t out = job.begin;
                    for (std::size_t j = job.begin; j < job.end; ++j) {
                        if (goes_left[list[j].row]) {
                            list[out++] = list[j];
                        } else {
                            scratch.push_back(list[j]);
                        }
                    }
                    std::copy(scratch.begin(), scratch.end(), list.begin() + static_cast<std::ptrdiff_t>(out));
                }

                const auto left = static_cast<std::int32_t>(tree.size());
                tree.emplace_back();
                tree.emplace_back();
                auto& node = tree[static_cast<std::size_t>(job.node)];
                node.feature = best_feature;
                node.value = rng.bernoulli(0.5)
                                 ? best_threshold
                                 : std::nextafter(split_list[best_split].value, -std::numeric_limits<double>::infinity());
                node.left = left;
                stack.push_back({left + 1, job.begin + n_left, job.end, w_total - best_wl, p_total - best_pl});
                stack.push_back({left, job.begin, job.begin + n_left, best_wl, best_pl});
            }
            return tree;
        }
    };

    std::vector<Tree> trees_;
    Eigen::Index dims_ = 0;
};

}  // namespace reset
