#pragma once

// Core data model: hypotheses, labels, scores, side information, seeds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace reset {

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration (maps to CLI exit code 1).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or degenerate input data (maps to CLI exit code 2).
class DataError : public Error {
public:
    using Error::Error;
};

/// A classifier could not be fitted on the given data.
class TrainingError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Labels

/// A competition label: +1 for a target win, -1 for a decoy win.
using Label = std::int8_t;
inline constexpr Label kTarget = 1;
inline constexpr Label kDecoy = -1;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Random streams

/// Named child streams of a master seed. Each purpose draws from its own
/// stream so that, e.g., changing tie handling never perturbs decoy splits.
enum class Stream : std::uint64_t {
    decoy_split = 1,
    fold_assignment = 2,
    tie_break = 3,
    coinflip = 4,
    classifier_init = 5,
    simulation = 6,
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Pseudo-random engine plus the handful of draws the library needs.
class Rng {
public:
    using Engine = std::mt19937_64;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    double normal(double mean = 0.0, double sd = 1.0) {
        // Marsaglia polar method; caches the second variate.
        if (has_spare_) {
            has_spare_ = false;
            return mean + sd * spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return mean + sd * u * f;
    }

    /// Uniform integer in [0, n); n > 0. Multiply-shift with rejection (Lemire), no modulo bias.
    std::uint64_t below(std::uint64_t n) {
        unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(engine_()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    template <class T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[below(i)]);
        }
    }

    template <class T>
    void shuffle(std::vector<T>& values) {
        shuffle(std::span<T>(values));
    }

    Engine& engine() { return engine_; }

private:
    Engine engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Master seed with counter-based derivation of named, indexed child streams.
///
/// `stream(Stream::fold_assignment, {pass, rep})` always yields the same
/// engine state for the same master seed and path, independent of how many
/// draws any other stream has made.
class SeedSpec {
public:
    constexpr SeedSpec() = default;
    constexpr explicit SeedSpec(std::uint64_t master) : master_(master) {}

    constexpr std::uint64_t master_seed() const noexcept { return master_; }

    std::uint64_t derive(Stream s, std::initializer_list<std::uint64_t> path = {}) const {
        std::uint64_t h = detail::splitmix64(master_ ^ detail::splitmix64(static_cast<std::uint64_t>(s)));
        for (auto p : path) {
            h = detail::splitmix64(h ^ detail::splitmix64(p + 0x632be59bd9b4e019ULL));
        }
        return h;
    }

    Rng stream(Stream s, std::initializer_list<std::uint64_t> path = {}) const {
        return Rng(derive(s, path));
    }

    /// Independent seed spec for the i-th replicate (Monte Carlo runs).
    SeedSpec child(std::uint64_t index) const {
        return SeedSpec(derive(Stream::simulation, {0xc411dULL, index}));
    }

private:
    std::uint64_t master_ = 0;
};

// ---------------------------------------------------------------------------
// Tables

/// Hypotheses in competition form: label L, winning score W, side info x.
class HypothesisTable {
public:
    HypothesisTable() = default;

    HypothesisTable(std::vector<Label> labels, std::vector<double> scores, Matrix side_info,
                    std::vector<std::string> ids = {})
        : labels_(std::move(labels)),
          scores_(std::move(scores)),
          side_info_(std::move(side_info)),
          ids_(std::move(ids)) {
        const auto n = labels_.size();
        if (scores_.size() != n) {
            throw DataError("HypothesisTable: labels and scores differ in length");
        }
        if (side_info_.size() == 0 && side_info_.rows() != static_cast<Eigen::Index>(n)) {
            side_info_.resize(static_cast<Eigen::Index>(n), side_info_.cols());
        }
        if (side_info_.rows() != static_cast<Eigen::Index>(n)) {
            throw DataError("HypothesisTable: side information has " + std::to_string(side_info_.rows()) +
                            " rows, expected " + std::to_string(n));
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (labels_[i] != kTarget && labels_[i] != kDecoy) {
                throw DataError("HypothesisTable: label at row " + std::to_string(i) + " is not +1/-1");
            }
            if (!std::isfinite(scores_[i])) {
                throw DataError("HypothesisTable: non-finite score at row " + std::to_string(i));
            }
        }
        if (ids_.empty()) {
            ids_.reserve(n);
            for (std::size_t i = 0; i < n; ++i) ids_.push_back(std::to_string(i));
        } else if (ids_.size() != n) {
            throw DataError("HypothesisTable: ids differ in length");
        }
    }

    std::size_t size() const noexcept { return labels_.size(); }
    bool empty() const noexcept { return labels_.empty(); }
    Eigen::Index dims() const noexcept { return side_info_.cols(); }

    std::span<const Label> labels() const noexcept { return labels_; }
    std::span<const double> scores() const noexcept { return scores_; }
    const Matrix& side_info() const noexcept { return side_info_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }

    /// Rows `rows` (in that order) as a new table.
    HypothesisTable subset(std::span<const std::size_t> rows) const {
        std::vector<Label> l;
        std::vector<double> w;
        std::vector<std::string> id;
        Matrix x(static_cast<Eigen::Index>(rows.size()), side_info_.cols());
        l.reserve(rows.size());
        w.reserve(rows.size());
        id.reserve(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto r = rows[k];
            l.push_back(labels_[r]);
            w.push_back(scores_[r]);
            id.push_back(ids_[r]);
            x.row(static_cast<Eigen::Index>(k)) = side_info_.row(static_cast<Eigen::Index>(r));
        }
        return HypothesisTable(std::move(l), std::move(w), std::move(x), std::move(id));
    }

private:
    std::vector<Label> labels_;
    std::vector<double> scores_;
    Matrix side_info_;
    std::vector<std::string> ids_;
};

/// Hypotheses in p-value form.
class PValueTable {
public:
    PValueTable() = default;

    PValueTable(std::vector<double> pvalues, Matrix side_info, std::vector<std::string> ids = {})
        : pvalues_(std::move(pvalues)), side_info_(std::move(side_info)), ids_(std::move(ids)) {
        const auto n = pvalues_.size();
        if (side_info_.size() == 0 && side_info_.rows() != static_cast<Eigen::Index>(n)) {
            side_info_.resize(static_cast<Eigen::Index>(n), side_info_.cols());
        }
        if (side_info_.rows() != static_cast<Eigen::Index>(n)) {
            throw DataError("PValueTable: side information row count mismatch");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!(pvalues_[i] >= 0.0 && pvalues_[i] <= 1.0)) {
                throw DataError("PValueTable: p-value at row " + std::to_string(i) + " outside [0,1]");
            }
        }
        if (ids_.empty()) {
            ids_.reserve(n);
            for (std::size_t i = 0; i < n; ++i) ids_.push_back(std::to_string(i));
        } else if (ids_.size() != n) {
            throw DataError("PValueTable: ids differ in length");
        }
    }

    std::size_t size() const noexcept { return pvalues_.size(); }
    std::span<const double> pvalues() const noexcept { return pvalues_; }
    const Matrix& side_info() const noexcept { return side_info_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }

private:
    std::vector<double> pvalues_;
    Matrix side_info_;
    std::vector<std::string> ids_;
};

// ---------------------------------------------------------------------------
// Filter parameters and results

enum class ControlMode { fdr, fdp };

struct FilterParams {
    double alpha = 0.1;
    double gamma = 0.1;
    double c = 0.5;  ///< probability that a true null wins as a target
    ControlMode mode = ControlMode::fdr;

    void validate() const {
        auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
        if (!open_unit(alpha)) throw ConfigError("alpha must lie in (0,1)");
        if (!open_unit(gamma)) throw ConfigError("gamma must lie in (0,1)");
        if (!open_unit(c)) throw ConfigError("c must lie in (0,1)");
    }
};

/// Output of a selection procedure.
struct DiscoveryList {
    std::vector<std::size_t> discoveries;  ///< indices into the caller's table, in rank order
    std::vector<double> rescored;          ///< scores used for ranking (may be empty)
    std::size_t cutoff = 0;                ///< number of top-ranked hypotheses accepted (k0, k_FDP, ...)

    std::size_t size() const noexcept { return discoveries.size(); }
};

// ---------------------------------------------------------------------------
// Ordering

/// Permutation ordering `scores` descending; equal scores are put in a
/// uniformly random order drawn from `tie_rng`.
inline std::vector<std::size_t> sort_by_score_desc(std::span<const double> scores, Rng& tie_rng) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    tie_rng.shuffle(order);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

inline std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> perm) {
    std::vector<std::size_t> inv(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
    return inv;
}

}  // namespace reset
