#pragma once

// Train/score contract over the three classifier families.

#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "reset/classifiers/forest.hpp"
#include "reset/classifiers/neural_net.hpp"
#include "reset/classifiers/spline_am.hpp"
#include "reset/model.hpp"

namespace reset {

enum class ClassifierKind { random_forest, neural_net, spline_am, constant };

/// Ignores its input; useful as a degenerate grid entry.
struct ConstantScorer {
    double value = 0.5;
    Vector predict(const Matrix& x) const { return Vector::Constant(x.rows(), value); }
};

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::random_forest;
    double nn_decay = 0.0;
    int nn_hidden = 5;
    int rf_trees = 500;
    int rf_mtry = 0;  ///< 0 means ceil(sqrt(d))
    int spline_df = 5;

    static ClassifierSpec forest(int trees = 500) { return {ClassifierKind::random_forest, 0.0, 5, trees}; }
    static ClassifierSpec spline(int df = 5) {
        ClassifierSpec s{ClassifierKind::spline_am};
        s.spline_df = df;
        return s;
    }
    static ClassifierSpec network(double decay, int hidden) { return {ClassifierKind::neural_net, decay, hidden}; }
    static ClassifierSpec constant() { return {ClassifierKind::constant}; }

    void validate() const {
        if (rf_trees < 1) throw ConfigError("classifier: rf_trees must be >= 1");
        if (kind == ClassifierKind::neural_net && (nn_hidden < 1 || nn_decay < 0.0)) {
            throw ConfigError("classifier: invalid neural net size or decay");
        }
        if (spline_df < 1) throw ConfigError("classifier: spline_df must be >= 1");
    }

    std::string name() const {
        switch (kind) {
            case ClassifierKind::random_forest:
                return "rf";
            case ClassifierKind::spline_am:
                return "spline_am";
            case ClassifierKind::constant:
                return "constant";
            case ClassifierKind::neural_net: {
                std::ostringstream out;
                out << "nn(decay=" << nn_decay << ",hidden=" << nn_hidden << ")";
                return out.str();
            }
        }
        return "?";
    }

    bool operator==(const ClassifierSpec&) const = default;
};

/// RF, SplineAM, then the 3x3 network grid in decay-major order.
inline std::vector<ClassifierSpec> default_classifier_grid() {
    std::vector<ClassifierSpec> grid{ClassifierSpec::forest(), ClassifierSpec::spline()};
    for (double decay : {0.0, 0.1, 1.0}) {
        for (int hidden : {2, 5, 10}) grid.push_back(ClassifierSpec::network(decay, hidden));
    }
    return grid;
}

class TrainedScorer {
public:
    using Model = std::variant<RandomForest, NeuralNet, SplineAdditiveModel, ConstantScorer>;

    TrainedScorer(ClassifierSpec spec, Eigen::Index dims, Model model)
        : spec_(spec), dims_(dims), model_(std::move(model)) {}

    const ClassifierSpec& spec() const noexcept { return spec_; }
    Eigen::Index dims() const noexcept { return dims_; }
    const Model& model() const noexcept { return model_; }

    /// Decision values; higher means more evidence for the positive class.
    Vector score(const Matrix& x) const {
        if (x.rows() == 0) return Vector(0);
        if (x.cols() != dims_) {
            throw DataError("score: feature dimension " + std::to_string(x.cols()) + " does not match training dimension " +
                            std::to_string(dims_));
        }
        return std::visit([&](const auto& m) { return m.predict(x); }, model_);
    }

private:
    ClassifierSpec spec_;
    Eigen::Index dims_;
    Model model_;
};

/// Fits `spec` on rows of `x` labelled +1 (positive) / -1 (negative).
inline TrainedScorer train(const ClassifierSpec& spec, const Matrix& x, std::span<const Label> labels, Rng& rng) {
    spec.validate();
    if (static_cast<std::size_t>(x.rows()) != labels.size()) throw DataError("train: feature rows and labels differ");
    std::vector<std::uint8_t> y(labels.size());
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != kTarget && labels[i] != kDecoy) throw DataError("train: labels must be +1/-1");
        y[i] = labels[i] == kTarget ? 1 : 0;
        (y[i] ? pos : neg) = true;
    }
    if (!pos || !neg) throw TrainingError("train: both classes must be present");
    if (!x.allFinite()) throw DataError("train: non-finite feature value");

    switch (spec.kind) {
        case ClassifierKind::random_forest: {
            ForestParams p;
            p.trees = spec.rf_trees;
            p.mtry = spec.rf_mtry;
            return {spec, x.cols(), RandomForest::fit(x, y, p, rng)};
        }
        case ClassifierKind::neural_net: {
            NeuralNetParams p;
            p.hidden = spec.nn_hidden;
            p.decay = spec.nn_decay;
            return {spec, x.cols(), NeuralNet::fit(x, y, p, rng)};
        }
        case ClassifierKind::spline_am: {
            SplineAmParams p;
            p.df = spec.spline_df;
            return {spec, x.cols(), SplineAdditiveModel::fit(x, y, p)};
        }
        case ClassifierKind::constant:
            return {spec, x.cols(), ConstantScorer{}};
    }
    throw ConfigError("train: unknown classifier kind");
}

}  // namespace reset
