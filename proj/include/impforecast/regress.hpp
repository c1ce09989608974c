#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "impforecast/domain.hpp"
#include "impforecast/tree.hpp"

namespace impforecast {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

inline constexpr double kStdevFloor = 1e-9;

struct Standardizer {
    Vector means;
    Vector stdevs;

    static Standardizer identity(Eigen::Index d);
    Eigen::Index dimension() const noexcept { return means.size(); }
    Matrix transform(const Matrix& X) const;

    bool operator==(const Standardizer& other) const {
        return means == other.means && stdevs == other.stdevs;
    }
};

/// Column means and population standard deviations; zero-variance columns get
/// kStdevFloor. Throws EmptyMatrix for n == 0.
Standardizer standardize_fit(const Matrix& X);

// ---------------------------------------------------------------------------
// Hyperparameters
// ---------------------------------------------------------------------------

struct LinearHyper {
    double ridge = 1e-8;

    bool operator==(const LinearHyper&) const = default;
};

struct BayesianHyper {
    double alpha = 1e-2;  // prior precision
    double beta = 1.0;    // noise precision
    int evidence_iters = 30;

    bool operator==(const BayesianHyper&) const = default;
};

struct ForestHyper {
    int trees = 100;
    int max_depth = 8;
    int min_leaf = 2;
    int feature_subset_size = 0;  // 0: ceil(sqrt(d))
    bool bootstrap = true;

    bool operator==(const ForestHyper&) const = default;
};

struct BoostHyper {
    int trees = 200;
    int max_depth = 3;
    double learning_rate = 0.1;
    int min_leaf = 2;

    bool operator==(const BoostHyper&) const = default;
};

struct NeuralHyper {
    int hidden_units = 16;
    int epochs = 2000;
    double step_size = 1e-2;
    double momentum = 0.9;
    double init_scale = 1.0;

    bool operator==(const NeuralHyper&) const = default;
};

struct HyperParams {
    LinearHyper lr;
    BayesianHyper blr;
    ForestHyper dfr;
    BoostHyper bdtr;
    NeuralHyper nnr;
    /// When false, tree ensembles see raw features. Predictions are the same
    /// either way; the flag exists so that can be checked.
    bool standardize_trees = true;

    /// Throws InvalidHyperParam describing the first violated constraint.
    void validate() const;

    /// Applies an override such as "nnr.hidden_units=8". Throws
    /// InvalidHyperParam for unknown keys or unparsable values.
    void set(std::string_view key, std::string_view value);

    static std::vector<std::string> keys();

    bool operator==(const HyperParams&) const = default;
};

// ---------------------------------------------------------------------------
// Fitted parameters
// ---------------------------------------------------------------------------

/// LR and BLR. Weights act on standardized features; the intercept is the
/// coefficient of the appended constant column.
struct LinearParams {
    Vector weights;
    double intercept = 0.0;
    // Final precisions for BLR (after evidence updates); unused by LR.
    double alpha = 0.0;
    double beta = 0.0;

    bool operator==(const LinearParams& o) const {
        return weights == o.weights && intercept == o.intercept && alpha == o.alpha && beta == o.beta;
    }
};

/// DFR and BDTR. Forest: clamp(mean_t tree_t(x), lower, upper).
/// Boosting: base_value + sum_t tree_weights[t] * tree_t(x).
struct EnsembleParams {
    enum class Combine { Mean, Additive };

    Combine combine = Combine::Mean;
    std::vector<RegressionTree> trees;
    std::vector<double> tree_weights;
    double base_value = 0.0;
    std::optional<double> lower;
    std::optional<double> upper;

    bool operator==(const EnsembleParams&) const = default;
};

/// One tanh hidden layer and a linear output:
///   f(z) = output_weights * tanh(hidden_weights * z + hidden_bias) + output_bias
struct MlpParams {
    Matrix hidden_weights;  // H x d
    Vector hidden_bias;     // H
    Matrix output_weights;  // 1 x H
    Vector output_bias;     // 1

    bool operator==(const MlpParams& o) const {
        return hidden_weights == o.hidden_weights && hidden_bias == o.hidden_bias &&
               output_weights == o.output_weights && output_bias == o.output_bias;
    }
};

/// Length of the flattened parameter vector: H*d + H + H + 1.
std::size_t mlp_parameter_count(std::size_t input_dim, std::size_t hidden_units);
/// Flattened layout: hidden_weights row by row, hidden_bias, output_weights, output_bias.
Vector flatten(const MlpParams& params);
MlpParams unflatten(const Vector& flat, std::size_t input_dim, std::size_t hidden_units);

using ModelParams = std::variant<LinearParams, EnsembleParams, MlpParams>;

/// A fitted regressor of one kind: standardizer, parameters and the settings
/// that produced them.
struct Regressor {
    ModelKind kind = ModelKind::LR;
    std::size_t input_dim = 0;
    Standardizer standardizer;
    ModelParams params;
    HyperParams hyper;
    std::uint64_t seed = 0;

    bool operator==(const Regressor&) const = default;
};

/// A regressor bound to the channel and feature group it was trained for.
struct TrainedModel {
    ChannelId channel{1};
    FeatureGroup group = FeatureGroup::G2;
    Regressor model;

    bool operator==(const TrainedModel&) const = default;
};

// ---------------------------------------------------------------------------
// Fit / predict
// ---------------------------------------------------------------------------

/// Fits one model. Stochastic steps (bootstrap, feature subsets, weight init)
/// are driven by `seed` alone. Throws DimensionMismatch, DegenerateInput
/// (n < 2, d < 1 or non-finite data), InvalidHyperParam, or NonFiniteLoss when
/// network training diverges.
Regressor fit(ModelKind kind, const Matrix& X, const Vector& y, const HyperParams& hyper, std::uint64_t seed);

/// One prediction per row of X. Throws DimensionMismatch.
Vector predict(const Regressor& model, const Matrix& X);

struct LinearCoefficients {
    Vector weights;  // on raw features
    double intercept = 0.0;
};

/// Maps an LR/BLR model back to raw feature space. Throws InvalidArgument for
/// other kinds.
LinearCoefficients linear_coefficients(const Regressor& model);

/// Copy of an ensemble model keeping only its first `count` trees.
Regressor truncate_ensemble(const Regressor& model, std::size_t count);

// ---------------------------------------------------------------------------
// Network loss and gradient
// ---------------------------------------------------------------------------

struct LossAndGradient {
    double loss = 0.0;
    Vector gradient;
};

/// Mean squared error of the network given by `params` on (X, y) and its
/// exact gradient by backpropagation. X is used as given (no standardization).
LossAndGradient nn_loss_and_gradient(const Vector& params, const Matrix& X, const Vector& y,
                                     std::size_t hidden_units);

/// Max over coordinates of |analytic - central difference| /
/// max(1e-8, |central difference|), with step h.
double check_gradient(const Vector& params, const Matrix& X, const Vector& y, std::size_t hidden_units, double h);

}  // namespace impforecast
