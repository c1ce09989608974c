#include "impforecast/regress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "impforecast/error.hpp"
#include "impforecast/random.hpp"

namespace impforecast {

// Defined in mlp.cpp.
MlpParams fit_mlp(const Matrix& Z, const Vector& y, const NeuralHyper& hyper, std::uint64_t seed);
Vector predict_mlp(const MlpParams& params, const Matrix& Z);

namespace {

double sequential_mean(const Vector& v) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) sum += v[i];
    return sum / static_cast<double>(v.size());
}

Matrix with_intercept(const Matrix& Z) {
    Matrix D(Z.rows(), Z.cols() + 1);
    D.leftCols(Z.cols()) = Z;
    D.col(Z.cols()).setOnes();
    return D;
}

LinearParams split_solution(const Vector& solution) {
    LinearParams p;
    const Eigen::Index d = solution.size() - 1;
    p.weights = solution.head(d);
    p.intercept = solution[d];
    return p;
}

LinearParams fit_least_squares(const Matrix& Z, const Vector& y, const LinearHyper& hyper) {
    const Matrix D = with_intercept(Z);
    Matrix normal = D.transpose() * D;
    normal.diagonal().head(Z.cols()).array() += hyper.ridge;
    const Vector solution = normal.ldlt().solve(D.transpose() * y);
    if (!solution.allFinite()) throw Error(ErrorCode::DegenerateInput, "least-squares system is singular");
    return split_solution(solution);
}

// Posterior mean m = beta * A^-1 D^T y with A = alpha * P + beta * D^T D, where
// P is the identity on feature weights and zero on the intercept. With
// evidence_iters > 0 the precisions are re-estimated by the usual fixed-point
// updates alpha = gamma / |w|^2, beta = (n - gamma - 1) / SSE.
LinearParams fit_bayesian(const Matrix& Z, const Vector& y, const BayesianHyper& hyper) {
    constexpr double kPrecisionMin = 1e-12;
    constexpr double kPrecisionMax = 1e12;
    const Eigen::Index n = Z.rows();
    const Eigen::Index d = Z.cols();
    const Matrix D = with_intercept(Z);
    const Matrix gram = D.transpose() * D;
    const Vector moment = D.transpose() * y;

    double alpha = hyper.alpha;
    double beta = hyper.beta;
    auto posterior_mean = [&](double a, double b) {
        Matrix A = b * gram;
        A.diagonal().head(d).array() += a;
        return Vector(b * A.ldlt().solve(moment));
    };

    Vector mean = posterior_mean(alpha, beta);
    if (hyper.evidence_iters > 0) {
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram.topLeftCorner(d, d), Eigen::EigenvaluesOnly);
        const Vector eigenvalues = eig.eigenvalues().cwiseMax(0.0);
        for (int iter = 0; iter < hyper.evidence_iters; ++iter) {
            double gamma = 0.0;
            for (Eigen::Index i = 0; i < d; ++i) {
                const double lambda = beta * eigenvalues[i];
                gamma += lambda / (alpha + lambda);
            }
            const double weight_norm = mean.head(d).squaredNorm();
            const double sse = (y - D * mean).squaredNorm();
            const double dof = std::max(static_cast<double>(n) - gamma - 1.0, 1e-6);
            const double next_alpha =
                std::clamp(gamma / std::max(weight_norm, 1e-300), kPrecisionMin, kPrecisionMax);
            const double next_beta = std::clamp(dof / std::max(sse, 1e-300), kPrecisionMin, kPrecisionMax);
            const bool converged = std::abs(next_alpha - alpha) <= 1e-10 * alpha &&
                                   std::abs(next_beta - beta) <= 1e-10 * beta;
            alpha = next_alpha;
            beta = next_beta;
            mean = posterior_mean(alpha, beta);
            if (converged) break;
        }
    }
    if (!mean.allFinite()) throw Error(ErrorCode::DegenerateInput, "posterior system is singular");
    LinearParams p = split_solution(mean);
    p.alpha = alpha;
    p.beta = beta;
    return p;
}

EnsembleParams fit_forest(const Matrix& Z, const Vector& y, const ForestHyper& hyper, std::uint64_t seed) {
    const std::size_t n = static_cast<std::size_t>(Z.rows());
    const int d = static_cast<int>(Z.cols());
    TreeGrowOptions options;
    options.max_depth = hyper.max_depth;
    options.min_leaf = hyper.min_leaf;
    options.feature_subset_size = hyper.feature_subset_size > 0
                                      ? hyper.feature_subset_size
                                      : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));

    EnsembleParams p;
    p.combine = EnsembleParams::Combine::Mean;
    p.lower = y.minCoeff();
    p.upper = y.maxCoeff();
    std::vector<std::size_t> rows(n);
    for (int t = 0; t < hyper.trees; ++t) {
        Rng rng(hash64({seed, 0xf0257u, static_cast<std::uint64_t>(t)}));
        if (hyper.bootstrap) {
            for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        p.trees.push_back(grow_tree(Z, y, rows, options, &rng));
        p.tree_weights.push_back(1.0);
    }
    return p;
}

EnsembleParams fit_boosting(const Matrix& Z, const Vector& y, const BoostHyper& hyper) {
    const Eigen::Index n = Z.rows();
    TreeGrowOptions options;
    options.max_depth = hyper.max_depth;
    options.min_leaf = hyper.min_leaf;
    options.feature_subset_size = 0;

    EnsembleParams p;
    p.combine = EnsembleParams::Combine::Additive;
    p.base_value = sequential_mean(y);
    Vector fitted = Vector::Constant(n, p.base_value);
    std::vector<std::size_t> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    for (int t = 0; t < hyper.trees; ++t) {
        const Vector residual = y - fitted;
        RegressionTree tree = grow_tree(Z, residual, rows, options, nullptr);
        for (Eigen::Index i = 0; i < n; ++i) fitted[i] += hyper.learning_rate * tree.predict(Z, i);
        p.trees.push_back(std::move(tree));
        p.tree_weights.push_back(hyper.learning_rate);
    }
    return p;
}

Vector predict_ensemble(const EnsembleParams& p, const Matrix& Z) {
    Vector out(Z.rows());
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        if (p.combine == EnsembleParams::Combine::Mean) {
            double sum = 0.0;
            for (const auto& tree : p.trees) sum += tree.predict(Z, i);
            double value = sum / static_cast<double>(p.trees.size());
            if (p.lower) value = std::max(value, *p.lower);
            if (p.upper) value = std::min(value, *p.upper);
            out[i] = value;
        } else {
            double value = p.base_value;
            for (std::size_t t = 0; t < p.trees.size(); ++t) value += p.tree_weights[t] * p.trees[t].predict(Z, i);
            out[i] = value;
        }
    }
    return out;
}

bool is_tree_kind(ModelKind kind) { return kind == ModelKind::DFR || kind == ModelKind::BDTR; }

}  // namespace

Standardizer Standardizer::identity(Eigen::Index d) {
    return Standardizer{Vector::Zero(d), Vector::Ones(d)};
}

Matrix Standardizer::transform(const Matrix& X) const {
    if (X.cols() != means.size()) {
        throw Error(ErrorCode::DimensionMismatch, "standardizer expects " + std::to_string(means.size()) +
                                                      " columns, got " + std::to_string(X.cols()));
    }
    Matrix Z(X.rows(), X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        for (Eigen::Index i = 0; i < X.rows(); ++i) Z(i, j) = (X(i, j) - means[j]) / stdevs[j];
    }
    return Z;
}

Standardizer standardize_fit(const Matrix& X) {
    if (X.rows() == 0) throw Error(ErrorCode::EmptyMatrix, "cannot standardize an empty matrix");
    const double n = static_cast<double>(X.rows());
    Standardizer s{Vector(X.cols()), Vector(X.cols())};
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < X.rows(); ++i) sum += X(i, j);
        const double mean = sum / n;
        double ss = 0.0;
        for (Eigen::Index i = 0; i < X.rows(); ++i) ss += (X(i, j) - mean) * (X(i, j) - mean);
        const double sd = std::sqrt(ss / n);
        s.means[j] = mean;
        s.stdevs[j] = sd > kStdevFloor ? sd : kStdevFloor;
    }
    return s;
}

Regressor fit(ModelKind kind, const Matrix& X, const Vector& y, const HyperParams& hyper, std::uint64_t seed) {
    if (X.rows() != y.size()) {
        throw Error(ErrorCode::DimensionMismatch, "X has " + std::to_string(X.rows()) + " rows but y has " +
                                                      std::to_string(y.size()) + " entries");
    }
    if (X.rows() < 2) throw Error(ErrorCode::DegenerateInput, "need at least 2 training rows");
    if (X.cols() < 1) throw Error(ErrorCode::DegenerateInput, "need at least 1 feature");
    if (!X.allFinite() || !y.allFinite()) throw Error(ErrorCode::DegenerateInput, "training data is not finite");
    hyper.validate();

    Regressor model;
    model.kind = kind;
    model.input_dim = static_cast<std::size_t>(X.cols());
    model.hyper = hyper;
    model.seed = seed;
    model.standardizer = (is_tree_kind(kind) && !hyper.standardize_trees) ? Standardizer::identity(X.cols())
                                                                          : standardize_fit(X);
    const Matrix Z = model.standardizer.transform(X);

    switch (kind) {
        case ModelKind::LR: model.params = fit_least_squares(Z, y, hyper.lr); break;
        case ModelKind::BLR: model.params = fit_bayesian(Z, y, hyper.blr); break;
        case ModelKind::DFR: model.params = fit_forest(Z, y, hyper.dfr, seed); break;
        case ModelKind::BDTR: model.params = fit_boosting(Z, y, hyper.bdtr); break;
        case ModelKind::NNR: model.params = fit_mlp(Z, y, hyper.nnr, seed); break;
    }
    return model;
}

Vector predict(const Regressor& model, const Matrix& X) {
    if (static_cast<std::size_t>(X.cols()) != model.input_dim) {
        throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.input_dim) +
                                                      " features, got " + std::to_string(X.cols()));
    }
    if (X.rows() == 0) return Vector(0);
    const Matrix Z = model.standardizer.transform(X);
    return std::visit(
        [&](const auto& p) -> Vector {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, LinearParams>) {
                return (Z * p.weights).array() + p.intercept;
            } else if constexpr (std::is_same_v<P, EnsembleParams>) {
                return predict_ensemble(p, Z);
            } else {
                return predict_mlp(p, Z);
            }
        },
        model.params);
}

LinearCoefficients linear_coefficients(const Regressor& model) {
    const auto* p = std::get_if<LinearParams>(&model.params);
    if (p == nullptr) throw Error(ErrorCode::InvalidArgument, "model is not linear");
    LinearCoefficients out;
    out.weights = p->weights.cwiseQuotient(model.standardizer.stdevs);
    out.intercept = p->intercept - out.weights.dot(model.standardizer.means);
    return out;
}

Regressor truncate_ensemble(const Regressor& model, std::size_t count) {
    const auto* p = std::get_if<EnsembleParams>(&model.params);
    if (p == nullptr) throw Error(ErrorCode::InvalidArgument, "model is not a tree ensemble");
    if (count == 0 || count > p->trees.size()) throw Error(ErrorCode::InvalidArgument, "tree count out of range");
    Regressor copy = model;
    auto& q = std::get<EnsembleParams>(copy.params);
    q.trees.resize(count);
    q.tree_weights.resize(count);
    return copy;
}

}  // namespace impforecast
