#include <cmath>

#include "impforecast/error.hpp"
#include "impforecast/random.hpp"
#include "impforecast/regress.hpp"

namespace impforecast {

std::size_t mlp_parameter_count(std::size_t input_dim, std::size_t hidden_units) {
    return hidden_units * input_dim + 2 * hidden_units + 1;
}

Vector flatten(const MlpParams& p) {
    const auto H = static_cast<std::size_t>(p.hidden_weights.rows());
    const auto d = static_cast<std::size_t>(p.hidden_weights.cols());
    Vector flat(static_cast<Eigen::Index>(mlp_parameter_count(d, H)));
    Eigen::Index k = 0;
    for (Eigen::Index h = 0; h < p.hidden_weights.rows(); ++h) {
        for (Eigen::Index j = 0; j < p.hidden_weights.cols(); ++j) flat[k++] = p.hidden_weights(h, j);
    }
    for (Eigen::Index h = 0; h < p.hidden_bias.size(); ++h) flat[k++] = p.hidden_bias[h];
    for (Eigen::Index h = 0; h < p.output_weights.cols(); ++h) flat[k++] = p.output_weights(0, h);
    flat[k] = p.output_bias[0];
    return flat;
}

MlpParams unflatten(const Vector& flat, std::size_t input_dim, std::size_t hidden_units) {
    if (static_cast<std::size_t>(flat.size()) != mlp_parameter_count(input_dim, hidden_units)) {
        throw Error(ErrorCode::DimensionMismatch, "parameter vector has " + std::to_string(flat.size()) +
                                                      " entries, expected " +
                                                      std::to_string(mlp_parameter_count(input_dim, hidden_units)));
    }
    const auto H = static_cast<Eigen::Index>(hidden_units);
    const auto d = static_cast<Eigen::Index>(input_dim);
    MlpParams p{Matrix(H, d), Vector(H), Matrix(1, H), Vector(1)};
    Eigen::Index k = 0;
    for (Eigen::Index h = 0; h < H; ++h) {
        for (Eigen::Index j = 0; j < d; ++j) p.hidden_weights(h, j) = flat[k++];
    }
    for (Eigen::Index h = 0; h < H; ++h) p.hidden_bias[h] = flat[k++];
    for (Eigen::Index h = 0; h < H; ++h) p.output_weights(0, h) = flat[k++];
    p.output_bias[0] = flat[k];
    return p;
}

namespace {

struct Forward {
    Matrix hidden;  // n x H, post-activation
    Vector output;  // n
};

Forward forward(const MlpParams& p, const Matrix& Z) {
    Forward f;
    f.hidden = ((Z * p.hidden_weights.transpose()).rowwise() + p.hidden_bias.transpose()).array().tanh();
    f.output = (f.hidden * p.output_weights.transpose()).col(0).array() + p.output_bias[0];
    return f;
}

}  // namespace

Vector predict_mlp(const MlpParams& params, const Matrix& Z) { return forward(params, Z).output; }

LossAndGradient nn_loss_and_gradient(const Vector& params, const Matrix& X, const Vector& y,
                                     std::size_t hidden_units) {
    if (X.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "X and y row counts differ");
    if (X.rows() == 0) throw Error(ErrorCode::DegenerateInput, "no rows");
    const MlpParams p = unflatten(params, static_cast<std::size_t>(X.cols()), hidden_units);
    const Forward f = forward(p, X);
    const double n = static_cast<double>(X.rows());
    const Vector error = f.output - y;

    LossAndGradient out;
    out.loss = error.squaredNorm() / n;

    const Vector d_output = (2.0 / n) * error;  // dL/d output, n
    MlpParams grad;
    grad.output_weights = d_output.transpose() * f.hidden;  // 1 x H
    grad.output_bias = Vector::Constant(1, d_output.sum());
    const Matrix d_pre =
        ((d_output * p.output_weights).array() * (1.0 - f.hidden.array().square())).matrix();  // n x H
    grad.hidden_weights = d_pre.transpose() * X;                                             // H x d
    grad.hidden_bias = d_pre.colwise().sum().transpose();
    out.gradient = flatten(grad);
    return out;
}

double check_gradient(const Vector& params, const Matrix& X, const Vector& y, std::size_t hidden_units, double h) {
    if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
    const Vector analytic = nn_loss_and_gradient(params, X, y, hidden_units).gradient;
    Vector probe = params;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        probe[i] = params[i] + h;
        const double up = nn_loss_and_gradient(probe, X, y, hidden_units).loss;
        probe[i] = params[i] - h;
        const double down = nn_loss_and_gradient(probe, X, y, hidden_units).loss;
        probe[i] = params[i];
        const double numeric = (up - down) / (2.0 * h);
        const double rel = std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(numeric));
        worst = std::max(worst, rel);
    }
    return worst;
}

MlpParams fit_mlp(const Matrix& Z, const Vector& y, const NeuralHyper& hyper, std::uint64_t seed) {
    const auto d = static_cast<std::size_t>(Z.cols());
    const auto H = static_cast<std::size_t>(hyper.hidden_units);
    Rng rng(hash64({seed, 0x3e7u}));

    MlpParams init{Matrix(H, d), Vector::Zero(H), Matrix(1, H), Vector::Zero(1)};
    const double hidden_bound = hyper.init_scale / std::sqrt(static_cast<double>(d));
    const double output_bound = hyper.init_scale / std::sqrt(static_cast<double>(H));
    for (Eigen::Index h = 0; h < init.hidden_weights.rows(); ++h) {
        for (Eigen::Index j = 0; j < init.hidden_weights.cols(); ++j) {
            init.hidden_weights(h, j) = rng.uniform(-hidden_bound, hidden_bound);
        }
    }
    for (Eigen::Index h = 0; h < init.output_weights.cols(); ++h) {
        init.output_weights(0, h) = rng.uniform(-output_bound, output_bound);
    }

    Vector theta = flatten(init);
    Vector velocity = Vector::Zero(theta.size());
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        const LossAndGradient lg = nn_loss_and_gradient(theta, Z, y, H);
        if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) {
            throw Error(ErrorCode::NonFiniteLoss,
                        "network training diverged at epoch " + std::to_string(epoch) + "; reduce nnr.step_size");
        }
        velocity = hyper.momentum * velocity - hyper.step_size * lg.gradient;
        theta += velocity;
    }
    if (!theta.allFinite() || !std::isfinite(nn_loss_and_gradient(theta, Z, y, H).loss)) {
        throw Error(ErrorCode::NonFiniteLoss, "network training diverged; reduce nnr.step_size");
    }
    return unflatten(theta, d, H);
}

}  // namespace impforecast
