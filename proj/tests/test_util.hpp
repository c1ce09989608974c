#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace testutil {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols, double lo = -2.0,
                                     double hi = 2.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = u(gen);
    }
    return M;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& gen, Eigen::Index n, double lo = -2.0, double hi = 2.0) {
    return random_matrix(gen, n, 1, lo, hi).col(0);
}

inline int random_int(std::mt19937_64& gen, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(gen);
}

}  // namespace testutil
