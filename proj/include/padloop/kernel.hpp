#pragma once

#include <Eigen/Dense>

#include "padloop/common.hpp"

namespace padloop {

// Hyperparameters of one squared-exponential kernel plus observation noise.
struct KernelParams {
    double alpha = 1.0;      // signal variance
    double beta = 1.0;       // squared length scale
    double noise_var = 0.0;  // observation noise variance

    void validate() const {
        require(finite(alpha) && alpha > 0.0, "KernelParams: alpha must be positive");
        require(finite(beta) && beta > 0.0, "KernelParams: beta must be positive");
        require(finite(noise_var) && noise_var >= 0.0, "KernelParams: noise_var must be non-negative");
    }
};

// k(x,y) = alpha * exp(-||x-y||^2 / (2 beta))
inline double rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const KernelParams& p) {
    p.validate();
    require(x.size() == y.size(), "rbf_kernel: length mismatch");
    return p.alpha * std::exp(-(x - y).squaredNorm() / (2.0 * p.beta));
}

// Gram matrix over columns of a sample matrix.
inline Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& cols, const KernelParams& p) {
    p.validate();
    const Eigen::Index m = cols.cols();
    Eigen::MatrixXd g(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        g(i, i) = p.alpha;
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double v = p.alpha * std::exp(-(cols.col(i) - cols.col(j)).squaredNorm() / (2.0 * p.beta));
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

// Cross-covariance vector between a query and the training columns.
inline Eigen::VectorXd rbf_cross(const Eigen::MatrixXd& cols, const Eigen::VectorXd& x, const KernelParams& p) {
    p.validate();
    require(cols.rows() == x.size(), "rbf_cross: dimension mismatch");
    Eigen::VectorXd k(cols.cols());
    for (Eigen::Index i = 0; i < cols.cols(); ++i)
        k[i] = p.alpha * std::exp(-(cols.col(i) - x).squaredNorm() / (2.0 * p.beta));
    return k;
}

} // namespace padloop
