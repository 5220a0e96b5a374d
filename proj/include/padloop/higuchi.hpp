#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "padloop/common.hpp"

namespace padloop {

inline constexpr int kDefaultKmax = 8;

// Higuchi fractal dimension of a scalar series. Builds k decimated
// sub-series per delay k, averages their normalized curve lengths L(k), and
// returns the slope of log L against log(1/k). Result is clamped to the
// theoretical [1,2] range for a planar curve.
inline double higuchi_fd(const Eigen::VectorXd& x, int k_max = kDefaultKmax) {
    require(k_max >= 2, "higuchi_fd: k_max must be at least 2");
    const Eigen::Index n = x.size();
    require(n >= 2 * static_cast<Eigen::Index>(k_max),
            "higuchi_fd: series too short for k_max=" + std::to_string(k_max));
    require(x.allFinite(), "higuchi_fd: series must be finite");

    if ((x.maxCoeff() - x.minCoeff()) == 0.0)
        throw degenerate_input("higuchi_fd: constant series has no defined dimension");

    Eigen::VectorXd log_len(k_max);
    Eigen::VectorXd log_inv_k(k_max);
    for (int k = 1; k <= k_max; ++k) {
        double mean_len = 0.0;
        for (int m = 0; m < k; ++m) {
            const Eigen::Index segs = (n - 1 - m) / k;
            double acc = 0.0;
            for (Eigen::Index i = 1; i <= segs; ++i)
                acc += std::abs(x[m + i * k] - x[m + (i - 1) * k]);
            // normalization maps every sub-series onto the full time support
            mean_len += acc * (static_cast<double>(n - 1) / (static_cast<double>(segs) * k)) / k;
        }
        mean_len /= k;
        if (mean_len <= 0.0)
            throw degenerate_input("higuchi_fd: zero curve length at k=" + std::to_string(k));
        log_len[k - 1] = std::log(mean_len);
        log_inv_k[k - 1] = std::log(1.0 / k);
    }

    // least-squares slope of log L(k) on log(1/k)
    const Eigen::VectorXd tc = log_inv_k.array() - log_inv_k.mean();
    const Eigen::VectorXd lc = log_len.array() - log_len.mean();
    const double slope = tc.dot(lc) / tc.squaredNorm();

    return std::clamp(slope, 1.0, 2.0);
}

} // namespace padloop
