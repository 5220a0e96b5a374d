#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "padloop/common.hpp"
#include "padloop/gp.hpp"
#include "padloop/kernel.hpp"

namespace padloop {

// Grid-search configuration for the Phase II hyperparameters. Candidates are
// log-spaced strictly inside the open intervals (alpha_lo, alpha_hi) and
// (beta_lo, beta_hi).
struct CvConfig {
    int grid_alpha = 10;
    int grid_beta = 10;
    double alpha_lo = 0.01, alpha_hi = 0.1;
    double beta_lo = 1.0, beta_hi = 3.0;
    int folds = 5;
    int repeats = 3;
    double noise_var = 1e-3;
    std::uint64_t seed = 0;

    void validate() const {
        require(grid_alpha >= 1 && grid_beta >= 1, "CvConfig: grid sizes must be positive");
        require(alpha_lo > 0.0 && alpha_hi > alpha_lo, "CvConfig: alpha range must be positive and ordered");
        require(beta_lo > 0.0 && beta_hi > beta_lo, "CvConfig: beta range must be positive and ordered");
        require(folds >= 2, "CvConfig: at least two folds");
        require(repeats >= 1, "CvConfig: at least one repetition");
        require(noise_var >= 0.0, "CvConfig: noise_var must be non-negative");
    }
};

struct CvReport {
    double alpha = 0.0;
    double beta = 0.0;
    double cv_mse = 0.0;
    int grid_index = -1;  // flattened alpha-major index of the winner
};

namespace detail_cv {

// n interior points of a geometric ladder over (lo, hi): build n+2 log-spaced
// points including the endpoints, then drop the endpoints.
inline std::vector<double> log_interior(double lo, double hi, int n) {
    std::vector<double> pts(n);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i)
        pts[i] = std::exp(llo + (lhi - llo) * (i + 1) / (n + 1));
    return pts;
}

} // namespace detail_cv

// Repeated k-fold grid search minimizing mean held-out squared error, then a
// refit on all data with the winner. Ties break toward the lowest flattened
// grid index, so the result is deterministic even for degenerate targets.
inline PerfGpModel fit_perf_gp(const Eigen::MatrixXd& pad_means /* 3 x m */,
                               const Eigen::VectorXd& q, const CvConfig& cfg, CvReport* report = nullptr) {
    cfg.validate();
    require(pad_means.rows() == 3, "fit_perf_gp: pad_means must have three rows");
    require(pad_means.cols() == q.size(), "fit_perf_gp: sample count mismatch");
    const Eigen::Index m = q.size();
    require(m >= cfg.folds, "fit_perf_gp: need at least " + std::to_string(cfg.folds) + " samples");

    const std::vector<double> alphas = detail_cv::log_interior(cfg.alpha_lo, cfg.alpha_hi, cfg.grid_alpha);
    const std::vector<double> betas = detail_cv::log_interior(cfg.beta_lo, cfg.beta_hi, cfg.grid_beta);

    // fold assignments per repetition, fixed across the grid
    std::vector<std::vector<Eigen::Index>> orders(cfg.repeats);
    for (int rep = 0; rep < cfg.repeats; ++rep) {
        auto& order = orders[rep];
        order.resize(m);
        for (Eigen::Index i = 0; i < m; ++i) order[i] = i;
        Rng rng(Rng::derive(cfg.seed, 7000 + rep));
        for (Eigen::Index i = m - 1; i > 0; --i)
            std::swap(order[i], order[rng.uniform_int(static_cast<std::uint64_t>(i + 1))]);
    }

    double best_mse = std::numeric_limits<double>::infinity();
    int best_idx = -1;

    for (int ia = 0; ia < cfg.grid_alpha; ++ia) {
        for (int ib = 0; ib < cfg.grid_beta; ++ib) {
            KernelParams kp{alphas[ia], betas[ib], cfg.noise_var};
            double err_sum = 0.0;
            Eigen::Index err_count = 0;

            for (int rep = 0; rep < cfg.repeats; ++rep) {
                const auto& order = orders[rep];
                for (int fold = 0; fold < cfg.folds; ++fold) {
                    // balanced contiguous chunks of the shuffled order
                    const Eigen::Index f_begin = m * fold / cfg.folds;
                    const Eigen::Index f_end = m * (fold + 1) / cfg.folds;
                    const Eigen::Index n_test = f_end - f_begin;
                    const Eigen::Index n_train = m - n_test;
                    if (n_train < 1 || n_test < 1) continue;

                    Eigen::MatrixXd x_train(3, n_train);
                    Eigen::VectorXd y_train(n_train);
                    Eigen::Index w = 0;
                    for (Eigen::Index i = 0; i < m; ++i) {
                        if (i >= f_begin && i < f_end) continue;
                        x_train.col(w) = pad_means.col(order[i]);
                        y_train[w] = q[order[i]];
                        ++w;
                    }
                    detail_gp::GpCore core;
                    core.train = x_train;
                    core.targets = y_train;
                    core.kernel = kp;
                    core.fit();
                    for (Eigen::Index i = f_begin; i < f_end; ++i) {
                        const double pred = core.predict(pad_means.col(order[i])).mean;
                        const double d = pred - q[order[i]];
                        err_sum += d * d;
                        ++err_count;
                    }
                }
            }
            const double mse = err_sum / static_cast<double>(err_count);
            if (mse < best_mse) {
                best_mse = mse;
                best_idx = ia * cfg.grid_beta + ib;
            }
        }
    }

    const int ia = best_idx / cfg.grid_beta;
    const int ib = best_idx % cfg.grid_beta;
    if (report) {
        report->alpha = alphas[ia];
        report->beta = betas[ib];
        report->cv_mse = best_mse;
        report->grid_index = best_idx;
    }
    return make_perf_gp(pad_means, q, KernelParams{alphas[ia], betas[ib], cfg.noise_var});
}

} // namespace padloop
