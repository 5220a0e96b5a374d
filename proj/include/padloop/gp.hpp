#pragma once

#include <array>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "padloop/common.hpp"
#include "padloop/dbn.hpp"
#include "padloop/kernel.hpp"

namespace padloop {

namespace detail_gp {

// Cholesky of K + noise I. With positive observation noise, jitter escalates
// from 1e-10 to 1e-4 before giving up; with zero noise the model promises
// exact interpolation, so any failure is surfaced immediately.
inline Eigen::LLT<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& gram, double noise_var) {
    Eigen::MatrixXd k = gram;
    k.diagonal().array() += noise_var;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() == Eigen::Success) return llt;
    if (noise_var > 0.0) {
        for (double jitter = 1e-10; jitter <= 1e-4 + 1e-20; jitter *= 10.0) {
            Eigen::MatrixXd kj = k;
            kj.diagonal().array() += jitter;
            llt.compute(kj);
            if (llt.info() == Eigen::Success) return llt;
        }
    }
    throw numerical_failure("gram matrix not positive definite" +
                            std::string(noise_var > 0.0 ? " after jitter escalation" : ""));
}

} // namespace detail_gp

// Scalar-output GP posterior.
struct QotPosterior {
    double mean = 0.0;
    double var = 0.0;

    void validate() const {
        require(finite(mean) && finite(var), "QotPosterior: entries must be finite");
        require(var >= 0.0, "QotPosterior: var must be non-negative");
    }
};

// Diagonal posterior over the three PAD dimensions.
struct PadPosterior {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Vector3d var = Eigen::Vector3d::Zero();

    void validate() const {
        require(mean.allFinite() && var.allFinite(), "PadPosterior: entries must be finite");
        require((var.array() >= 0.0).all(), "PadPosterior: variances must be non-negative");
    }
};

namespace detail_gp {

inline double clamp_variance(double var) {
    if (var >= 0.0) return var;
    if (var > -1e-10) return 0.0;
    throw numerical_failure("posterior variance negative beyond tolerance: " + std::to_string(var));
}

// Shared single-output machinery: training columns, targets, factorization.
struct GpCore {
    Eigen::MatrixXd train;  // dims x m
    Eigen::VectorXd targets;
    KernelParams kernel;
    Eigen::LLT<Eigen::MatrixXd> chol;
    Eigen::VectorXd weights;  // (K + noise I)^{-1} targets

    void fit() {
        kernel.validate();
        require(train.cols() == targets.size() && train.cols() >= 1, "gp fit: shape mismatch");
        chol = factorize(rbf_gram(train, kernel), kernel.noise_var);
        weights = chol.solve(targets);
    }

    QotPosterior predict(const Eigen::VectorXd& x) const {
        const Eigen::VectorXd ks = rbf_cross(train, x, kernel);
        QotPosterior post;
        post.mean = ks.dot(weights);
        post.var = clamp_variance(kernel.alpha - ks.dot(chol.solve(ks)));
        return post;
    }
};

} // namespace detail_gp

// Phase I model: three independent zero-mean GPs over the shared DBN latent
// space, one per PAD dimension.
struct PadGpModel {
    DbnParams dbn;
    Normalizer normalizer;
    Eigen::MatrixXd raw_features;  // n x m, unscaled training features
    Eigen::MatrixXd latent_train;  // N x m
    Eigen::MatrixXd labels;        // 3 x m
    std::array<KernelParams, 3> kernels;
    std::array<detail_gp::GpCore, 3> cores;
};

inline PadGpModel fit_pad_gp(const DbnParams& dbn, const Normalizer& normalizer,
                             const Eigen::MatrixXd& features /* n x m */,
                             const Eigen::MatrixXd& labels /* 3 x m */,
                             const std::array<KernelParams, 3>& kernels) {
    dbn.validate();
    normalizer.validate();
    require(features.cols() == labels.cols(), "fit_pad_gp: feature/label count mismatch");
    require(features.cols() >= 1, "fit_pad_gp: at least one labeled sample required");
    require(labels.rows() == 3, "fit_pad_gp: labels must have three rows");
    require(labels.allFinite(), "fit_pad_gp: labels must be finite");
    require((labels.array() >= 1.0 - 1e-9).all() && (labels.array() <= 9.0 + 1e-9).all(),
            "fit_pad_gp: labels must lie in [1,9]");

    PadGpModel model;
    model.dbn = dbn;
    model.normalizer = normalizer;
    model.raw_features = features;
    model.latent_train = forward_all(dbn, normalizer.transform_all(features));
    model.labels = labels;
    model.kernels = kernels;
    for (int l = 0; l < 3; ++l) {
        model.cores[l].train = model.latent_train;
        model.cores[l].targets = labels.row(l).transpose();
        model.cores[l].kernel = kernels[l];
        model.cores[l].fit();
    }
    return model;
}

inline PadPosterior pad_posterior(const PadGpModel& model, const Eigen::VectorXd& e_raw) {
    require(e_raw.size() == model.dbn.input_dim(), "pad_posterior: feature dimension mismatch");
    require(e_raw.allFinite(), "pad_posterior: features must be finite");
    const Eigen::VectorXd phi = forward(model.dbn, model.normalizer.transform(e_raw));
    PadPosterior post;
    for (int l = 0; l < 3; ++l) {
        const QotPosterior p = model.cores[l].predict(phi);
        post.mean[l] = p.mean;
        post.var[l] = p.var;
    }
    return post;
}

// Phase II model: scalar GP from PAD mean vectors to observed performance.
struct PerfGpModel {
    Eigen::MatrixXd pad_train;  // 3 x m
    Eigen::VectorXd q_train;
    KernelParams kernel;
    detail_gp::GpCore core;
};

inline PerfGpModel make_perf_gp(const Eigen::MatrixXd& pad_train, const Eigen::VectorXd& q_train,
                                const KernelParams& kernel) {
    require(pad_train.rows() == 3, "make_perf_gp: pad_train must have three rows");
    require(pad_train.cols() == q_train.size(), "make_perf_gp: sample count mismatch");
    require(pad_train.cols() >= 1, "make_perf_gp: at least one sample required");
    require(q_train.allFinite() && (q_train.array() > 0.0).all(),
            "make_perf_gp: performance values must be positive");
    PerfGpModel model;
    model.pad_train = pad_train;
    model.q_train = q_train;
    model.kernel = kernel;
    model.core.train = pad_train;
    model.core.targets = q_train;
    model.core.kernel = kernel;
    model.core.fit();
    return model;
}

// Plug-in composition: evaluate the Phase II posterior at the Phase I mean.
inline QotPosterior qot_posterior(const PerfGpModel& model, const PadPosterior& pad) {
    pad.validate();
    return model.core.predict(pad.mean);
}

// Optional extension (off the default path): propagate PAD uncertainty with
// 2d+1 symmetric sigma points instead of the plug-in mean.
inline QotPosterior qot_posterior_sigma(const PerfGpModel& model, const PadPosterior& pad) {
    pad.validate();
    constexpr int d = 3;
    const double w0 = 1.0 / (2.0 * d + 1.0);
    std::array<Eigen::Vector3d, 2 * d + 1> points;
    points[0] = pad.mean;
    for (int i = 0; i < d; ++i) {
        const double spread = std::sqrt((2.0 * d + 1.0) / 2.0 * pad.var[i]);
        points[1 + 2 * i] = pad.mean;
        points[1 + 2 * i][i] += spread;
        points[2 + 2 * i] = pad.mean;
        points[2 + 2 * i][i] -= spread;
    }
    double mean = 0.0, second = 0.0;
    for (const auto& pt : points) {
        const QotPosterior p = model.core.predict(pt);
        mean += w0 * p.mean;
        second += w0 * (p.var + p.mean * p.mean);
    }
    QotPosterior out;
    out.mean = mean;
    out.var = detail_gp::clamp_variance(second - mean * mean);
    return out;
}

namespace detail_gp {

inline double gaussian_density(double x, double mean, double var) {
    if (var <= 0.0) throw numerical_failure("gaussian density needs positive variance");
    const double d = x - mean;
    return std::exp(-d * d / (2.0 * var)) / std::sqrt(2.0 * M_PI * var);
}

} // namespace detail_gp

// Marginal likelihood of an observed q* after collapsing the Phase I
// posterior around its mode. For the Gaussian Phase I posterior the mode
// density and the volume factor (2 pi)^{3/2} |Sigma|^{1/2} cancel exactly,
// leaving the Phase II likelihood at the plug-in mean; when every PAD
// variance is positive the full product is evaluated and checked against the
// reduced form before returning it.
inline double laplace_marginal(double q_star, const PadPosterior& pad, const PerfGpModel& model) {
    pad.validate();
    require(finite(q_star), "laplace_marginal: q* must be finite");
    const QotPosterior qot = qot_posterior(model, pad);
    const double var_total = qot.var + model.kernel.noise_var;
    if (var_total <= 0.0)
        throw numerical_failure("laplace_marginal: zero total variance in Phase II likelihood");
    const double reduced = detail_gp::gaussian_density(q_star, qot.mean, var_total);

    if ((pad.var.array() > 0.0).all()) {
        // p(f_hat | e) evaluated at its own mean times the Laplace volume factor
        double log_density = 0.0;
        for (int l = 0; l < 3; ++l) log_density += -0.5 * std::log(2.0 * M_PI * pad.var[l]);
        const double log_volume = 1.5 * std::log(2.0 * M_PI) + 0.5 * pad.var.array().log().sum();
        const double full = reduced * std::exp(log_density + log_volume);
        if (std::abs(full - reduced) > 1e-12 * std::max(1.0, std::abs(reduced)))
            throw numerical_failure("laplace_marginal: cancellation identity violated");
        return full;
    }
    return reduced;
}

// Gaussian survival function P{q >= q_r}; a zero-variance posterior is a
// point mass.
inline double prob_q_at_least(const QotPosterior& post, double q_r) {
    post.validate();
    require(finite(q_r), "prob_q_at_least: threshold must be finite");
    if (post.var == 0.0) return post.mean >= q_r ? 1.0 : 0.0;
    return 0.5 * std::erfc((q_r - post.mean) / std::sqrt(2.0 * post.var));
}

} // namespace padloop
