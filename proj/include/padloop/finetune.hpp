#pragma once

#include <array>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "padloop/common.hpp"
#include "padloop/dbn.hpp"
#include "padloop/gp.hpp"
#include "padloop/kernel.hpp"

namespace padloop {

// Gradients of the leave-one-out loss with respect to every trainable
// quantity: DBN weights/hidden biases per layer, and log alpha / log beta per
// output dimension. Hyperparameters are optimized in log space so positivity
// is structural.
struct LooGradients {
    double loss = 0.0;
    std::vector<Eigen::MatrixXd> d_weights;
    std::vector<Eigen::VectorXd> d_hidden_bias;
    std::array<double, 3> d_log_alpha{};
    std::array<double, 3> d_log_beta{};
};

namespace detail_ft {

// Forward pass keeping every layer's activations; activations[0] is the
// input, activations[K] the latent output. Columns are samples.
inline std::vector<Eigen::MatrixXd> forward_trace(const DbnParams& dbn, const Eigen::MatrixXd& e_cols) {
    std::vector<Eigen::MatrixXd> acts;
    acts.reserve(dbn.layers.size() + 1);
    acts.push_back(e_cols);
    for (const auto& layer : dbn.layers)
        acts.push_back(hidden_mean(layer, acts.back().transpose()).transpose());
    return acts;
}

} // namespace detail_ft

// Leave-one-out predictive squared error of the three latent-space GPs,
// averaged over outputs and samples, together with its exact gradients.
// E: n x m normalized features, F: 3 x m labels.
inline LooGradients loo_loss_and_gradients(const DbnParams& dbn,
                                           const std::array<KernelParams, 3>& kernels,
                                           const Eigen::MatrixXd& E, const Eigen::MatrixXd& F) {
    dbn.validate();
    for (const auto& k : kernels) k.validate();
    require(E.cols() == F.cols() && E.cols() >= 2, "loo_loss: need at least two labeled samples");
    require(E.rows() == dbn.input_dim(), "loo_loss: feature dimension mismatch");
    require(F.rows() == 3, "loo_loss: labels must have three rows");

    const Eigen::Index m = E.cols();
    const auto acts = detail_ft::forward_trace(dbn, E);
    const Eigen::MatrixXd& phi = acts.back();  // N x m

    // pairwise squared distances between latent columns
    Eigen::MatrixXd dist2(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        dist2(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double d = (phi.col(i) - phi.col(j)).squaredNorm();
            dist2(i, j) = d;
            dist2(j, i) = d;
        }
    }

    LooGradients out;
    Eigen::MatrixXd d_phi = Eigen::MatrixXd::Zero(phi.rows(), m);
    const double scale = 1.0 / (3.0 * static_cast<double>(m));

    for (int l = 0; l < 3; ++l) {
        const KernelParams& kp = kernels[l];
        Eigen::MatrixXd K = kp.alpha * (-dist2.array() / (2.0 * kp.beta)).exp().matrix();
        Eigen::MatrixXd Kn = K;
        Kn.diagonal().array() += kp.noise_var;
        Eigen::LLT<Eigen::MatrixXd> llt(Kn);
        if (llt.info() != Eigen::Success)
            throw numerical_failure("loo_loss: gram factorization failed for output " + std::to_string(l));

        const Eigen::MatrixXd A = llt.solve(Eigen::MatrixXd::Identity(m, m));
        const Eigen::VectorXd y = F.row(l).transpose();
        const Eigen::VectorXd a = A * y;
        const Eigen::VectorXd adiag = A.diagonal();
        require((adiag.array() > 0.0).all(), "loo_loss: non-positive precision diagonal");

        const Eigen::VectorXd r = a.array() / adiag.array();          // LOO residuals
        const Eigen::VectorXd u = 2.0 * r.array() / adiag.array();

        out.loss += scale * r.squaredNorm();

        // dLoss/dK = -(A u) a^T + A diag(u .* r) A, folded with symmetrization
        const Eigen::VectorXd Au = A * u;
        const Eigen::MatrixXd G = scale * (-(Au * a.transpose()) +
                                           A * (u.array() * r.array()).matrix().asDiagonal() * A);

        double g_alpha = 0.0, g_beta = 0.0;
        for (Eigen::Index p = 0; p < m; ++p)
            for (Eigen::Index q = 0; q < m; ++q) {
                g_alpha += G(p, q) * K(p, q);
                g_beta += G(p, q) * K(p, q) * dist2(p, q) / (2.0 * kp.beta);
            }
        out.d_log_alpha[l] = g_alpha;
        out.d_log_beta[l] = g_beta;

        // chain to the latent columns: dK_pq/dphi_p = -K_pq (phi_p - phi_q)/beta
        for (Eigen::Index p = 0; p < m; ++p)
            for (Eigen::Index q = 0; q < m; ++q) {
                if (p == q) continue;
                const double w = (G(p, q) + G(q, p)) * K(p, q) / kp.beta;
                d_phi.col(p) -= w * (phi.col(p) - phi.col(q));
            }
    }

    // backpropagate d_phi through the sigmoid stack
    const std::size_t n_layers = dbn.layers.size();
    out.d_weights.resize(n_layers);
    out.d_hidden_bias.resize(n_layers);
    Eigen::MatrixXd delta = d_phi;
    for (std::size_t k = n_layers; k-- > 0;) {
        const Eigen::MatrixXd& z = acts[k + 1];
        delta = delta.cwiseProduct(z.cwiseProduct((1.0 - z.array()).matrix()));
        out.d_weights[k] = acts[k] * delta.transpose();
        out.d_hidden_bias[k] = delta.rowwise().sum();
        if (k > 0) delta = dbn.layers[k].weights * delta;
    }
    return out;
}

inline double loo_loss(const DbnParams& dbn, const std::array<KernelParams, 3>& kernels,
                       const Eigen::MatrixXd& E, const Eigen::MatrixXd& F) {
    return loo_loss_and_gradients(dbn, kernels, E, F).loss;
}

struct FineTuneResult {
    DbnParams dbn;
    std::array<KernelParams, 3> kernels;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    double best_monitor = 0.0;  // validation MSE when a validation set is given, else train loss
    int epochs_run = 0;
    int best_epoch = -1;
};

namespace detail_ft {

inline double validation_mse(const DbnParams& dbn, const Normalizer& norm,
                             const std::array<KernelParams, 3>& kernels, const Eigen::MatrixXd& E,
                             const Eigen::MatrixXd& F, const Eigen::MatrixXd& Ev,
                             const Eigen::MatrixXd& Fv) {
    const PadGpModel model = fit_pad_gp(dbn, norm, E, F, kernels);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < Ev.cols(); ++i) {
        const PadPosterior post = pad_posterior(model, Ev.col(i));
        acc += (post.mean - Eigen::Vector3d(Fv.col(i))).squaredNorm();
    }
    return acc / (3.0 * static_cast<double>(Ev.cols()));
}

} // namespace detail_ft

// Joint gradient descent on the DBN weights/hidden biases and kernel
// hyperparameters (in log space), minimizing the leave-one-out predictive
// error. Learning rate anneals linearly from finetune_lr_start to
// finetune_lr_end across cfg.epochs; stops early after 20 epochs without
// monitor improvement and returns the best parameters seen.
//
// E/F are raw (unnormalized) features and labels; normalization statistics
// are fitted on E and applied to both sets. Pass empty validation matrices
// to monitor the training loss instead.
inline FineTuneResult fine_tune(const DbnParams& dbn0, const std::array<KernelParams, 3>& kernels0,
                                const Eigen::MatrixXd& E_raw, const Eigen::MatrixXd& F,
                                const TrainConfig& cfg,
                                const Eigen::MatrixXd& E_valid_raw = Eigen::MatrixXd(),
                                const Eigen::MatrixXd& F_valid = Eigen::MatrixXd()) {
    cfg.validate();
    dbn0.validate();
    for (const auto& k : kernels0) k.validate();
    require(E_raw.cols() >= 2, "fine_tune: need at least two labeled samples");
    require(E_raw.cols() == F.cols() && F.rows() == 3, "fine_tune: labeled set shape mismatch");
    const bool has_valid = E_valid_raw.cols() > 0;
    if (has_valid)
        require(E_valid_raw.cols() == F_valid.cols() && F_valid.rows() == 3,
                "fine_tune: validation set shape mismatch");

    const Normalizer norm = Normalizer::fit(E_raw);
    const Eigen::MatrixXd E = norm.transform_all(E_raw);
    const Eigen::MatrixXd Ev = has_valid ? norm.transform_all(E_valid_raw) : Eigen::MatrixXd();

    FineTuneResult res;
    res.dbn = dbn0;
    res.kernels = kernels0;

    DbnParams cur = dbn0;
    std::array<KernelParams, 3> kp = kernels0;

    auto monitor = [&](const DbnParams& d, const std::array<KernelParams, 3>& k, double train_loss) {
        return has_valid ? detail_ft::validation_mse(d, norm, k, E_raw, F, E_valid_raw, F_valid)
                         : train_loss;
    };

    {
        const double l0 = loo_loss(cur, kp, E, F);
        res.initial_loss = l0;
        res.final_loss = l0;
        res.best_monitor = monitor(cur, kp, l0);
        res.best_epoch = 0;
    }
    if (cfg.epochs == 0) return res;

    constexpr int kPatience = 20;
    int since_best = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double t = cfg.epochs > 1 ? static_cast<double>(epoch) / (cfg.epochs - 1) : 0.0;
        const double lr = cfg.finetune_lr_start + t * (cfg.finetune_lr_end - cfg.finetune_lr_start);

        const LooGradients g = loo_loss_and_gradients(cur, kp, E, F);
        for (std::size_t k = 0; k < cur.layers.size(); ++k) {
            cur.layers[k].weights -= lr * g.d_weights[k];
            cur.layers[k].hidden_bias -= lr * g.d_hidden_bias[k];
        }
        for (int l = 0; l < 3; ++l) {
            kp[l].alpha = std::exp(std::log(kp[l].alpha) - lr * g.d_log_alpha[l]);
            kp[l].beta = std::exp(std::log(kp[l].beta) - lr * g.d_log_beta[l]);
        }

        const double train_loss = loo_loss(cur, kp, E, F);
        const double m = monitor(cur, kp, train_loss);
        res.final_loss = train_loss;
        res.epochs_run = epoch + 1;

        if (m < res.best_monitor - 1e-12) {
            res.best_monitor = m;
            res.best_epoch = epoch + 1;
            res.dbn = cur;
            res.kernels = kp;
            since_best = 0;
        } else if (++since_best >= kPatience) {
            break;
        }
    }
    return res;
}

} // namespace padloop
