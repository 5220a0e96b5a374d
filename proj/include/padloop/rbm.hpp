#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "padloop/common.hpp"

namespace padloop {

// Training hyperparameters shared by layer-wise pretraining and supervised
// fine-tuning. epochs applies to whichever phase consumes the config.
struct TrainConfig {
    double lr_first_layer = 0.01;
    double lr_upper_layers = 0.001;
    double weight_decay = 0.0002;
    double momentum = 0.1;
    int epochs = 30;
    int minibatch_size = 16;
    std::uint64_t seed = 0;
    double finetune_lr_start = 1e-1;
    double finetune_lr_end = 1e-5;

    void validate() const {
        require(lr_first_layer > 0.0 && lr_upper_layers > 0.0, "TrainConfig: learning rates must be positive");
        require(weight_decay >= 0.0, "TrainConfig: weight_decay must be non-negative");
        require(momentum >= 0.0 && momentum < 1.0, "TrainConfig: momentum must be in [0,1)");
        require(epochs >= 0, "TrainConfig: epochs must be non-negative");
        require(minibatch_size >= 1, "TrainConfig: minibatch_size must be positive");
        require(finetune_lr_start > 0.0 && finetune_lr_end > 0.0 && finetune_lr_end <= finetune_lr_start,
                "TrainConfig: fine-tune rates must satisfy 0 < end <= start");
    }
};

// One restricted Boltzmann machine with logistic units on both sides.
struct RbmLayer {
    Eigen::MatrixXd weights;       // visible x hidden
    Eigen::VectorXd visible_bias;  // visible
    Eigen::VectorXd hidden_bias;   // hidden

    Eigen::Index visible() const { return weights.rows(); }
    Eigen::Index hidden() const { return weights.cols(); }

    void validate() const {
        require(weights.rows() > 0 && weights.cols() > 0, "RbmLayer: empty weight matrix");
        require(visible_bias.size() == weights.rows(), "RbmLayer: visible bias size mismatch");
        require(hidden_bias.size() == weights.cols(), "RbmLayer: hidden bias size mismatch");
        require(weights.allFinite() && visible_bias.allFinite() && hidden_bias.allFinite(),
                "RbmLayer: parameters must be finite");
    }
};

inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

// v: samples x visible -> samples x hidden, p(h_j = 1 | v)
inline Eigen::MatrixXd hidden_mean(const RbmLayer& rbm, const Eigen::MatrixXd& v) {
    require(v.cols() == rbm.visible(), "hidden_mean: visible dimension mismatch");
    return sigmoid((v * rbm.weights).rowwise() + rbm.hidden_bias.transpose());
}

// h: samples x hidden -> samples x visible, p(v_i = 1 | h)
inline Eigen::MatrixXd visible_mean(const RbmLayer& rbm, const Eigen::MatrixXd& h) {
    require(h.cols() == rbm.hidden(), "visible_mean: hidden dimension mismatch");
    return sigmoid((h * rbm.weights.transpose()).rowwise() + rbm.visible_bias.transpose());
}

// F(v) = -b^T v - sum_j softplus(c_j + w_j^T v), one value per sample row.
inline Eigen::VectorXd free_energy(const RbmLayer& rbm, const Eigen::MatrixXd& v) {
    require(v.cols() == rbm.visible(), "free_energy: visible dimension mismatch");
    const Eigen::MatrixXd act = (v * rbm.weights).rowwise() + rbm.hidden_bias.transpose();
    // softplus with the large-argument branch kept exact
    const Eigen::ArrayXXd a = act.array();
    const Eigen::ArrayXXd sp = a.max(0.0) + (1.0 + (-a.abs()).exp()).log();
    return -(v * rbm.visible_bias) - sp.rowwise().sum().matrix();
}

// Momentum buffers carried across CD-1 steps.
struct Cd1State {
    Eigen::MatrixXd w_vel;
    Eigen::VectorXd vb_vel;
    Eigen::VectorXd hb_vel;

    static Cd1State zeros_like(const RbmLayer& rbm) {
        Cd1State s;
        s.w_vel = Eigen::MatrixXd::Zero(rbm.visible(), rbm.hidden());
        s.vb_vel = Eigen::VectorXd::Zero(rbm.visible());
        s.hb_vel = Eigen::VectorXd::Zero(rbm.hidden());
        return s;
    }
};

// One contrastive-divergence step with a single Gibbs half-cycle. The
// positive statistics use hidden probabilities; only the hidden states fed
// to the reconstruction are sampled (row-major draw order), and the negative
// phase stays mean-field. Weight decay applies to the weights only.
inline void rbm_cd1_update(RbmLayer& rbm, const Eigen::MatrixXd& batch, double lr,
                           const TrainConfig& cfg, Rng& rng, Cd1State& state) {
    rbm.validate();
    require(batch.rows() > 0, "rbm_cd1_update: empty minibatch");
    require(batch.cols() == rbm.visible(), "rbm_cd1_update: visible dimension mismatch");
    require(batch.allFinite(), "rbm_cd1_update: minibatch must be finite");
    require(lr > 0.0, "rbm_cd1_update: learning rate must be positive");

    const double n = static_cast<double>(batch.rows());
    const Eigen::MatrixXd h0 = hidden_mean(rbm, batch);

    Eigen::MatrixXd h_sample(h0.rows(), h0.cols());
    for (Eigen::Index r = 0; r < h0.rows(); ++r)
        for (Eigen::Index c = 0; c < h0.cols(); ++c)
            h_sample(r, c) = rng.uniform() < h0(r, c) ? 1.0 : 0.0;

    const Eigen::MatrixXd v1 = visible_mean(rbm, h_sample);
    const Eigen::MatrixXd h1 = hidden_mean(rbm, v1);

    const Eigen::MatrixXd grad_w = (batch.transpose() * h0 - v1.transpose() * h1) / n - cfg.weight_decay * rbm.weights;
    const Eigen::VectorXd grad_vb = (batch - v1).colwise().mean();
    const Eigen::VectorXd grad_hb = (h0 - h1).colwise().mean();

    state.w_vel = cfg.momentum * state.w_vel + lr * grad_w;
    state.vb_vel = cfg.momentum * state.vb_vel + lr * grad_vb;
    state.hb_vel = cfg.momentum * state.hb_vel + lr * grad_hb;

    rbm.weights += state.w_vel;
    rbm.visible_bias += state.vb_vel;
    rbm.hidden_bias += state.hb_vel;
}

} // namespace padloop
