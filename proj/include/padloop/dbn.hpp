#pragma once

#include <vector>

#include <Eigen/Dense>

#include "padloop/common.hpp"
#include "padloop/rbm.hpp"

namespace padloop {

// Stack of RBMs forming the deterministic feature map. architecture() lists
// widths input-first, e.g. (14-20-20-20-20) has four layers.
struct DbnParams {
    std::vector<RbmLayer> layers;

    std::vector<int> architecture() const {
        std::vector<int> arch;
        if (layers.empty()) return arch;
        arch.push_back(static_cast<int>(layers.front().visible()));
        for (const auto& l : layers) arch.push_back(static_cast<int>(l.hidden()));
        return arch;
    }

    Eigen::Index input_dim() const { return layers.empty() ? 0 : layers.front().visible(); }
    Eigen::Index latent_dim() const { return layers.empty() ? 0 : layers.back().hidden(); }

    void validate() const {
        require(!layers.empty(), "DbnParams: at least one layer required");
        for (const auto& l : layers) l.validate();
        for (std::size_t k = 1; k < layers.size(); ++k)
            require(layers[k].visible() == layers[k - 1].hidden(),
                    "DbnParams: layer " + std::to_string(k) + " does not chain");
    }
};

// Per-dimension min-max scaling onto [0,1], fitted on training features.
// Queries are clamped into the training range; a dimension with zero spread
// maps to 0.5.
struct Normalizer {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    static Normalizer fit(const Eigen::MatrixXd& features /* dims x samples */) {
        require(features.cols() > 0 && features.rows() > 0, "Normalizer: empty feature matrix");
        require(features.allFinite(), "Normalizer: features must be finite");
        Normalizer n;
        n.lo = features.rowwise().minCoeff();
        n.hi = features.rowwise().maxCoeff();
        return n;
    }

    void validate() const {
        require(lo.size() == hi.size() && lo.size() > 0, "Normalizer: empty or mismatched bounds");
        require(((hi - lo).array() >= 0.0).all(), "Normalizer: hi must dominate lo");
    }

    Eigen::VectorXd transform(const Eigen::VectorXd& x) const {
        require(x.size() == lo.size(), "Normalizer: dimension mismatch");
        Eigen::VectorXd out(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double span = hi[i] - lo[i];
            out[i] = span < 1e-12 ? 0.5 : std::clamp((x[i] - lo[i]) / span, 0.0, 1.0);
        }
        return out;
    }

    Eigen::MatrixXd transform_all(const Eigen::MatrixXd& features /* dims x samples */) const {
        Eigen::MatrixXd out(features.rows(), features.cols());
        for (Eigen::Index c = 0; c < features.cols(); ++c)
            out.col(c) = transform(features.col(c));
        return out;
    }
};

// Mean-field forward pass; input is a single [0,1]-scaled feature vector.
inline Eigen::VectorXd forward(const DbnParams& dbn, const Eigen::VectorXd& e) {
    dbn.validate();
    require(e.size() == dbn.input_dim(), "forward: input dimension mismatch");
    Eigen::MatrixXd z = e.transpose();
    for (const auto& layer : dbn.layers) z = hidden_mean(layer, z);
    return z.transpose();
}

// Batch forward: columns are samples, returns latent columns.
inline Eigen::MatrixXd forward_all(const DbnParams& dbn, const Eigen::MatrixXd& e_cols) {
    dbn.validate();
    require(e_cols.rows() == dbn.input_dim(), "forward_all: input dimension mismatch");
    Eigen::MatrixXd z = e_cols.transpose();
    for (const auto& layer : dbn.layers) z = hidden_mean(layer, z);
    return z.transpose();
}

inline DbnParams init_dbn(const std::vector<int>& architecture, std::uint64_t seed) {
    require(architecture.size() >= 2, "init_dbn: architecture needs input and at least one hidden width");
    for (int w : architecture) require(w >= 1, "init_dbn: widths must be positive");
    DbnParams dbn;
    for (std::size_t k = 0; k + 1 < architecture.size(); ++k) {
        Rng rng(Rng::derive(seed, k));
        RbmLayer layer;
        layer.weights.resize(architecture[k], architecture[k + 1]);
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
                layer.weights(r, c) = 0.01 * rng.normal();
        layer.visible_bias = Eigen::VectorXd::Zero(architecture[k]);
        layer.hidden_bias = Eigen::VectorXd::Zero(architecture[k + 1]);
        dbn.layers.push_back(std::move(layer));
    }
    return dbn;
}

// Greedy layer-wise CD-1 pretraining. dataset columns are [0,1]-scaled
// samples; layer k trains on the hidden activation probabilities of layer
// k-1. First layer uses lr_first_layer, the rest lr_upper_layers.
inline DbnParams pretrain_dbn(const Eigen::MatrixXd& dataset /* dims x samples */,
                              const std::vector<int>& architecture, const TrainConfig& cfg) {
    cfg.validate();
    require(dataset.cols() > 0, "pretrain_dbn: empty dataset");
    require(!architecture.empty() && dataset.rows() == architecture[0],
            "pretrain_dbn: dataset rows must match architecture input width");
    require(dataset.allFinite(), "pretrain_dbn: dataset must be finite");
    require((dataset.array() >= 0.0).all() && (dataset.array() <= 1.0).all(),
            "pretrain_dbn: dataset must be scaled to [0,1]");

    DbnParams dbn = init_dbn(architecture, cfg.seed);
    const Eigen::Index m = dataset.cols();

    Eigen::MatrixXd data = dataset.transpose();  // samples x dims
    for (std::size_t k = 0; k < dbn.layers.size(); ++k) {
        RbmLayer& layer = dbn.layers[k];
        const double lr = (k == 0) ? cfg.lr_first_layer : cfg.lr_upper_layers;
        Cd1State state = Cd1State::zeros_like(layer);
        Rng rng(Rng::derive(cfg.seed, 1000 + k));

        std::vector<Eigen::Index> order(m);
        for (Eigen::Index i = 0; i < m; ++i) order[i] = i;

        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            // Fisher-Yates reshuffle each epoch
            for (Eigen::Index i = m - 1; i > 0; --i)
                std::swap(order[i], order[rng.uniform_int(static_cast<std::uint64_t>(i + 1))]);
            for (Eigen::Index start = 0; start < m; start += cfg.minibatch_size) {
                const Eigen::Index bs = std::min<Eigen::Index>(cfg.minibatch_size, m - start);
                Eigen::MatrixXd batch(bs, layer.visible());
                for (Eigen::Index b = 0; b < bs; ++b) batch.row(b) = data.row(order[start + b]);
                rbm_cd1_update(layer, batch, lr, cfg, rng, state);
            }
        }
        data = hidden_mean(layer, data);
    }
    return dbn;
}

// Mean top-layer free energy of the training set over that of the validation
// set; drifting away from 1 flags overfitting of the generative stack.
inline double free_energy_ratio(const DbnParams& dbn, const Eigen::MatrixXd& train /* dims x samples */,
                                const Eigen::MatrixXd& validation) {
    dbn.validate();
    require(train.cols() > 0 && validation.cols() > 0, "free_energy_ratio: empty set");
    require(train.rows() == dbn.input_dim() && validation.rows() == dbn.input_dim(),
            "free_energy_ratio: dimension mismatch");

    auto to_top = [&](const Eigen::MatrixXd& set) {
        Eigen::MatrixXd z = set.transpose();
        for (std::size_t k = 0; k + 1 < dbn.layers.size(); ++k) z = hidden_mean(dbn.layers[k], z);
        return z;
    };
    const double num = free_energy(dbn.layers.back(), to_top(train)).mean();
    const double den = free_energy(dbn.layers.back(), to_top(validation)).mean();
    if (den == 0.0) throw numerical_failure("free_energy_ratio: validation free energy is zero");
    return num / den;
}

} // namespace padloop
