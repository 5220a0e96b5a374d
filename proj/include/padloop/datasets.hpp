#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "padloop/common.hpp"
#include "padloop/features.hpp"
#include "padloop/sim.hpp"

namespace padloop {

// Affect-elicitation set: one labeled window per simulated stimulus
// presentation. Columns are samples.
struct ElicitationDataset {
    Eigen::MatrixXd features;  // n x m
    Eigen::MatrixXd labels;    // 3 x m, PAD in [1,9]
    FeatureMode mode = FeatureMode::EEG;

    void validate() const {
        require(features.cols() == labels.cols(), "ElicitationDataset: column counts differ");
        require(labels.rows() == 3, "ElicitationDataset: labels must have three rows");
        require(features.rows() == feature_dim(mode), "ElicitationDataset: feature rows do not match mode");
        require(features.allFinite() && labels.allFinite(), "ElicitationDataset: entries must be finite");
        require((labels.array() >= 1.0).all() && (labels.array() <= 9.0).all(),
                "ElicitationDataset: labels must lie in [1,9]");
    }
};

// Performance-induction set: one open-loop trial per column with its
// observed performance.
struct InductionDataset {
    Eigen::MatrixXd features;  // n x m
    Eigen::VectorXd qot;       // m, entries > 0
    FeatureMode mode = FeatureMode::EEG;

    void validate() const {
        require(features.cols() == qot.size(), "InductionDataset: column counts differ");
        require(features.rows() == feature_dim(mode), "InductionDataset: feature rows do not match mode");
        require(features.allFinite() && qot.allFinite(), "InductionDataset: entries must be finite");
        require((qot.array() > 0.0).all(), "InductionDataset: performance values must be positive");
    }
};

// Latin-hypercube PAD labels spanning [1,9]^3: per dimension, a seeded
// permutation of equal strata with uniform jitter inside each stratum.
inline Eigen::MatrixXd sample_pad_labels(int m, std::uint64_t seed) {
    require(m >= 1, "sample_pad_labels: m must be positive");
    Eigen::MatrixXd labels(3, m);
    for (int d = 0; d < 3; ++d) {
        Rng rng(Rng::derive(seed, 100 + d));
        std::vector<int> strata(m);
        for (int i = 0; i < m; ++i) strata[i] = i;
        for (int i = m - 1; i > 0; --i)
            std::swap(strata[i], strata[rng.uniform_int(static_cast<std::uint64_t>(i + 1))]);
        for (int i = 0; i < m; ++i)
            labels(d, i) = 1.0 + 8.0 * (strata[i] + rng.uniform()) / m;
    }
    return labels;
}

inline ElicitationDataset generate_elicitation(const SimConfig& sim, FeatureMode mode, int k_max,
                                               int m_f, std::uint64_t seed) {
    sim.validate();
    require(m_f >= 1, "generate_elicitation: m_f must be positive");

    ElicitationDataset out;
    out.mode = mode;
    out.labels = sample_pad_labels(m_f, seed);
    out.features.resize(feature_dim(mode), m_f);

    for (int i = 0; i < m_f; ++i) {
        OperatorState state = sim.init_state;
        state.pad = out.labels.col(i);
        Rng rng(Rng::derive(seed, 200000 + i));
        const EegWindow window = synth_eeg(state, sim.synth, rng);
        out.features.col(i) = extract_features(window, mode, k_max).values;
    }
    out.validate();
    return out;
}

// Open-loop fatigue trajectory: no stimulation, fatigue accumulates, state
// decays, and each trial's features/performance are recorded.
inline InductionDataset generate_induction(const SimConfig& sim, FeatureMode mode, int k_max, int m_b,
                                           std::uint64_t seed) {
    sim.validate();
    require(m_b >= 1, "generate_induction: m_b must be positive");

    InductionDataset out;
    out.mode = mode;
    out.features.resize(feature_dim(mode), m_b);
    out.qot.resize(m_b);

    Rng rng(Rng::derive(seed, 300000));
    OperatorState state = sim.init_state;
    for (int i = 0; i < m_b; ++i) {
        const EegWindow window = synth_eeg(state, sim.synth, rng);
        out.features.col(i) = extract_features(window, mode, k_max).values;
        const QotSample trial = perform_trial(state, sim.trial, rng);
        out.qot[i] = trial.q;
        state = operator_step(state, Eigen::Vector3d::Zero(), sim.op, rng);
    }
    out.validate();
    return out;
}

} // namespace padloop
