#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "padloop/common.hpp"
#include "padloop/fuzzy.hpp"
#include "padloop/gp.hpp"

namespace padloop {

struct Stimulus {
    int id = 0;
    Eigen::Vector3d pad = Eigen::Vector3d::Zero();  // absolute 1-9 rating; null entry is all-zero
};

// Finite stimulus set. Entry id 0 is the mandatory null (no-stimulus) event
// with an all-zero rating; all other entries carry absolute PAD ratings.
struct StimulusLibrary {
    std::vector<Stimulus> entries;

    void validate() const {
        require(!entries.empty(), "StimulusLibrary: must not be empty");
        bool has_null = false;
        for (const auto& s : entries) {
            require(s.id >= 0, "StimulusLibrary: ids must be non-negative");
            if (s.id == 0) {
                require(s.pad.isZero(0.0), "StimulusLibrary: null entry must have zero rating");
                has_null = true;
            } else {
                require((s.pad.array() >= 1.0).all() && (s.pad.array() <= 9.0).all(),
                        "StimulusLibrary: ratings must lie in [1,9]");
            }
        }
        require(has_null, "StimulusLibrary: null entry (id 0) required");
        for (std::size_t i = 0; i < entries.size(); ++i)
            for (std::size_t j = i + 1; j < entries.size(); ++j)
                require(entries[i].id != entries[j].id, "StimulusLibrary: duplicate id");
    }

    const Stimulus& null_entry() const {
        for (const auto& s : entries)
            if (s.id == 0) return s;
        throw invalid_input("StimulusLibrary: null entry missing");
    }

    const Stimulus& by_id(int id) const {
        for (const auto& s : entries)
            if (s.id == id) return s;
        throw invalid_input("StimulusLibrary: no stimulus with id " + std::to_string(id));
    }
};

struct ControlAction {
    Eigen::Vector3d pad_value = Eigen::Vector3d::Zero();  // defuzzified differential action
    int stimulus_id = 0;
    int gate = 0;
};

// Everything the controller needs: thresholds, neutral point, fuzzy
// partitions, rule table, action centers, and the stimulus library. The
// action centers are differential PAD units; the selected stimulus targets
// f_r + u_hat on the absolute scale.
struct ControllerConfig {
    double q_r = 1.0;
    double beta_r = 0.9;
    Eigen::Vector3d f_r = Eigen::Vector3d::Constant(4.5);
    FuzzyPartition error_partition = FuzzyPartition::symmetric(1.0);
    FuzzyPartition delta_partition = FuzzyPartition::symmetric(0.5);
    RuleTable table;
    std::array<Eigen::Vector3d, kNumActionLabels> centers;
    StimulusLibrary library;

    void validate() const {
        require(finite(q_r) && q_r > 0.0, "ControllerConfig: q_r must be positive");
        require(finite(beta_r) && beta_r > 0.0 && beta_r < 1.0, "ControllerConfig: beta_r must be in (0,1)");
        require(f_r.allFinite(), "ControllerConfig: f_r must be finite");
        error_partition.validate();
        delta_partition.validate();
        table.validate();
        require(centers[0].isZero(0.0), "ControllerConfig: Z center must be zero");
        for (const auto& c : centers) require(c.allFinite(), "ControllerConfig: centers must be finite");
        library.validate();
    }

    static ControllerConfig defaults();
};

inline ControllerConfig ControllerConfig::defaults() {
    ControllerConfig cfg;
    // row = error label (NB..PB), column = delta label (NB..PB); graded from
    // the largest action at (NB,NB) to none on the non-negative quadrant
    const std::array<std::array<const char*, 5>, 5> grid = {{
        {"LL", "L", "M", "M", "M"},
        {"L", "M", "S", "S", "S"},
        {"M", "S", "Z", "Z", "Z"},
        {"S", "N", "Z", "Z", "Z"},
        {"N", "N", "Z", "Z", "Z"},
    }};
    for (int i = 0; i < kNumInputLabels; ++i)
        for (int j = 0; j < kNumInputLabels; ++j)
            cfg.table.cells[i][j] = action_label_index(grid[i][j]);

    const std::array<double, kNumActionLabels> magnitude = {0.0, 0.5, 1.0, 2.0, 3.0, 4.0};
    for (int l = 0; l < kNumActionLabels; ++l)
        cfg.centers[l] = Eigen::Vector3d::Constant(magnitude[l]);

    cfg.library.entries = {
        {0, {0.0, 0.0, 0.0}},
        {1, {5.0, 5.0, 5.0}},
        {2, {5.5, 5.5, 5.5}},
        {3, {6.5, 6.0, 6.0}},
        {4, {7.5, 7.0, 7.0}},
        {5, {8.5, 8.0, 8.0}},
        {6, {6.0, 6.5, 6.5}},
        {7, {7.0, 7.5, 7.5}},
        {8, {8.0, 8.5, 8.5}},
    };
    cfg.validate();
    return cfg;
}

// Markov-bound standardized error: mean performance relative to the target,
// shifted by the gate threshold.
inline double standardized_error(double q_mean, const ControllerConfig& cfg) {
    require(finite(q_mean), "standardized_error: q_mean must be finite");
    return q_mean / cfg.q_r - cfg.beta_r;
}

// Backward difference of the standardized error; defined as zero on the
// first step.
inline double delta_error(double eps, std::optional<double> prev_eps) {
    require(finite(eps), "delta_error: eps must be finite");
    if (!prev_eps.has_value()) return 0.0;
    require(finite(*prev_eps), "delta_error: prev_eps must be finite");
    return eps - *prev_eps;
}

// Stimulation fires only while the estimated chance of meeting the target
// stays strictly below the confidence threshold.
inline int gate(double prob, const ControllerConfig& cfg) {
    require(finite(prob) && prob >= 0.0 && prob <= 1.0, "gate: prob must be in [0,1]");
    return prob < cfg.beta_r ? 1 : 0;
}

// Nearest library entry to the absolute target f_r + u_hat; ties break to
// the lowest id. A closed gate always selects the null entry.
inline ControlAction select_stimulus(const Eigen::Vector3d& u_hat, const StimulusLibrary& lib,
                                     int gate_value, const Eigen::Vector3d& f_r) {
    lib.validate();
    require(u_hat.allFinite(), "select_stimulus: u_hat must be finite");
    require(gate_value == 0 || gate_value == 1, "select_stimulus: gate must be 0 or 1");

    ControlAction action;
    action.pad_value = u_hat;
    action.gate = gate_value;
    if (gate_value == 0 || u_hat.isZero(0.0)) {
        action.stimulus_id = lib.null_entry().id;
        return action;
    }

    const Eigen::Vector3d target = f_r + u_hat;
    double best = std::numeric_limits<double>::infinity();
    int best_id = lib.null_entry().id;
    // scan in ascending id order so equal distances keep the lowest id
    std::vector<const Stimulus*> sorted;
    for (const auto& s : lib.entries) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](const Stimulus* a, const Stimulus* b) { return a->id < b->id; });
    for (const Stimulus* s : sorted) {
        if (s->id == 0) continue;  // null entry competes only via the gate
        const double d = (s->pad - target).norm();
        if (d < best) {
            best = d;
            best_id = s->id;
        }
    }
    action.stimulus_id = best_id;
    return action;
}

struct ControllerStep {
    ControlAction action;
    double eps = 0.0;
    double delta_eps = 0.0;
    double prob = 0.0;
    Tau6 tau{};
};

// Full decision sequence for one step: gate from the survival probability,
// fuzzy inference on (eps, delta eps), centroid action, stimulus match.
inline ControllerStep controller_step(const QotPosterior& qot, std::optional<double> prev_eps,
                                      const ControllerConfig& cfg) {
    cfg.validate();
    qot.validate();

    ControllerStep step;
    step.prob = prob_q_at_least(qot, cfg.q_r);
    const int g = gate(step.prob, cfg);
    step.eps = standardized_error(qot.mean, cfg);
    step.delta_eps = delta_error(step.eps, prev_eps);

    const Membership5 mu = fuzzify(step.eps, cfg.error_partition);
    const Membership5 pi = fuzzify(step.delta_eps, cfg.delta_partition);
    step.tau = fuzzy_infer(mu, pi, cfg.table);
    const Eigen::Vector3d u_hat = defuzzify(step.tau, cfg.centers);
    step.action = select_stimulus(u_hat, cfg.library, g, cfg.f_r);
    return step;
}

} // namespace padloop
