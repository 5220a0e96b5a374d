#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "padloop/common.hpp"
#include "padloop/controller.hpp"
#include "padloop/features.hpp"
#include "padloop/gp.hpp"
#include "padloop/sim.hpp"

namespace padloop {

struct LoopStep {
    int k = 0;
    Eigen::VectorXd features;
    PadPosterior pad_post;
    QotPosterior qot_post;
    double prob = 0.0;       // P{q >= q_r} under the estimate
    double eps = 0.0;
    double delta_eps = 0.0;
    int gate = 0;
    int action_id = 0;
    Eigen::Vector3d u_hat = Eigen::Vector3d::Zero();
    Eigen::Vector3d true_pad = Eigen::Vector3d::Zero();  // state the window was synthesized from
    double true_fatigue = 0.0;
    double true_q = 0.0;     // trial outcome after the action took effect
};

struct LoopTrace {
    std::vector<LoopStep> steps;
    std::uint64_t seed = 0;
    bool control_enabled = false;
    FeatureMode mode = FeatureMode::EEG;
    double q_r = 0.0;
    bool aborted = false;
    std::string abort_reason;
};

// One closed-loop episode. Per step: synthesize a window from the current
// state, estimate PAD and performance, decide a stimulus (null when control
// is off or the gate is closed), apply it to the operator, then run the
// trial under the updated state. A step failure flags the trace and keeps
// the portion recorded so far.
inline LoopTrace run_closed_loop(const PadGpModel& pad_model, const PerfGpModel& perf_model,
                                 const ControllerConfig& ctrl, const SimConfig& sim, FeatureMode mode,
                                 int k_max, int horizon, bool control_enabled, std::uint64_t seed) {
    require(horizon >= 1, "run_closed_loop: horizon must be at least 1");
    ctrl.validate();
    sim.validate();

    LoopTrace trace;
    trace.seed = seed;
    trace.control_enabled = control_enabled;
    trace.mode = mode;
    trace.q_r = ctrl.q_r;
    trace.steps.reserve(horizon);

    Rng rng(Rng::derive(seed, 42));
    OperatorState state = sim.init_state;
    std::optional<double> prev_eps;

    for (int k = 0; k < horizon; ++k) {
        try {
            LoopStep step;
            step.k = k;
            step.true_pad = state.pad;
            step.true_fatigue = state.fatigue;

            const EegWindow window = synth_eeg(state, sim.synth, rng);
            const FeatureVector feats = extract_features(window, mode, k_max);
            step.features = feats.values;
            step.pad_post = pad_posterior(pad_model, feats.values);
            step.qot_post = qot_posterior(perf_model, step.pad_post);

            Eigen::Vector3d applied = Eigen::Vector3d::Zero();
            if (control_enabled) {
                const ControllerStep decision = controller_step(step.qot_post, prev_eps, ctrl);
                step.prob = decision.prob;
                step.eps = decision.eps;
                step.delta_eps = decision.delta_eps;
                step.gate = decision.action.gate;
                step.action_id = decision.action.stimulus_id;
                step.u_hat = decision.action.pad_value;
                if (decision.action.stimulus_id != 0)
                    applied = ctrl.library.by_id(decision.action.stimulus_id).pad - ctrl.f_r;
            } else {
                step.prob = prob_q_at_least(step.qot_post, ctrl.q_r);
                step.eps = standardized_error(step.qot_post.mean, ctrl);
                step.delta_eps = delta_error(step.eps, prev_eps);
                step.gate = 0;
                step.action_id = 0;
            }
            prev_eps = step.eps;

            state = operator_step(state, applied, sim.op, rng);
            const QotSample trial = perform_trial(state, sim.trial, rng);
            step.true_q = trial.q;

            trace.steps.push_back(std::move(step));
        } catch (const error& e) {
            trace.aborted = true;
            trace.abort_reason = e.what();
            break;
        }
    }
    return trace;
}

} // namespace padloop
