#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <padloop/common.hpp>
#include <padloop/datasets.hpp>
#include <padloop/dbn.hpp>
#include <padloop/gp.hpp>
#include <padloop/loop.hpp>
#include <padloop/sim.hpp>
#include <padloop/stats.hpp>

using namespace padloop;

namespace {

OperatorParams quiet_op() {
    OperatorParams p;
    p.pad_noise_std = 0.0;
    return p;
}

TrialParams quiet_trial() {
    TrialParams p;
    p.noise_std = 0.0;
    return p;
}

// small but complete estimation stack for loop tests
PadGpModel tiny_pad_model(FeatureMode mode, std::uint64_t seed) {
    const SimConfig sim = SimConfig::defaults();
    const ElicitationDataset ds = generate_elicitation(sim, mode, 8, 16, seed);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = seed;
    const Normalizer norm = Normalizer::fit(ds.features);
    const std::vector<int> arch = {feature_dim(mode), 12, 8};
    const DbnParams dbn = pretrain_dbn(norm.transform_all(ds.features), arch, cfg);
    std::array<KernelParams, 3> kernels;
    kernels.fill(KernelParams{1.0, 1.0, 1e-3});
    return fit_pad_gp(dbn, norm, ds.features, ds.labels, kernels);
}

PerfGpModel tiny_perf_model(double q_scale) {
    Eigen::MatrixXd pad(3, 5);
    pad << 2, 3.5, 5, 6.5, 8,
           2, 3.5, 5, 6.5, 8,
           2, 3.5, 5, 6.5, 8;
    Eigen::VectorXd q(5);
    q << 0.2, 0.3, 0.35, 0.4, 0.5;
    q *= q_scale;
    return make_perf_gp(pad, q, KernelParams{0.5, 4.0, 1e-3});
}

} // namespace

// ----------------------------------------------------------- operator model

TEST_CASE("operator baseline interpolates between fresh and exhausted") {
    const OperatorParams p = quiet_op();
    REQUIRE(p.baseline(0.0) == Catch::Approx(6.0).margin(1e-15));
    REQUIRE(p.baseline(1.0) == Catch::Approx(2.0).margin(1e-15));
    REQUIRE(p.baseline(0.5) == Catch::Approx(4.0).margin(1e-15));
}

TEST_CASE("noise-free operator step matches the update formula") {
    const OperatorParams p = quiet_op();
    OperatorState s;
    s.pad = Eigen::Vector3d(5.0, 7.0, 3.0);
    s.fatigue = 0.3;
    Rng rng(1);
    const Eigen::Vector3d action(1.0, 0.0, -0.5);
    const OperatorState next = operator_step(s, action, p, rng);
    const double base = 6.0 - 0.3 * 4.0;  // 4.8
    for (int i = 0; i < 3; ++i) {
        const double want = s.pad[i] + 0.15 * (base - s.pad[i]) + 0.6 * action[i];
        REQUIRE(next.pad[i] == Catch::Approx(want).margin(1e-14));
    }
    REQUIRE(next.fatigue == Catch::Approx(0.3 + 1.0 / 150.0).margin(1e-15));
    REQUIRE(next.time_index == 1);
}

TEST_CASE("operator state at its baseline is a fixed point without actions") {
    const OperatorParams p = quiet_op();
    OperatorState s;
    s.pad = Eigen::Vector3d::Constant(6.0);
    s.fatigue = 0.0;
    OperatorParams frozen = p;
    frozen.fatigue_per_step = 0.0;
    Rng rng(1);
    const OperatorState next = operator_step(s, Eigen::Vector3d::Zero(), frozen, rng);
    REQUIRE((next.pad - s.pad).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("operator step clamps affect to the rating scale") {
    const OperatorParams p = quiet_op();
    OperatorState s;
    s.pad = Eigen::Vector3d::Constant(8.8);
    Rng rng(1);
    const OperatorState up = operator_step(s, Eigen::Vector3d::Constant(4.0), p, rng);
    REQUIRE((up.pad.array() == 9.0).all());
    s.pad = Eigen::Vector3d::Constant(1.2);
    const OperatorState down = operator_step(s, Eigen::Vector3d::Constant(-4.0), p, rng);
    REQUIRE((down.pad.array() == 1.0).all());
}

TEST_CASE("positive actions raise affect relative to no action") {
    const OperatorParams p = quiet_op();
    OperatorState s;
    s.pad = Eigen::Vector3d::Constant(5.0);
    Rng a(1), b(1);
    const OperatorState with = operator_step(s, Eigen::Vector3d::Constant(1.0), p, a);
    const OperatorState without = operator_step(s, Eigen::Vector3d::Zero(), p, b);
    REQUIRE((with.pad.array() > without.pad.array()).all());
    REQUIRE(with.pad[0] - without.pad[0] == Catch::Approx(0.6).margin(1e-14));
}

TEST_CASE("operator noise is reproducible under the same stream") {
    OperatorParams p;  // defaults keep pad_noise_std 0.05
    OperatorState s;
    Rng a(7), b(7), c(8);
    const OperatorState r1 = operator_step(s, Eigen::Vector3d::Zero(), p, a);
    const OperatorState r2 = operator_step(s, Eigen::Vector3d::Zero(), p, b);
    const OperatorState r3 = operator_step(s, Eigen::Vector3d::Zero(), p, c);
    REQUIRE((r1.pad - r2.pad).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((r1.pad - r3.pad).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("operator step validates its inputs") {
    const OperatorParams p = quiet_op();
    OperatorState s;
    s.pad = Eigen::Vector3d::Constant(11.0);
    Rng rng(1);
    REQUIRE_THROWS_AS(operator_step(s, Eigen::Vector3d::Zero(), p, rng), invalid_input);
    s.pad = Eigen::Vector3d::Constant(5.0);
    s.fatigue = -0.1;
    REQUIRE_THROWS_AS(operator_step(s, Eigen::Vector3d::Zero(), p, rng), invalid_input);
}

// ------------------------------------------------------------- trial model

TEST_CASE("quality of tracking is the harmonic composition of both indices") {
    REQUIRE(qot(1.0, 1.0, 100.0) == Catch::Approx(1.0).margin(1e-15));
    REQUIRE(qot(0.5, 1.5, 100.0) == Catch::Approx(1.0).margin(1e-15));
    REQUIRE(qot(4.0, 4.0, 100.0) == Catch::Approx(0.25).margin(1e-15));
    REQUIRE(qot(0.0, 0.0, 100.0) == 100.0);         // perfect tracking hits the cap
    REQUIRE(qot(1e-9, 1e-9, 100.0) == 100.0);       // near-perfect too
    REQUIRE(qot(2.0, 0.0, 100.0) == Catch::Approx(1.0).margin(1e-15));
    REQUIRE_THROWS_AS(qot(-1.0, 1.0, 100.0), invalid_input);
    REQUIRE_THROWS_AS(qot(1.0, 1.0, 0.0), invalid_input);
}

TEST_CASE("noise-free trial follows the lognormal mean model") {
    const TrialParams p = quiet_trial();
    OperatorState s;
    s.pad = Eigen::Vector3d(6.0, 7.0, 5.0);  // mean 6, pad score 0.25
    s.fatigue = 0.5;
    s.skill = 0.5;
    Rng rng(1);
    const QotSample t = perform_trial(s, p, rng);
    const double log_level = 1.2 * 0.5 - 0.8 * 0.25 - 0.3 * 0.5;
    REQUIRE(t.p1 == Catch::Approx(std::exp(log_level)).epsilon(1e-12));
    REQUIRE(t.p2 == Catch::Approx(std::exp(log_level)).epsilon(1e-12));
    REQUIRE(t.q == Catch::Approx(std::exp(-log_level)).epsilon(1e-12));
}

TEST_CASE("fresh positive operators outperform exhausted negative ones") {
    const TrialParams p = quiet_trial();
    OperatorState best, worst;
    best.pad = Eigen::Vector3d::Constant(9.0);
    best.fatigue = 0.0;
    best.skill = 1.0;
    worst.pad = Eigen::Vector3d::Constant(1.0);
    worst.fatigue = 1.0;
    worst.skill = 0.0;
    Rng a(1), b(1);
    const double q_best = perform_trial(best, p, a).q;
    const double q_worst = perform_trial(worst, p, b).q;
    REQUIRE(q_best == Catch::Approx(std::exp(1.1)).epsilon(1e-12));
    REQUIRE(q_worst == Catch::Approx(std::exp(-2.0)).epsilon(1e-12));
    REQUIRE(q_best > q_worst);
}

TEST_CASE("difficulty scales both error indices") {
    const TrialParams p = quiet_trial();
    OperatorState s;
    Rng a(1), b(1);
    const QotSample easy = perform_trial(s, p, a, 1.0);
    const QotSample hard = perform_trial(s, p, b, 2.0);
    REQUIRE(hard.p1 == Catch::Approx(2.0 * easy.p1).epsilon(1e-12));
    REQUIRE(hard.q == Catch::Approx(0.5 * easy.q).epsilon(1e-12));
    Rng c(1);
    REQUIRE_THROWS_AS(perform_trial(s, p, c, 0.0), invalid_input);
}

// ------------------------------------------------------------ EEG synthesis

TEST_CASE("synthesized windows have the right shape and scale") {
    const SynthParams p = SimConfig::defaults().synth;
    OperatorState s;
    Rng rng(3);
    const EegWindow w = synth_eeg(s, p, rng);
    REQUIRE(w.samples.rows() == kNumChannels);
    REQUIRE(w.samples.cols() == kWindowSamples);
    REQUIRE(w.sample_rate == Catch::Approx(kSampleRate));
    for (int c = 0; c < kNumChannels; ++c) {
        const double rms = std::sqrt(w.samples.row(c).squaredNorm() / kWindowSamples);
        REQUIRE(rms == Catch::Approx(20.0).epsilon(1e-9));
    }
}

TEST_CASE("EEG synthesis is deterministic in the stream") {
    const SynthParams p = SimConfig::defaults().synth;
    OperatorState s;
    Rng a(5), b(5), c(6);
    const EegWindow w1 = synth_eeg(s, p, a);
    const EegWindow w2 = synth_eeg(s, p, b);
    const EegWindow w3 = synth_eeg(s, p, c);
    REQUIRE((w1.samples - w2.samples).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((w1.samples - w3.samples).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("masked channels carry the affect signal in their band dimension") {
    // the alpha-band coordinate is the strongest arousal carrier: the direct
    // alpha tilt plus the leakage of the posterior beta tilt move the measured
    // FD of the alpha reconstruction by ~0.03 across the arousal range, an
    // order of magnitude above unmasked channels. (the gamma-band
    // reconstruction saturates the Higuchi clamp at 2.0, so that dim is flat.)
    const SimConfig sim = SimConfig::defaults();
    OperatorState hi, lo;
    hi.pad = Eigen::Vector3d(5.0, 9.0, 5.0);  // arousal extremes
    lo.pad = Eigen::Vector3d(5.0, 1.0, 5.0);
    double masked_diff = 0.0, unmasked_diff = 0.0;
    const int reps = 6;
    for (int r = 0; r < reps; ++r) {
        Rng ra(100 + r), rb(100 + r);
        const FeatureVector fh = extract_features(synth_eeg(hi, sim.synth, ra), FeatureMode::BANDS, 8);
        const FeatureVector fl = extract_features(synth_eeg(lo, sim.synth, rb), FeatureMode::BANDS, 8);
        masked_diff += (fh.values[5 * 4 + 1] - fl.values[5 * 4 + 1]) / reps;    // channel 5 alpha
        unmasked_diff += (fh.values[3 * 4 + 1] - fl.values[3 * 4 + 1]) / reps;  // channel 3 alpha
    }
    REQUIRE(masked_diff > 0.02);
    REQUIRE(masked_diff > 4.0 * std::abs(unmasked_diff));
}

TEST_CASE("valence lateralizes the frontal theta coordinate") {
    const SimConfig sim = SimConfig::defaults();
    OperatorState hi, lo;
    hi.pad = Eigen::Vector3d(9.0, 5.0, 5.0);
    lo.pad = Eigen::Vector3d(1.0, 5.0, 5.0);
    double left = 0.0, right = 0.0;
    const int reps = 6;
    for (int r = 0; r < reps; ++r) {
        Rng ra(200 + r), rb(200 + r);
        const FeatureVector fh = extract_features(synth_eeg(hi, sim.synth, ra), FeatureMode::BANDS, 8);
        const FeatureVector fl = extract_features(synth_eeg(lo, sim.synth, rb), FeatureMode::BANDS, 8);
        left += (fh.values[1 * 4 + 0] - fl.values[1 * 4 + 0]) / reps;    // F7 theta
        right += (fh.values[12 * 4 + 0] - fl.values[12 * 4 + 0]) / reps; // F8 theta
    }
    REQUIRE(left > 0.002);
    REQUIRE(right < -0.002);
}

TEST_CASE("dominance lowers the fronto-central roughness") {
    // the dominance carrier is a fronto-central beta tilt; the decimated beta
    // reconstruction folds it mostly into the alpha coordinate with a negative
    // sign, so high dominance reads as smoother fronto-central alpha.
    const SimConfig sim = SimConfig::defaults();
    OperatorState hi, lo;
    hi.pad = Eigen::Vector3d(5.0, 5.0, 9.0);
    lo.pad = Eigen::Vector3d(5.0, 5.0, 1.0);
    double masked = 0.0, unmasked = 0.0;
    const int reps = 6;
    for (int r = 0; r < reps; ++r) {
        Rng ra(400 + r), rb(400 + r);
        const FeatureVector fh = extract_features(synth_eeg(hi, sim.synth, ra), FeatureMode::BANDS, 8);
        const FeatureVector fl = extract_features(synth_eeg(lo, sim.synth, rb), FeatureMode::BANDS, 8);
        masked += (fh.values[3 * 4 + 1] - fl.values[3 * 4 + 1]) / reps;    // FC5 alpha
        unmasked += (fh.values[5 * 4 + 1] - fl.values[5 * 4 + 1]) / reps;  // P7 alpha
    }
    REQUIRE(masked < -0.012);
    REQUIRE(std::abs(masked) > 4.0 * std::abs(unmasked));
}

TEST_CASE("arousal moves the broadband dimension of masked channels") {
    const SimConfig sim = SimConfig::defaults();
    OperatorState hi, lo;
    hi.pad = Eigen::Vector3d(5.0, 9.0, 5.0);
    lo.pad = Eigen::Vector3d(5.0, 1.0, 5.0);
    double diff = 0.0;
    const int reps = 6;
    for (int r = 0; r < reps; ++r) {
        Rng ra(300 + r), rb(300 + r);
        const FeatureVector fh = extract_features(synth_eeg(hi, sim.synth, ra), FeatureMode::EEG, 8);
        const FeatureVector fl = extract_features(synth_eeg(lo, sim.synth, rb), FeatureMode::EEG, 8);
        diff += (fh.values[5] - fl.values[5]) / reps;  // channel 5 sits in both arousal masks
    }
    REQUIRE(diff > 0.003);
}

TEST_CASE("high arousal raises the spectral roughness of the gamma band") {
    // the Higuchi estimate of the decimated gamma reconstruction pins at the
    // clamp, so probe the gamma encoding where it lives: the power-law slope
    // of the raw window's periodogram over 32..64 Hz. With amplitude
    // proportional to f^(-g/2) the log-log slope recovers -g, and the
    // synthesis maps roughness r to g = 5 - 2r, so r = (5 - g) / 2.
    const SimConfig sim = SimConfig::defaults();
    const int n = kWindowSamples;
    const auto spectral_fd = [&](const Eigen::VectorXd& x) {
        std::vector<double> lf, lp;
        for (int k = 0; k < n / 2; ++k) {
            const double f = kSampleRate * k / static_cast<double>(n);
            if (f < 32.0 || f > 64.0) continue;
            double re = 0.0, im = 0.0;
            for (int t = 0; t < n; ++t) {
                const double w = 2.0 * M_PI * k * t / n;
                re += x[t] * std::cos(w);
                im -= x[t] * std::sin(w);
            }
            lf.push_back(std::log(f));
            lp.push_back(std::log(re * re + im * im));
        }
        const int m = static_cast<int>(lf.size());
        double mf = 0.0, mp = 0.0;
        for (int i = 0; i < m; ++i) mf += lf[i] / m, mp += lp[i] / m;
        double num = 0.0, den = 0.0;
        for (int i = 0; i < m; ++i) {
            num += (lf[i] - mf) * (lp[i] - mp);
            den += (lf[i] - mf) * (lf[i] - mf);
        }
        const double g = -num / den;
        return (5.0 - g) / 2.0;
    };
    OperatorState hi, lo;
    hi.pad = Eigen::Vector3d(5.0, 8.0, 5.0);
    lo.pad = Eigen::Vector3d(5.0, 2.0, 5.0);
    double mean_hi = 0.0, mean_lo = 0.0;
    const int seeds = 100;
    for (int r = 0; r < seeds; ++r) {
        Rng ra(500 + r), rb(500 + r);
        mean_hi += spectral_fd(synth_eeg(hi, sim.synth, ra).samples.row(5)) / seeds;
        mean_lo += spectral_fd(synth_eeg(lo, sim.synth, rb).samples.row(5)) / seeds;
    }
    REQUIRE(mean_hi > mean_lo);
    REQUIRE(mean_hi - mean_lo > 0.3);
}

// -------------------------------------------------------------- generators

TEST_CASE("latin hypercube labels occupy one stratum per sample and dimension") {
    const int m = 16;
    const Eigen::MatrixXd labels = sample_pad_labels(m, 11);
    REQUIRE(labels.rows() == 3);
    REQUIRE(labels.cols() == m);
    REQUIRE((labels.array() >= 1.0).all());
    REQUIRE((labels.array() <= 9.0).all());
    for (int d = 0; d < 3; ++d) {
        std::vector<bool> seen(m, false);
        for (int i = 0; i < m; ++i) {
            const int stratum = static_cast<int>((labels(d, i) - 1.0) * m / 8.0);
            REQUIRE(stratum >= 0);
            REQUIRE(stratum < m);
            REQUIRE_FALSE(seen[stratum]);
            seen[stratum] = true;
        }
    }
    REQUIRE((sample_pad_labels(m, 11) - labels).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((sample_pad_labels(m, 12) - labels).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("elicitation sets are labeled, bounded, and reproducible") {
    const SimConfig sim = SimConfig::defaults();
    const ElicitationDataset ds = generate_elicitation(sim, FeatureMode::EEG, 8, 50, 5);
    REQUIRE_NOTHROW(ds.validate());
    REQUIRE(ds.features.rows() == 14);
    REQUIRE(ds.features.cols() == 50);
    REQUIRE((ds.features.array() >= 1.0).all());
    REQUIRE((ds.features.array() <= 2.0).all());
    for (int d = 0; d < 3; ++d) {
        REQUIRE(ds.labels.row(d).minCoeff() <= 2.0);  // stratification covers the scale
        REQUIRE(ds.labels.row(d).maxCoeff() >= 8.0);
    }
    const ElicitationDataset again = generate_elicitation(sim, FeatureMode::EEG, 8, 50, 5);
    REQUIRE((again.features - ds.features).cwiseAbs().maxCoeff() == 0.0);
    const ElicitationDataset bands = generate_elicitation(sim, FeatureMode::BANDS, 8, 4, 5);
    REQUIRE(bands.features.rows() == 56);
}

TEST_CASE("induction runs show performance decaying with accumulated fatigue") {
    const SimConfig sim = SimConfig::defaults();
    const InductionDataset ds = generate_induction(sim, FeatureMode::EEG, 8, 60, 0);
    REQUIRE_NOTHROW(ds.validate());
    REQUIRE(ds.qot.size() == 60);
    REQUIRE((ds.qot.array() > 0.0).all());
    Eigen::VectorXd idx(60);
    for (int i = 0; i < 60; ++i) idx[i] = i;
    const SpearmanResult sr = spearman(ds.qot, idx, 2000, 0);
    REQUIRE(sr.r < 0.0);
    REQUIRE(sr.p_one_tailed < 0.05);
    const InductionDataset again = generate_induction(sim, FeatureMode::EEG, 8, 60, 0);
    REQUIRE((again.qot - ds.qot).cwiseAbs().maxCoeff() == 0.0);
}

// -------------------------------------------------------------- closed loop

TEST_CASE("closed loop records a full deterministic trace") {
    const PadGpModel pad = tiny_pad_model(FeatureMode::EEG, 17);
    const PerfGpModel perf = tiny_perf_model(1.0);
    const ControllerConfig ctrl = ControllerConfig::defaults();
    const SimConfig sim = SimConfig::defaults();
    const LoopTrace t = run_closed_loop(pad, perf, ctrl, sim, FeatureMode::EEG, 8, 10, true, 9);
    REQUIRE_FALSE(t.aborted);
    REQUIRE(t.steps.size() == 10);
    REQUIRE(t.control_enabled);
    REQUIRE(t.seed == 9);
    REQUIRE(t.q_r == ctrl.q_r);
    for (int k = 0; k < 10; ++k) {
        const LoopStep& s = t.steps[k];
        REQUIRE(s.k == k);
        REQUIRE(s.features.size() == 14);
        REQUIRE(s.prob >= 0.0);
        REQUIRE(s.prob <= 1.0);
        REQUIRE(s.true_q > 0.0);
        if (s.action_id != 0) REQUIRE(s.gate == 1);
        if (s.gate == 0) REQUIRE(s.action_id == 0);
    }
    REQUIRE(t.steps[0].true_pad == sim.init_state.pad);
    REQUIRE(t.steps[0].true_fatigue == 0.0);
    REQUIRE(t.steps[3].true_fatigue == Catch::Approx(3.0 / 150.0).margin(1e-12));
    // delta chain: first step zero, then backward differences of eps
    REQUIRE(t.steps[0].delta_eps == 0.0);
    for (int k = 1; k < 10; ++k)
        REQUIRE(t.steps[k].delta_eps ==
                Catch::Approx(t.steps[k].eps - t.steps[k - 1].eps).margin(1e-12));
    const LoopTrace u = run_closed_loop(pad, perf, ctrl, sim, FeatureMode::EEG, 8, 10, true, 9);
    for (int k = 0; k < 10; ++k) {
        REQUIRE(u.steps[k].true_q == t.steps[k].true_q);
        REQUIRE((u.steps[k].features - t.steps[k].features).cwiseAbs().maxCoeff() == 0.0);
    }
    const LoopTrace v = run_closed_loop(pad, perf, ctrl, sim, FeatureMode::EEG, 8, 10, true, 10);
    REQUIRE(v.steps[9].true_q != t.steps[9].true_q);
}

TEST_CASE("pessimistic estimates keep the gate open and fire stimuli") {
    const PadGpModel pad = tiny_pad_model(FeatureMode::EEG, 17);
    const PerfGpModel perf = tiny_perf_model(1.0);  // estimates well below the target
    const ControllerConfig ctrl = ControllerConfig::defaults();
    const SimConfig sim = SimConfig::defaults();
    const LoopTrace on = run_closed_loop(pad, perf, ctrl, sim, FeatureMode::EEG, 8, 12, true, 21);
    REQUIRE_FALSE(on.aborted);
    int fired = 0;
    for (const auto& s : on.steps) fired += s.action_id != 0 ? 1 : 0;
    REQUIRE(fired > 0);
    const LoopTrace off = run_closed_loop(pad, perf, ctrl, sim, FeatureMode::EEG, 8, 12, false, 21);
    for (const auto& s : off.steps) {
        REQUIRE(s.gate == 0);
        REQUIRE(s.action_id == 0);
        REQUIRE(s.u_hat.isZero(0.0));
        REQUIRE(s.prob <= 1.0);  // estimate chain still populated
    }
    // stimulated operator ends with higher affect than the drifting one
    REQUIRE(on.steps.back().true_pad.mean() > off.steps.back().true_pad.mean());
}

TEST_CASE("a confident controller acts like no control at all") {
    const PadGpModel pad = tiny_pad_model(FeatureMode::EEG, 17);
    const PerfGpModel perf = tiny_perf_model(10.0);  // estimates far above the target
    const ControllerConfig ctrl = ControllerConfig::defaults();
    const SimConfig sim = SimConfig::defaults();
    const LoopTrace on = run_closed_loop(pad, perf, ctrl, sim, FeatureMode::EEG, 8, 8, true, 33);
    const LoopTrace off = run_closed_loop(pad, perf, ctrl, sim, FeatureMode::EEG, 8, 8, false, 33);
    REQUIRE_FALSE(on.aborted);
    for (const auto& s : on.steps) REQUIRE(s.action_id == 0);
    for (int k = 0; k < 8; ++k) {
        REQUIRE(on.steps[k].true_q == off.steps[k].true_q);
        REQUIRE((on.steps[k].true_pad - off.steps[k].true_pad).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("a model mismatch aborts the trace and keeps the prefix") {
    const PadGpModel pad = tiny_pad_model(FeatureMode::BANDS, 17);  // expects 56 dims
    const PerfGpModel perf = tiny_perf_model(1.0);
    const ControllerConfig ctrl = ControllerConfig::defaults();
    const SimConfig sim = SimConfig::defaults();
    const LoopTrace t = run_closed_loop(pad, perf, ctrl, sim, FeatureMode::EEG, 8, 5, true, 2);
    REQUIRE(t.aborted);
    REQUIRE_FALSE(t.abort_reason.empty());
    REQUIRE(t.steps.empty());
    REQUIRE_THROWS_AS(
        run_closed_loop(pad, perf, ctrl, sim, FeatureMode::BANDS, 8, 0, true, 2), invalid_input);
}
