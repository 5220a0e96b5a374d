#pragma once

#include <array>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "padloop/common.hpp"
#include "padloop/eeg.hpp"

namespace padloop {

// Synthetic operator: affective state, accumulated fatigue, fixed skill.
struct OperatorState {
    Eigen::Vector3d pad = Eigen::Vector3d::Constant(6.5);
    double fatigue = 0.0;
    double skill = 0.5;
    int time_index = 0;

    void validate() const {
        require(pad.allFinite() && (pad.array() >= 1.0).all() && (pad.array() <= 9.0).all(),
                "OperatorState: pad must lie in [1,9]");
        require(finite(fatigue) && fatigue >= 0.0 && fatigue <= 1.0, "OperatorState: fatigue must lie in [0,1]");
        require(finite(skill) && skill >= 0.0 && skill <= 1.0, "OperatorState: skill must lie in [0,1]");
        require(time_index >= 0, "OperatorState: time_index must be non-negative");
    }
};

// First-order affect dynamics: relax toward a fatigue-depressed baseline,
// respond additively to the stimulus, accumulate fatigue.
struct OperatorParams {
    double relax_rate = 0.15;           // contraction toward baseline per step
    Eigen::Vector3d action_gain = Eigen::Vector3d::Constant(0.6);
    double baseline_fresh = 6.0;        // baseline PAD at fatigue 0
    double baseline_exhausted = 2.0;    // baseline PAD at fatigue 1
    double fatigue_per_step = 1.0 / 150.0;
    double pad_noise_std = 0.05;

    void validate() const {
        require(relax_rate > 0.0 && relax_rate < 1.0, "OperatorParams: relax_rate must be in (0,1)");
        require((action_gain.array() > 0.0).all(), "OperatorParams: action_gain must be positive");
        require(baseline_fresh >= 1.0 && baseline_fresh <= 9.0 && baseline_exhausted >= 1.0 &&
                    baseline_exhausted <= baseline_fresh,
                "OperatorParams: baselines must lie in [1,9] with exhausted <= fresh");
        require(fatigue_per_step >= 0.0 && fatigue_per_step <= 1.0, "OperatorParams: bad fatigue rate");
        require(pad_noise_std >= 0.0, "OperatorParams: noise std must be non-negative");
    }

    double baseline(double fatigue) const {
        return baseline_fresh - fatigue * (baseline_fresh - baseline_exhausted);
    }
};

// Trial model: both error indices are lognormal with means rising in fatigue
// and falling in affect and skill.
struct TrialParams {
    double base_rate = 1.0;       // p1 scale at neutral conditions
    double base_deviation = 1.0;  // p2 scale
    double fatigue_weight = 1.2;
    double pad_weight = 0.8;
    double skill_weight = 0.3;
    double noise_std = 0.15;      // lognormal sigma; 0 disables noise
    double q_cap = 100.0;

    void validate() const {
        require(base_rate > 0.0 && base_deviation > 0.0, "TrialParams: base indices must be positive");
        require(fatigue_weight >= 0.0 && pad_weight >= 0.0 && skill_weight >= 0.0,
                "TrialParams: weights must be non-negative");
        require(noise_std >= 0.0, "TrialParams: noise std must be non-negative");
        require(q_cap > 0.0, "TrialParams: q_cap must be positive");
    }
};

struct QotSample {
    double p1 = 0.0;
    double p2 = 0.0;
    double q = 0.0;
};

// q = 1/(0.5 (p1+p2)), capped for near-perfect tracking.
inline double qot(double p1, double p2, double q_cap) {
    require(finite(p1) && finite(p2) && p1 >= 0.0 && p2 >= 0.0, "qot: indices must be non-negative");
    require(q_cap > 0.0, "qot: q_cap must be positive");
    const double s = p1 + p2;
    if (s < 2.0 / q_cap) return q_cap;
    return 2.0 / s;
}

inline OperatorState operator_step(const OperatorState& state, const Eigen::Vector3d& action_pad,
                                   const OperatorParams& params, Rng& rng) {
    state.validate();
    params.validate();
    require(action_pad.allFinite(), "operator_step: action must be finite");

    OperatorState next = state;
    const double base = params.baseline(state.fatigue);
    for (int i = 0; i < 3; ++i) {
        double v = state.pad[i] + params.relax_rate * (base - state.pad[i]) +
                   params.action_gain[i] * action_pad[i];
        if (params.pad_noise_std > 0.0) v += params.pad_noise_std * rng.normal();
        next.pad[i] = std::clamp(v, 1.0, 9.0);
    }
    next.fatigue = std::min(1.0, state.fatigue + params.fatigue_per_step);
    next.time_index = state.time_index + 1;
    return next;
}

// One tracking trial. difficulty scales both error indices; 1 is the
// standard trajectory.
inline QotSample perform_trial(const OperatorState& state, const TrialParams& params, Rng& rng,
                               double difficulty = 1.0) {
    state.validate();
    params.validate();
    require(difficulty > 0.0, "perform_trial: difficulty must be positive");

    const double pad_score = (state.pad.mean() - 5.0) / 4.0;  // [-1, 1]
    const double log_level = params.fatigue_weight * state.fatigue - params.pad_weight * pad_score -
                             params.skill_weight * state.skill;
    QotSample s;
    const double z1 = params.noise_std > 0.0 ? params.noise_std * rng.normal() : 0.0;
    const double z2 = params.noise_std > 0.0 ? params.noise_std * rng.normal() : 0.0;
    s.p1 = difficulty * params.base_rate * std::exp(log_level + z1);
    s.p2 = difficulty * params.base_deviation * std::exp(log_level + z2);
    s.q = qot(s.p1, s.p2, params.q_cap);
    return s;
}

// One entry of a band's affect mapping table: the channels in the mask get
// weights . pad_norm added to their target fractal dimension (pad_norm =
// (pad-5)/4). Entries are additive, so a band can respond to different PAD
// components on different channel groups, with per-group signs.
struct BandMapping {
    Eigen::Vector3d weights = Eigen::Vector3d::Zero();
    std::array<bool, kNumChannels> mask{};
};

// Spectral synthesis parameters for one rhythm band.
struct SynthBand {
    double f_lo = 0.0, f_hi = 0.0;  // Hz
    double base_fd = 1.5;
    std::vector<BandMapping> map;
    double gain = 1.0;

    double target_fd(int channel, const Eigen::Vector3d& pad_norm) const {
        double t = base_fd;
        for (const auto& m : map)
            if (m.mask[channel]) t += m.weights.dot(pad_norm);
        return t;
    }
};

struct SynthParams {
    std::array<SynthBand, 4> bands{};  // theta, alpha, beta, gamma
    double low_filler_gain = 0.3;      // 1-4 Hz pink filler so the window is broadband
    double fd_jitter_std = 0.02;
    double rms_scale = 20.0;

    void validate() const {
        for (const auto& b : bands) {
            require(b.f_lo > 0.0 && b.f_hi > b.f_lo, "SynthParams: band edges must be ordered");
            require(b.base_fd > 1.0 && b.base_fd < 2.0, "SynthParams: base_fd must be in (1,2)");
            require(b.gain > 0.0, "SynthParams: band gain must be positive");
            for (const auto& m : b.map)
                require(m.weights.allFinite(), "SynthParams: mapping weights must be finite");
        }
        require(low_filler_gain >= 0.0, "SynthParams: filler gain must be non-negative");
        require(fd_jitter_std >= 0.0, "SynthParams: jitter std must be non-negative");
        require(rms_scale > 0.0, "SynthParams: rms scale must be positive");
    }
};

struct SimConfig {
    OperatorParams op;
    TrialParams trial;
    SynthParams synth;
    OperatorState init_state;

    void validate() const {
        op.validate();
        trial.validate();
        synth.validate();
        init_state.validate();
    }

    static SimConfig defaults();
};

inline SimConfig SimConfig::defaults() {
    SimConfig cfg;
    auto mask_of = [](std::initializer_list<int> channels) {
        std::array<bool, kNumChannels> m{};
        for (int c : channels) m[c] = true;
        return m;
    };
    // Mapping table (channel order AF3 F7 F3 FC5 T7 P7 O1 O2 P8 T8 FC6 F4 F8
    // AF4): valence is lateralized over the frontal sites, positive on the
    // left and negative on the right, in theta and alpha; arousal raises the
    // measured roughness of alpha and beta over temporal/parietal/occipital
    // sites and the gamma spectral slope; dominance lowers measured roughness
    // over fronto-central sites. Coefficients are synthesis-exponent targets;
    // the induced feature-space correlations carry the stated signs.
    // Channel-band pairs outside the table are nuisance features.
    const auto left_frontal = mask_of({0, 1, 2, 3});
    const auto right_frontal = mask_of({10, 11, 12, 13});
    const auto posterior = mask_of({4, 5, 6, 7, 8, 9});
    const auto fronto_central = mask_of({0, 2, 3, 10, 11, 13});
    cfg.synth.bands[0] = {4.0, 8.0, 1.45,
                          {{{0.30, 0.0, 0.0}, left_frontal}, {{-0.30, 0.0, 0.0}, right_frontal}},
                          1.0};
    cfg.synth.bands[1] = {8.0, 16.0, 1.50,
                          {{{0.12, 0.0, 0.0}, left_frontal},
                           {{-0.12, 0.0, 0.0}, right_frontal},
                           {{0.0, 0.15, 0.0}, posterior}},
                          1.0};
    cfg.synth.bands[2] = {16.0, 32.0, 1.55,
                          {{{0.0, 0.0, 0.35}, fronto_central}, {{0.0, -0.30, 0.0}, posterior}},
                          1.0};
    cfg.synth.bands[3] = {32.0, 64.0, 1.45, {{{0.0, 0.30, 0.0}, posterior}}, 0.3};
    cfg.validate();
    return cfg;
}

namespace detail_sim {

// Spectral exponent of 1/f^g noise whose graph has Higuchi dimension fd.
inline double fd_to_exponent(double fd) { return 5.0 - 2.0 * fd; }

} // namespace detail_sim

// Deterministic EEG synthesizer. Each channel is an inverse FFT of a
// spectrum assembled band by band: within a band the amplitude follows the
// power law mapped from that channel's target fractal dimension, with
// uniformly random phases. Channel RMS is normalized to rms_scale.
inline EegWindow synth_eeg(const OperatorState& state, const SynthParams& params, Rng& rng) {
    state.validate();
    params.validate();

    const int n = kWindowSamples;
    const double fs = kSampleRate;
    const double df = fs / n;
    const Eigen::Vector3d pad_norm = (state.pad.array() - 5.0) / 4.0;

    EegWindow win;
    win.samples.resize(kNumChannels, n);
    win.sample_rate = fs;

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spectrum(n);
    std::vector<std::complex<double>> time(n);

    for (int c = 0; c < kNumChannels; ++c) {
        // per-band jittered FD targets, drawn before any phase draws
        std::array<double, 4> fd{};
        for (int b = 0; b < 4; ++b) {
            double target = params.bands[b].target_fd(c, pad_norm);
            target += params.fd_jitter_std * rng.normal();
            fd[b] = std::clamp(target, 1.05, 1.95);
        }

        std::fill(spectrum.begin(), spectrum.end(), std::complex<double>(0.0, 0.0));
        for (int k = 1; k <= n / 2; ++k) {
            const double f = k * df;
            double amp = 0.0;
            if (f >= 1.0 && f < params.bands[0].f_lo) {
                amp = params.low_filler_gain * std::pow(f / 1.0, -1.0);  // pink filler
            } else {
                for (int b = 0; b < 4; ++b) {
                    const SynthBand& band = params.bands[b];
                    if (f >= band.f_lo && f < band.f_hi) {
                        // pivot at the log-center so tilting redistributes
                        // energy within the band instead of rescaling it
                        const double fc = std::sqrt(band.f_lo * band.f_hi);
                        const double g = detail_sim::fd_to_exponent(fd[b]);
                        amp = band.gain * std::pow(f / fc, -g / 2.0);
                        break;
                    }
                }
            }
            const double phase = 2.0 * M_PI * rng.uniform();
            const std::complex<double> v = amp * std::complex<double>(std::cos(phase), std::sin(phase));
            spectrum[k] = v;
            if (k < n / 2) spectrum[n - k] = std::conj(v);  // Hermitian symmetry
        }
        spectrum[n / 2] = std::complex<double>(spectrum[n / 2].real(), 0.0);

        fft.inv(time, spectrum);
        Eigen::VectorXd x(n);
        for (int t = 0; t < n; ++t) x[t] = time[t].real();

        const double rms = std::sqrt(x.squaredNorm() / n);
        if (rms > 0.0) x *= params.rms_scale / rms;
        win.samples.row(c) = x.transpose();
    }
    win.validate();
    return win;
}

} // namespace padloop
