#pragma once

#include <array>
#include <string>

#include <Eigen/Dense>

#include "padloop/common.hpp"
#include "padloop/dwt.hpp"
#include "padloop/eeg.hpp"
#include "padloop/higuchi.hpp"

namespace padloop {

enum class FeatureMode { EEG, BANDS };

inline constexpr int kNumBands = 4;  // theta, alpha, beta, gamma

inline const std::array<std::string, kNumBands>& band_names() {
    static const std::array<std::string, kNumBands> names = {"theta", "alpha", "beta", "gamma"};
    return names;
}

inline int feature_dim(FeatureMode mode) {
    return mode == FeatureMode::EEG ? kNumChannels : kNumChannels * kNumBands;
}

inline std::string to_string(FeatureMode mode) {
    return mode == FeatureMode::EEG ? "EEG" : "BANDS";
}

inline FeatureMode feature_mode_from_string(const std::string& s) {
    if (s == "EEG") return FeatureMode::EEG;
    if (s == "BANDS") return FeatureMode::BANDS;
    throw invalid_input("unknown feature mode '" + s + "' (expected EEG or BANDS)");
}

struct FeatureVector {
    Eigen::VectorXd values;
    FeatureMode mode = FeatureMode::EEG;

    void validate() const {
        require(values.size() == feature_dim(mode), "FeatureVector: dimension does not match mode");
        require(values.allFinite(), "FeatureVector: values must be finite");
        require((values.array() >= 1.0).all() && (values.array() <= 2.0).all(),
                "FeatureVector: fractal dimensions must lie in [1,2]");
    }
};

// Per-channel band-limited time series. bands[b] has the same shape as the
// source window; b indexes band_names() order (theta first).
struct BandSet {
    std::array<Eigen::MatrixXd, kNumBands> bands;
};

// Splits a preprocessed window into the four rhythm bands via the wavelet
// detail levels: theta = D4, alpha = D3, beta = D2, gamma = D1.
inline BandSet band_split(const EegWindow& win) {
    win.validate();
    BandSet out;
    for (int b = 0; b < kNumBands; ++b)
        out.bands[b].resize(win.samples.rows(), win.samples.cols());
    for (int c = 0; c < win.samples.rows(); ++c) {
        const Eigen::VectorXd row = win.samples.row(c).transpose();
        const DwtCoeffs coeffs = dwt_decompose(row);
        for (int b = 0; b < kNumBands; ++b) {
            // theta is the coarsest detail level (4), gamma the finest (1)
            const int level = kDwtLevels - b;
            out.bands[b].row(c) = band_reconstruct(coeffs, level).transpose();
        }
    }
    return out;
}

// Full feature pipeline: common average reference, 1-60 Hz zero-phase
// band-pass, then a fractal dimension per channel (EEG mode, 14 values) or
// per channel-band pair (BANDS mode, 56 values, channel-major with bands in
// theta..gamma order).
inline FeatureVector extract_features(const EegWindow& raw, FeatureMode mode, int k_max = kDefaultKmax) {
    const EegWindow pre = bandpass_filter(car_filter(raw));
    FeatureVector out;
    out.mode = mode;
    out.values.resize(feature_dim(mode));
    if (mode == FeatureMode::EEG) {
        for (int c = 0; c < kNumChannels; ++c)
            out.values[c] = higuchi_fd(pre.samples.row(c).transpose(), k_max);
    } else {
        const BandSet bands = band_split(pre);
        for (int c = 0; c < kNumChannels; ++c)
            for (int b = 0; b < kNumBands; ++b)
                out.values[c * kNumBands + b] = higuchi_fd(bands.bands[b].row(c).transpose(), k_max);
    }
    out.validate();
    return out;
}

} // namespace padloop
