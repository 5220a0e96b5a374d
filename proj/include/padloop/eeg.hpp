#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "padloop/common.hpp"

namespace padloop {

inline constexpr int kNumChannels = 14;
inline constexpr int kWindowSamples = 1280;
inline constexpr double kSampleRate = 128.0;

inline const std::array<std::string, kNumChannels>& channel_labels() {
    static const std::array<std::string, kNumChannels> labels = {
        "AF3", "F7", "F3", "FC5", "T7", "P7", "O1",
        "O2",  "P8", "T8", "FC6", "F4", "F8", "AF4"};
    return labels;
}

// One 10-second recording window, rows = channels in the fixed montage order,
// columns = time. All downstream feature code assumes this layout.
struct EegWindow {
    Eigen::MatrixXd samples;           // channels x time
    double sample_rate = kSampleRate;  // Hz

    void validate() const {
        require(samples.rows() == kNumChannels,
                "EegWindow: expected " + std::to_string(kNumChannels) + " channels, got " +
                    std::to_string(samples.rows()));
        require(samples.cols() == kWindowSamples,
                "EegWindow: expected " + std::to_string(kWindowSamples) + " samples, got " +
                    std::to_string(samples.cols()));
        require(sample_rate > 0.0, "EegWindow: sample_rate must be positive");
        require(samples.allFinite(), "EegWindow: samples must be finite");
    }
};

// Common average reference: subtract the instantaneous mean across channels
// from every channel.
inline EegWindow car_filter(const EegWindow& in) {
    in.validate();
    EegWindow out = in;
    const Eigen::RowVectorXd mean = in.samples.colwise().mean();
    out.samples.rowwise() -= mean;
    return out;
}

namespace detail {

// One second-order section, direct form II transposed.
struct Biquad {
    double b0, b1, b2, a1, a2;  // a0 normalized to 1

    void filter_inplace(Eigen::VectorXd& x) const {
        double z1 = 0.0, z2 = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double in = x[i];
            const double out = b0 * in + z1;
            z1 = b1 * in - a1 * out + z2;
            z2 = b2 * in - a2 * out;
            x[i] = out;
        }
    }
};

inline Biquad butter_lowpass_section(double fc, double fs, double q) {
    const double w0 = 2.0 * M_PI * fc / fs;
    const double cw = std::cos(w0);
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad s;
    s.b0 = (1.0 - cw) / 2.0 / a0;
    s.b1 = (1.0 - cw) / a0;
    s.b2 = s.b0;
    s.a1 = -2.0 * cw / a0;
    s.a2 = (1.0 - alpha) / a0;
    return s;
}

inline Biquad butter_highpass_section(double fc, double fs, double q) {
    const double w0 = 2.0 * M_PI * fc / fs;
    const double cw = std::cos(w0);
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad s;
    s.b0 = (1.0 + cw) / 2.0 / a0;
    s.b1 = -(1.0 + cw) / a0;
    s.b2 = s.b0;
    s.a1 = -2.0 * cw / a0;
    s.a2 = (1.0 - alpha) / a0;
    return s;
}

// Butterworth band-pass as a cascade: order-2 high-pass at f_lo plus order-4
// low-pass at f_hi (two sections with the standard Q ladder).
inline std::vector<Biquad> bandpass_sections(double f_lo, double f_hi, double fs) {
    std::vector<Biquad> sections;
    sections.push_back(butter_highpass_section(f_lo, fs, 1.0 / std::sqrt(2.0)));
    sections.push_back(butter_lowpass_section(f_hi, fs, 1.0 / (2.0 * std::cos(M_PI / 8.0))));
    sections.push_back(butter_lowpass_section(f_hi, fs, 1.0 / (2.0 * std::cos(3.0 * M_PI / 8.0))));
    return sections;
}

// Zero-phase filtering: odd-reflection pad both ends, run the cascade
// forward, reverse, run again, reverse, crop. Squared magnitude response,
// no phase distortion.
inline Eigen::VectorXd filtfilt(const std::vector<Biquad>& sections, const Eigen::VectorXd& x) {
    const Eigen::Index n = x.size();
    if (n < 2) throw invalid_input("filtfilt: series too short");
    const Eigen::Index pad = std::min<Eigen::Index>(3 * 128, n - 1);

    Eigen::VectorXd ext(n + 2 * pad);
    for (Eigen::Index i = 0; i < pad; ++i)
        ext[i] = 2.0 * x[0] - x[pad - i];
    ext.segment(pad, n) = x;
    for (Eigen::Index i = 0; i < pad; ++i)
        ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

    for (const auto& s : sections) s.filter_inplace(ext);
    ext.reverseInPlace();
    for (const auto& s : sections) s.filter_inplace(ext);
    ext.reverseInPlace();

    return ext.segment(pad, n);
}

} // namespace detail

// Zero-phase Butterworth band-pass applied per channel.
inline EegWindow bandpass_filter(const EegWindow& in, double f_lo = 1.0, double f_hi = 60.0) {
    in.validate();
    require(f_lo > 0.0 && f_hi > f_lo, "bandpass_filter: need 0 < f_lo < f_hi");
    require(f_hi < in.sample_rate / 2.0, "bandpass_filter: f_hi must be below Nyquist");
    const auto sections = detail::bandpass_sections(f_lo, f_hi, in.sample_rate);
    EegWindow out = in;
    for (int c = 0; c < kNumChannels; ++c) {
        Eigen::VectorXd row = in.samples.row(c).transpose();
        out.samples.row(c) = detail::filtfilt(sections, row).transpose();
    }
    return out;
}

} // namespace padloop
