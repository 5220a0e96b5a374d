#pragma once

#include <array>

#include <Eigen/Dense>

#include "padloop/common.hpp"

namespace padloop {

inline constexpr int kDwtLevels = 4;

// Daubechies-4 scaling (reconstruction low-pass) coefficients.
inline constexpr std::array<double, 8> kDb4Scaling = {
    0.23037781330885523,  0.71484657055254153,  0.63088076792959036,
    -0.02798376941698385, -0.18703481171888114, 0.03084138183598697,
    0.03288301166698295,  -0.01059740178499728};

// Multilevel decomposition result. detail[0] is the finest level (D1,
// 32-64 Hz at 128 Hz sampling), detail[3] the coarsest (D4, 4-8 Hz);
// approx is A4 (below 4 Hz).
struct DwtCoeffs {
    std::array<Eigen::VectorXd, kDwtLevels> detail;
    Eigen::VectorXd approx;
};

namespace detail_dwt {

inline double wrap_index(const Eigen::VectorXd& x, Eigen::Index i) {
    const Eigen::Index n = x.size();
    return x[((i % n) + n) % n];
}

// One analysis level with periodic boundary handling; halves the length
// exactly and keeps the transform orthonormal, so the adjoint is the
// exact inverse.
inline void analyze_level(const Eigen::VectorXd& x, Eigen::VectorXd& approx, Eigen::VectorXd& detail) {
    const Eigen::Index n = x.size();
    const Eigen::Index half = n / 2;
    const int taps = static_cast<int>(kDb4Scaling.size());
    approx.resize(half);
    detail.resize(half);
    for (Eigen::Index k = 0; k < half; ++k) {
        double a = 0.0, d = 0.0;
        for (int t = 0; t < taps; ++t) {
            const double v = wrap_index(x, 2 * k + t);
            a += kDb4Scaling[t] * v;
            // high-pass taps are the alternating-sign reversal of the low-pass
            d += ((t % 2 == 0) ? 1.0 : -1.0) * kDb4Scaling[taps - 1 - t] * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
}

inline Eigen::VectorXd synthesize_level(const Eigen::VectorXd& approx, const Eigen::VectorXd& detail) {
    const Eigen::Index half = approx.size();
    const Eigen::Index n = 2 * half;
    const int taps = static_cast<int>(kDb4Scaling.size());
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (Eigen::Index k = 0; k < half; ++k) {
        for (int t = 0; t < taps; ++t) {
            const Eigen::Index idx = (2 * k + t) % n;
            const double hi = ((t % 2 == 0) ? 1.0 : -1.0) * kDb4Scaling[taps - 1 - t];
            x[idx] += kDb4Scaling[t] * approx[k] + hi * detail[k];
        }
    }
    return x;
}

} // namespace detail_dwt

inline void dwt_check_length(Eigen::Index n) {
    // four halvings must stay even-length and no level may get shorter than
    // the filter, otherwise orthogonality of the periodized transform breaks
    if (n < 128 || n % 16 != 0)
        throw invalid_input("dwt: series length must be a multiple of 16 and at least 128, got " +
                            std::to_string(n));
}

inline DwtCoeffs dwt_decompose(const Eigen::VectorXd& x) {
    dwt_check_length(x.size());
    require(x.allFinite(), "dwt: series must be finite");
    DwtCoeffs out;
    Eigen::VectorXd cur = x;
    for (int level = 0; level < kDwtLevels; ++level) {
        Eigen::VectorXd approx, detail;
        detail_dwt::analyze_level(cur, approx, detail);
        out.detail[level] = detail;
        cur = approx;
    }
    out.approx = cur;
    return out;
}

inline Eigen::VectorXd dwt_reconstruct(const DwtCoeffs& c) {
    Eigen::VectorXd cur = c.approx;
    for (int level = kDwtLevels - 1; level >= 0; --level) {
        require(c.detail[level].size() == cur.size(),
                "dwt_reconstruct: level " + std::to_string(level + 1) + " size mismatch");
        cur = detail_dwt::synthesize_level(cur, c.detail[level]);
    }
    return cur;
}

// Time-domain signal carrying only the requested detail level (1 = finest).
// Summing the four band reconstructions plus the approximation-only
// reconstruction reproduces the input.
inline Eigen::VectorXd band_reconstruct(const DwtCoeffs& c, int level) {
    require(level >= 1 && level <= kDwtLevels, "band_reconstruct: level must be in [1,4]");
    DwtCoeffs only;
    only.approx = Eigen::VectorXd::Zero(c.approx.size());
    for (int l = 0; l < kDwtLevels; ++l) {
        only.detail[l] = (l == level - 1) ? c.detail[l]
                                          : Eigen::VectorXd::Zero(c.detail[l].size()).eval();
    }
    return dwt_reconstruct(only);
}

} // namespace padloop
