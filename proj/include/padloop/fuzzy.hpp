#pragma once

#include <algorithm>
#include <array>
#include <string>

#include <Eigen/Dense>

#include "padloop/common.hpp"

namespace padloop {

inline constexpr int kNumInputLabels = 5;   // NB, NS, ZE, PS, PB
inline constexpr int kNumActionLabels = 6;  // Z, N, S, M, L, LL

inline const std::array<std::string, kNumInputLabels>& input_label_names() {
    static const std::array<std::string, kNumInputLabels> names = {"NB", "NS", "ZE", "PS", "PB"};
    return names;
}

inline const std::array<std::string, kNumActionLabels>& action_label_names() {
    static const std::array<std::string, kNumActionLabels> names = {"Z", "N", "S", "M", "L", "LL"};
    return names;
}

inline int action_label_index(const std::string& name) {
    const auto& names = action_label_names();
    for (int i = 0; i < kNumActionLabels; ++i)
        if (names[i] == name) return i;
    throw invalid_input("unknown action label '" + name + "'");
}

struct Triangle {
    double left = 0.0, peak = 0.0, right = 0.0;

    double operator()(double x) const {
        if (x <= left || x >= right) return x == peak ? 1.0 : 0.0;
        if (x == peak) return 1.0;
        return x < peak ? (x - left) / (peak - left) : (right - x) / (right - peak);
    }
};

// Five triangular membership functions over a closed universe, labels in
// NB..PB order. Inputs outside the universe are clamped to its edges.
struct FuzzyPartition {
    double lo = -1.0, hi = 1.0;
    std::array<Triangle, kNumInputLabels> mf;

    void validate() const {
        require(finite(lo) && finite(hi) && lo < hi, "FuzzyPartition: universe must be a proper interval");
        for (int i = 0; i < kNumInputLabels; ++i) {
            const Triangle& t = mf[i];
            require(t.left < t.peak && t.peak < t.right,
                    "FuzzyPartition: MF " + input_label_names()[i] + " must satisfy left < peak < right");
            if (i > 0)
                require(mf[i - 1].peak < t.peak, "FuzzyPartition: peaks must be strictly increasing");
        }
        // complete cover: membership mass present everywhere, never much above 1
        const int probes = 101;
        for (int p = 0; p < probes; ++p) {
            const double x = lo + (hi - lo) * p / (probes - 1);
            double sum = 0.0;
            for (const auto& t : mf) sum += t(x);
            require(sum > 0.0 && sum <= 1.0001,
                    "FuzzyPartition: membership sum out of (0, 1.0001] at x=" + std::to_string(x));
        }
    }

    // symmetric five-triangle partition with half-width overlap
    static FuzzyPartition symmetric(double half_range) {
        require(half_range > 0.0, "FuzzyPartition: half_range must be positive");
        FuzzyPartition p;
        p.lo = -half_range;
        p.hi = half_range;
        const double step = half_range / 2.0;
        for (int i = 0; i < kNumInputLabels; ++i) {
            const double peak = -half_range + i * step;
            p.mf[i] = Triangle{peak - step, peak, peak + step};
        }
        return p;
    }
};

using Membership5 = std::array<double, kNumInputLabels>;
using Tau6 = std::array<double, kNumActionLabels>;

inline Membership5 fuzzify(double x, const FuzzyPartition& part) {
    require(finite(x), "fuzzify: input must be finite");
    const double xc = std::clamp(x, part.lo, part.hi);
    Membership5 mu{};
    for (int i = 0; i < kNumInputLabels; ++i) mu[i] = part.mf[i](xc);
    return mu;
}

// 5x5 grid of action labels; cells[i][j] pairs the i-th error label with the
// j-th delta label (NB..PB order on both axes).
struct RuleTable {
    std::array<std::array<int, kNumInputLabels>, kNumInputLabels> cells{};

    void validate() const {
        for (int i = 0; i < kNumInputLabels; ++i)
            for (int j = 0; j < kNumInputLabels; ++j) {
                require(cells[i][j] >= 0 && cells[i][j] < kNumActionLabels,
                        "RuleTable: cell out of label range");
                // more-negative inputs never produce a smaller action
                if (i > 0)
                    require(cells[i - 1][j] >= cells[i][j], "RuleTable: not monotone along error axis");
                if (j > 0)
                    require(cells[i][j - 1] >= cells[i][j], "RuleTable: not monotone along delta axis");
                // both inputs non-negative (ZE or higher) demand no action
                if (i >= 2 && j >= 2)
                    require(cells[i][j] == 0, "RuleTable: non-negative quadrant must map to Z");
            }
    }
};

// Max-min composition: each rule fires at min(mu_i, pi_j) and the strengths
// aggregate per output label with max.
inline Tau6 fuzzy_infer(const Membership5& mu, const Membership5& pi, const RuleTable& table) {
    table.validate();
    Tau6 tau{};
    for (int i = 0; i < kNumInputLabels; ++i)
        for (int j = 0; j < kNumInputLabels; ++j) {
            const double strength = std::min(mu[i], pi[j]);
            tau[table.cells[i][j]] = std::max(tau[table.cells[i][j]], strength);
        }
    return tau;
}

// Centroid over the action centers. The Z label carries zero membership by
// construction (no action when performance suffices), so it is excluded; a
// zero total maps to the zero (null) action.
inline Eigen::Vector3d defuzzify(const Tau6& tau, const std::array<Eigen::Vector3d, kNumActionLabels>& centers) {
    double total = 0.0;
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    for (int l = 1; l < kNumActionLabels; ++l) {
        require(finite(tau[l]) && tau[l] >= 0.0, "defuzzify: memberships must be non-negative");
        total += tau[l];
        acc += tau[l] * centers[l];
    }
    if (total == 0.0) return Eigen::Vector3d::Zero();
    return acc / total;
}

} // namespace padloop
