#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "padloop/common.hpp"

namespace padloop {

// Average ranks (1-based); tied values share the mean of their rank span.
inline Eigen::VectorXd average_ranks(const Eigen::VectorXd& x) {
    const Eigen::Index n = x.size();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return x[a] < x[b]; });

    Eigen::VectorXd ranks(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (Eigen::Index k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const Eigen::VectorXd xc = x.array() - x.mean();
    const Eigen::VectorXd yc = y.array() - y.mean();
    const double denom = std::sqrt(xc.squaredNorm() * yc.squaredNorm());
    if (denom == 0.0) throw degenerate_input("pearson: zero variance");
    return xc.dot(yc) / denom;
}

struct SpearmanResult {
    double r = 0.0;
    double p_one_tailed = 1.0;  // in the direction of the observed sign
};

// Rank correlation with a seeded permutation test. The one-tailed p-value is
// taken on the side of the observed correlation's sign (upper tail for
// r >= 0, lower tail otherwise), with the +1 correction that keeps it exact
// and never zero.
inline SpearmanResult spearman(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                               int n_permutations = 10000, std::uint64_t seed = 0) {
    require(x.size() == y.size(), "spearman: length mismatch");
    require(x.size() >= 3, "spearman: need at least three observations");
    require(x.allFinite() && y.allFinite(), "spearman: inputs must be finite");
    require(n_permutations >= 1, "spearman: need at least one permutation");
    if ((x.array() == x[0]).all() || (y.array() == y[0]).all())
        throw degenerate_input("spearman: constant input");

    const Eigen::VectorXd rx = average_ranks(x);
    Eigen::VectorXd ry = average_ranks(y);

    SpearmanResult res;
    res.r = pearson(rx, ry);

    Rng rng(Rng::derive(seed, 0xC0441));
    const Eigen::Index n = x.size();
    int at_least_as_extreme = 0;
    std::vector<Eigen::Index> perm(n);
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    Eigen::VectorXd ry_perm(n);
    for (int it = 0; it < n_permutations; ++it) {
        for (Eigen::Index i = n - 1; i > 0; --i)
            std::swap(perm[i], perm[rng.uniform_int(static_cast<std::uint64_t>(i + 1))]);
        for (Eigen::Index i = 0; i < n; ++i) ry_perm[i] = ry[perm[i]];
        const double r_perm = pearson(rx, ry_perm);
        if (res.r >= 0.0 ? r_perm >= res.r : r_perm <= res.r) ++at_least_as_extreme;
    }
    res.p_one_tailed = (1.0 + at_least_as_extreme) / (1.0 + n_permutations);
    return res;
}

} // namespace padloop
