#pragma once

// Independent brute-force oracles used by the unit and acceptance suites.
// These deliberately avoid the library's computation paths: pairwise
// enumeration for AUC-ROC, direct rank walking for average precision, full
// sign enumeration for the Wilcoxon null, and central finite differences
// for gradients.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace oracles {

/// AUC-ROC by exhaustive comparison of every (positive, negative) pair.
inline double auc_roc_pairwise(const std::vector<double>& scores,
                               const std::vector<int>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

/// Average precision, recomputing precision@k from scratch at each positive.
/// Descending scores, ties broken by input index.
inline double average_precision_brute(const std::vector<double>& scores,
                                      const std::vector<int>& labels) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    std::size_t n_pos = 0;
    for (int v : labels) n_pos += v != 0;
    double sum = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (!labels[order[k]]) continue;
        std::size_t hits = 0;
        for (std::size_t j = 0; j <= k; ++j) hits += labels[order[j]] != 0;
        sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
    return sum / static_cast<double>(n_pos);
}

/// Two-sided exact Wilcoxon p by enumerating all 2^n sign assignments over
/// the doubled average ranks. `rank2` are doubled ranks; `w2_obs` is the
/// observed doubled positive-rank sum.
inline double wilcoxon_p_enumeration(const std::vector<std::int64_t>& rank2,
                                     std::int64_t w2_obs) {
    const std::size_t n = rank2.size();
    std::uint64_t cnt_le = 0, cnt_ge = 0;
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        std::int64_t w2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (std::uint64_t{1} << i)) w2 += rank2[i];
        }
        if (w2 <= w2_obs) ++cnt_le;
        if (w2 >= w2_obs) ++cnt_ge;
    }
    double p = 2.0 * static_cast<double>(std::min(cnt_le, cnt_ge)) /
               static_cast<double>(total);
    return std::min(1.0, p);
}

/// Doubled average ranks of |d|, matching the standard mid-rank convention.
inline std::vector<std::int64_t> doubled_ranks_brute(const std::vector<double>& abs_d) {
    const std::size_t n = abs_d.size();
    std::vector<std::int64_t> rank2(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::int64_t below = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (abs_d[j] < abs_d[i]) ++below;
            if (abs_d[j] == abs_d[i]) ++equal;
        }
        // average rank = below + (equal+1)/2; doubled: 2*below + equal + 1
        rank2[i] = 2 * below + equal + 1;
    }
    return rank2;
}

/// Central finite difference of f along one coordinate.
template <typename F>
double central_difference(F&& f, std::vector<double>& x, std::size_t j, double h) {
    const double orig = x[j];
    x[j] = orig + h;
    double up = f(x);
    x[j] = orig - h;
    double down = f(x);
    x[j] = orig;
    return (up - down) / (2.0 * h);
}

}  // namespace oracles
