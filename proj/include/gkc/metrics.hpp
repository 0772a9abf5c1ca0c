#pragma once

// The two ranking metrics. auc_roc is the Mann-Whitney statistic with ties
// credited 0.5; auc_prc is average precision with descending-score order,
// ties broken by stable input index.

#include <algorithm>
#include <numeric>
#include <vector>

#include "gkc/common.hpp"

namespace gkc {

/// Probability that a random positive scores above a random negative, ties
/// counted half. Computed via average ranks.
inline double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw DimensionMismatchError("auc_roc: scores/labels size mismatch");
    }
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int v : labels) n_pos += v != 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw SingleClassError("auc_roc needs both classes");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] < scores[b];
        return a < b;
    });
    // Average ranks over tie groups; accumulate positive rank sum.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] != 0) pos_rank_sum += avg_rank;
        }
        i = j;
    }
    double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

/// Average precision: mean, over positives in descending-score order, of
/// precision at each positive's rank. Ties broken by input index.
inline double auc_prc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw DimensionMismatchError("auc_prc: scores/labels size mismatch");
    }
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int v : labels) n_pos += v != 0;
    if (n_pos == 0) throw NoPositiveError("auc_prc needs at least one positive");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    double sum = 0.0;
    std::size_t seen_pos = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (labels[order[k]] != 0) {
            ++seen_pos;
            sum += static_cast<double>(seen_pos) / static_cast<double>(k + 1);
        }
    }
    return sum / static_cast<double>(n_pos);
}

}  // namespace gkc
