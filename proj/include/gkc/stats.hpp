#pragma once

// Bootstrap confidence intervals and the Wilcoxon signed-rank test. The
// Wilcoxon path is exact (distribution computed over all sign assignments)
// up to 25 effective pairs, and a tie-corrected normal approximation with
// continuity correction above that.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gkc/common.hpp"
#include "gkc/rng.hpp"

namespace gkc {

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

/// Percentile bootstrap interval for the mean of `values`.
inline std::pair<double, double> bootstrap_ci(const std::vector<double>& values, int B = 1000,
                                              double level = 0.95, std::uint64_t seed = 0) {
    if (values.empty()) throw InsufficientDataError("bootstrap_ci: empty sample");
    if (B < 1) throw ConfigError("bootstrap_ci: B must be >= 1");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("bootstrap_ci: level must be in (0,1)");
    const std::size_t n = values.size();
    Rng rng = Rng::child(seed, "bootstrap");
    std::vector<double> stats(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += values[rng.below(n)];
        stats[static_cast<std::size_t>(b)] = sum / static_cast<double>(n);
    }
    std::sort(stats.begin(), stats.end());
    auto quantile = [&](double p) {
        double h = p * static_cast<double>(B - 1);
        std::size_t lo = static_cast<std::size_t>(std::floor(h));
        std::size_t hi = std::min<std::size_t>(lo + 1, static_cast<std::size_t>(B - 1));
        double frac = h - static_cast<double>(lo);
        return stats[lo] * (1.0 - frac) + stats[hi] * frac;
    };
    double tail = 0.5 * (1.0 - level);
    return {quantile(tail), quantile(1.0 - tail)};
}

struct MetricsSummary {
    double mean = 0.0;
    double sd = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t n = 0;
};

inline MetricsSummary summarize(const std::vector<double>& values, int B = 1000,
                                double level = 0.95, std::uint64_t seed = 0) {
    if (values.empty()) throw InsufficientDataError("summarize: empty sample");
    MetricsSummary s;
    s.n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.n);
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
    auto [lo, hi] = bootstrap_ci(values, B, level, seed);
    s.ci_lo = lo;
    s.ci_hi = hi;
    return s;
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank
// ---------------------------------------------------------------------------

struct ComparisonResult {
    double w_statistic = 0.0;  // min(W+, W-)
    double p_value = 1.0;
    std::size_t n_effective = 0;
    bool exact = true;
};

inline constexpr std::size_t kWilcoxonExactLimit = 25;

namespace detail {

/// Doubled average ranks of |d| (doubling keeps tied average ranks integer).
inline std::vector<std::int64_t> doubled_ranks(const std::vector<double>& abs_d) {
    const std::size_t n = abs_d.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return abs_d[a] < abs_d[b]; });
    std::vector<std::int64_t> rank2(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && abs_d[order[j]] == abs_d[order[i]]) ++j;
        // doubled average rank of positions i+1 .. j
        std::int64_t r2 = static_cast<std::int64_t>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) rank2[order[k]] = r2;
        i = j;
    }
    return rank2;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace detail

/// Paired two-sided test on a-b. Zero differences are dropped (their count
/// is visible via n_effective); all-zero input returns p = 1 by convention.
inline ComparisonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                             const std::vector<double>& b) {
    if (a.size() != b.size()) throw DimensionMismatchError("wilcoxon: unpaired samples");
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double diff = a[i] - b[i];
        if (diff != 0.0) d.push_back(diff);
    }
    ComparisonResult res;
    res.n_effective = d.size();
    if (d.empty()) {
        res.w_statistic = 0.0;
        res.p_value = 1.0;
        res.exact = true;
        return res;
    }
    if (d.size() < 5) {
        throw TooFewPairsError("wilcoxon needs >= 5 nonzero differences, got " +
                               std::to_string(d.size()));
    }
    const std::size_t n = d.size();
    std::vector<double> abs_d(n);
    for (std::size_t i = 0; i < n; ++i) abs_d[i] = std::fabs(d[i]);
    auto rank2 = detail::doubled_ranks(abs_d);

    std::int64_t w2_pos = 0, w2_total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        w2_total += rank2[i];
        if (d[i] > 0) w2_pos += rank2[i];
    }
    const std::int64_t w2_neg = w2_total - w2_pos;
    res.w_statistic = 0.5 * static_cast<double>(std::min(w2_pos, w2_neg));

    if (n <= kWilcoxonExactLimit) {
        res.exact = true;
        // Exact null distribution of doubled W+ over all 2^n sign choices.
        const std::size_t max_sum = static_cast<std::size_t>(w2_total);
        std::vector<std::uint64_t> count(max_sum + 1, 0);
        count[0] = 1;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t r = static_cast<std::size_t>(rank2[i]);
            for (std::size_t s = max_sum + 1; s-- > r;) {
                count[s] += count[s - r];
            }
        }
        std::uint64_t cnt_le = 0, cnt_ge = 0;
        for (std::size_t s = 0; s <= max_sum; ++s) {
            if (static_cast<std::int64_t>(s) <= w2_pos) cnt_le += count[s];
            if (static_cast<std::int64_t>(s) >= w2_pos) cnt_ge += count[s];
        }
        const double total = std::ldexp(1.0, static_cast<int>(n));  // 2^n
        double p = 2.0 * static_cast<double>(std::min(cnt_le, cnt_ge)) / total;
        res.p_value = std::min(1.0, p);
    } else {
        res.exact = false;
        const double nd = static_cast<double>(n);
        const double mu = nd * (nd + 1.0) / 4.0;
        // tie correction: sum over tie groups of (t^3 - t)
        double tie_sum = 0.0;
        {
            std::vector<double> sorted_abs(abs_d);
            std::sort(sorted_abs.begin(), sorted_abs.end());
            std::size_t i = 0;
            while (i < sorted_abs.size()) {
                std::size_t j = i;
                while (j < sorted_abs.size() && sorted_abs[j] == sorted_abs[i]) ++j;
                double t = static_cast<double>(j - i);
                tie_sum += t * t * t - t;
                i = j;
            }
        }
        double sigma2 = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_sum / 48.0;
        double w_pos = 0.5 * static_cast<double>(w2_pos);
        double dev = w_pos - mu;
        double cc = dev > 0 ? -0.5 : (dev < 0 ? 0.5 : 0.0);  // continuity correction
        double z = (dev + cc) / std::sqrt(sigma2);
        res.p_value = std::min(1.0, 2.0 * detail::normal_cdf(-std::fabs(z)));
    }
    return res;
}

}  // namespace gkc
