#pragma once

// Random forest: bagged gini decision trees with per-split feature
// subsampling. Per-tree RNG streams derive from (seed, tree index) so trees
// can build in parallel without changing results; the bootstrap draws
// canonical row ranks, which keeps the fit invariant to input row order.

#include <cmath>
#include <cstdint>
#include <vector>

#include "gkc/learn_common.hpp"
#include "gkc/rng.hpp"

namespace gkc {

struct RfSpec {
    int n_trees = 200;
    int max_depth = 8;
    double feature_fraction = 0.35;
    int min_leaf = 2;
    bool bootstrap = true;
};

inline void validate_spec(const RfSpec& s) {
    if (s.n_trees < 1) throw ConfigError("RandomForest: n_trees must be >= 1");
    if (s.max_depth < 1) throw ConfigError("RandomForest: max_depth must be >= 1");
    if (s.feature_fraction <= 0 || s.feature_fraction > 1) {
        throw ConfigError("RandomForest: feature_fraction must lie in (0,1]");
    }
    if (s.min_leaf < 1) throw ConfigError("RandomForest: min_leaf must be >= 1");
}

struct RfNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double leaf_fraction = 0.0;  // positive class fraction

    bool is_leaf() const { return feature < 0; }
};

struct RfTree {
    std::vector<RfNode> nodes;

    double fraction(const double* row) const {
        int id = 0;
        while (!nodes[id].is_leaf()) {
            id = row[nodes[id].feature] < nodes[id].threshold ? nodes[id].left
                                                              : nodes[id].right;
        }
        return nodes[id].leaf_fraction;
    }
};

struct RfModel {
    std::size_t n_features = 0;
    std::vector<RfTree> trees;
    std::vector<std::vector<std::int32_t>> oob_rows;  // per tree, original row indices
    RfSpec spec;
    std::uint64_t seed = 0;

    std::size_t width() const { return n_features; }
};

namespace detail {

struct RfBuilder {
    const MatrixView& X;
    const std::vector<int>& y;
    const RfSpec& spec;
    Rng& rng;
    RfTree& tree;

    static double gini_impurity(double pos, double total) {
        if (total <= 0) return 0.0;
        double p = pos / total;
        return 2.0 * p * (1.0 - p);
    }

    int build(std::vector<std::int32_t>& rows, int depth) {
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(RfNode{});
        double pos = 0;
        for (auto r : rows) pos += y[r] != 0;
        const double total = static_cast<double>(rows.size());
        tree.nodes[node_id].leaf_fraction = total > 0 ? pos / total : 0.0;

        if (depth >= spec.max_depth || rows.size() < 2 * static_cast<std::size_t>(spec.min_leaf) ||
            pos == 0 || pos == total) {
            return node_id;
        }

        const std::size_t d = X.n_cols;
        std::size_t k = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::lround(spec.feature_fraction * static_cast<double>(d))));
        auto feats = rng.sample_without_replacement(d, k);
        std::sort(feats.begin(), feats.end());

        const double parent_impurity = gini_impurity(pos, total);
        double best_gain = 1e-12;
        int best_feature = -1;
        double best_threshold = 0.0;

        std::vector<std::pair<double, int>> col(rows.size());
        for (std::size_t f : feats) {
            for (std::size_t i = 0; i < rows.size(); ++i) {
                col[i] = {X.at(static_cast<std::size_t>(rows[i]), f), y[rows[i]] != 0};
            }
            std::sort(col.begin(), col.end());
            double pos_left = 0;
            for (std::size_t i = 1; i < col.size(); ++i) {
                pos_left += col[i - 1].second;
                if (col[i].first == col[i - 1].first) continue;
                double nl = static_cast<double>(i);
                double nr = total - nl;
                if (nl < spec.min_leaf || nr < spec.min_leaf) continue;
                double gain = parent_impurity -
                              (nl / total) * gini_impurity(pos_left, nl) -
                              (nr / total) * gini_impurity(pos - pos_left, nr);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (col[i - 1].first + col[i].first);
                }
            }
        }
        if (best_feature < 0) return node_id;

        std::vector<std::int32_t> left_rows, right_rows;
        for (auto r : rows) {
            if (X.at(static_cast<std::size_t>(r), static_cast<std::size_t>(best_feature)) <
                best_threshold) {
                left_rows.push_back(r);
            } else {
                right_rows.push_back(r);
            }
        }
        rows.clear();
        rows.shrink_to_fit();

        const int left_id = build(left_rows, depth + 1);
        const int right_id = build(right_rows, depth + 1);
        tree.nodes[node_id].feature = best_feature;
        tree.nodes[node_id].threshold = best_threshold;
        tree.nodes[node_id].left = left_id;
        tree.nodes[node_id].right = right_id;
        return node_id;
    }
};

}  // namespace detail

inline RfModel train_rf(const MatrixView& X, const std::vector<int>& y, const RfSpec& spec,
                        std::uint64_t seed) {
    validate_spec(spec);
    check_two_classes(y);
    const std::size_t n = X.n_rows;

    RfModel model;
    model.spec = spec;
    model.seed = seed;
    model.n_features = X.n_cols;
    model.trees.resize(static_cast<std::size_t>(spec.n_trees));
    model.oob_rows.resize(static_cast<std::size_t>(spec.n_trees));

    const auto canon = canonical_row_order(X, y);
    std::vector<std::size_t> rank_of(n);
    for (std::size_t r = 0; r < n; ++r) rank_of[canon[r]] = r;

    for (int t = 0; t < spec.n_trees; ++t) {
        Rng rng = Rng::child(seed, "rf-tree", static_cast<std::uint64_t>(t));
        std::vector<std::int32_t> rows;
        rows.reserve(n);
        if (spec.bootstrap) {
            std::vector<char> sampled(n, 0);
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t rank = static_cast<std::size_t>(rng.below(n));
                std::int32_t row = static_cast<std::int32_t>(canon[rank]);
                rows.push_back(row);
                sampled[static_cast<std::size_t>(row)] = 1;
            }
            // samples in canonical rank order so the node row sets are
            // independent of input row order
            std::sort(rows.begin(), rows.end(), [&](std::int32_t a, std::int32_t b) {
                return rank_of[static_cast<std::size_t>(a)] <
                       rank_of[static_cast<std::size_t>(b)];
            });
            for (std::size_t i = 0; i < n; ++i) {
                if (!sampled[i]) model.oob_rows[static_cast<std::size_t>(t)].push_back(
                    static_cast<std::int32_t>(i));
            }
        } else {
            for (std::size_t rank = 0; rank < n; ++rank) {
                rows.push_back(static_cast<std::int32_t>(canon[rank]));
            }
        }
        detail::RfBuilder builder{X, y, spec, rng, model.trees[static_cast<std::size_t>(t)]};
        builder.build(rows, 0);
    }
    return model;
}

inline std::vector<double> predict_scores(const RfModel& model, const MatrixView& X) {
    if (X.n_cols != model.width()) {
        throw DimensionMismatchError("RandomForest: feature width mismatch");
    }
    std::vector<double> out(X.n_rows, 0.0);
    for (std::size_t i = 0; i < X.n_rows; ++i) {
        double acc = 0.0;
        for (const auto& t : model.trees) acc += t.fraction(X.row(i));
        out[i] = acc / static_cast<double>(model.trees.size());
    }
    return out;
}

}  // namespace gkc
