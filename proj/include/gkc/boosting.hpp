#pragma once

// Second-order gradient-boosted trees on logistic loss. Exact greedy splits
// over presorted feature columns (no histogram binning), level-wise growth,
// leaf weight -G/(H + l2_leaf_reg), min_child_weight on hessian sums.
//
// Presort order is (value, canonical row rank), so training is invariant to
// the order training rows are supplied in.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "gkc/learn_common.hpp"

namespace gkc {

struct GbtSpec {
    int n_rounds = 200;
    double learning_rate = 0.1;
    int max_depth = 3;
    double l2_leaf_reg = 1.0;
    double min_child_weight = 1.0;
};

inline void validate_spec(const GbtSpec& s) {
    if (s.n_rounds < 0) throw ConfigError("GradBoost: n_rounds must be >= 0");
    if (s.learning_rate < 0) throw ConfigError("GradBoost: learning_rate must be >= 0");
    if (s.max_depth < 1) throw ConfigError("GradBoost: max_depth must be >= 1");
    if (s.l2_leaf_reg < 0) throw ConfigError("GradBoost: l2_leaf_reg must be >= 0");
    if (s.min_child_weight < 0) throw ConfigError("GradBoost: min_child_weight must be >= 0");
}

struct GbtNode {
    int feature = -1;  // -1: leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double leaf_value = 0.0;  // learning rate already applied

    bool is_leaf() const { return feature < 0; }
};

struct GbtTree {
    std::vector<GbtNode> nodes;

    double value(const double* row) const {
        int id = 0;
        while (!nodes[id].is_leaf()) {
            id = row[nodes[id].feature] < nodes[id].threshold ? nodes[id].left
                                                              : nodes[id].right;
        }
        return nodes[id].leaf_value;
    }
};

struct GbtModel {
    double base_margin = 0.0;
    std::size_t n_features = 0;
    std::vector<GbtTree> trees;
    GbtSpec spec;

    std::size_t width() const { return n_features; }

    double margin(const double* row) const {
        double z = base_margin;
        for (const auto& t : trees) z += t.value(row);
        return z;
    }
};

namespace detail {

struct GbtPresort {
    // Per feature: row indices ascending by (value, canonical rank) plus the
    // values in that order for sequential scanning.
    std::vector<std::int32_t> order;  // n_features * n
    std::vector<double> values;       // n_features * n
    std::size_t n = 0;
};

inline GbtPresort gbt_presort(const MatrixView& X, const std::vector<std::size_t>& canon) {
    const std::size_t n = X.n_rows, d = X.n_cols;
    std::vector<std::size_t> rank(n);
    for (std::size_t r = 0; r < n; ++r) rank[canon[r]] = r;
    GbtPresort ps;
    ps.n = n;
    ps.order.resize(d * n);
    ps.values.resize(d * n);
    std::vector<std::int32_t> idx(n);
    for (std::size_t f = 0; f < d; ++f) {
        for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::int32_t>(i);
        std::sort(idx.begin(), idx.end(), [&](std::int32_t a, std::int32_t b) {
            double va = X.at(a, f), vb = X.at(b, f);
            if (va != vb) return va < vb;
            return rank[a] < rank[b];
        });
        for (std::size_t i = 0; i < n; ++i) {
            ps.order[f * n + i] = idx[i];
            ps.values[f * n + i] = X.at(idx[i], f);
        }
    }
    return ps;
}

}  // namespace detail

inline GbtModel train_gbt(const MatrixView& X, const std::vector<int>& y, const GbtSpec& spec) {
    validate_spec(spec);
    check_two_classes(y);
    const std::size_t n = X.n_rows;
    const std::size_t d = X.n_cols;

    GbtModel model;
    model.spec = spec;
    model.n_features = d;

    std::size_t n_pos = 0;
    for (int v : y) n_pos += v != 0;
    double rate = static_cast<double>(n_pos) / static_cast<double>(n);
    rate = std::min(1.0 - 1e-9, std::max(1e-9, rate));
    model.base_margin = std::log(rate / (1.0 - rate));
    if (spec.n_rounds == 0) return model;

    const auto canon = canonical_row_order(X, y);
    const auto ps = detail::gbt_presort(X, canon);

    std::vector<double> margin(n, model.base_margin);
    std::vector<double> g(n), h(n);
    std::vector<std::int32_t> node_of(n);

    const double lam = spec.l2_leaf_reg;
    const double mcw = spec.min_child_weight;
    constexpr double kMinGain = 1e-12;

    struct NodeState {
        double G = 0.0, H = 0.0;
        int count = 0;
        double best_gain = 0.0;
        int best_feature = -1;
        double best_threshold = 0.0;
        int tree_index = -1;  // position in the output tree
    };

    for (int round = 0; round < spec.n_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            double p = sigmoid(margin[i]);
            g[i] = p - (y[i] ? 1.0 : 0.0);
            h[i] = std::max(p * (1.0 - p), 1e-16);
        }

        GbtTree tree;
        tree.nodes.push_back(GbtNode{});
        std::fill(node_of.begin(), node_of.end(), 0);
        std::vector<int> active = {0};  // indices into `states`
        std::vector<NodeState> states(1);
        states[0].tree_index = 0;
        // root totals in canonical order
        for (std::size_t r = 0; r < n; ++r) {
            std::size_t i = canon[r];
            states[0].G += g[i];
            states[0].H += h[i];
            ++states[0].count;
        }
        // slot_of[node_state_index] for the scan; node_of maps rows to state ids
        for (int depth = 0; depth < spec.max_depth && !active.empty(); ++depth) {
            const std::size_t n_active = active.size();
            std::vector<std::int32_t> slot_of(states.size(), -1);
            for (std::size_t s = 0; s < n_active; ++s) slot_of[active[s]] = static_cast<std::int32_t>(s);

            std::vector<double> gl(n_active), hl(n_active), prev(n_active);
            std::vector<int> cl(n_active);
            std::vector<char> started(n_active);

            for (std::size_t f = 0; f < d; ++f) {
                std::fill(gl.begin(), gl.end(), 0.0);
                std::fill(hl.begin(), hl.end(), 0.0);
                std::fill(cl.begin(), cl.end(), 0);
                std::fill(started.begin(), started.end(), 0);
                const std::int32_t* ord = &ps.order[f * n];
                const double* vals = &ps.values[f * n];
                for (std::size_t i = 0; i < n; ++i) {
                    const std::int32_t r = ord[i];
                    const std::int32_t st = node_of[r];
                    const std::int32_t s = st >= 0 ? slot_of[st] : -1;
                    if (s < 0) continue;
                    const double v = vals[i];
                    NodeState& ns = states[active[s]];
                    if (started[s] && v > prev[s]) {
                        const double GL = gl[s], HL = hl[s];
                        const double GR = ns.G - GL, HR = ns.H - HL;
                        if (HL >= mcw && HR >= mcw && cl[s] > 0 && cl[s] < ns.count) {
                            double gain = GL * GL / (HL + lam) + GR * GR / (HR + lam) -
                                          ns.G * ns.G / (ns.H + lam);
                            if (gain > ns.best_gain) {
                                ns.best_gain = gain;
                                ns.best_feature = static_cast<int>(f);
                                ns.best_threshold = 0.5 * (prev[s] + v);
                            }
                        }
                    }
                    gl[s] += g[r];
                    hl[s] += h[r];
                    ++cl[s];
                    prev[s] = v;
                    started[s] = 1;
                }
            }

            // Apply split decisions; nodes without a useful split settle as leaves.
            std::vector<int> next_active;
            std::vector<std::int32_t> child_left(states.size(), -1), child_right(states.size(), -1);
            for (int sid : active) {
                const int tree_index = states[sid].tree_index;
                const double node_g = states[sid].G, node_h = states[sid].H;
                if (states[sid].best_feature >= 0 && states[sid].best_gain > kMinGain) {
                    NodeState ls, rs;
                    ls.tree_index = static_cast<int>(tree.nodes.size());
                    rs.tree_index = ls.tree_index + 1;
                    tree.nodes.push_back(GbtNode{});
                    tree.nodes.push_back(GbtNode{});
                    GbtNode& tn = tree.nodes[static_cast<std::size_t>(tree_index)];
                    tn.feature = states[sid].best_feature;
                    tn.threshold = states[sid].best_threshold;
                    tn.left = ls.tree_index;
                    tn.right = rs.tree_index;
                    child_left[sid] = static_cast<std::int32_t>(states.size());
                    states.push_back(ls);
                    child_right[sid] = static_cast<std::int32_t>(states.size());
                    states.push_back(rs);
                    next_active.push_back(child_left[sid]);
                    next_active.push_back(child_right[sid]);
                } else {
                    GbtNode& tn = tree.nodes[static_cast<std::size_t>(tree_index)];
                    tn.feature = -1;
                    tn.leaf_value = -spec.learning_rate * node_g / (node_h + lam);
                }
            }
            // Reassign rows to children (or deactivate on settled leaves) and
            // accumulate child totals in canonical order.
            child_left.resize(states.size(), -1);
            child_right.resize(states.size(), -1);
            for (std::size_t r = 0; r < n; ++r) {
                std::size_t i = canon[r];
                std::int32_t st = node_of[i];
                if (st < 0 || child_left[st] < 0) {
                    if (st >= 0 && slot_of.size() > static_cast<std::size_t>(st) &&
                        slot_of[st] >= 0) {
                        node_of[i] = -1;  // settled leaf this level
                    }
                    continue;
                }
                const NodeState& ns = states[st];
                const GbtNode& tn = tree.nodes[static_cast<std::size_t>(ns.tree_index)];
                std::int32_t child = X.at(i, static_cast<std::size_t>(tn.feature)) < tn.threshold
                                         ? child_left[st]
                                         : child_right[st];
                node_of[i] = child;
                states[child].G += g[i];
                states[child].H += h[i];
                ++states[child].count;
            }
            active = std::move(next_active);
        }
        // Any still-active nodes hit the depth limit: finalize as leaves.
        for (int sid : active) {
            NodeState& ns = states[sid];
            GbtNode& tn = tree.nodes[static_cast<std::size_t>(ns.tree_index)];
            tn.feature = -1;
            tn.leaf_value = -spec.learning_rate * ns.G / (ns.H + lam);
        }

        for (std::size_t i = 0; i < n; ++i) margin[i] += tree.value(X.row(i));
        model.trees.push_back(std::move(tree));
    }
    return model;
}

inline std::vector<double> predict_scores(const GbtModel& model, const MatrixView& X) {
    if (X.n_cols != model.width()) {
        throw DimensionMismatchError("GradBoost: feature width mismatch");
    }
    std::vector<double> out(X.n_rows);
    for (std::size_t i = 0; i < X.n_rows; ++i) out[i] = sigmoid(model.margin(X.row(i)));
    return out;
}

}  // namespace gkc
