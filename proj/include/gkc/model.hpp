#pragma once

// Model kinds, hyperparameter specs, training dispatch, and a
// self-describing JSON serialization with exact round-trip.

#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "gkc/boosting.hpp"
#include "gkc/forest.hpp"
#include "gkc/linear.hpp"

namespace gkc {

enum class ModelKind { LogRegEN, RandomForest, GradBoost };

inline const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::LogRegEN: return "logreg_en";
        case ModelKind::RandomForest: return "random_forest";
        case ModelKind::GradBoost: return "grad_boost";
    }
    return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
    if (s == "logreg_en") return ModelKind::LogRegEN;
    if (s == "random_forest") return ModelKind::RandomForest;
    if (s == "grad_boost") return ModelKind::GradBoost;
    throw ConfigError("unknown model kind '" + s + "'");
}

using HyperParams = std::variant<LogRegSpec, RfSpec, GbtSpec>;

inline ModelKind kind_of(const HyperParams& p) {
    if (std::holds_alternative<LogRegSpec>(p)) return ModelKind::LogRegEN;
    if (std::holds_alternative<RfSpec>(p)) return ModelKind::RandomForest;
    return ModelKind::GradBoost;
}

struct ModelSpec {
    HyperParams params;
    std::uint64_t seed = 0;

    ModelKind kind() const { return kind_of(params); }
};

struct TrainedModel {
    std::variant<LogRegModel, RfModel, GbtModel> impl;

    ModelKind kind() const {
        if (std::holds_alternative<LogRegModel>(impl)) return ModelKind::LogRegEN;
        if (std::holds_alternative<RfModel>(impl)) return ModelKind::RandomForest;
        return ModelKind::GradBoost;
    }

    std::size_t width() const {
        return std::visit([](const auto& m) { return m.width(); }, impl);
    }
};

inline TrainedModel train_model(const MatrixView& X, const std::vector<int>& y,
                                const ModelSpec& spec) {
    if (const auto* lr = std::get_if<LogRegSpec>(&spec.params)) {
        return TrainedModel{train_logreg_en(X, y, *lr)};
    }
    if (const auto* rf = std::get_if<RfSpec>(&spec.params)) {
        return TrainedModel{train_rf(X, y, *rf, spec.seed)};
    }
    return TrainedModel{train_gbt(X, y, std::get<GbtSpec>(spec.params))};
}

inline std::vector<double> predict_scores(const TrainedModel& model, const MatrixView& X) {
    return std::visit([&](const auto& m) { return predict_scores(m, X); }, model.impl);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json logreg_to_json(const LogRegModel& m) {
    return {{"weights", m.weights},  {"intercept", m.intercept},
            {"mu", m.mu},            {"sigma", m.sigma},
            {"iterations", m.iterations}, {"final_objective", m.final_objective}};
}

inline LogRegModel logreg_from_json(const nlohmann::json& j) {
    LogRegModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    m.mu = j.at("mu").get<std::vector<double>>();
    m.sigma = j.at("sigma").get<std::vector<double>>();
    m.iterations = j.at("iterations").get<int>();
    m.final_objective = j.at("final_objective").get<double>();
    return m;
}

template <typename Node>
nlohmann::json nodes_to_json(const std::vector<Node>& nodes, double Node::* value_field) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& n : nodes) {
        arr.push_back({n.feature, n.threshold, n.left, n.right, n.*value_field});
    }
    return arr;
}

template <typename Node>
std::vector<Node> nodes_from_json(const nlohmann::json& arr, double Node::* value_field) {
    std::vector<Node> nodes;
    for (const auto& e : arr) {
        Node n;
        n.feature = e.at(0).get<int>();
        n.threshold = e.at(1).get<double>();
        n.left = e.at(2).get<int>();
        n.right = e.at(3).get<int>();
        n.*value_field = e.at(4).get<double>();
        nodes.push_back(n);
    }
    return nodes;
}

}  // namespace detail

inline nlohmann::json model_to_json(const TrainedModel& model) {
    nlohmann::json j;
    j["format"] = "gkc-model";
    j["version"] = 1;
    j["kind"] = model_kind_name(model.kind());
    if (const auto* lr = std::get_if<LogRegModel>(&model.impl)) {
        j["model"] = detail::logreg_to_json(*lr);
    } else if (const auto* rf = std::get_if<RfModel>(&model.impl)) {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& t : rf->trees) {
            trees.push_back(detail::nodes_to_json(t.nodes, &RfNode::leaf_fraction));
        }
        j["model"] = {{"n_features", rf->n_features},
                      {"trees", trees},
                      {"seed", rf->seed},
                      {"n_trees", rf->spec.n_trees},
                      {"max_depth", rf->spec.max_depth},
                      {"feature_fraction", rf->spec.feature_fraction},
                      {"min_leaf", rf->spec.min_leaf},
                      {"bootstrap", rf->spec.bootstrap}};
    } else {
        const auto& gbt = std::get<GbtModel>(model.impl);
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& t : gbt.trees) {
            trees.push_back(detail::nodes_to_json(t.nodes, &GbtNode::leaf_value));
        }
        j["model"] = {{"n_features", gbt.n_features},
                      {"base_margin", gbt.base_margin},
                      {"trees", trees},
                      {"n_rounds", gbt.spec.n_rounds},
                      {"learning_rate", gbt.spec.learning_rate},
                      {"max_depth", gbt.spec.max_depth},
                      {"l2_leaf_reg", gbt.spec.l2_leaf_reg},
                      {"min_child_weight", gbt.spec.min_child_weight}};
    }
    return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "gkc-model") throw ParseError("not a gkc-model document");
    ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
    const auto& m = j.at("model");
    if (kind == ModelKind::LogRegEN) {
        return TrainedModel{detail::logreg_from_json(m)};
    }
    if (kind == ModelKind::RandomForest) {
        RfModel rf;
        rf.n_features = m.at("n_features").get<std::size_t>();
        rf.seed = m.at("seed").get<std::uint64_t>();
        rf.spec.n_trees = m.at("n_trees").get<int>();
        rf.spec.max_depth = m.at("max_depth").get<int>();
        rf.spec.feature_fraction = m.at("feature_fraction").get<double>();
        rf.spec.min_leaf = m.at("min_leaf").get<int>();
        rf.spec.bootstrap = m.at("bootstrap").get<bool>();
        for (const auto& t : m.at("trees")) {
            RfTree tree;
            tree.nodes = detail::nodes_from_json<RfNode>(t, &RfNode::leaf_fraction);
            rf.trees.push_back(std::move(tree));
        }
        return TrainedModel{std::move(rf)};
    }
    GbtModel gbt;
    gbt.n_features = m.at("n_features").get<std::size_t>();
    gbt.base_margin = m.at("base_margin").get<double>();
    gbt.spec.n_rounds = m.at("n_rounds").get<int>();
    gbt.spec.learning_rate = m.at("learning_rate").get<double>();
    gbt.spec.max_depth = m.at("max_depth").get<int>();
    gbt.spec.l2_leaf_reg = m.at("l2_leaf_reg").get<double>();
    gbt.spec.min_child_weight = m.at("min_child_weight").get<double>();
    for (const auto& t : m.at("trees")) {
        GbtTree tree;
        tree.nodes = detail::nodes_from_json<GbtNode>(t, &GbtNode::leaf_value);
        gbt.trees.push_back(std::move(tree));
    }
    return TrainedModel{std::move(gbt)};
}

}  // namespace gkc
