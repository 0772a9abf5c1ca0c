#include <catch2/catch_amalgamated.hpp>

#include "gkc/attribution.hpp"
#include "gkc/rng.hpp"

using namespace gkc;

namespace {

/// Matrix with three 4-column spans; labels driven by the gene span only.
FeatureMatrix planted_matrix(std::uint64_t seed, bool label_noise) {
    FeatureMatrix fm;
    fm.strategy = Strategy::GKC;
    fm.subset = full_subset();
    fm.n_rows = 120;
    fm.n_cols = 12;
    fm.group_spans = {{Modality::Lab, 0, 4}, {Modality::Gene, 4, 8}, {Modality::Med, 8, 12}};
    Rng rng(seed);
    fm.data.resize(fm.n_rows * fm.n_cols);
    for (std::size_t i = 0; i < fm.n_rows; ++i) {
        for (std::size_t j = 0; j < fm.n_cols; ++j) fm.data[i * fm.n_cols + j] = rng.normal();
        double z = 2.5 * fm.data[i * fm.n_cols + 4] + 2.0 * fm.data[i * fm.n_cols + 5];
        double p = label_noise ? 0.5 : sigmoid(z);
        fm.labels.push_back(rng.uniform01() < p ? 1 : 0);
        fm.row_ids.push_back("R" + std::to_string(i));
    }
    // both classes guaranteed
    fm.labels[0] = 0;
    fm.labels[1] = 1;
    return fm;
}

}  // namespace

TEST_CASE("signal restricted to one span concentrates the share there") {
    auto fm = planted_matrix(1, false);
    LogRegSpec spec;
    spec.lambda = 0.01;
    auto trained = TrainedModel{train_logreg_en(fm.view(), fm.labels, spec)};
    auto res = attribute_modalities(trained, fm, 99, 20);
    CHECK(res.share_percent.at(Modality::Gene) > 60.0);

    double total = 0;
    for (const auto& [m, share] : res.share_percent) total += share;
    CHECK(total == Catch::Approx(100.0).margin(1e-9));
}

TEST_CASE("zero-weight spans receive exactly zero share for a linear model") {
    auto fm = planted_matrix(2, false);
    LogRegModel manual;
    manual.weights.assign(12, 0.0);
    manual.weights[4] = 2.0;
    manual.weights[5] = 1.0;
    manual.mu.assign(12, 0.0);
    manual.sigma.assign(12, 1.0);
    manual.intercept = -0.2;
    auto trained = TrainedModel{manual};
    auto res = attribute_modalities(trained, fm, 5, 10);
    CHECK(res.share_percent.at(Modality::Gene) == Catch::Approx(100.0));
    CHECK(res.mean_drop.at(Modality::Lab) == 0.0);  // scores unchanged by permutation
    CHECK(res.mean_drop.at(Modality::Med) == 0.0);
}

TEST_CASE("linear Shapley efficiency identity") {
    auto fm = planted_matrix(3, false);
    LogRegSpec spec;
    spec.lambda = 0.01;
    auto model = train_logreg_en(fm.view(), fm.labels, spec);
    auto trained = TrainedModel{model};
    auto res = attribute_modalities(trained, fm, 7, 5);
    REQUIRE(res.has_patient_contributions);
    for (std::size_t i = 0; i < fm.n_rows; ++i) {
        double sum = 0;
        for (const auto& [m, contrib] : res.patient_contributions) sum += contrib[i];
        double margin = model.margin(fm.row(i));
        CHECK(sum == Catch::Approx(margin - res.mean_training_logit).margin(1e-9));
    }
}

TEST_CASE("tree models provide shares without patient contributions") {
    auto fm = planted_matrix(4, false);
    GbtSpec spec;
    spec.n_rounds = 40;
    spec.max_depth = 2;
    auto trained = TrainedModel{train_gbt(fm.view(), fm.labels, spec)};
    auto res = attribute_modalities(trained, fm, 11, 10);
    CHECK_FALSE(res.has_patient_contributions);
    CHECK(res.share_percent.at(Modality::Gene) > 50.0);
}

TEST_CASE("degenerate baseline is rejected") {
    auto fm = planted_matrix(5, true);  // labels independent of features
    LogRegSpec spec;
    spec.lambda = 0.5;
    spec.alpha = 1.0;
    auto trained = TrainedModel{train_logreg_en(fm.view(), fm.labels, spec)};
    CHECK_THROWS_AS(attribute_modalities(trained, fm, 13, 5), DegenerateModelError);
}

TEST_CASE("spans must cover the matrix") {
    auto fm = planted_matrix(6, false);
    fm.group_spans.pop_back();
    LogRegSpec spec;
    auto trained = TrainedModel{train_logreg_en(fm.view(), fm.labels, spec)};
    CHECK_THROWS_AS(attribute_modalities(trained, fm, 1, 5), ConfigError);
}
