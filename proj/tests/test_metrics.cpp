#include <catch2/catch_amalgamated.hpp>

#include "gkc/metrics.hpp"
#include "gkc/rng.hpp"
#include "oracles.hpp"

using namespace gkc;

TEST_CASE("auc_roc on documented instances") {
    CHECK(auc_roc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);
    CHECK(auc_roc({0.7, 0.6, 0.4, 0.3, 0.2}, {1, 0, 1, 0, 0}) == Catch::Approx(5.0 / 6.0));
    CHECK(auc_roc({0.5, 0.5}, {1, 0}) == 0.5);  // tie convention
    CHECK(auc_roc({0.1, 0.9}, {1, 0}) == 0.0);
}

TEST_CASE("auc_prc on documented instances") {
    CHECK(auc_prc({0.9, 0.8, 0.2}, {1, 1, 0}) == 1.0);
    CHECK(auc_prc({0.9, 0.8, 0.7}, {1, 0, 1}) == Catch::Approx(5.0 / 6.0));
    // all-tied scores with evenly spread positives evaluate to prevalence
    CHECK(auc_prc({0.4, 0.4, 0.4}, {0, 0, 1}) == Catch::Approx(1.0 / 3.0));
    CHECK(auc_prc({0.4, 0.4, 0.4, 0.4}, {0, 1, 0, 1}) == Catch::Approx(0.5));
}

TEST_CASE("metric errors") {
    CHECK_THROWS_AS(auc_roc({0.1, 0.2}, {1, 1}), SingleClassError);
    CHECK_THROWS_AS(auc_roc({0.1, 0.2}, {0, 0}), SingleClassError);
    CHECK_THROWS_AS(auc_prc({0.1, 0.2}, {0, 0}), NoPositiveError);
}

namespace {

void random_instance(Rng& rng, std::vector<double>& scores, std::vector<int>& labels,
                     bool with_ties) {
    const int n = static_cast<int>(rng.uniform_int(4, 20));
    scores.resize(n);
    labels.resize(n);
    int n_pos = static_cast<int>(rng.uniform_int(1, n - 1));
    for (int i = 0; i < n; ++i) {
        scores[i] = with_ties ? std::round(rng.uniform01() * 8) / 8.0 : rng.uniform01();
        labels[i] = i < n_pos ? 1 : 0;
    }
    rng.shuffle(labels);
}

}  // namespace

TEST_CASE("metrics match the brute-force oracles on random instances") {
    Rng rng(424242);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int trial = 0; trial < 300; ++trial) {
        random_instance(rng, scores, labels, trial % 2 == 0);
        CAPTURE(trial);
        CHECK(std::fabs(auc_roc(scores, labels) -
                        oracles::auc_roc_pairwise(scores, labels)) < 1e-12);
        CHECK(std::fabs(auc_prc(scores, labels) -
                        oracles::average_precision_brute(scores, labels)) < 1e-12);
    }
}

TEST_CASE("auc_roc is invariant under strictly increasing transforms") {
    Rng rng(99);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int trial = 0; trial < 50; ++trial) {
        random_instance(rng, scores, labels, false);
        double base = auc_roc(scores, labels);
        std::vector<double> transformed(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) {
            transformed[i] = std::exp(3.0 * scores[i]) + 7.0;
        }
        CHECK(auc_roc(transformed, labels) == Catch::Approx(base).margin(1e-12));
    }
}

TEST_CASE("auc_roc complement identity under label flip without ties") {
    Rng rng(1234);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int trial = 0; trial < 50; ++trial) {
        random_instance(rng, scores, labels, false);
        std::vector<int> flipped(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) flipped[i] = 1 - labels[i];
        CHECK(auc_roc(scores, labels) + auc_roc(scores, flipped) ==
              Catch::Approx(1.0).margin(1e-12));
    }
}
