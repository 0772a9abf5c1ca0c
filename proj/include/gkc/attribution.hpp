#pragma once

// Modality attribution: grouped permutation importance (mean AUC-ROC drop
// when one modality's columns are jointly shuffled), normalized to
// percentage shares, plus exact per-patient linear Shapley contributions
// for the linear model.

#include <map>
#include <vector>

#include "gkc/features.hpp"
#include "gkc/metrics.hpp"
#include "gkc/model.hpp"
#include "gkc/rng.hpp"

namespace gkc {

struct AttributionResult {
    double baseline_auc = 0.0;
    std::map<Modality, double> mean_drop;        // clipped at 0
    std::map<Modality, double> share_percent;    // sums to 100
    int n_permutations = 0;

    // Linear models only: per-patient per-modality logit contributions and
    // the reference logit at the training feature means.
    bool has_patient_contributions = false;
    std::map<Modality, std::vector<double>> patient_contributions;
    double mean_training_logit = 0.0;
};

inline constexpr double kDegenerateAucEps = 0.02;

/// Grouped permutation importance over the matrix's group spans. Throws
/// DegenerateModelError when the baseline AUC is indistinguishable from
/// chance (shares would be undefined noise).
inline AttributionResult attribute_modalities(const TrainedModel& model,
                                              const FeatureMatrix& fm, std::uint64_t seed,
                                              int n_permutations = 20) {
    if (n_permutations < 1) throw ConfigError("attribution: n_permutations must be >= 1");
    if (fm.group_spans.empty()) throw ConfigError("attribution: matrix has no group spans");
    std::size_t covered = 0;
    for (const auto& s : fm.group_spans) covered += s.end - s.begin;
    if (covered != fm.n_cols) {
        throw ConfigError("attribution: group spans do not cover the matrix");
    }

    AttributionResult res;
    res.n_permutations = n_permutations;
    res.baseline_auc = auc_roc(predict_scores(model, fm.view()), fm.labels);
    if (res.baseline_auc <= 0.5 + kDegenerateAucEps) {
        throw DegenerateModelError("baseline AUC " + std::to_string(res.baseline_auc) +
                                   " too close to chance for attribution");
    }

    const std::size_t n = fm.n_rows;
    std::vector<double> scratch(fm.data);  // mutable copy
    MatrixView scratch_view{scratch.data(), n, fm.n_cols};

    double total_drop = 0.0;
    for (const auto& span : fm.group_spans) {
        double drop_sum = 0.0;
        for (int p = 0; p < n_permutations; ++p) {
            Rng rng = Rng::child(seed, "perm", static_cast<std::uint64_t>(span.modality),
                                 static_cast<std::uint64_t>(p));
            std::vector<std::size_t> perm(n);
            for (std::size_t i = 0; i < n; ++i) perm[i] = i;
            rng.shuffle(perm);
            // jointly shuffle the span's columns
            for (std::size_t i = 0; i < n; ++i) {
                const double* src = fm.row(perm[i]);
                double* dst = scratch.data() + i * fm.n_cols;
                for (std::size_t j = span.begin; j < span.end; ++j) dst[j] = src[j];
            }
            double auc = auc_roc(predict_scores(model, scratch_view), fm.labels);
            drop_sum += res.baseline_auc - auc;
        }
        // restore the span
        for (std::size_t i = 0; i < n; ++i) {
            const double* src = fm.row(i);
            double* dst = scratch.data() + i * fm.n_cols;
            for (std::size_t j = span.begin; j < span.end; ++j) dst[j] = src[j];
        }
        double drop = std::max(0.0, drop_sum / n_permutations);
        res.mean_drop[span.modality] = drop;
        total_drop += drop;
    }
    if (total_drop <= 0.0) {
        throw DegenerateModelError("no modality produced a positive permutation drop");
    }
    for (const auto& [m, drop] : res.mean_drop) {
        res.share_percent[m] = 100.0 * drop / total_drop;
    }

    // Exact linear Shapley for the linear model: per patient, per group,
    // sum of weight x (value - training mean) in logit space.
    if (const auto* lr = std::get_if<LogRegModel>(&model.impl)) {
        res.has_patient_contributions = true;
        res.mean_training_logit = lr->intercept;
        for (const auto& span : fm.group_spans) {
            std::vector<double> contrib(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double* row = fm.row(i);
                double acc = 0.0;
                for (std::size_t j = span.begin; j < span.end; ++j) {
                    acc += lr->weights[j] * (row[j] - lr->mu[j]) / lr->sigma[j];
                }
                contrib[i] = acc;
            }
            res.patient_contributions.emplace(span.modality, std::move(contrib));
        }
    }
    return res;
}

}  // namespace gkc
