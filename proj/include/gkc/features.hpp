#pragma once

// Per-strategy design matrices. ENF lab normalization is fold-scoped: stats
// fit on training rows only, test rows transformed with training stats. An
// instrumented auditor proves no test row is read during fitting or tuning.

#include <array>
#include <atomic>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gkc/cohort.hpp"
#include "gkc/embedding.hpp"
#include "gkc/learn_common.hpp"
#include "gkc/modality.hpp"
#include "gkc/profiles.hpp"

namespace gkc {

enum class Strategy { ENF, CTE, GKC };

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::ENF: return "enf";
        case Strategy::CTE: return "cte";
        case Strategy::GKC: return "gkc";
    }
    return "?";
}

inline Strategy parse_strategy(const std::string& s) {
    if (s == "enf" || s == "ENF") return Strategy::ENF;
    if (s == "cte" || s == "CTE") return Strategy::CTE;
    if (s == "gkc" || s == "GKC") return Strategy::GKC;
    throw ConfigError("unknown strategy '" + s + "'");
}

using ModalitySubset = std::set<Modality>;

inline ModalitySubset full_subset() {
    return {Modality::Lab, Modality::Gene, Modality::Med};
}

inline std::string subset_name(const ModalitySubset& subset) {
    std::string out;
    for (Modality m : kAllModalities) {
        if (subset.count(m)) {
            if (!out.empty()) out += "+";
            out += modality_name(m);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Leakage audit instrumentation
// ---------------------------------------------------------------------------

enum class AccessPhase { StatFit, InnerTune, Train, Evaluate };

/// Counts per-phase patient-row reads; a read of a registered test row in
/// any phase other than Evaluate is a leakage violation.
class LeakAuditor {
public:
    void set_test_rows(const std::vector<std::size_t>& rows) {
        std::lock_guard<std::mutex> lock(mutex_);
        test_rows_.assign(rows.begin(), rows.end());
        std::sort(test_rows_.begin(), test_rows_.end());
    }

    void note_read(std::size_t row, AccessPhase phase) {
        reads_[static_cast<int>(phase)].fetch_add(1, std::memory_order_relaxed);
        if (phase == AccessPhase::Evaluate) return;
        std::lock_guard<std::mutex> lock(mutex_);
        if (std::binary_search(test_rows_.begin(), test_rows_.end(), row)) {
            violations_.fetch_add(1, std::memory_order_relaxed);
        }
    }

    std::uint64_t reads(AccessPhase phase) const {
        return reads_[static_cast<int>(phase)].load(std::memory_order_relaxed);
    }

    std::uint64_t violations() const { return violations_.load(std::memory_order_relaxed); }

private:
    mutable std::mutex mutex_;
    std::vector<std::size_t> test_rows_;
    std::array<std::atomic<std::uint64_t>, 4> reads_{};
    std::atomic<std::uint64_t> violations_{0};
};

/// Per-fold context handed to matrix factories: which rows may be used for
/// fitting, plus the optional auditor.
struct FoldContext {
    std::vector<std::size_t> training_rows;  // indices into the cohort
    LeakAuditor* auditor = nullptr;

    void note(std::size_t row, AccessPhase phase) const {
        if (auditor) auditor->note_read(row, phase);
    }
};

// ---------------------------------------------------------------------------
// ENF
// ---------------------------------------------------------------------------

struct LabFoldStats {
    std::array<double, kLabTestCount> mean{};
    std::array<double, kLabTestCount> sd{};
    std::array<bool, kLabTestCount> degenerate{};
};

/// Per-test mean/sd over all 5-slot series values of the training patients;
/// sample (n-1) standard deviation, sd == 0 recorded as degenerate.
inline LabFoldStats fit_lab_stats(const std::vector<PatientRecord>& cohort,
                                  const FoldContext& ctx) {
    if (ctx.training_rows.size() < 2) {
        throw InsufficientDataError("fit_lab_stats needs >= 2 training patients");
    }
    LabFoldStats stats;
    for (int t = 0; t < kLabTestCount; ++t) {
        double sum = 0.0, sum2 = 0.0;
        std::size_t count = 0;
        for (std::size_t row : ctx.training_rows) {
            ctx.note(row, AccessPhase::StatFit);
            auto series = prepare_lab_series(cohort[row].labs, static_cast<LabTest>(t));
            for (double v : series) {
                sum += v;
                sum2 += v * v;
                ++count;
            }
        }
        double mean = sum / static_cast<double>(count);
        double var = (sum2 - sum * mean) / static_cast<double>(count - 1);
        double sd = var > 0 ? std::sqrt(var) : 0.0;
        stats.mean[t] = mean;
        stats.sd[t] = sd;
        stats.degenerate[t] = sd <= 0.0;
    }
    return stats;
}

inline constexpr int kEnfMedClassCount = 27;
inline constexpr int kEnfFullWidth = kLabTestCount * kLabSeriesLength + 1 + kEnfMedClassCount;

/// Sorted class ids; the fixed column order of the ENF medication block.
inline std::vector<std::string> enf_class_order(const KnowledgeBase& kb) {
    std::vector<std::string> order;
    for (const auto& [cid, cls] : kb.classes.classes) order.push_back(cid);
    return order;  // std::map iterates sorted
}

/// One ENF row: z-scored 5-value lab series per test (degenerate sd -> 0),
/// distinct-mutation count, and 27 binary class indicators, restricted to
/// the modality subset.
inline std::vector<double> build_enf(const PatientRecord& p, const LabFoldStats& stats,
                                     const ModalitySubset& subset, const KnowledgeBase& kb) {
    if (subset.empty()) throw ConfigError("empty modality subset");
    std::vector<double> row;
    if (subset.count(Modality::Lab)) {
        for (int t = 0; t < kLabTestCount; ++t) {
            auto series = prepare_lab_series(p.labs, static_cast<LabTest>(t));
            for (double v : series) {
                row.push_back(stats.degenerate[t] ? 0.0 : (v - stats.mean[t]) / stats.sd[t]);
            }
        }
    }
    if (subset.count(Modality::Gene)) {
        std::set<std::string> distinct;
        for (const auto& m : p.mutations) distinct.insert(m.canonical_symbol);
        row.push_back(static_cast<double>(distinct.size()));
    }
    if (subset.count(Modality::Med)) {
        std::set<std::string> classes;
        for (const auto& m : p.meds) classes.insert(m.class_id);
        for (const auto& cid : enf_class_order(kb)) {
            row.push_back(classes.count(cid) ? 1.0 : 0.0);
        }
    }
    return row;
}

// ---------------------------------------------------------------------------
// Text strategies
// ---------------------------------------------------------------------------

/// Text to embed per (patient, modality): profile text for the raw-embedding
/// strategy, canonical report rendering for the curated strategy.
using TextStore = std::map<ProfileKey, std::string>;

/// Embeds the per-modality texts for one patient and concatenates them in
/// canonical modality order.
inline ConcatResult build_text_features(const std::string& patient_id,
                                        const ModalitySubset& subset, const TextStore& texts,
                                        EmbeddingProvider& embedder, EmbeddingCache& cache) {
    if (subset.empty()) throw ConfigError("empty modality subset");
    std::vector<EmbeddingVector> vecs;
    vecs.reserve(subset.size());
    std::vector<std::pair<Modality, const EmbeddingVector*>> parts;
    for (Modality m : kAllModalities) {
        if (!subset.count(m)) continue;
        auto it = texts.find({patient_id, m});
        if (it == texts.end()) {
            throw MissingArtifactError("missing text artifact for " + patient_id + "/" +
                                       modality_name(m));
        }
        vecs.push_back(embed_text(embedder, it->second, TaskHint::Classification, cache));
    }
    std::size_t k = 0;
    for (Modality m : kAllModalities) {
        if (subset.count(m)) parts.push_back({m, &vecs[k++]});
    }
    return concat_modalities(parts);
}

// ---------------------------------------------------------------------------
// FeatureMatrix
// ---------------------------------------------------------------------------

struct FeatureMatrix {
    Strategy strategy = Strategy::ENF;
    ModalitySubset subset;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> data;  // row-major
    std::vector<GroupSpan> group_spans;
    std::vector<std::string> row_ids;
    std::vector<int> labels;

    MatrixView view() const { return {data.data(), n_rows, n_cols}; }
    const double* row(std::size_t i) const { return data.data() + i * n_cols; }
};

/// Assembles the design matrix for one strategy/subset. Row order = cohort
/// order. For ENF the lab block is z-scored with stats fitted on
/// ctx.training_rows only.
inline FeatureMatrix assemble_matrix(const std::vector<PatientRecord>& cohort,
                                     Strategy strategy, const ModalitySubset& subset,
                                     const FoldContext& ctx, const KnowledgeBase& kb,
                                     const TextStore* texts = nullptr,
                                     EmbeddingProvider* embedder = nullptr,
                                     EmbeddingCache* cache = nullptr) {
    if (subset.empty()) throw ConfigError("empty modality subset");
    FeatureMatrix fm;
    fm.strategy = strategy;
    fm.subset = subset;
    fm.n_rows = cohort.size();

    if (strategy == Strategy::ENF) {
        LabFoldStats stats = fit_lab_stats(cohort, ctx);
        // group spans for the fixed column layout
        std::size_t col = 0;
        if (subset.count(Modality::Lab)) {
            fm.group_spans.push_back({Modality::Lab, col, col + kLabTestCount * kLabSeriesLength});
            col += kLabTestCount * kLabSeriesLength;
        }
        if (subset.count(Modality::Gene)) {
            fm.group_spans.push_back({Modality::Gene, col, col + 1});
            col += 1;
        }
        if (subset.count(Modality::Med)) {
            fm.group_spans.push_back({Modality::Med, col, col + kEnfMedClassCount});
            col += kEnfMedClassCount;
        }
        fm.n_cols = col;
        fm.data.reserve(fm.n_rows * fm.n_cols);
        for (std::size_t i = 0; i < cohort.size(); ++i) {
            ctx.note(i, AccessPhase::Evaluate);
            auto row = build_enf(cohort[i], stats, subset, kb);
            fm.data.insert(fm.data.end(), row.begin(), row.end());
        }
    } else {
        if (!texts || !embedder || !cache) {
            throw MissingArtifactError("text strategy requires texts, embedder, and cache");
        }
        for (std::size_t i = 0; i < cohort.size(); ++i) {
            ctx.note(i, AccessPhase::Evaluate);
            auto concat = build_text_features(cohort[i].patient_id, subset, *texts, *embedder,
                                              *cache);
            if (i == 0) {
                fm.n_cols = concat.values.size();
                fm.group_spans = concat.spans;
                fm.data.reserve(fm.n_rows * fm.n_cols);
            } else if (concat.values.size() != fm.n_cols) {
                throw DimensionMismatchError("inconsistent embedding width across patients");
            }
            fm.data.insert(fm.data.end(), concat.values.begin(), concat.values.end());
        }
    }

    for (const auto& p : cohort) {
        fm.row_ids.push_back(p.patient_id);
        fm.labels.push_back(label_outcome(p));
    }
    return fm;
}

}  // namespace gkc
