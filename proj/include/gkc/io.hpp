#pragma once

// File emission helpers shared by the pipeline stages: metric-record tables,
// summaries, and the dense matrix export format.
//
// Matrix export format: '#'-prefixed header lines (strategy, subset, group
// spans, column count), one 'id<TAB>label<TAB>v1<TAB>v2...' row per patient.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gkc/cv.hpp"
#include "gkc/features.hpp"
#include "gkc/stats.hpp"

namespace gkc {

inline nlohmann::json record_to_json(const MetricsRecord& r) {
    return {{"repeat", r.repeat},
            {"fold", r.fold},
            {"strategy", strategy_name(r.strategy)},
            {"subset", r.subset},
            {"model", model_kind_name(r.model)},
            {"hyperparams", r.hyperparams},
            {"auc_roc", r.auc_roc},
            {"auc_prc", r.auc_prc}};
}

inline MetricsRecord record_from_json(const nlohmann::json& j) {
    MetricsRecord r;
    r.repeat = j.at("repeat").get<int>();
    r.fold = j.at("fold").get<int>();
    r.strategy = parse_strategy(j.at("strategy").get<std::string>());
    r.subset = j.at("subset").get<std::string>();
    r.model = parse_model_kind(j.at("model").get<std::string>());
    r.hyperparams = j.at("hyperparams").get<std::string>();
    r.auc_roc = j.at("auc_roc").get<double>();
    r.auc_prc = j.at("auc_prc").get<double>();
    return r;
}

inline void write_records_jsonl(const std::vector<MetricsRecord>& records,
                                const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw GkcError("cannot write " + path.string());
    for (const auto& r : records) out << record_to_json(r).dump() << "\n";
}

inline std::vector<MetricsRecord> read_records_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot read " + path.string());
    std::vector<MetricsRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        records.push_back(record_from_json(nlohmann::json::parse(line)));
    }
    return records;
}

inline nlohmann::json summary_to_json(const MetricsSummary& s) {
    return {{"mean", s.mean}, {"sd", s.sd}, {"ci_lo", s.ci_lo}, {"ci_hi", s.ci_hi},
            {"n", s.n}};
}

/// Per-metric summaries of one record set.
inline nlohmann::json summarize_records(const std::vector<MetricsRecord>& records,
                                        std::uint64_t seed) {
    std::vector<double> rocs, prcs;
    for (const auto& r : records) {
        rocs.push_back(r.auc_roc);
        prcs.push_back(r.auc_prc);
    }
    return {{"auc_roc", summary_to_json(summarize(rocs, 1000, 0.95, seed))},
            {"auc_prc", summary_to_json(summarize(prcs, 1000, 0.95, Rng::derive(seed, "prc")))},
            {"n_records", records.size()}};
}

/// Validates that two record sets are paired fold-for-fold, then extracts a
/// metric column from each.
inline std::pair<std::vector<double>, std::vector<double>> paired_metric(
    const std::vector<MetricsRecord>& a, const std::vector<MetricsRecord>& b,
    bool use_prc = false) {
    if (a.size() != b.size()) throw GkcError("comparison requires equally sized record sets");
    std::vector<double> va, vb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].repeat != b[i].repeat || a[i].fold != b[i].fold) {
            throw GkcError("comparison records are not paired by (repeat, fold)");
        }
        va.push_back(use_prc ? a[i].auc_prc : a[i].auc_roc);
        vb.push_back(use_prc ? b[i].auc_prc : b[i].auc_roc);
    }
    return {va, vb};
}

inline void write_matrix_tsv(const FeatureMatrix& fm, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw GkcError("cannot write " + path.string());
    out << "# strategy\t" << strategy_name(fm.strategy) << "\n";
    out << "# subset\t" << subset_name(fm.subset) << "\n";
    out << "# n_cols\t" << fm.n_cols << "\n";
    for (const auto& s : fm.group_spans) {
        out << "# span\t" << modality_name(s.modality) << "\t" << s.begin << "\t" << s.end
            << "\n";
    }
    out.precision(17);
    for (std::size_t i = 0; i < fm.n_rows; ++i) {
        out << fm.row_ids[i] << "\t" << fm.labels[i];
        const double* row = fm.row(i);
        for (std::size_t j = 0; j < fm.n_cols; ++j) out << "\t" << row[j];
        out << "\n";
    }
}

}  // namespace gkc
