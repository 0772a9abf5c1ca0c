#pragma once

// Domain model of the analytic cohort: landmark eligibility, outcome
// labeling, lab-series preparation, validation, cohort file I/O, and a
// synthetic cohort generator with planted cross-modality signal.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gkc/common.hpp"
#include "gkc/knowledge.hpp"
#include "gkc/modality.hpp"
#include "gkc/rng.hpp"

namespace gkc {

// ---------------------------------------------------------------------------
// Canonical lab tests
// ---------------------------------------------------------------------------

enum class LabTest : int {
    Albumin = 0, Hemoglobin, Platelets, Neutrophils, Lymphocytes,
    Sodium, Creatinine, Alt, Ldh, Crp,
};

inline constexpr int kLabTestCount = 10;
inline constexpr int kLabSeriesLength = 5;
inline constexpr int kLandmarkWindowDays = 90;
inline constexpr int kOutcomeHorizonDays = 365;

struct LabTestInfo {
    LabTest id;
    const char* key;       // stable identifier used in files
    const char* display;   // name used in rendered profiles
    const char* unit;
    double reference_low;
    double reference_high;
};

inline const std::array<LabTestInfo, kLabTestCount>& lab_test_registry() {
    static const std::array<LabTestInfo, kLabTestCount> reg = {{
        {LabTest::Albumin, "albumin", "Albumin", "g/dL", 3.5, 5.0},
        {LabTest::Hemoglobin, "hemoglobin", "Hemoglobin", "g/dL", 12.0, 16.0},
        {LabTest::Platelets, "platelets", "Platelets", "K/uL", 150.0, 400.0},
        {LabTest::Neutrophils, "neutrophils", "Neutrophils", "K/uL", 1.7, 7.0},
        {LabTest::Lymphocytes, "lymphocytes", "Lymphocytes", "K/uL", 0.9, 2.9},
        {LabTest::Sodium, "sodium", "Sodium", "mmol/L", 135.0, 145.0},
        {LabTest::Creatinine, "creatinine", "Creatinine", "mg/dL", 0.6, 1.3},
        {LabTest::Alt, "alt", "ALT", "U/L", 7.0, 55.0},
        {LabTest::Ldh, "ldh", "LDH", "U/L", 122.0, 222.0},
        {LabTest::Crp, "crp", "CRP", "mg/L", 0.0, 8.0},
    }};
    return reg;
}

inline const LabTestInfo& lab_test_info(LabTest t) {
    return lab_test_registry()[static_cast<int>(t)];
}

inline LabTest parse_lab_test(const std::string& key) {
    for (const auto& t : lab_test_registry()) {
        if (key == t.key) return t.id;
    }
    throw ParseError("unknown lab test '" + key + "'");
}

/// Plausibility band: width = band_factor x reference range, centered on the
/// range midpoint. Values outside the band are screened out at ingestion.
struct PlausibilityPolicy {
    double band_factor = 6.0;

    std::pair<double, double> band(LabTest t) const {
        const auto& info = lab_test_info(t);
        double mid = 0.5 * (info.reference_low + info.reference_high);
        double half = 0.5 * band_factor * (info.reference_high - info.reference_low);
        return {mid - half, mid + half};
    }

    bool plausible(LabTest t, double value) const {
        auto [lo, hi] = band(t);
        return std::isfinite(value) && value >= lo && value <= hi;
    }
};

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct LabObservation {
    LabTest test;
    double value = 0.0;
    int observed_day = 0;  // day offset from diagnosis
};

struct GeneMutationRecord {
    std::string raw_symbol;
    std::string canonical_symbol;  // set during ingestion
    std::string detail;            // optional free text
};

struct MedicationEventRecord {
    std::string drug_id;
    std::string class_id;
    int prescribed_day = 0;  // day offset from diagnosis
};

/// Unvalidated ingestion shape; events may lie outside the landmark window
/// and symbols may be aliases.
struct RawPatientRecord {
    std::string patient_id;
    std::int64_t diagnosis_day = 0;
    std::optional<std::int64_t> death_day;
    std::int64_t followup_end_day = 0;
    std::vector<LabObservation> labs;
    std::vector<GeneMutationRecord> mutations;
    std::vector<MedicationEventRecord> meds;
};

/// Landmark-eligible patient: all events inside [diagnosis, landmark], all
/// ten tests observed, mutations and meds nonempty, label derivable.
struct PatientRecord {
    std::string patient_id;
    std::int64_t diagnosis_day = 0;
    std::int64_t landmark_day = 0;
    std::optional<std::int64_t> death_day;
    std::int64_t followup_end_day = 0;
    std::vector<LabObservation> labs;
    std::vector<GeneMutationRecord> mutations;
    std::vector<MedicationEventRecord> meds;
};

struct IneligibleReason {
    enum class Kind { DiedBeforeLandmark, MissingModality, InsufficientFollowup };
    Kind kind;
    std::optional<Modality> modality;  // set for MissingModality

    std::string to_string() const {
        switch (kind) {
            case Kind::DiedBeforeLandmark: return "DiedBeforeLandmark";
            case Kind::InsufficientFollowup: return "InsufficientFollowup";
            case Kind::MissingModality:
                return std::string("MissingModality(") +
                       (modality ? modality_name(*modality) : "?") + ")";
        }
        return "?";
    }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Applies the landmark rule: restricts all modality events to the window,
/// screens implausible lab values, normalizes gene symbols, and decides
/// eligibility.
inline Expected<PatientRecord, IneligibleReason> apply_landmark_filter(
    const RawPatientRecord& raw, const KnowledgeBase& kb,
    int window_days = kLandmarkWindowDays, bool strict = true,
    const PlausibilityPolicy& policy = {}) {
    PatientRecord p;
    p.patient_id = raw.patient_id;
    p.diagnosis_day = raw.diagnosis_day;
    p.landmark_day = raw.diagnosis_day + window_days;
    p.death_day = raw.death_day;
    p.followup_end_day = raw.followup_end_day;

    if (raw.death_day && *raw.death_day < p.landmark_day) {
        return IneligibleReason{IneligibleReason::Kind::DiedBeforeLandmark, {}};
    }
    if (!raw.death_day && raw.followup_end_day < p.landmark_day + kOutcomeHorizonDays) {
        return IneligibleReason{IneligibleReason::Kind::InsufficientFollowup, {}};
    }

    for (const auto& obs : raw.labs) {
        if (obs.observed_day < 0 || obs.observed_day > window_days) continue;
        if (!policy.plausible(obs.test, obs.value)) continue;  // screened
        p.labs.push_back(obs);
    }
    std::set<int> seen_tests;
    for (const auto& obs : p.labs) seen_tests.insert(static_cast<int>(obs.test));
    if (static_cast<int>(seen_tests.size()) < kLabTestCount) {
        return IneligibleReason{IneligibleReason::Kind::MissingModality, Modality::Lab};
    }

    for (const auto& mut : raw.mutations) {
        GeneMutationRecord rec = mut;
        rec.canonical_symbol = normalize_gene_symbol(
            rec.raw_symbol.empty() ? rec.canonical_symbol : rec.raw_symbol, kb.aliases);
        if (!kb.in_panel(rec.canonical_symbol)) {
            if (strict) {
                throw UnknownSymbolError("symbol " + rec.canonical_symbol +
                                         " outside the gene panel");
            }
            continue;  // lenient: drop
        }
        p.mutations.push_back(std::move(rec));
    }
    if (p.mutations.empty()) {
        return IneligibleReason{IneligibleReason::Kind::MissingModality, Modality::Gene};
    }

    for (const auto& med : raw.meds) {
        if (med.prescribed_day < 0 || med.prescribed_day > window_days) continue;
        MedicationEventRecord rec = med;
        rec.class_id = resolve_drug_class(rec.drug_id, kb.classes);
        p.meds.push_back(std::move(rec));
    }
    if (p.meds.empty()) {
        return IneligibleReason{IneligibleReason::Kind::MissingModality, Modality::Med};
    }
    return p;
}

/// 1 iff death within `horizon_days` of the landmark (boundary inclusive).
inline int label_outcome(const PatientRecord& p, int horizon_days = kOutcomeHorizonDays) {
    if (p.death_day) {
        return (*p.death_day - p.landmark_day <= horizon_days) ? 1 : 0;
    }
    if (p.followup_end_day - p.landmark_day < horizon_days) {
        throw CensoredError("patient " + p.patient_id +
                            " has neither death nor complete follow-up");
    }
    return 0;
}

/// Selects the k most recent observations of one test, oldest to newest,
/// padding with copies of the newest value when fewer than k exist.
inline std::vector<double> prepare_lab_series(const std::vector<LabObservation>& obs,
                                              LabTest test, int k = kLabSeriesLength) {
    std::vector<std::pair<int, double>> hits;  // (day, value) in input order
    for (const auto& o : obs) {
        if (o.test == test) hits.emplace_back(o.observed_day, o.value);
    }
    if (hits.empty()) {
        throw NoObservationError(std::string("no in-window observation for ") +
                                 lab_test_info(test).key);
    }
    std::stable_sort(hits.begin(), hits.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    if (static_cast<int>(hits.size()) > k) {
        hits.erase(hits.begin(), hits.end() - k);
    }
    std::vector<double> series;
    series.reserve(k);
    for (const auto& [day, value] : hits) series.push_back(value);
    while (static_cast<int>(series.size()) < k) series.push_back(series.back());
    return series;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    std::string patient_id;
    std::string rule;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

inline ValidationReport validate_cohort(const std::vector<PatientRecord>& cohort,
                                        const KnowledgeBase& kb,
                                        const PlausibilityPolicy& policy = {}) {
    ValidationReport report;
    auto add = [&](const std::string& pid, const char* rule, std::string detail) {
        report.violations.push_back({pid, rule, std::move(detail)});
    };
    std::set<std::string> ids;
    for (const auto& p : cohort) {
        if (!ids.insert(p.patient_id).second) {
            add(p.patient_id, "UniquePatientId", "duplicate patient id");
        }
        if (p.landmark_day != p.diagnosis_day + kLandmarkWindowDays) {
            add(p.patient_id, "LandmarkDerivation", "landmark_day != diagnosis_day + 90");
        }
        if (p.death_day && *p.death_day < p.landmark_day) {
            add(p.patient_id, "LandmarkEligibility", "death before landmark");
        }
        if (!p.death_day && p.followup_end_day < p.landmark_day + kOutcomeHorizonDays) {
            add(p.patient_id, "FollowupCompleteness", "censored before horizon");
        }
        std::set<int> seen;
        for (const auto& o : p.labs) {
            seen.insert(static_cast<int>(o.test));
            if (o.observed_day < 0 || o.observed_day > kLandmarkWindowDays) {
                add(p.patient_id, "LabWindow", std::string(lab_test_info(o.test).key) +
                                                   " at day " + std::to_string(o.observed_day));
            }
            if (!policy.plausible(o.test, o.value)) {
                add(p.patient_id, "LabPlausibility",
                    std::string(lab_test_info(o.test).key) + " = " + std::to_string(o.value));
            }
        }
        if (static_cast<int>(seen.size()) < kLabTestCount) {
            add(p.patient_id, "LabCompleteness",
                std::to_string(seen.size()) + "/10 tests observed");
        }
        if (p.mutations.empty()) add(p.patient_id, "MutationsNonempty", "no mutations");
        for (const auto& m : p.mutations) {
            if (m.canonical_symbol.empty()) {
                add(p.patient_id, "SymbolNormalized", m.raw_symbol);
            } else if (!kb.in_panel(m.canonical_symbol)) {
                add(p.patient_id, "PanelMembership", m.canonical_symbol);
            }
        }
        if (p.meds.empty()) add(p.patient_id, "MedsNonempty", "no medications");
        for (const auto& m : p.meds) {
            if (m.prescribed_day < 0 || m.prescribed_day > kLandmarkWindowDays) {
                add(p.patient_id, "MedWindow", m.drug_id);
            }
            auto it = kb.classes.drug_to_class.find(m.drug_id);
            if (it == kb.classes.drug_to_class.end()) {
                add(p.patient_id, "DrugRegistry", m.drug_id);
            } else if (it->second != m.class_id) {
                add(p.patient_id, "ClassResolution", m.drug_id + " -> " + m.class_id);
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Synthetic cohort with planted signal
// ---------------------------------------------------------------------------

struct SyntheticConfig {
    int n_patients = 184;
    double prevalence_target = 0.364;
    double planted_signal_strength = 1.0;
    int noise_profile_tokens = 600;  // approximate boilerplate budget per profile
    std::uint64_t seed = 7;
    // Which modalities carry planted signal; restricting to one modality
    // supports attribution checks.
    std::set<Modality> signal_modalities = {Modality::Lab, Modality::Gene, Modality::Med};
};

/// Ground-truth planted risk factors for one synthetic patient.
struct PlantedFactors {
    bool gene_comutation = false;   // TP53 + KRAS together
    bool med_combination = false;   // platinum chemo + strong opioid together
    bool lab_trend = false;         // rising NLR with falling albumin
};

struct SyntheticCohort {
    std::vector<PatientRecord> patients;
    std::vector<double> latent_risk;      // per patient, before the logistic link
    std::vector<PlantedFactors> factors;  // ground truth per patient
};

namespace synth {

// Planted signal genes / classes. The mock curator recognizes exactly these
// patterns, so they must stay in sync with curation.hpp.
inline constexpr const char* kRiskGeneA = "TP53";
inline constexpr const char* kRiskGeneB = "KRAS";
inline constexpr const char* kRiskClassA = "platinum_chemo";
inline constexpr const char* kRiskClassB = "strong_opioids";

// Latent-risk weights per planted factor, scaled by planted_signal_strength.
inline constexpr double kWeightGene = 4.2;
inline constexpr double kWeightMed = 2.4;
inline constexpr double kWeightLab = 3.6;
inline constexpr double kFactorProb = 0.35;

// Lab trend effect sizes (relative change across the window under the
// planted trend).
inline constexpr double kTrendNeutrophils = +0.50;
inline constexpr double kTrendLymphocytes = -0.45;
inline constexpr double kTrendAlbumin = -0.18;

struct LabSimParams {
    double mean;
    double baseline_sd;
    double measurement_sd;
    double drift_sd;  // per-window relative drift for patients without the trend
};

inline const std::map<LabTest, LabSimParams>& lab_sim_params() {
    static const std::map<LabTest, LabSimParams> params = {
        {LabTest::Albumin, {3.9, 0.45, 0.10, 0.05}},
        {LabTest::Hemoglobin, {11.7, 1.8, 0.30, 0.04}},
        {LabTest::Platelets, {242.0, 80.0, 12.0, 0.06}},
        {LabTest::Neutrophils, {4.4, 1.5, 0.25, 0.08}},
        {LabTest::Lymphocytes, {1.7, 0.55, 0.10, 0.08}},
        {LabTest::Sodium, {139.0, 2.5, 0.8, 0.01}},
        {LabTest::Creatinine, {0.95, 0.22, 0.05, 0.03}},
        {LabTest::Alt, {28.0, 10.0, 2.5, 0.05}},
        {LabTest::Ldh, {190.0, 45.0, 8.0, 0.05}},
        {LabTest::Crp, {12.0, 7.0, 1.5, 0.10}},
    };
    return params;
}

}  // namespace synth

inline void validate_synthetic_config(const SyntheticConfig& cfg) {
    if (cfg.n_patients < 1) throw ConfigError("n_patients must be >= 1");
    if (!(cfg.prevalence_target > 0.0 && cfg.prevalence_target < 1.0)) {
        throw ConfigError("prevalence_target must lie in (0,1)");
    }
    if (cfg.planted_signal_strength < 0.0) {
        throw ConfigError("planted_signal_strength must be >= 0");
    }
    if (cfg.noise_profile_tokens < 0) throw ConfigError("noise_profile_tokens must be >= 0");
}

/// Generates an eligible synthetic cohort. Pure function of (cfg, kb): the
/// same inputs reproduce the same cohort byte for byte.
///
/// Outcomes follow a logistic link on the planted latent risk, conditioned
/// on an exact positive count of round(n x prevalence_target), so realized
/// prevalence always matches the target up to rounding.
inline SyntheticCohort generate_synthetic_cohort(const SyntheticConfig& cfg,
                                                 const KnowledgeBase& kb) {
    validate_synthetic_config(cfg);

    const bool sig_gene = cfg.signal_modalities.count(Modality::Gene) > 0;
    const bool sig_med = cfg.signal_modalities.count(Modality::Med) > 0;
    const bool sig_lab = cfg.signal_modalities.count(Modality::Lab) > 0;
    const double s = cfg.planted_signal_strength;

    // Noise pools, in deterministic (sorted) order.
    std::vector<std::string> noise_genes;
    for (const auto& sym : kb.panel) {
        if (sym != synth::kRiskGeneA && sym != synth::kRiskGeneB) noise_genes.push_back(sym);
    }
    std::vector<std::string> class_ids;
    for (const auto& [cid, cls] : kb.classes.classes) class_ids.push_back(cid);

    // Reverse alias map so some raw symbols exercise normalization.
    std::map<std::string, std::vector<std::string>> aliases_of;
    for (const auto& [alias, canon] : kb.aliases.map) {
        if (alias != canon) aliases_of[canon].push_back(alias);
    }

    const int n = cfg.n_patients;
    SyntheticCohort out;
    out.patients.resize(n);
    out.latent_risk.resize(n);
    out.factors.resize(n);

    // Pass 1: planted factors, latent risk, and the conditioned logistic link.
    std::vector<double> link_score(n);
    for (int i = 0; i < n; ++i) {
        Rng rng = Rng::child(cfg.seed, "factors", i);
        PlantedFactors f;
        f.gene_comutation = rng.bernoulli(synth::kFactorProb) && sig_gene;
        f.med_combination = rng.bernoulli(synth::kFactorProb) && sig_med;
        f.lab_trend = rng.bernoulli(synth::kFactorProb) && sig_lab;
        double z = s * (synth::kWeightGene * f.gene_comutation +
                        synth::kWeightMed * f.med_combination +
                        synth::kWeightLab * f.lab_trend);
        out.factors[i] = f;
        out.latent_risk[i] = z;
        link_score[i] = z - rng.logistic();
    }
    const int k_pos = static_cast<int>(std::lround(n * cfg.prevalence_target));
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (link_score[a] != link_score[b]) return link_score[a] > link_score[b];
        return a < b;
    });
    std::vector<int> label(n, 0);
    for (int r = 0; r < k_pos; ++r) label[order[r]] = 1;

    // Pass 2: materialize records.
    for (int i = 0; i < n; ++i) {
        const PlantedFactors& f = out.factors[i];
        PatientRecord p;
        {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "P%04d", i);
            p.patient_id = buf;
        }

        Rng cal = Rng::child(cfg.seed, "calendar", i);
        p.diagnosis_day = cal.uniform_int(12000, 19000);
        p.landmark_day = p.diagnosis_day + kLandmarkWindowDays;
        if (label[i] == 1) {
            p.death_day = p.landmark_day + cal.uniform_int(1, kOutcomeHorizonDays);
            p.followup_end_day = *p.death_day;
        } else if (cal.bernoulli(0.3)) {
            p.death_day = p.landmark_day + kOutcomeHorizonDays + 1 + cal.uniform_int(0, 500);
            p.followup_end_day = *p.death_day;
        } else {
            p.followup_end_day = p.landmark_day + kOutcomeHorizonDays + cal.uniform_int(10, 400);
        }

        // Labs. Series are anchored with one early and one late draw, the
        // realistic cadence of a diagnosis workup followed by pre-landmark
        // monitoring; it also means trends are expressed across the window.
        Rng lab = Rng::child(cfg.seed, "lab", i);
        PlausibilityPolicy policy;
        for (const auto& info : lab_test_registry()) {
            const auto& prm = synth::lab_sim_params().at(info.id);
            int n_obs = static_cast<int>(lab.uniform_int(2, 6));
            std::vector<int> days;
            days.push_back(static_cast<int>(lab.uniform_int(0, 18)));
            days.push_back(static_cast<int>(lab.uniform_int(72, kLandmarkWindowDays)));
            for (auto mid : lab.sample_without_replacement(52, static_cast<std::size_t>(
                                                                   std::max(0, n_obs - 2)))) {
                days.push_back(19 + static_cast<int>(mid));
            }
            std::sort(days.begin(), days.end());
            double baseline = lab.normal(prm.mean, prm.baseline_sd);
            double rel_end;  // relative change at day 90 vs baseline
            if (f.lab_trend && info.id == LabTest::Neutrophils) {
                rel_end = synth::kTrendNeutrophils + lab.normal(0.0, 0.05);
            } else if (f.lab_trend && info.id == LabTest::Lymphocytes) {
                rel_end = synth::kTrendLymphocytes + lab.normal(0.0, 0.05);
            } else if (f.lab_trend && info.id == LabTest::Albumin) {
                rel_end = synth::kTrendAlbumin + lab.normal(0.0, 0.03);
            } else {
                rel_end = lab.normal(0.0, prm.drift_sd);
            }
            auto [band_lo, band_hi] = policy.band(info.id);
            for (int d : days) {
                double frac = static_cast<double>(d) / kLandmarkWindowDays;
                double v = baseline * (1.0 + rel_end * frac) + lab.normal(0.0, prm.measurement_sd);
                v = std::min(band_hi, std::max(band_lo, v));
                if (info.reference_low >= 0.0) v = std::max(v, 0.01);
                p.labs.push_back({info.id, v, d});
            }
        }

        // Mutations
        Rng gene = Rng::child(cfg.seed, "gene", i);
        int extra_span = std::max(1, std::min(20, cfg.noise_profile_tokens / 130));
        int n_mut = static_cast<int>(gene.uniform_int(3, 3 + extra_span));
        std::vector<std::string> chosen;
        if (f.gene_comutation) {
            chosen.push_back(synth::kRiskGeneA);
            chosen.push_back(synth::kRiskGeneB);
        } else {
            double r = gene.uniform01();
            if (r < 0.25) chosen.push_back(synth::kRiskGeneA);
            else if (r < 0.50) chosen.push_back(synth::kRiskGeneB);
        }
        int n_noise = std::max(1, n_mut - static_cast<int>(chosen.size()));
        for (auto idx : gene.sample_without_replacement(noise_genes.size(),
                                                        static_cast<std::size_t>(n_noise))) {
            chosen.push_back(noise_genes[idx]);
        }
        for (const auto& sym : chosen) {
            GeneMutationRecord m;
            m.canonical_symbol = sym;
            m.raw_symbol = sym;
            auto ai = aliases_of.find(sym);
            if (ai != aliases_of.end() && gene.bernoulli(0.12)) {
                m.raw_symbol = ai->second[gene.below(ai->second.size())];
            } else if (gene.bernoulli(0.1)) {
                m.raw_symbol = to_lower(sym);  // case noise; normalization restores it
            }
            if (gene.bernoulli(0.2)) m.detail = "missense variant";
            p.mutations.push_back(std::move(m));
        }

        // Medications
        Rng med = Rng::child(cfg.seed, "med", i);
        int cls_span = std::max(1, std::min(22, cfg.noise_profile_tokens / 85));
        int n_cls = static_cast<int>(med.uniform_int(5, 5 + cls_span));
        n_cls = std::min<int>(n_cls, static_cast<int>(class_ids.size()));
        std::vector<std::string> picked;
        for (auto idx : med.sample_without_replacement(class_ids.size(),
                                                       static_cast<std::size_t>(n_cls))) {
            picked.push_back(class_ids[idx]);
        }
        auto has = [&](const char* cid) {
            return std::find(picked.begin(), picked.end(), cid) != picked.end();
        };
        if (f.med_combination) {
            if (!has(synth::kRiskClassA)) picked[0] = synth::kRiskClassA;
            if (!has(synth::kRiskClassB)) {
                // keep size; replace the first slot that is not the risk pair
                for (auto& cid : picked) {
                    if (cid != synth::kRiskClassA) { cid = synth::kRiskClassB; break; }
                }
            }
        } else if (has(synth::kRiskClassA) && has(synth::kRiskClassB)) {
            // forbid the planted combination outside the factor
            const char* to_replace =
                med.bernoulli(0.5) ? synth::kRiskClassA : synth::kRiskClassB;
            for (auto& cid : picked) {
                if (cid == to_replace) {
                    for (const auto& sub : class_ids) {
                        if (sub != synth::kRiskClassA && sub != synth::kRiskClassB &&
                            !has(sub.c_str())) {
                            cid = sub;
                            break;
                        }
                    }
                    break;
                }
            }
        }
        std::sort(picked.begin(), picked.end());
        picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
        for (const auto& cid : picked) {
            const auto& cls = kb.classes.classes.at(cid);
            const std::string& drug = cls.drugs[med.below(cls.drugs.size())];
            int day = static_cast<int>(med.uniform_int(0, kLandmarkWindowDays));
            p.meds.push_back({drug, cid, day});
            if (cls.drugs.size() > 1 && med.bernoulli(0.15)) {
                const std::string& other = cls.drugs[med.below(cls.drugs.size())];
                p.meds.push_back({other, cid, static_cast<int>(med.uniform_int(0, kLandmarkWindowDays))});
            }
        }

        out.patients[i] = std::move(p);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cohort file I/O (JSONL, one self-contained record per line)
// ---------------------------------------------------------------------------

inline nlohmann::json patient_to_json(const PatientRecord& p) {
    nlohmann::json j;
    j["patient_id"] = p.patient_id;
    j["diagnosis_day"] = p.diagnosis_day;
    if (p.death_day) j["death_day"] = *p.death_day;
    j["followup_end_day"] = p.followup_end_day;
    auto& labs = j["labs"] = nlohmann::json::array();
    for (const auto& o : p.labs) {
        labs.push_back({{"test", lab_test_info(o.test).key},
                        {"value", o.value},
                        {"observed_day", o.observed_day}});
    }
    auto& muts = j["mutations"] = nlohmann::json::array();
    for (const auto& m : p.mutations) {
        nlohmann::json e = {{"raw_symbol", m.raw_symbol},
                            {"canonical_symbol", m.canonical_symbol}};
        if (!m.detail.empty()) e["detail"] = m.detail;
        muts.push_back(std::move(e));
    }
    auto& meds = j["meds"] = nlohmann::json::array();
    for (const auto& m : p.meds) {
        meds.push_back({{"drug_id", m.drug_id},
                        {"class_id", m.class_id},
                        {"prescribed_day", m.prescribed_day}});
    }
    return j;
}

inline void write_cohort_jsonl(const std::vector<PatientRecord>& cohort,
                               const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw GkcError("cannot write " + path);
    for (const auto& p : cohort) out << patient_to_json(p).dump() << "\n";
}

inline PatientRecord patient_from_json(const nlohmann::json& j, bool strict,
                                       const std::string& where) {
    detail::check_fields(j, {"patient_id", "diagnosis_day", "followup_end_day", "labs",
                             "mutations", "meds"},
                         {"death_day"}, strict, where);
    PatientRecord p;
    p.patient_id = j.at("patient_id").get<std::string>();
    p.diagnosis_day = j.at("diagnosis_day").get<std::int64_t>();
    p.landmark_day = p.diagnosis_day + kLandmarkWindowDays;
    if (j.contains("death_day")) p.death_day = j.at("death_day").get<std::int64_t>();
    p.followup_end_day = j.at("followup_end_day").get<std::int64_t>();
    for (const auto& e : j.at("labs")) {
        detail::check_fields(e, {"test", "value", "observed_day"}, {}, strict, where);
        p.labs.push_back({parse_lab_test(e.at("test").get<std::string>()),
                          e.at("value").get<double>(), e.at("observed_day").get<int>()});
    }
    for (const auto& e : j.at("mutations")) {
        detail::check_fields(e, {"raw_symbol", "canonical_symbol"}, {"detail"}, strict, where);
        GeneMutationRecord m;
        m.raw_symbol = e.at("raw_symbol").get<std::string>();
        m.canonical_symbol = e.at("canonical_symbol").get<std::string>();
        if (e.contains("detail")) m.detail = e.at("detail").get<std::string>();
        p.mutations.push_back(std::move(m));
    }
    for (const auto& e : j.at("meds")) {
        detail::check_fields(e, {"drug_id", "class_id", "prescribed_day"}, {}, strict, where);
        p.meds.push_back({e.at("drug_id").get<std::string>(),
                          e.at("class_id").get<std::string>(),
                          e.at("prescribed_day").get<int>()});
    }
    return p;
}

inline std::vector<PatientRecord> read_cohort_jsonl(const std::string& path,
                                                    bool strict = true) {
    std::vector<PatientRecord> cohort;
    std::size_t lineno = 0;
    for (const auto& j : detail::read_jsonl(path)) {
        ++lineno;
        cohort.push_back(patient_from_json(j, strict, path + ":" + std::to_string(lineno)));
    }
    return cohort;
}

}  // namespace gkc
