#pragma once

// Deterministic compilation of the three per-patient modality text profiles.
// Profiles are the raw-embedding inputs and the curator inputs, so their
// text (and digests) must be reproducible: records are sorted before
// rendering and lab values use fixed 4-significant-digit formatting.

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gkc/cohort.hpp"
#include "gkc/hash.hpp"
#include "gkc/knowledge.hpp"
#include "gkc/modality.hpp"

namespace gkc {

struct ModalityProfile {
    std::string patient_id;
    Modality modality = Modality::Lab;
    std::string text;
    std::string digest;  // sha256 of text
    std::size_t approx_tokens = 0;
};

namespace detail {

inline std::string join(const std::vector<std::string>& items, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

inline std::string render_gene_profile(const PatientRecord& p, const KnowledgeBase& kb) {
    // Distinct canonical symbols, lexicographic.
    std::set<std::string> symbols;
    for (const auto& m : p.mutations) symbols.insert(m.canonical_symbol);
    std::ostringstream os;
    os << "Genomic profile: " << symbols.size() << " mutated gene(s) on the targeted panel.\n\n";
    int n = 0;
    for (const auto& sym : symbols) {
        auto it = kb.genes.find(sym);
        if (it == kb.genes.end()) throw UnknownSymbolError("no annotation for " + sym);
        const GeneAnnotation& g = it->second;
        os << ++n << ". Mutation Gene: " << g.hgnc_symbol << "\n";
        os << "   - Function: " << g.function_summary << "\n";
        os << "   - KEGG Pathways: " << join(g.kegg_pathways, "; ") << "\n";
        os << "   - Biological Processes: " << join(g.go_biological_processes, "; ") << "\n";
        os << "   - Molecular Functions: " << join(g.go_molecular_functions, "; ") << "\n";
    }
    return os.str();
}

inline std::string render_med_profile(const PatientRecord& p, const KnowledgeBase& kb) {
    // Distinct drugs, sorted by (class_id, drug_id).
    std::set<std::pair<std::string, std::string>> drugs;
    for (const auto& m : p.meds) drugs.insert({m.class_id, m.drug_id});
    std::ostringstream os;
    os << "Medication profile: " << drugs.size()
       << " distinct drug(s) prescribed in the landmark window.\n\n";
    int n = 0;
    for (const auto& [class_id, drug_id] : drugs) {
        auto it = kb.drugs.find(drug_id);
        if (it == kb.drugs.end()) throw UnknownDrugError("no annotation for " + drug_id);
        const DrugAnnotation& d = it->second;
        const auto& cls = kb.classes.classes.at(class_id);
        os << ++n << ". Medication: " << d.name << " [class: " << class_id << " - "
           << cls.display_name << "]\n";
        os << "   - Description: " << d.description << "\n";
        os << "   - Mechanism of Action: " << d.mechanism_of_action << "\n";
        os << "   - Indication: " << d.indication << "\n";
        os << "   - Pharmacodynamics: " << d.pharmacodynamics << "\n";
        os << "   - Toxicity: " << d.toxicity << "\n";
    }
    return os.str();
}

inline std::string render_lab_profile(const PatientRecord& p) {
    std::ostringstream os;
    os << "Laboratory profile: most recent " << kLabSeriesLength
       << " values per test, oldest to newest.\n\n";
    for (const auto& info : lab_test_registry()) {
        auto series = prepare_lab_series(p.labs, info.id);
        os << "- " << info.display << " [" << info.unit << ", reference "
           << format_sig4(info.reference_low) << "-" << format_sig4(info.reference_high)
           << "]: ";
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (i) os << ", ";
            os << format_sig4(series[i]);
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace detail

/// Builds one modality profile. Deterministic: record order in the patient
/// does not affect the output.
inline ModalityProfile build_profile(const PatientRecord& p, Modality m,
                                     const KnowledgeBase& kb) {
    ModalityProfile prof;
    prof.patient_id = p.patient_id;
    prof.modality = m;
    switch (m) {
        case Modality::Gene: prof.text = detail::render_gene_profile(p, kb); break;
        case Modality::Med: prof.text = detail::render_med_profile(p, kb); break;
        case Modality::Lab: prof.text = detail::render_lab_profile(p); break;
    }
    prof.digest = sha256_hex(prof.text);
    prof.approx_tokens = count_whitespace_tokens(prof.text);
    return prof;
}

using ProfileKey = std::pair<std::string, Modality>;

struct ProfileCorpus {
    std::map<ProfileKey, ModalityProfile> profiles;
    std::vector<std::pair<std::string, std::string>> failures;  // (patient_id, what)

    const ModalityProfile& at(const std::string& pid, Modality m) const {
        auto it = profiles.find({pid, m});
        if (it == profiles.end()) {
            throw MissingArtifactError("no profile for " + pid + "/" + modality_name(m));
        }
        return it->second;
    }
};

/// Builds all three profiles for every patient. In strict mode any failure
/// aborts the batch; in lenient mode failures are recorded and skipped.
inline ProfileCorpus profile_corpus(const std::vector<PatientRecord>& cohort,
                                    const KnowledgeBase& kb, bool strict = true) {
    ProfileCorpus corpus;
    for (const auto& p : cohort) {
        for (Modality m : kAllModalities) {
            try {
                corpus.profiles.emplace(ProfileKey{p.patient_id, m}, build_profile(p, m, kb));
            } catch (const GkcError& e) {
                if (strict) throw;
                corpus.failures.emplace_back(p.patient_id, e.what());
            }
        }
    }
    return corpus;
}

}  // namespace gkc
