#pragma once

// The curation stage: persona-based prompt construction, provider-agnostic
// deterministic summarization, strict report-schema validation, canonical
// report rendering, and a content-addressed report cache.
//
// The mock provider is a transparent rule table over profile tokens. It
// recognizes exactly the planted-signal patterns emitted by the synthetic
// generator (see cohort.hpp synth constants) and verbalizes them as discrete
// pattern tokens, which is what makes the curated representation learnable.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "gkc/common.hpp"
#include "gkc/hash.hpp"
#include "gkc/modality.hpp"
#include "gkc/profiles.hpp"

namespace gkc {

// ---------------------------------------------------------------------------
// Prompt templates and decoding parameters
// ---------------------------------------------------------------------------

struct PromptTemplate {
    Modality modality = Modality::Lab;
    std::string persona;
    std::string task_guidance;
    std::string output_schema_description;
    std::string version = "v1";
};

inline void validate_template(const PromptTemplate& tpl) {
    if (tpl.persona.empty()) throw ConfigError("prompt template: empty persona");
    if (tpl.task_guidance.empty()) throw ConfigError("prompt template: empty task guidance");
    if (tpl.output_schema_description.empty()) {
        throw ConfigError("prompt template: empty schema description");
    }
    if (tpl.version.empty()) throw ConfigError("prompt template: empty version");
}

inline PromptTemplate default_prompt_template(Modality m) {
    PromptTemplate tpl;
    tpl.modality = m;
    tpl.version = "v1";
    const char* generic_schema =
        "Respond with a single JSON object containing exactly these keys: "
        "\"summary\" (nonempty string), \"key_domains\" (object mapping domain names to "
        "string arrays), \"therapeutic_implications\" (string array), "
        "\"key_positive_factors\" (string array), \"key_negative_factors\" (string array). "
        "Arrays may be empty.";
    switch (m) {
        case Modality::Gene:
            tpl.persona =
                "You are a systems biologist assessing a tumor genomic profile for its "
                "impact on treatment outcome.";
            tpl.task_guidance =
                "Identify which oncogenic driver pathways are activated and which tumor "
                "suppressor pathways are inactivated, call out high-risk co-occurring "
                "alterations, and state the therapeutic implications.";
            tpl.output_schema_description =
                "Respond with a single JSON object containing exactly these keys: "
                "\"prognostic_summary\" (nonempty string), \"key_prognostic_domains\" "
                "(object with string arrays \"oncogenic_driver_pathways_activated\", "
                "\"tumor_suppressor_pathways_inactivated\", \"therapeutic_implications\"), "
                "\"key_positive_factors\" (string array), \"key_negative_factors\" "
                "(string array). Arrays may be empty.";
            break;
        case Modality::Med:
            tpl.persona =
                "You are a clinical pharmacologist reviewing an oncology medication "
                "history.";
            tpl.task_guidance =
                "Assess treatment intent and disease burden reflected by the prescribed "
                "drug classes, flag combinations that signal escalating symptom burden, "
                "and state the therapeutic implications.";
            tpl.output_schema_description = generic_schema;
            break;
        case Modality::Lab:
            tpl.persona =
                "You are a clinical pathologist reviewing serial laboratory results.";
            tpl.task_guidance =
                "Evaluate systemic inflammation and nutritional status, describe the "
                "trajectory across the observation window, and flag adverse trends.";
            tpl.output_schema_description = generic_schema;
            break;
    }
    validate_template(tpl);
    return tpl;
}

struct DecodingParams {
    double temperature = 0.0;
    int top_k = 1;
    int max_output_tokens = 1024;

    std::string canonical() const {
        std::ostringstream os;
        os << "temperature=" << temperature << ";top_k=" << top_k
           << ";max_output_tokens=" << max_output_tokens;
        return os.str();
    }
};

inline constexpr const char* kProfileBeginMarker = "=== PATIENT PROFILE ===";
inline constexpr const char* kProfileEndMarker = "=== END PROFILE ===";

/// Prompt = persona + task guidance + schema instructions + the profile text
/// verbatim between markers. Generation is from-context only.
inline std::string build_prompt(const ModalityProfile& profile, const PromptTemplate& tpl) {
    if (tpl.modality != profile.modality) {
        throw ModalityMismatchError(std::string("template for ") +
                                    modality_name(tpl.modality) + " used with a " +
                                    modality_name(profile.modality) + " profile");
    }
    validate_template(tpl);
    std::ostringstream os;
    os << tpl.persona << "\n\n";
    os << "Task: " << tpl.task_guidance << "\n\n";
    os << "Output: " << tpl.output_schema_description << "\n\n";
    os << "Summarize only the profile between the markers; do not add outside "
          "knowledge.\n\n";
    os << kProfileBeginMarker << "\n" << profile.text << "\n" << kProfileEndMarker << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Report schema
// ---------------------------------------------------------------------------

struct CuratorReport {
    Modality modality = Modality::Lab;
    std::string summary;
    std::map<std::string, std::vector<std::string>> key_domains;
    std::vector<std::string> therapeutic_implications;
    std::vector<std::string> key_positive_factors;
    std::vector<std::string> key_negative_factors;
    std::string raw_json;
};

struct SchemaViolation {
    std::vector<std::string> paths;  // machine-readable: "missing:x", "type:x", ...

    std::string message() const {
        std::string out = "schema violation:";
        for (const auto& p : paths) out += " " + p;
        return out;
    }
};

struct SchemaViolationError : GkcError {
    SchemaViolation violation;
    explicit SchemaViolationError(SchemaViolation v)
        : GkcError(v.message()), violation(std::move(v)) {}
};

namespace detail {

inline bool read_string_array(const nlohmann::json& j, std::vector<std::string>& out,
                              const std::string& path, std::vector<std::string>& errors) {
    if (!j.is_array()) {
        errors.push_back("type:" + path);
        return false;
    }
    for (const auto& e : j) {
        if (!e.is_string()) {
            errors.push_back("type:" + path + "[]");
            return false;
        }
        out.push_back(e.get<std::string>());
    }
    return true;
}

}  // namespace detail

/// Validates a raw provider document against the modality schema. The gene
/// modality additionally accepts the gene-specific key spelling
/// (prognostic_summary / key_prognostic_domains) and maps it onto the
/// generic skeleton. Strict mode rejects unexpected extra keys.
inline Expected<CuratorReport, SchemaViolation> validate_report(const std::string& raw,
                                                                Modality modality,
                                                                bool strict = true) {
    SchemaViolation v;
    nlohmann::json j = nlohmann::json::parse(raw, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        v.paths.push_back("parse:not-a-json-object");
        return v;
    }

    CuratorReport rep;
    rep.modality = modality;
    rep.raw_json = raw;

    const bool gene_spelling = modality == Modality::Gene && j.contains("prognostic_summary");
    const std::string summary_key = gene_spelling ? "prognostic_summary" : "summary";
    const std::string domains_key = gene_spelling ? "key_prognostic_domains" : "key_domains";

    std::set<std::string> allowed = {summary_key, domains_key, "key_positive_factors",
                                     "key_negative_factors"};
    if (!gene_spelling) allowed.insert("therapeutic_implications");

    if (!j.contains(summary_key)) {
        v.paths.push_back("missing:" + summary_key);
    } else if (!j.at(summary_key).is_string()) {
        v.paths.push_back("type:" + summary_key);
    } else {
        rep.summary = j.at(summary_key).get<std::string>();
        if (trim(rep.summary).empty()) v.paths.push_back("empty:" + summary_key);
    }

    if (!j.contains(domains_key)) {
        v.paths.push_back("missing:" + domains_key);
    } else if (!j.at(domains_key).is_object()) {
        v.paths.push_back("type:" + domains_key);
    } else {
        for (auto it = j.at(domains_key).begin(); it != j.at(domains_key).end(); ++it) {
            std::vector<std::string> items;
            if (detail::read_string_array(it.value(), items, domains_key + "." + it.key(),
                                          v.paths)) {
                if (gene_spelling && it.key() == "therapeutic_implications") {
                    rep.therapeutic_implications = std::move(items);
                } else {
                    rep.key_domains.emplace(it.key(), std::move(items));
                }
            }
        }
    }

    if (!gene_spelling) {
        if (!j.contains("therapeutic_implications")) {
            v.paths.push_back("missing:therapeutic_implications");
        } else {
            detail::read_string_array(j.at("therapeutic_implications"),
                                      rep.therapeutic_implications,
                                      "therapeutic_implications", v.paths);
        }
    } else if (j.at(domains_key).is_object() &&
               !j.at(domains_key).contains("therapeutic_implications")) {
        v.paths.push_back("missing:key_prognostic_domains.therapeutic_implications");
    }

    for (const char* key : {"key_positive_factors", "key_negative_factors"}) {
        if (!j.contains(key)) {
            v.paths.push_back(std::string("missing:") + key);
            continue;
        }
        auto& dst = std::string(key) == "key_positive_factors" ? rep.key_positive_factors
                                                               : rep.key_negative_factors;
        detail::read_string_array(j.at(key), dst, key, v.paths);
    }

    if (strict) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!allowed.count(it.key())) v.paths.push_back("extra:" + it.key());
        }
    }

    if (!v.paths.empty()) return v;
    return rep;
}

/// Canonical flat rendering of a validated report; this text is what gets
/// embedded for the curated-feature strategy.
inline std::string render_report_text(const CuratorReport& r) {
    std::ostringstream os;
    auto list_or_none = [](const std::vector<std::string>& items) {
        if (items.empty()) return std::string("none");
        std::string out;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i) out += "; ";
            out += items[i];
        }
        return out;
    };
    os << "SUMMARY: " << r.summary << "\n";
    os << "KEY DOMAINS:\n";
    if (r.key_domains.empty()) {
        os << "- none\n";
    } else {
        for (const auto& [name, items] : r.key_domains) {
            os << "- " << name << ": " << list_or_none(items) << "\n";
        }
    }
    os << "THERAPEUTIC IMPLICATIONS: " << list_or_none(r.therapeutic_implications) << "\n";
    os << "KEY POSITIVE FACTORS: " << list_or_none(r.key_positive_factors) << "\n";
    os << "KEY NEGATIVE FACTORS: " << list_or_none(r.key_negative_factors) << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

class CuratorProvider {
public:
    virtual ~CuratorProvider() = default;
    virtual std::string name() const = 0;
    virtual bool deterministic() const = 0;
    virtual int max_attempts() const { return 1; }
    virtual std::chrono::milliseconds backoff_start() const {
        return std::chrono::milliseconds(1000);
    }
    virtual std::string complete(const std::string& prompt, const DecodingParams& params) = 0;
};

namespace mock_rules {

// Pattern tokens the rule table emits. The synthetic generator plants the
// corresponding structures; keep in sync with gkc::synth.
inline constexpr const char* kGenePattern = "doublehit";
inline constexpr const char* kMedPattern = "palliativeshift";
inline constexpr const char* kLabPattern = "inflammatorydrift";

// Lab trend rule thresholds (ratios of last to first slot values).
inline constexpr double kNlrRiseThreshold = 1.40;
inline constexpr double kNlrSoftThreshold = 1.22;
inline constexpr double kAlbuminDropThreshold = 0.93;

}  // namespace mock_rules

/// Deterministic rule-table curator used for tests and desk-scale runs.
/// Parses the profile text between the prompt markers and emits a
/// schema-conforming JSON report.
class MockCurator final : public CuratorProvider {
public:
    std::string name() const override { return "mock-curator"; }
    bool deterministic() const override { return true; }

    std::string complete(const std::string& prompt, const DecodingParams&) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        std::string profile = extract_profile(prompt);
        if (profile.rfind("Genomic profile:", 0) == 0) return gene_report(profile);
        if (profile.rfind("Medication profile:", 0) == 0) return med_report(profile);
        if (profile.rfind("Laboratory profile:", 0) == 0) return lab_report(profile);
        throw ProviderError("mock curator: unrecognized profile shape");
    }

    std::uint64_t call_count() const { return calls_.load(std::memory_order_relaxed); }

private:
    std::atomic<std::uint64_t> calls_{0};

    static std::string extract_profile(const std::string& prompt) {
        auto b = prompt.find(kProfileBeginMarker);
        auto e = prompt.rfind(kProfileEndMarker);
        if (b == std::string::npos || e == std::string::npos || e <= b) {
            throw ProviderError("mock curator: profile markers not found");
        }
        b += std::string(kProfileBeginMarker).size() + 1;  // skip marker + newline
        return prompt.substr(b, e - b);
    }

    static std::vector<std::string> matches(const std::string& text, const std::regex& re) {
        std::vector<std::string> out;
        for (auto it = std::sregex_iterator(text.begin(), text.end(), re);
             it != std::sregex_iterator(); ++it) {
            out.push_back((*it)[1].str());
        }
        return out;
    }

    static std::string gene_report(const std::string& profile) {
        static const std::regex gene_re(R"(Mutation Gene: ([A-Z0-9-]+))");
        static const std::regex kegg_re(R"(- KEGG Pathways: ([^\n]+))");
        std::vector<std::string> genes = matches(profile, gene_re);
        std::set<std::string> pathways;
        for (const auto& line : matches(profile, kegg_re)) {
            std::stringstream ss(line);
            std::string item;
            while (std::getline(ss, item, ';')) {
                std::string t = trim(item);
                if (!t.empty()) pathways.insert(t);
            }
        }
        bool doublehit = std::count(genes.begin(), genes.end(), "TP53") > 0 &&
                         std::count(genes.begin(), genes.end(), "KRAS") > 0;

        nlohmann::json j;
        std::ostringstream sum;
        sum << "Targeted panel shows " << genes.size() << " mutated gene(s).";
        if (doublehit) {
            sum << " Concurrent KRAS and TP53 mutations form a " << mock_rules::kGenePattern
                << " configuration with simultaneous driver activation and suppressor "
                   "loss, indicating aggressive tumor biology.";
        } else {
            sum << " No concurrent driver and suppressor co-mutation detected.";
        }
        j["prognostic_summary"] = sum.str();

        std::vector<std::string> activated, inactivated;
        for (const auto& pw : pathways) {
            if (pw.find("p53") != std::string::npos || pw.find("repair") != std::string::npos ||
                pw.find("Cell cycle") != std::string::npos) {
                if (inactivated.size() < 4) inactivated.push_back(pw);
            } else if (activated.size() < 5) {
                activated.push_back(pw);
            }
        }
        std::vector<std::string> implications;
        if (doublehit) {
            implications.push_back(
                "Likely resistance to therapies depending on intact p53 function.");
        }
        if (std::count(genes.begin(), genes.end(), "KRAS") > 0) {
            implications.push_back("RAS pathway activation may respond to MEK inhibition.");
        }
        j["key_prognostic_domains"] = {
            {"oncogenic_driver_pathways_activated", activated},
            {"tumor_suppressor_pathways_inactivated", inactivated},
            {"therapeutic_implications", implications},
        };

        std::vector<std::string> positives, negatives;
        if (doublehit) {
            negatives.push_back("Concurrent KRAS and TP53 mutations (pattern " +
                                std::string(mock_rules::kGenePattern) + ").");
        }
        if (genes.size() >= 7) negatives.push_back("High mutational burden across the panel.");
        if (!doublehit && genes.size() <= 4) {
            positives.push_back("Limited co-occurring driver alterations.");
        }
        j["key_positive_factors"] = positives;
        j["key_negative_factors"] = negatives;
        return j.dump();
    }

    static std::string med_report(const std::string& profile) {
        static const std::regex class_re(R"(\[class: ([a-z0-9_]+) -)");
        std::vector<std::string> all = matches(profile, class_re);
        std::set<std::string> classes(all.begin(), all.end());
        bool combo = classes.count("platinum_chemo") > 0 && classes.count("strong_opioids") > 0;

        nlohmann::json j;
        std::ostringstream sum;
        sum << "Medication history spans " << classes.size() << " drug class(es).";
        if (combo) {
            sum << " Platinum chemotherapy combined with strong opioid requirement "
                << "(pattern " << mock_rules::kMedPattern
                << ") indicates high treatment and symptom burden.";
        } else {
            sum << " Treatment intent appears proportionate to disease burden.";
        }
        j["summary"] = sum.str();
        j["key_domains"] = {
            {"treatment_classes", std::vector<std::string>(classes.begin(), classes.end())}};

        std::vector<std::string> implications, positives, negatives;
        if (classes.count("pd1_pdl1_checkpoint_inhibitors")) {
            implications.push_back("Active immune checkpoint blockade in course.");
        }
        if (classes.count("egfr_tki") || classes.count("alk_ros1_tki")) {
            implications.push_back("Oncogene-directed targeted therapy in course.");
        }
        if (combo) {
            negatives.push_back("Concurrent platinum chemotherapy and strong opioids (pattern " +
                                std::string(mock_rules::kMedPattern) + ").");
        } else {
            positives.push_back("No high-burden treatment combination identified.");
        }
        j["therapeutic_implications"] = implications;
        j["key_positive_factors"] = positives;
        j["key_negative_factors"] = negatives;
        return j.dump();
    }

    static std::string lab_report(const std::string& profile) {
        static const std::regex line_re(
            R"(- ([A-Za-z ]+) \[([^,]+), reference ([0-9.]+)-([0-9.]+)\]: ([^\n]+))");
        struct Series {
            double first = 0, last = 0, lo = 0, hi = 0;
        };
        std::map<std::string, Series> tests;
        for (auto it = std::sregex_iterator(profile.begin(), profile.end(), line_re);
             it != std::sregex_iterator(); ++it) {
            Series s;
            s.lo = std::stod((*it)[3].str());
            s.hi = std::stod((*it)[4].str());
            std::stringstream ss((*it)[5].str());
            std::string v;
            std::vector<double> vals;
            while (std::getline(ss, v, ',')) vals.push_back(std::stod(trim(v)));
            if (vals.empty()) continue;
            s.first = vals.front();
            s.last = vals.back();
            tests.emplace((*it)[1].str(), s);
        }

        std::vector<std::string> abnormal;
        for (const auto& [name, s] : tests) {
            if (s.last < s.lo) abnormal.push_back(name + " below reference");
            else if (s.last > s.hi) abnormal.push_back(name + " above reference");
        }

        bool drift = false;
        auto neut = tests.find("Neutrophils");
        auto lymph = tests.find("Lymphocytes");
        auto alb = tests.find("Albumin");
        if (neut != tests.end() && lymph != tests.end() && lymph->second.first > 0 &&
            lymph->second.last > 0) {
            double nlr_first = neut->second.first / lymph->second.first;
            double nlr_last = neut->second.last / lymph->second.last;
            double rise = nlr_first > 0 ? nlr_last / nlr_first : 1.0;
            double alb_ratio = (alb != tests.end() && alb->second.first > 0)
                                   ? alb->second.last / alb->second.first
                                   : 1.0;
            drift = rise >= mock_rules::kNlrRiseThreshold ||
                    (rise >= mock_rules::kNlrSoftThreshold &&
                     alb_ratio <= mock_rules::kAlbuminDropThreshold);
        }

        nlohmann::json j;
        std::ostringstream sum;
        sum << "Serial laboratory review across " << tests.size() << " tests; "
            << abnormal.size() << " outside reference at latest draw.";
        if (drift) {
            sum << " Rising neutrophil-to-lymphocyte ratio with declining albumin "
                << "(pattern " << mock_rules::kLabPattern
                << ") indicates escalating inflammation and nutritional decline.";
        } else {
            sum << " No adverse inflammatory or nutritional trajectory detected.";
        }
        j["summary"] = sum.str();
        j["key_domains"] = {{"abnormal_tests", abnormal}};

        std::vector<std::string> implications, positives, negatives;
        if (drift) {
            negatives.push_back(
                "Escalating inflammatory markers with nutritional decline (pattern " +
                std::string(mock_rules::kLabPattern) + ").");
            implications.push_back("Physiological reserve may limit treatment tolerance.");
        } else if (abnormal.empty()) {
            positives.push_back("All tracked values within reference ranges.");
        } else {
            positives.push_back("Stable trajectory without adverse trend.");
        }
        j["therapeutic_implications"] = implications;
        j["key_positive_factors"] = positives;
        j["key_negative_factors"] = negatives;
        return j.dump();
    }
};

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

struct CacheStats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t provider_calls = 0;
    std::uint64_t nondeterminism_warnings = 0;
};

/// Content-addressed report cache: in-memory map plus an optional directory
/// of files named by cache-key digest. Duplicate in-flight requests for one
/// key collapse to a single provider call.
class ReportCache {
public:
    ReportCache() = default;
    explicit ReportCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(*dir_);
    }

    static std::string make_key(const std::string& prompt, const std::string& provider_name,
                                const DecodingParams& params, const std::string& version) {
        Sha256 h;
        h.update(prompt);
        h.update(std::string_view("\x1f", 1));
        h.update(provider_name);
        h.update(std::string_view("\x1f", 1));
        h.update(params.canonical());
        h.update(std::string_view("\x1f", 1));
        h.update(version);
        auto d = h.finish();
        return to_hex(d.data(), d.size());
    }

    /// Returns the cached raw output for key, or computes it via fn exactly
    /// once even under concurrent callers.
    std::string get_or_compute(const std::string& key, const std::string& prompt_digest,
                               const std::function<std::string()>& fn) {
        {
            std::unique_lock<std::mutex> lock(mutex_);
            for (;;) {
                auto it = entries_.find(key);
                if (it != entries_.end()) {
                    ++stats_.hits;
                    return it->second;
                }
                if (!inflight_.count(key)) break;
                cv_.wait(lock);
            }
            if (dir_) {
                auto path = *dir_ / (key + ".json");
                if (std::filesystem::exists(path)) {
                    std::ifstream in(path);
                    nlohmann::json j = nlohmann::json::parse(in);
                    std::string raw = j.at("raw_output").get<std::string>();
                    entries_.emplace(key, raw);
                    ++stats_.hits;
                    return raw;
                }
            }
            inflight_.insert(key);
            ++stats_.misses;
        }

        std::string raw;
        try {
            raw = fn();
            ++stats_.provider_calls;
        } catch (...) {
            std::lock_guard<std::mutex> lock(mutex_);
            inflight_.erase(key);
            cv_.notify_all();
            throw;
        }

        {
            std::lock_guard<std::mutex> lock(mutex_);
            entries_.emplace(key, raw);
            inflight_.erase(key);
        }
        cv_.notify_all();
        if (dir_) persist(key, prompt_digest, raw);
        return raw;
    }

    void note_nondeterminism() {
        std::lock_guard<std::mutex> lock(mutex_);
        ++stats_.nondeterminism_warnings;
    }

    CacheStats stats() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return stats_;
    }

private:
    void persist(const std::string& key, const std::string& prompt_digest,
                 const std::string& raw) {
        nlohmann::json j;
        j["prompt_digest"] = prompt_digest;
        j["raw_output"] = raw;
        auto tmp = *dir_ / (key + ".tmp");
        auto path = *dir_ / (key + ".json");
        {
            std::ofstream out(tmp, std::ios::binary);
            out << j.dump(2) << "\n";
        }
        std::filesystem::rename(tmp, path);
    }

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::map<std::string, std::string> entries_;
    std::set<std::string> inflight_;
    std::optional<std::filesystem::path> dir_;
    CacheStats stats_;
};

// ---------------------------------------------------------------------------
// curate()
// ---------------------------------------------------------------------------

namespace detail {

/// Single repair pass for provider output: strip code fences and any
/// leading/trailing prose around the outermost JSON object.
inline std::string repair_json_wrapper(const std::string& raw) {
    auto b = raw.find('{');
    auto e = raw.rfind('}');
    if (b == std::string::npos || e == std::string::npos || e < b) return raw;
    return raw.substr(b, e - b + 1);
}

inline std::string call_with_retries(CuratorProvider& provider, const std::string& prompt,
                                     const DecodingParams& params) {
    const int attempts = std::max(1, provider.max_attempts());
    std::chrono::milliseconds backoff = provider.backoff_start();
    for (int a = 1;; ++a) {
        try {
            return provider.complete(prompt, params);
        } catch (const ProviderError&) {
            if (a >= attempts) throw;
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
}

}  // namespace detail

/// Runs the curator on one profile: builds the prompt, consults the cache,
/// invokes the provider on a miss, validates (with one repair pass), and
/// returns the validated report.
inline CuratorReport curate(CuratorProvider& provider, const ModalityProfile& profile,
                            const PromptTemplate& tpl, const DecodingParams& params,
                            ReportCache& cache, bool strict = true,
                            bool verify_cache = false) {
    const std::string prompt = build_prompt(profile, tpl);
    const std::string prompt_digest = sha256_hex(prompt);
    const std::string key = ReportCache::make_key(prompt, provider.name(), params, tpl.version);

    bool fresh_call = false;
    std::string raw = cache.get_or_compute(key, prompt_digest, [&] {
        fresh_call = true;
        return detail::call_with_retries(provider, prompt, params);
    });

    if (verify_cache && !fresh_call && provider.deterministic()) {
        std::string again = detail::call_with_retries(provider, prompt, params);
        if (sha256_hex(again) != sha256_hex(raw)) cache.note_nondeterminism();
    }

    auto res = validate_report(raw, profile.modality, strict);
    if (!res.ok()) {
        auto repaired = detail::repair_json_wrapper(raw);
        if (repaired != raw) {
            auto res2 = validate_report(repaired, profile.modality, strict);
            if (res2.ok()) return res2.value();
        }
        throw SchemaViolationError(res.error());
    }
    return res.value();
}

}  // namespace gkc
