#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "gkc/profiles.hpp"

using namespace gkc;

namespace {

const KnowledgeBase& fixture_kb() {
    static KnowledgeBase kb = load_knowledge_base(KnowledgePaths::in_dir(GKC_FIXTURES_DIR));
    return kb;
}

std::vector<PatientRecord> small_cohort(int n, std::uint64_t seed) {
    SyntheticConfig cfg;
    cfg.n_patients = n;
    cfg.seed = seed;
    return generate_synthetic_cohort(cfg, fixture_kb()).patients;
}

}  // namespace

TEST_CASE("gene profile lists mutations sorted by canonical symbol") {
    const auto& kb = fixture_kb();
    auto p = small_cohort(1, 11)[0];
    p.mutations.clear();
    p.mutations.push_back({"TP53", "TP53", ""});
    p.mutations.push_back({"KRAS", "KRAS", ""});
    auto prof = build_profile(p, Modality::Gene, kb);
    auto kras_pos = prof.text.find("Mutation Gene: KRAS");
    auto tp53_pos = prof.text.find("Mutation Gene: TP53");
    REQUIRE(kras_pos != std::string::npos);
    REQUIRE(tp53_pos != std::string::npos);
    CHECK(kras_pos < tp53_pos);
    // annotation text comes from the store
    CHECK(prof.text.find(kb.genes.at("TP53").function_summary) != std::string::npos);
    CHECK(prof.text.find("KEGG Pathways:") != std::string::npos);
    CHECK(prof.text.find("Biological Processes:") != std::string::npos);
    CHECK(prof.text.find("Molecular Functions:") != std::string::npos);
}

TEST_CASE("med profile carries the five annotation fields") {
    const auto& kb = fixture_kb();
    auto p = small_cohort(1, 12)[0];
    p.meds.clear();
    p.meds.push_back({"cisplatin-fixture", "platinum_chemo", 10});
    auto prof = build_profile(p, Modality::Med, kb);
    for (const char* header : {"- Description:", "- Mechanism of Action:", "- Indication:",
                               "- Pharmacodynamics:", "- Toxicity:"}) {
        INFO(header);
        CHECK(prof.text.find(header) != std::string::npos);
    }
    CHECK(prof.text.find("Medication: Cisplatin") != std::string::npos);
    CHECK(prof.text.find("[class: platinum_chemo") != std::string::npos);
}

TEST_CASE("lab profile renders the canonical test order with series") {
    const auto& kb = fixture_kb();
    auto p = small_cohort(1, 13)[0];
    auto prof = build_profile(p, Modality::Lab, kb);
    std::size_t last = 0;
    for (const auto& info : lab_test_registry()) {
        auto pos = prof.text.find(std::string("- ") + info.display + " [");
        REQUIRE(pos != std::string::npos);
        CHECK(pos >= last);
        last = pos;
    }
}

TEST_CASE("profiles are deterministic and record-order invariant") {
    const auto& kb = fixture_kb();
    auto p = small_cohort(1, 14)[0];
    auto digest = [&](const PatientRecord& rec, Modality m) {
        return build_profile(rec, m, kb).digest;
    };
    PatientRecord shuffled = p;
    std::reverse(shuffled.labs.begin(), shuffled.labs.end());
    std::reverse(shuffled.mutations.begin(), shuffled.mutations.end());
    std::reverse(shuffled.meds.begin(), shuffled.meds.end());
    for (Modality m : kAllModalities) {
        CHECK(digest(p, m) == digest(p, m));          // reproducible
        CHECK(digest(p, m) == digest(shuffled, m));   // permutation invariant
    }
}

TEST_CASE("adding a mutation changes only the gene digest") {
    const auto& kb = fixture_kb();
    auto p = small_cohort(1, 15)[0];
    PatientRecord q = p;
    bool has_brca1 = false;
    for (const auto& m : q.mutations) has_brca1 |= m.canonical_symbol == "BRCA1";
    REQUIRE_FALSE(has_brca1);  // seed chosen so BRCA1 is absent
    q.mutations.push_back({"BRCA1", "BRCA1", ""});
    CHECK(build_profile(p, Modality::Gene, kb).digest !=
          build_profile(q, Modality::Gene, kb).digest);
    CHECK(build_profile(p, Modality::Lab, kb).digest ==
          build_profile(q, Modality::Lab, kb).digest);
    CHECK(build_profile(p, Modality::Med, kb).digest ==
          build_profile(q, Modality::Med, kb).digest);
}

TEST_CASE("profiles contain every in-scope record") {
    const auto& kb = fixture_kb();
    for (const auto& p : small_cohort(5, 16)) {
        auto gene = build_profile(p, Modality::Gene, kb);
        for (const auto& m : p.mutations) {
            CHECK(gene.text.find("Mutation Gene: " + m.canonical_symbol) != std::string::npos);
        }
        auto med = build_profile(p, Modality::Med, kb);
        for (const auto& m : p.meds) {
            CHECK(med.text.find(kb.drugs.at(m.drug_id).name) != std::string::npos);
        }
        CHECK(gene.approx_tokens > 0);
        CHECK(gene.digest == sha256_hex(gene.text));
        // no patient identifiers inside the text
        CHECK(gene.text.find(p.patient_id) == std::string::npos);
    }
}

TEST_CASE("profile_corpus") {
    const auto& kb = fixture_kb();
    auto cohort = small_cohort(6, 17);

    SECTION("three profiles per patient") {
        auto corpus = profile_corpus(cohort, kb);
        CHECK(corpus.profiles.size() == 18);
        CHECK(corpus.failures.empty());
    }
    SECTION("empty cohort yields an empty corpus") {
        auto corpus = profile_corpus({}, kb);
        CHECK(corpus.profiles.empty());
    }
    SECTION("lenient mode records the failure and keeps going") {
        cohort[2].meds[0].drug_id = "unknown-drug";
        auto corpus = profile_corpus(cohort, kb, /*strict=*/false);
        CHECK(corpus.profiles.size() == 17);
        REQUIRE(corpus.failures.size() == 1);
        CHECK(corpus.failures[0].first == cohort[2].patient_id);
        CHECK_THROWS_AS(profile_corpus(cohort, kb, /*strict=*/true), UnknownDrugError);
    }
}
