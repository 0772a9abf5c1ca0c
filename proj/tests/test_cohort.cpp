#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <sstream>

#include "gkc/cohort.hpp"

using namespace gkc;

namespace {

const KnowledgeBase& fixture_kb() {
    static KnowledgeBase kb = load_knowledge_base(KnowledgePaths::in_dir(GKC_FIXTURES_DIR));
    return kb;
}

/// A raw record that passes every eligibility check.
RawPatientRecord eligible_raw() {
    RawPatientRecord raw;
    raw.patient_id = "T0001";
    raw.diagnosis_day = 10000;
    raw.followup_end_day = raw.diagnosis_day + 90 + 400;
    for (const auto& info : lab_test_registry()) {
        double mid = 0.5 * (info.reference_low + info.reference_high);
        raw.labs.push_back({info.id, mid, 5});
        raw.labs.push_back({info.id, mid, 60});
    }
    raw.mutations.push_back({"TP53", "", ""});
    raw.meds.push_back({"cisplatin-fixture", "", 30});
    return raw;
}

std::string serialize(const std::vector<PatientRecord>& cohort) {
    std::ostringstream os;
    for (const auto& p : cohort) os << patient_to_json(p).dump() << "\n";
    return os.str();
}

}  // namespace

TEST_CASE("apply_landmark_filter eligibility rules") {
    const auto& kb = fixture_kb();

    SECTION("death before landmark is ineligible") {
        auto raw = eligible_raw();
        raw.death_day = raw.diagnosis_day + 60;
        auto res = apply_landmark_filter(raw, kb);
        REQUIRE_FALSE(res.ok());
        CHECK(res.error().kind == IneligibleReason::Kind::DiedBeforeLandmark);
    }
    SECTION("complete data with long follow-up is eligible") {
        auto res = apply_landmark_filter(eligible_raw(), kb);
        REQUIRE(res.ok());
        CHECK(res.value().landmark_day == res.value().diagnosis_day + 90);
        CHECK(res.value().mutations[0].canonical_symbol == "TP53");
        CHECK(res.value().meds[0].class_id == "platinum_chemo");
    }
    SECTION("out-of-window lab observation is excluded") {
        auto raw = eligible_raw();
        raw.labs.push_back({LabTest::Albumin, 4.0, 120});
        auto res = apply_landmark_filter(raw, kb);
        REQUIRE(res.ok());
        for (const auto& o : res.value().labs) CHECK(o.observed_day <= 90);
    }
    SECTION("missing lab coverage is MissingModality(lab)") {
        auto raw = eligible_raw();
        raw.labs.erase(std::remove_if(raw.labs.begin(), raw.labs.end(),
                                      [](const LabObservation& o) {
                                          return o.test == LabTest::Crp;
                                      }),
                       raw.labs.end());
        auto res = apply_landmark_filter(raw, kb);
        REQUIRE_FALSE(res.ok());
        CHECK(res.error().kind == IneligibleReason::Kind::MissingModality);
        CHECK(res.error().modality == Modality::Lab);
    }
    SECTION("no meds in window is MissingModality(med)") {
        auto raw = eligible_raw();
        raw.meds[0].prescribed_day = 200;
        auto res = apply_landmark_filter(raw, kb);
        REQUIRE_FALSE(res.ok());
        CHECK(res.error().modality == Modality::Med);
    }
    SECTION("short follow-up without death is InsufficientFollowup") {
        auto raw = eligible_raw();
        raw.followup_end_day = raw.diagnosis_day + 90 + 100;
        auto res = apply_landmark_filter(raw, kb);
        REQUIRE_FALSE(res.ok());
        CHECK(res.error().kind == IneligibleReason::Kind::InsufficientFollowup);
    }
    SECTION("implausible lab values are screened at ingestion") {
        auto raw = eligible_raw();
        raw.labs.push_back({LabTest::Albumin, 400.0, 10});  // far outside the band
        auto res = apply_landmark_filter(raw, kb);
        REQUIRE(res.ok());
        for (const auto& o : res.value().labs) {
            if (o.test == LabTest::Albumin) CHECK(o.value < 100.0);
        }
    }
}

TEST_CASE("label_outcome") {
    const auto& kb = fixture_kb();
    auto base = apply_landmark_filter(eligible_raw(), kb).value();

    auto with_death = [&](int offset) {
        PatientRecord p = base;
        p.death_day = p.landmark_day + offset;
        p.followup_end_day = *p.death_day;
        return p;
    };
    CHECK(label_outcome(with_death(200)) == 1);
    CHECK(label_outcome(with_death(400)) == 0);
    CHECK(label_outcome(with_death(365)) == 1);  // inclusive boundary
    CHECK(label_outcome(with_death(366)) == 0);
    CHECK(label_outcome(base) == 0);  // alive with full follow-up

    PatientRecord censored = base;
    censored.followup_end_day = censored.landmark_day + 100;
    CHECK_THROWS_AS(label_outcome(censored), CensoredError);
}

TEST_CASE("prepare_lab_series") {
    std::vector<LabObservation> obs = {{LabTest::Albumin, 3.1, 10}, {LabTest::Albumin, 3.4, 40}};
    auto s = prepare_lab_series(obs, LabTest::Albumin);
    CHECK(s == std::vector<double>{3.1, 3.4, 3.4, 3.4, 3.4});

    SECTION("seven observations keep the five latest chronologically") {
        std::vector<LabObservation> many;
        for (int d = 1; d <= 7; ++d) {
            many.push_back({LabTest::Crp, static_cast<double>(d), d * 10});
        }
        auto series = prepare_lab_series(many, LabTest::Crp);
        CHECK(series == std::vector<double>{3, 4, 5, 6, 7});
    }
    SECTION("exactly five observations pass through unchanged") {
        std::vector<LabObservation> five;
        for (int d = 0; d < 5; ++d) {
            five.push_back({LabTest::Sodium, 135.0 + d, d * 7});
        }
        auto series = prepare_lab_series(five, LabTest::Sodium);
        CHECK(series == std::vector<double>{135, 136, 137, 138, 139});
    }
    SECTION("no observation raises") {
        CHECK_THROWS_AS(prepare_lab_series(obs, LabTest::Crp), NoObservationError);
    }
    SECTION("property: length 5 and newest value retained") {
        Rng rng(31);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<LabObservation> random_obs;
            int n = static_cast<int>(rng.uniform_int(1, 9));
            for (int i = 0; i < n; ++i) {
                random_obs.push_back({LabTest::Ldh, rng.uniform(100, 300),
                                      static_cast<int>(rng.uniform_int(0, 90))});
            }
            auto series = prepare_lab_series(random_obs, LabTest::Ldh);
            REQUIRE(series.size() == 5);
            int newest_day = -1;
            double newest_val = 0;
            for (std::size_t i = 0; i < random_obs.size(); ++i) {
                if (random_obs[i].observed_day >= newest_day) {
                    newest_day = random_obs[i].observed_day;
                    newest_val = random_obs[i].value;
                }
            }
            CHECK(std::count(series.begin(), series.end(), newest_val) >= 1);
        }
    }
}

TEST_CASE("synthetic cohort generation") {
    const auto& kb = fixture_kb();

    SECTION("hits the target prevalence and validates cleanly") {
        SyntheticConfig cfg;
        cfg.n_patients = 184;
        cfg.prevalence_target = 0.364;
        cfg.seed = 7;
        auto syn = generate_synthetic_cohort(cfg, kb);
        REQUIRE(syn.patients.size() == 184);
        int positives = 0;
        for (const auto& p : syn.patients) positives += label_outcome(p);
        double prev = positives / 184.0;
        CHECK(prev >= 0.314);
        CHECK(prev <= 0.414);
        CHECK(positives == 67);  // conditioned link: exact up to rounding
        CHECK(validate_cohort(syn.patients, kb).ok());
    }
    SECTION("same config and seed reproduce the cohort byte for byte") {
        SyntheticConfig cfg;
        cfg.n_patients = 40;
        cfg.seed = 123;
        auto a = generate_synthetic_cohort(cfg, kb);
        auto b = generate_synthetic_cohort(cfg, kb);
        CHECK(serialize(a.patients) == serialize(b.patients));
        CHECK(a.latent_risk == b.latent_risk);
    }
    SECTION("different seeds differ") {
        SyntheticConfig cfg;
        cfg.n_patients = 40;
        cfg.seed = 1;
        auto a = generate_synthetic_cohort(cfg, kb);
        cfg.seed = 2;
        auto b = generate_synthetic_cohort(cfg, kb);
        CHECK(serialize(a.patients) != serialize(b.patients));
    }
    SECTION("zero signal strength leaves latent risk flat") {
        SyntheticConfig cfg;
        cfg.n_patients = 30;
        cfg.planted_signal_strength = 0.0;
        cfg.seed = 5;
        auto syn = generate_synthetic_cohort(cfg, kb);
        for (double z : syn.latent_risk) CHECK(z == 0.0);
    }
    SECTION("config validation") {
        SyntheticConfig cfg;
        cfg.n_patients = 0;
        CHECK_THROWS_AS(generate_synthetic_cohort(cfg, kb), ConfigError);
        cfg.n_patients = 10;
        cfg.prevalence_target = 1.5;
        CHECK_THROWS_AS(generate_synthetic_cohort(cfg, kb), ConfigError);
        cfg.prevalence_target = 0.4;
        cfg.planted_signal_strength = -1;
        CHECK_THROWS_AS(generate_synthetic_cohort(cfg, kb), ConfigError);
    }
    SECTION("planted factors express the documented structures") {
        SyntheticConfig cfg;
        cfg.n_patients = 120;
        cfg.seed = 99;
        auto syn = generate_synthetic_cohort(cfg, kb);
        for (std::size_t i = 0; i < syn.patients.size(); ++i) {
            std::set<std::string> genes;
            for (const auto& m : syn.patients[i].mutations) genes.insert(m.canonical_symbol);
            bool has_pair = genes.count("TP53") && genes.count("KRAS");
            CHECK(has_pair == syn.factors[i].gene_comutation);
            std::set<std::string> classes;
            for (const auto& m : syn.patients[i].meds) classes.insert(m.class_id);
            bool has_combo = classes.count("platinum_chemo") && classes.count("strong_opioids");
            CHECK(has_combo == syn.factors[i].med_combination);
        }
    }
}

TEST_CASE("validate_cohort flags injected violations") {
    const auto& kb = fixture_kb();
    SyntheticConfig cfg;
    cfg.n_patients = 10;
    cfg.seed = 3;
    auto syn = generate_synthetic_cohort(cfg, kb);
    REQUIRE(validate_cohort(syn.patients, kb).ok());

    SECTION("death before landmark") {
        syn.patients[2].death_day = syn.patients[2].landmark_day - 5;
        auto report = validate_cohort(syn.patients, kb);
        REQUIRE(report.violations.size() >= 1);
        bool found = false;
        for (const auto& v : report.violations) {
            if (v.rule == "LandmarkEligibility" && v.patient_id == syn.patients[2].patient_id) {
                found = true;
            }
        }
        CHECK(found);
    }
    SECTION("gene outside panel") {
        syn.patients[4].mutations[0].canonical_symbol = "FAKEGENE1";
        auto report = validate_cohort(syn.patients, kb);
        bool found = false;
        for (const auto& v : report.violations) found |= v.rule == "PanelMembership";
        CHECK(found);
    }
}

TEST_CASE("cohort jsonl round trip") {
    const auto& kb = fixture_kb();
    SyntheticConfig cfg;
    cfg.n_patients = 12;
    cfg.seed = 17;
    auto syn = generate_synthetic_cohort(cfg, kb);
    auto path = (std::filesystem::temp_directory_path() / "gkc_cohort_test.jsonl").string();
    write_cohort_jsonl(syn.patients, path);
    auto loaded = read_cohort_jsonl(path);
    CHECK(serialize(loaded) == serialize(syn.patients));

    SECTION("unknown fields rejected in strict mode") {
        auto j = patient_to_json(syn.patients[0]);
        j["mystery"] = true;
        auto bad = (std::filesystem::temp_directory_path() / "gkc_cohort_bad.jsonl").string();
        std::ofstream out(bad);
        out << j.dump() << "\n";
        out.close();
        CHECK_THROWS_AS(read_cohort_jsonl(bad, true), SchemaError);
        CHECK_NOTHROW(read_cohort_jsonl(bad, false));
    }
}
