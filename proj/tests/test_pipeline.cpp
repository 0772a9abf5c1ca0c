#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gkc/pipeline.hpp"

using namespace gkc;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(const fs::path& out, std::uint64_t seed = 5) {
    RunConfig cfg;
    cfg.kb_dir = GKC_FIXTURES_DIR;
    cfg.out_dir = out.string();
    cfg.seed = seed;
    cfg.synthetic.seed = seed;
    cfg.synthetic.n_patients = 30;
    cfg.cv_folds = 3;
    cfg.cv_repeats = 1;
    cfg.strategies = {Strategy::ENF, Strategy::GKC};
    cfg.models = {ModelKind::LogRegEN};
    cfg.threads = 2;
    return cfg;
}

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

/// Relative path -> bytes for every regular file under a directory.
std::map<std::string, std::string> dir_contents(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            out[fs::relative(e.path(), root).string()] = slurp(e.path());
        }
    }
    return out;
}

}  // namespace

TEST_CASE("pipeline runs end to end and emits the documented layout") {
    auto out = fresh_dir("gkc_pipe_e2e");
    Pipeline pipe(small_config(out));
    pipe.run_all();

    CHECK(fs::exists(out / "configs" / "run_config.json"));
    CHECK(fs::exists(out / "cohort" / "cohort.jsonl"));
    CHECK(fs::exists(out / "cohort" / "ground_truth.jsonl"));
    CHECK(fs::exists(out / "profiles" / "manifest.jsonl"));
    CHECK(fs::exists(out / "reports" / "manifest.jsonl"));
    CHECK(fs::exists(out / "embeddings" / "manifest.jsonl"));
    CHECK(fs::exists(out / "results" / "records_enf_logreg_en.jsonl"));
    CHECK(fs::exists(out / "results" / "records_gkc_logreg_en.jsonl"));
    CHECK(fs::exists(out / "results" / "comparison.json"));
    CHECK(fs::exists(out / "results" / "comparison.tsv"));

    auto records = read_records_jsonl(out / "results" / "records_gkc_logreg_en.jsonl");
    CHECK(records.size() == 3);  // 1 repeat x 3 folds

    // 30 patients x 3 modalities profiles
    int profile_files = 0;
    for (const auto& e : fs::directory_iterator(out / "profiles")) {
        profile_files += e.path().extension() == ".txt";
    }
    CHECK(profile_files == 90);
}

TEST_CASE("eval for a text strategy requires the embed stage") {
    auto out = fresh_dir("gkc_pipe_missing");
    auto cfg = small_config(out);
    cfg.strategies = {Strategy::GKC};
    Pipeline pipe(cfg);
    pipe.run_synth();
    pipe.run_profiles();
    pipe.run_curate();
    try {
        pipe.run_eval();
        FAIL("expected MissingArtifactError");
    } catch (const MissingArtifactError& e) {
        CHECK(std::string(e.what()).find("embed") != std::string::npos);
    }
}

TEST_CASE("stages check their prerequisites") {
    auto out = fresh_dir("gkc_pipe_order");
    Pipeline pipe(small_config(out));
    CHECK_THROWS_AS(pipe.run_profiles(), MissingArtifactError);  // no cohort yet
    pipe.run_synth();
    CHECK_THROWS_AS(pipe.run_curate(), MissingArtifactError);  // no profiles yet
}

TEST_CASE("identical config and seed reproduce result files byte for byte") {
    auto out_a = fresh_dir("gkc_pipe_det_a");
    auto out_b = fresh_dir("gkc_pipe_det_b");
    {
        Pipeline a(small_config(out_a, 9));
        a.run_all();
    }
    {
        Pipeline b(small_config(out_b, 9));
        b.run_all();
    }
    auto results_a = dir_contents(out_a / "results");
    auto results_b = dir_contents(out_b / "results");
    REQUIRE(results_a.size() == results_b.size());
    for (const auto& [rel, bytes] : results_a) {
        INFO(rel);
        CHECK(bytes == results_b.at(rel));
    }
    CHECK(dir_contents(out_a / "cohort") == dir_contents(out_b / "cohort"));
    CHECK(dir_contents(out_a / "profiles") == dir_contents(out_b / "profiles"));
    CHECK(dir_contents(out_a / "reports") == dir_contents(out_b / "reports"));
}

TEST_CASE("warm caches serve repeated stages without provider calls") {
    auto out = fresh_dir("gkc_pipe_cache");
    auto cfg = small_config(out, 4);
    std::uint64_t cold_calls = 0;
    {
        Pipeline pipe(cfg);
        pipe.run_synth();
        pipe.run_profiles();
        pipe.run_curate();
        pipe.run_embed();
        cold_calls = pipe.report_cache_stats().provider_calls;
        CHECK(cold_calls == 90);  // 30 patients x 3 modalities, one call per unique key
        CHECK(pipe.report_cache_stats().misses == cold_calls);
    }
    {
        Pipeline pipe(cfg);  // fresh process state, same directory
        pipe.run_curate();
        pipe.run_embed();
        CHECK(pipe.report_cache_stats().provider_calls == 0);
        CHECK(pipe.embed_cache_stats().provider_calls == 0);
    }
}

TEST_CASE("output directory lock rejects concurrent runs") {
    auto out = fresh_dir("gkc_pipe_lock");
    auto cfg = small_config(out);
    Pipeline first(cfg);
    CHECK_THROWS_AS(Pipeline(cfg), ConfigError);
}

TEST_CASE("ablation and attribution stages write their tables") {
    auto out = fresh_dir("gkc_pipe_ablate");
    auto cfg = small_config(out, 12);
    cfg.synthetic.n_patients = 40;
    Pipeline pipe(cfg);
    pipe.run_synth();
    pipe.run_profiles();
    pipe.run_curate();
    pipe.run_embed();
    pipe.run_ablate(Strategy::GKC, ModelKind::LogRegEN);
    auto ablation = nlohmann::json::parse(slurp(out / "results" / "ablation.json"));
    CHECK(ablation.at("subsets").size() == 7);

    pipe.run_attribute(Strategy::GKC, ModelKind::LogRegEN);
    auto attribution = nlohmann::json::parse(slurp(out / "results" / "attribution.json"));
    double total = 0;
    for (const auto& m : {"lab", "gene", "med"}) {
        total += attribution.at("share_percent").at(m).get<double>();
    }
    CHECK(total == Catch::Approx(100.0).margin(1e-9));
}

TEST_CASE("cli binary drives the stages") {
    auto out = fresh_dir("gkc_pipe_cli");
    std::string cmd = std::string(GKC_CLI_PATH) + " synth --out " + out.string() +
                      " --kb " + GKC_FIXTURES_DIR +
                      " --n-patients 15 --seed 3 --repeats 1 --folds 3 2>/dev/null";
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(out / "cohort" / "cohort.jsonl"));

    // eval before embed for a text strategy fails with a nonzero exit
    std::string bad = std::string(GKC_CLI_PATH) + " eval --out " + out.string() + " --kb " +
                      GKC_FIXTURES_DIR +
                      " --strategy gkc --model logreg_en --repeats 1 --folds 3 2>/dev/null";
    CHECK(std::system(bad.c_str()) != 0);
}
