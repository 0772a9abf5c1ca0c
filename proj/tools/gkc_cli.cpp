// Stage-wise command-line front end for the pipeline. Each subcommand runs
// one stage against an output directory; `all` chains the full flow.

#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gkc/pipeline.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::string cohort_file;
    std::string kb_dir;
    std::string provider;
    std::string embedder;
    int dim = -1;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int repeats = -1;
    int folds = -1;
    unsigned threads = 0;
    bool threads_set = false;
    bool lenient_schema = false;
    std::vector<std::string> strategies;
    std::vector<std::string> models;
    // synthetic overrides
    int n_patients = -1;
    double prevalence = -1;
    double signal_strength = -1;
    int noise_tokens = -1;
    std::vector<std::string> signal_modalities;
};

gkc::RunConfig resolve_config(const CliOptions& opt) {
    gkc::RunConfig cfg;
    if (!opt.config_path.empty()) {
        std::ifstream in(opt.config_path);
        if (!in) throw gkc::ConfigError("cannot open config " + opt.config_path);
        cfg = gkc::RunConfig::from_json(nlohmann::json::parse(in));
    }
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    if (!opt.cohort_file.empty()) cfg.cohort_file = opt.cohort_file;
    if (!opt.kb_dir.empty()) cfg.kb_dir = opt.kb_dir;
    if (!opt.provider.empty()) cfg.curator = opt.provider;
    if (!opt.embedder.empty()) cfg.embedder = opt.embedder;
    if (opt.dim > 0) cfg.embed_dim = opt.dim;
    if (opt.seed_set) {
        cfg.seed = opt.seed;
        cfg.synthetic.seed = opt.seed;
    }
    if (opt.repeats > 0) cfg.cv_repeats = opt.repeats;
    if (opt.folds > 0) cfg.cv_folds = opt.folds;
    if (opt.threads_set) cfg.threads = opt.threads;
    if (opt.lenient_schema) cfg.strict_schema = false;
    if (!opt.strategies.empty()) {
        cfg.strategies.clear();
        for (const auto& s : opt.strategies) cfg.strategies.push_back(gkc::parse_strategy(s));
    }
    if (!opt.models.empty()) {
        cfg.models.clear();
        for (const auto& m : opt.models) cfg.models.push_back(gkc::parse_model_kind(m));
    }
    if (opt.n_patients > 0) cfg.synthetic.n_patients = opt.n_patients;
    if (opt.prevalence > 0) cfg.synthetic.prevalence_target = opt.prevalence;
    if (opt.signal_strength >= 0) cfg.synthetic.planted_signal_strength = opt.signal_strength;
    if (opt.noise_tokens >= 0) cfg.synthetic.noise_profile_tokens = opt.noise_tokens;
    if (!opt.signal_modalities.empty()) {
        cfg.synthetic.signal_modalities.clear();
        for (const auto& m : opt.signal_modalities) {
            cfg.synthetic.signal_modalities.insert(gkc::parse_modality(m));
        }
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"goal-oriented knowledge curation benchmark pipeline"};
    app.require_subcommand(1);

    CliOptions opt;
    app.add_option("--config", opt.config_path, "JSON run-config file");
    app.add_option("--out", opt.out_dir, "output directory");
    app.add_option("--cohort-file", opt.cohort_file,
                   "load this cohort file instead of synthesizing");
    app.add_option("--kb", opt.kb_dir, "knowledge-base fixture directory");
    app.add_option("--provider", opt.provider, "curator provider: mock|external");
    app.add_option("--embedder", opt.embedder, "embedding provider: mock|external");
    app.add_option("--dim", opt.dim, "mock embedder dimension");
    auto* seed_opt = app.add_option("--seed", opt.seed, "seed for synthesis and evaluation");
    app.add_option("--repeats", opt.repeats, "CV repeats");
    app.add_option("--folds", opt.folds, "CV folds");
    auto* threads_opt = app.add_option("--threads", opt.threads,
                                       "worker threads (0 = hardware concurrency)");
    app.add_flag("--lenient-schema", opt.lenient_schema,
                 "accept extra curator-report fields (default: strict)");
    app.add_flag("--strict-schema", "reject extra curator-report fields (the default)");
    app.add_option("--strategy", opt.strategies, "strategies to run (enf|cte|gkc), repeatable");
    app.add_option("--model", opt.models,
                   "model kinds (logreg_en|random_forest|grad_boost), repeatable");
    app.add_option("--n-patients", opt.n_patients, "synthetic cohort size");
    app.add_option("--prevalence", opt.prevalence, "synthetic outcome prevalence target");
    app.add_option("--signal-strength", opt.signal_strength, "planted signal strength");
    app.add_option("--noise-tokens", opt.noise_tokens, "profile boilerplate token budget");
    app.add_option("--signal-modality", opt.signal_modalities,
                   "restrict planted signal to these modalities, repeatable");

    auto* synth = app.add_subcommand("synth", "generate (or ingest) and validate the cohort");
    auto* profiles = app.add_subcommand("profiles", "compile modality text profiles");
    auto* curate = app.add_subcommand("curate", "summarize profiles into curated reports");
    auto* embed = app.add_subcommand("embed", "embed profile and report texts");
    auto* eval = app.add_subcommand("eval", "run repeated stratified CV per strategy/model");
    auto* compare =
        app.add_subcommand("compare", "strategy comparison table with Wilcoxon tests");
    auto* ablate = app.add_subcommand("ablate", "7-subset modality ablation");
    auto* attribute = app.add_subcommand("attribute", "grouped modality attribution");
    auto* all = app.add_subcommand("all", "synth + profiles + curate + embed + eval + compare");
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);
    opt.seed_set = seed_opt->count() > 0;
    opt.threads_set = threads_opt->count() > 0;

    try {
        gkc::RunConfig cfg = resolve_config(opt);
        gkc::Pipeline pipeline(cfg);
        if (synth->parsed()) pipeline.run_synth();
        if (profiles->parsed()) pipeline.run_profiles();
        if (curate->parsed()) pipeline.run_curate();
        if (embed->parsed()) pipeline.run_embed();
        if (eval->parsed()) pipeline.run_eval();
        if (compare->parsed()) pipeline.run_compare();
        if (ablate->parsed()) pipeline.run_ablate();
        if (attribute->parsed()) pipeline.run_attribute();
        if (all->parsed()) pipeline.run_all();
        auto rstats = pipeline.report_cache_stats();
        auto estats = pipeline.embed_cache_stats();
        std::cerr << "caches: curator calls=" << rstats.provider_calls
                  << " hits=" << rstats.hits << "; embedder calls=" << estats.provider_calls
                  << " hits=" << estats.hits << "\n";
        return 0;
    } catch (const gkc::GkcError& e) {
        nlohmann::json err = {{"error", "pipeline"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        nlohmann::json err = {{"error", "internal"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 2;
    }
}
