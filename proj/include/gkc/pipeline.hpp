#pragma once

// Stage-wise pipeline over an output directory. Each stage writes its
// artifacts and a manifest; later stages check the manifests of what they
// need and fail with the missing stage named. Re-running a stage with an
// unchanged config and warm caches performs zero provider calls and writes
// byte-identical files (no timestamps; canonical JSON).
//
// Layout under the output directory:
//   configs/run_config.json
//   cohort/cohort.jsonl, cohort/ground_truth.jsonl, cohort/validation.json
//   profiles/<pid>.<modality>.txt, profiles/manifest.jsonl
//   reports/cache/<key>.json, reports/rendered/<pid>.<modality>.txt,
//   reports/manifest.jsonl
//   embeddings/cache/<key>.vec, embeddings/manifest.jsonl
//   results/records_<strategy>_<model>.jsonl, results/summary_... .json,
//   results/comparison.json, results/ablation.json, results/attribution.json

#include <fcntl.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "httplib.h"

#include "gkc/attribution.hpp"
#include "gkc/cohort.hpp"
#include "gkc/curation.hpp"
#include "gkc/cv.hpp"
#include "gkc/embedding.hpp"
#include "gkc/features.hpp"
#include "gkc/io.hpp"
#include "gkc/knowledge.hpp"
#include "gkc/profiles.hpp"
#include "gkc/stats.hpp"

namespace gkc {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct RunConfig {
    // cohort source: a cohort file, or the synthetic generator
    std::string cohort_file;  // empty: synthetic
    SyntheticConfig synthetic;

    std::string kb_dir = "fixtures";
    std::string curator = "mock";   // mock | external
    std::string embedder = "mock";  // mock | external
    int embed_dim = 256;
    bool strict_schema = true;

    std::vector<Strategy> strategies = {Strategy::ENF, Strategy::CTE, Strategy::GKC};
    std::vector<ModelKind> models = {ModelKind::GradBoost};

    int cv_folds = 5;
    int cv_repeats = 10;
    int inner_folds = 3;
    std::uint64_t seed = 7;
    unsigned threads = 0;

    std::string out_dir = "out";

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["cohort_file"] = cohort_file;
        j["synthetic"] = {{"n_patients", synthetic.n_patients},
                          {"prevalence_target", synthetic.prevalence_target},
                          {"planted_signal_strength", synthetic.planted_signal_strength},
                          {"noise_profile_tokens", synthetic.noise_profile_tokens},
                          {"seed", synthetic.seed}};
        std::vector<std::string> sig;
        for (Modality m : kAllModalities) {
            if (synthetic.signal_modalities.count(m)) sig.push_back(modality_name(m));
        }
        j["synthetic"]["signal_modalities"] = sig;
        j["kb_dir"] = kb_dir;
        j["curator"] = curator;
        j["embedder"] = embedder;
        j["embed_dim"] = embed_dim;
        j["strict_schema"] = strict_schema;
        std::vector<std::string> strats;
        for (auto s : strategies) strats.push_back(strategy_name(s));
        j["strategies"] = strats;
        std::vector<std::string> kinds;
        for (auto k : models) kinds.push_back(model_kind_name(k));
        j["models"] = kinds;
        j["cv_folds"] = cv_folds;
        j["cv_repeats"] = cv_repeats;
        j["inner_folds"] = inner_folds;
        j["seed"] = seed;
        j["threads"] = threads;
        j["out_dir"] = out_dir;
        return j;
    }

    static RunConfig from_json(const nlohmann::json& j) {
        RunConfig cfg;
        cfg.cohort_file = j.value("cohort_file", "");
        if (j.contains("synthetic")) {
            const auto& s = j.at("synthetic");
            cfg.synthetic.n_patients = s.value("n_patients", cfg.synthetic.n_patients);
            cfg.synthetic.prevalence_target =
                s.value("prevalence_target", cfg.synthetic.prevalence_target);
            cfg.synthetic.planted_signal_strength =
                s.value("planted_signal_strength", cfg.synthetic.planted_signal_strength);
            cfg.synthetic.noise_profile_tokens =
                s.value("noise_profile_tokens", cfg.synthetic.noise_profile_tokens);
            cfg.synthetic.seed = s.value("seed", cfg.synthetic.seed);
            if (s.contains("signal_modalities")) {
                cfg.synthetic.signal_modalities.clear();
                for (const auto& name : s.at("signal_modalities")) {
                    cfg.synthetic.signal_modalities.insert(
                        parse_modality(name.get<std::string>()));
                }
            }
        }
        cfg.kb_dir = j.value("kb_dir", cfg.kb_dir);
        cfg.curator = j.value("curator", cfg.curator);
        cfg.embedder = j.value("embedder", cfg.embedder);
        cfg.embed_dim = j.value("embed_dim", cfg.embed_dim);
        cfg.strict_schema = j.value("strict_schema", cfg.strict_schema);
        if (j.contains("strategies")) {
            cfg.strategies.clear();
            for (const auto& s : j.at("strategies")) {
                cfg.strategies.push_back(parse_strategy(s.get<std::string>()));
            }
        }
        if (j.contains("models")) {
            cfg.models.clear();
            for (const auto& k : j.at("models")) {
                cfg.models.push_back(parse_model_kind(k.get<std::string>()));
            }
        }
        cfg.cv_folds = j.value("cv_folds", cfg.cv_folds);
        cfg.cv_repeats = j.value("cv_repeats", cfg.cv_repeats);
        cfg.inner_folds = j.value("inner_folds", cfg.inner_folds);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.threads = j.value("threads", cfg.threads);
        cfg.out_dir = j.value("out_dir", cfg.out_dir);
        return cfg;
    }
};

// ---------------------------------------------------------------------------
// External providers (HTTP; endpoint and credential via environment)
// ---------------------------------------------------------------------------

inline constexpr const char* kEnvCuratorEndpoint = "GKC_CURATOR_ENDPOINT";
inline constexpr const char* kEnvCuratorApiKey = "GKC_CURATOR_API_KEY";
inline constexpr const char* kEnvEmbedEndpoint = "GKC_EMBED_ENDPOINT";
inline constexpr const char* kEnvEmbedApiKey = "GKC_EMBED_API_KEY";

namespace detail {

struct Endpoint {
    std::string host;  // scheme://host:port
    std::string path;
};

inline Endpoint split_endpoint(const std::string& url) {
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("endpoint must include a scheme");
    auto path_pos = url.find('/', scheme + 3);
    if (path_pos == std::string::npos) return {url, "/"};
    return {url.substr(0, path_pos), url.substr(path_pos)};
}

inline std::string http_post_json(const std::string& endpoint, const std::string& api_key,
                                  const nlohmann::json& body) {
    auto [host, path] = split_endpoint(endpoint);
    httplib::Client client(host);
    client.set_read_timeout(60, 0);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw ProviderError("transport failure talking to " + endpoint);
    }
    if (res->status < 200 || res->status >= 300) {
        throw ProviderError("provider returned HTTP " + std::to_string(res->status));
    }
    return res->body;
}

}  // namespace detail

/// Curator backed by an HTTP endpoint. Request: JSON {prompt, temperature,
/// top_k, max_output_tokens}; response: the raw completion text (either
/// text/plain or JSON {"text": ...}).
class HttpCurator final : public CuratorProvider {
public:
    HttpCurator() {
        const char* ep = std::getenv(kEnvCuratorEndpoint);
        if (!ep || !*ep) {
            throw ConfigError(std::string("external curator requires ") + kEnvCuratorEndpoint);
        }
        endpoint_ = ep;
        if (const char* key = std::getenv(kEnvCuratorApiKey)) api_key_ = key;
    }

    std::string name() const override { return "external-curator"; }
    bool deterministic() const override { return false; }
    int max_attempts() const override { return 3; }

    std::string complete(const std::string& prompt, const DecodingParams& params) override {
        nlohmann::json body = {{"prompt", prompt},
                               {"temperature", params.temperature},
                               {"top_k", params.top_k},
                               {"max_output_tokens", params.max_output_tokens}};
        std::string text = detail::http_post_json(endpoint_, api_key_, body);
        auto j = nlohmann::json::parse(text, nullptr, false);
        if (j.is_object() && j.contains("text")) return j.at("text").get<std::string>();
        return text;
    }

private:
    std::string endpoint_;
    std::string api_key_;
};

/// Embedder backed by an HTTP endpoint. Request: JSON {text, task_type};
/// response: JSON {"embedding": [...]}. The run's dimension is fixed by the
/// first response.
class HttpEmbedder final : public EmbeddingProvider {
public:
    HttpEmbedder() {
        const char* ep = std::getenv(kEnvEmbedEndpoint);
        if (!ep || !*ep) {
            throw ConfigError(std::string("external embedder requires ") + kEnvEmbedEndpoint);
        }
        endpoint_ = ep;
        if (const char* key = std::getenv(kEnvEmbedApiKey)) api_key_ = key;
    }

    std::string name() const override { return "external-embedder"; }
    int dimension() const override { return dim_; }
    int max_attempts() const override { return 3; }

    std::vector<double> embed(const std::string& text, TaskHint hint) override {
        nlohmann::json body = {{"text", text}, {"task_type", task_hint_name(hint)}};
        auto j = nlohmann::json::parse(detail::http_post_json(endpoint_, api_key_, body));
        auto v = j.at("embedding").get<std::vector<double>>();
        if (dim_ == 0) dim_ = static_cast<int>(v.size());
        if (static_cast<int>(v.size()) != dim_) {
            throw DimensionMismatchError("external embedder changed its dimension mid-run");
        }
        return v;
    }

private:
    std::string endpoint_;
    std::string api_key_;
    int dim_ = 0;
};

// ---------------------------------------------------------------------------
// Output-directory lock
// ---------------------------------------------------------------------------

/// Exclusive advisory lock: concurrent runs on one output directory are
/// rejected rather than interleaved.
class DirLock {
public:
    explicit DirLock(const std::filesystem::path& dir) : path_(dir / ".lock") {
        std::filesystem::create_directories(dir);
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) {
            throw ConfigError("output directory is locked by another run: " + path_.string());
        }
    }
    ~DirLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            std::error_code ec;
            std::filesystem::remove(path_, ec);
        }
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    std::filesystem::path path_;
    int fd_ = -1;
};

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

class Pipeline {
public:
    explicit Pipeline(RunConfig cfg)
        : cfg_(std::move(cfg)),
          out_(cfg_.out_dir),
          lock_(out_),
          kb_(load_knowledge_base(KnowledgePaths::in_dir(cfg_.kb_dir))),
          report_cache_(out_ / "reports" / "cache"),
          embed_cache_(out_ / "embeddings" / "cache") {
        std::filesystem::create_directories(out_ / "configs");
        std::filesystem::create_directories(out_ / "cohort");
        std::filesystem::create_directories(out_ / "profiles");
        std::filesystem::create_directories(out_ / "reports" / "rendered");
        std::filesystem::create_directories(out_ / "results");
        write_text(out_ / "configs" / "run_config.json", cfg_.to_json().dump(2) + "\n");
        if (cfg_.curator == "mock") {
            mock_curator_ = std::make_unique<MockCurator>();
            curator_ = mock_curator_.get();
        } else if (cfg_.curator == "external") {
            http_curator_ = std::make_unique<HttpCurator>();
            curator_ = http_curator_.get();
        } else {
            throw ConfigError("unknown curator provider '" + cfg_.curator + "'");
        }
        if (cfg_.embedder == "mock") {
            EmbedderConfig ec;
            ec.dimension = cfg_.embed_dim;
            mock_embedder_ = std::make_unique<MockEmbedder>(ec);
            embedder_ = mock_embedder_.get();
        } else if (cfg_.embedder == "external") {
            http_embedder_ = std::make_unique<HttpEmbedder>();
            embedder_ = http_embedder_.get();
        } else {
            throw ConfigError("unknown embedder provider '" + cfg_.embedder + "'");
        }
    }

    const RunConfig& config() const { return cfg_; }
    const KnowledgeBase& kb() const { return kb_; }
    CacheStats report_cache_stats() const { return report_cache_.stats(); }
    EmbeddingCacheStats embed_cache_stats() const { return embed_cache_.stats(); }

    // ---- stage: synth / cohort ----

    void run_synth() {
        SyntheticCohort syn;
        if (cfg_.cohort_file.empty()) {
            syn = generate_synthetic_cohort(cfg_.synthetic, kb_);
        } else {
            syn.patients = read_cohort_jsonl(cfg_.cohort_file);
        }
        auto report = validate_cohort(syn.patients, kb_);
        if (!report.ok()) {
            nlohmann::json v = nlohmann::json::array();
            for (const auto& viol : report.violations) {
                v.push_back({{"patient_id", viol.patient_id},
                             {"rule", viol.rule},
                             {"detail", viol.detail}});
            }
            write_text(out_ / "cohort" / "validation.json", v.dump(2) + "\n");
            throw GkcError("cohort validation failed with " +
                           std::to_string(report.violations.size()) + " violation(s)");
        }
        write_cohort_jsonl(syn.patients, (out_ / "cohort" / "cohort.jsonl").string());
        write_text(out_ / "cohort" / "validation.json", "[]\n");
        std::ofstream gt(out_ / "cohort" / "ground_truth.jsonl", std::ios::binary);
        for (std::size_t i = 0; i < syn.patients.size(); ++i) {
            nlohmann::json row;
            row["patient_id"] = syn.patients[i].patient_id;
            if (i < syn.latent_risk.size()) {
                row["latent_risk"] = syn.latent_risk[i];
                row["gene_comutation"] = syn.factors[i].gene_comutation;
                row["med_combination"] = syn.factors[i].med_combination;
                row["lab_trend"] = syn.factors[i].lab_trend;
            }
            gt << row.dump() << "\n";
        }
    }

    // ---- stage: profiles ----

    void run_profiles() {
        auto cohort = load_cohort();
        auto corpus = profile_corpus(cohort, kb_, /*strict=*/true);
        std::ofstream manifest(out_ / "profiles" / "manifest.jsonl", std::ios::binary);
        for (const auto& [key, prof] : corpus.profiles) {
            auto file = profile_filename(key.first, key.second);
            write_text(out_ / "profiles" / file, prof.text);
            manifest << nlohmann::json{{"patient_id", key.first},
                                       {"modality", modality_name(key.second)},
                                       {"digest", prof.digest},
                                       {"approx_tokens", prof.approx_tokens},
                                       {"file", file}}
                            .dump()
                     << "\n";
        }
    }

    // ---- stage: curate ----

    void run_curate() {
        require_stage(out_ / "profiles" / "manifest.jsonl", "profiles");
        auto cohort = load_cohort();
        DecodingParams params;
        std::ofstream manifest(out_ / "reports" / "manifest.jsonl", std::ios::binary);
        for (const auto& p : cohort) {
            for (Modality m : kAllModalities) {
                auto prof = load_profile(p.patient_id, m);
                auto tpl = default_prompt_template(m);
                auto report =
                    curate(*curator_, prof, tpl, params, report_cache_, cfg_.strict_schema);
                auto rendered = render_report_text(report);
                auto file = profile_filename(p.patient_id, m);
                write_text(out_ / "reports" / "rendered" / file, rendered);
                manifest << nlohmann::json{
                                {"patient_id", p.patient_id},
                                {"modality", modality_name(m)},
                                {"cache_key", ReportCache::make_key(build_prompt(prof, tpl),
                                                                    curator_->name(), params,
                                                                    tpl.version)},
                                {"rendered_digest", sha256_hex(rendered)}}
                                .dump()
                         << "\n";
            }
        }
    }

    // ---- stage: embed ----

    void run_embed() {
        require_stage(out_ / "profiles" / "manifest.jsonl", "profiles");
        const bool wants_cte = has_strategy(Strategy::CTE);
        const bool wants_gkc = has_strategy(Strategy::GKC);
        if (wants_gkc) require_stage(out_ / "reports" / "manifest.jsonl", "curate");
        auto cohort = load_cohort();
        std::ofstream manifest(out_ / "embeddings" / "manifest.jsonl", std::ios::binary);
        for (const auto& p : cohort) {
            for (Modality m : kAllModalities) {
                if (wants_cte) embed_and_log(manifest, p.patient_id, m, Strategy::CTE,
                                             load_profile(p.patient_id, m).text);
                if (wants_gkc) embed_and_log(manifest, p.patient_id, m, Strategy::GKC,
                                             load_rendered_report(p.patient_id, m));
            }
        }
    }

    // ---- stage: eval ----

    void run_eval() {
        auto cohort = load_cohort();
        auto plan = cv_plan(cohort);
        for (Strategy strategy : cfg_.strategies) {
            auto factory = matrix_factory(cohort, strategy, full_subset());
            for (ModelKind kind : cfg_.models) {
                CvRunOptions opts;
                opts.inner_folds = cfg_.inner_folds;
                opts.n_threads = cfg_.threads;
                auto result = run_cv(plan, factory, default_grid(kind), opts);
                auto stem = std::string("records_") + strategy_name(strategy) + "_" +
                            model_kind_name(kind);
                write_records_jsonl(result.records, out_ / "results" / (stem + ".jsonl"));
                auto summary = summarize_records(result.records, cfg_.seed);
                write_text(out_ / "results" /
                               (std::string("summary_") + strategy_name(strategy) + "_" +
                                model_kind_name(kind) + ".json"),
                           summary.dump(2) + "\n");
            }
        }
    }

    // ---- stage: compare ----

    void run_compare() {
        nlohmann::json out;
        for (ModelKind kind : cfg_.models) {
            nlohmann::json table = nlohmann::json::array();
            std::map<Strategy, std::vector<MetricsRecord>> per_strategy;
            for (Strategy strategy : cfg_.strategies) {
                auto path = out_ / "results" /
                            (std::string("records_") + strategy_name(strategy) + "_" +
                             model_kind_name(kind) + ".jsonl");
                if (!std::filesystem::exists(path)) {
                    throw MissingArtifactError("missing " + path.string() +
                                               "; run the `eval` stage first");
                }
                per_strategy[strategy] = read_records_jsonl(path);
                auto row = summarize_records(per_strategy[strategy], cfg_.seed);
                row["strategy"] = strategy_name(strategy);
                table.push_back(row);
            }
            nlohmann::json pairs = nlohmann::json::array();
            for (auto a = per_strategy.begin(); a != per_strategy.end(); ++a) {
                for (auto b = std::next(a); b != per_strategy.end(); ++b) {
                    auto [roc_a, roc_b] = paired_metric(a->second, b->second, false);
                    auto [prc_a, prc_b] = paired_metric(a->second, b->second, true);
                    auto w_roc = wilcoxon_signed_rank(roc_a, roc_b);
                    auto w_prc = wilcoxon_signed_rank(prc_a, prc_b);
                    pairs.push_back({{"a", strategy_name(a->first)},
                                     {"b", strategy_name(b->first)},
                                     {"auc_roc",
                                      {{"w", w_roc.w_statistic},
                                       {"p", w_roc.p_value},
                                       {"n_effective", w_roc.n_effective},
                                       {"exact", w_roc.exact}}},
                                     {"auc_prc",
                                      {{"w", w_prc.w_statistic},
                                       {"p", w_prc.p_value},
                                       {"n_effective", w_prc.n_effective},
                                       {"exact", w_prc.exact}}}});
                }
            }
            out[model_kind_name(kind)] = {{"summaries", table}, {"pairwise", pairs}};
        }
        write_text(out_ / "results" / "comparison.json", out.dump(2) + "\n");
        write_comparison_tsv(out);
    }

    // ---- stage: ablate ----

    void run_ablate(Strategy strategy = Strategy::GKC,
                    ModelKind kind = ModelKind::GradBoost) {
        auto cohort = load_cohort();
        auto plan = cv_plan(cohort);
        CvRunOptions opts;
        opts.inner_folds = cfg_.inner_folds;
        opts.n_threads = cfg_.threads;
        auto results = run_ablation(
            plan,
            [&](const ModalitySubset& subset) {
                return matrix_factory(cohort, strategy, subset);
            },
            default_grid(kind), opts);
        nlohmann::json table = nlohmann::json::array();
        std::ofstream tsv(out_ / "results" / "ablation.tsv", std::ios::binary);
        tsv << "subset\tauc_roc_mean\tauc_roc_sd\tauc_prc_mean\tauc_prc_sd\n";
        for (const auto& res : results) {
            auto row = summarize_records(res.records, cfg_.seed);
            row["subset"] = res.records.front().subset;
            write_records_jsonl(res.records,
                                out_ / "results" /
                                    ("records_ablation_" + res.records.front().subset +
                                     ".jsonl"));
            table.push_back(row);
            tsv << res.records.front().subset << "\t" << row["auc_roc"]["mean"] << "\t"
                << row["auc_roc"]["sd"] << "\t" << row["auc_prc"]["mean"] << "\t"
                << row["auc_prc"]["sd"] << "\n";
        }
        write_text(out_ / "results" / "ablation.json",
                   nlohmann::json{{"strategy", strategy_name(strategy)},
                                  {"model", model_kind_name(kind)},
                                  {"subsets", table}}
                           .dump(2) +
                       "\n");
    }

    // ---- stage: attribute ----

    void run_attribute(Strategy strategy = Strategy::GKC,
                       ModelKind kind = ModelKind::GradBoost) {
        auto cohort = load_cohort();
        auto fm = build_full_matrix(cohort, strategy, full_subset());
        std::vector<std::size_t> all_rows(fm.n_rows);
        for (std::size_t i = 0; i < fm.n_rows; ++i) all_rows[i] = i;
        auto grid = default_grid(kind);
        auto best = inner_tune(fm, all_rows, grid, cfg_.inner_folds,
                               Rng::derive(cfg_.seed, "attribute"));
        ModelSpec spec{best, Rng::derive(cfg_.seed, "attribute-train")};
        auto model = train_model(fm.view(), fm.labels, spec);
        auto res = attribute_modalities(model, fm, Rng::derive(cfg_.seed, "attribute-perm"));
        nlohmann::json j;
        j["strategy"] = strategy_name(strategy);
        j["model"] = model_kind_name(kind);
        j["hyperparams"] = hyperparams_label(best);
        j["baseline_auc_roc"] = res.baseline_auc;
        j["n_permutations"] = res.n_permutations;
        for (const auto& [m, share] : res.share_percent) {
            j["share_percent"][modality_name(m)] = share;
            j["mean_auc_drop"][modality_name(m)] = res.mean_drop.at(m);
        }
        if (res.has_patient_contributions) {
            j["mean_training_logit"] = res.mean_training_logit;
            for (const auto& [m, contrib] : res.patient_contributions) {
                j["patient_contributions"][modality_name(m)] = contrib;
            }
        }
        write_text(out_ / "results" / "attribution.json", j.dump(2) + "\n");
    }

    void run_all() {
        run_synth();
        run_profiles();
        run_curate();
        run_embed();
        run_eval();
        run_compare();
    }

    // ---- shared artifact access (used by stages and by tests) ----

    std::vector<PatientRecord> load_cohort() {
        auto path = out_ / "cohort" / "cohort.jsonl";
        require_stage(path, "synth");
        return read_cohort_jsonl(path.string());
    }

    CvPlan cv_plan(const std::vector<PatientRecord>& cohort) {
        std::vector<int> labels;
        for (const auto& p : cohort) labels.push_back(label_outcome(p));
        return make_cv_plan(labels, cfg_.cv_folds, cfg_.cv_repeats, cfg_.seed);
    }

    /// Matrix factory for run_cv: text strategies are fold-independent and
    /// built once; ENF refits lab stats per fold context. The factory owns a
    /// copy of the cohort so it outlives the caller's local.
    MatrixFactory matrix_factory(const std::vector<PatientRecord>& cohort, Strategy strategy,
                                 const ModalitySubset& subset) {
        if (strategy == Strategy::ENF) {
            auto owned = std::make_shared<std::vector<PatientRecord>>(cohort);
            return [this, owned, subset](const FoldContext& ctx) {
                return assemble_matrix(*owned, Strategy::ENF, subset, ctx, kb_);
            };
        }
        auto shared = std::make_shared<FeatureMatrix>(
            build_full_matrix(cohort, strategy, subset));
        return [shared](const FoldContext&) { return *shared; };
    }

    FeatureMatrix build_full_matrix(const std::vector<PatientRecord>& cohort,
                                    Strategy strategy, const ModalitySubset& subset) {
        FoldContext ctx;
        for (std::size_t i = 0; i < cohort.size(); ++i) ctx.training_rows.push_back(i);
        if (strategy == Strategy::ENF) {
            return assemble_matrix(cohort, strategy, subset, ctx, kb_);
        }
        auto texts = text_store(cohort, strategy);
        return assemble_matrix(cohort, strategy, subset, ctx, kb_, &texts, embedder_,
                               &embed_cache_);
    }

    /// Texts to embed for a strategy, read from stage artifacts.
    TextStore text_store(const std::vector<PatientRecord>& cohort, Strategy strategy) {
        if (strategy == Strategy::ENF) return {};
        require_stage(out_ / "embeddings" / "manifest.jsonl", "embed");
        TextStore texts;
        for (const auto& p : cohort) {
            for (Modality m : kAllModalities) {
                texts[{p.patient_id, m}] = strategy == Strategy::CTE
                                               ? load_profile(p.patient_id, m).text
                                               : load_rendered_report(p.patient_id, m);
            }
        }
        return texts;
    }

private:
    static std::string profile_filename(const std::string& pid, Modality m) {
        return pid + "." + modality_name(m) + ".txt";
    }

    static void write_text(const std::filesystem::path& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw GkcError("cannot write " + path.string());
        out << text;
    }

    static std::string read_text(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw MissingArtifactError("cannot read " + path.string());
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    }

    static void require_stage(const std::filesystem::path& marker, const std::string& stage) {
        if (!std::filesystem::exists(marker)) {
            throw MissingArtifactError("missing artifact " + marker.string() +
                                       "; run the `" + stage + "` stage first");
        }
    }

    ModalityProfile load_profile(const std::string& pid, Modality m) {
        require_stage(out_ / "profiles" / "manifest.jsonl", "profiles");
        ModalityProfile prof;
        prof.patient_id = pid;
        prof.modality = m;
        prof.text = read_text(out_ / "profiles" / profile_filename(pid, m));
        prof.digest = sha256_hex(prof.text);
        prof.approx_tokens = count_whitespace_tokens(prof.text);
        return prof;
    }

    std::string load_rendered_report(const std::string& pid, Modality m) {
        require_stage(out_ / "reports" / "manifest.jsonl", "curate");
        return read_text(out_ / "reports" / "rendered" / profile_filename(pid, m));
    }

    void embed_and_log(std::ofstream& manifest, const std::string& pid, Modality m,
                       Strategy strategy, const std::string& text) {
        auto vec = embed_text(*embedder_, text, TaskHint::Classification, embed_cache_);
        manifest << nlohmann::json{{"patient_id", pid},
                                   {"modality", modality_name(m)},
                                   {"strategy", strategy_name(strategy)},
                                   {"text_digest", vec.source_digest},
                                   {"cache_key",
                                    EmbeddingCache::make_key(vec.source_digest, vec.provider,
                                                             vec.task_hint)},
                                   {"dim", vec.dim()}}
                        .dump()
                 << "\n";
    }

    void write_comparison_tsv(const nlohmann::json& comparison) {
        std::ofstream tsv(out_ / "results" / "comparison.tsv", std::ios::binary);
        tsv << "model\tstrategy\tauc_roc_mean\tauc_roc_sd\tauc_roc_ci_lo\tauc_roc_ci_hi"
               "\tauc_prc_mean\tauc_prc_sd\tauc_prc_ci_lo\tauc_prc_ci_hi\n";
        for (auto it = comparison.begin(); it != comparison.end(); ++it) {
            for (const auto& row : it.value().at("summaries")) {
                tsv << it.key() << "\t" << row.at("strategy").get<std::string>();
                for (const char* metric : {"auc_roc", "auc_prc"}) {
                    const auto& s = row.at(metric);
                    tsv << "\t" << s.at("mean") << "\t" << s.at("sd") << "\t" << s.at("ci_lo")
                        << "\t" << s.at("ci_hi");
                }
                tsv << "\n";
            }
        }
    }

    bool has_strategy(Strategy s) const {
        return std::find(cfg_.strategies.begin(), cfg_.strategies.end(), s) !=
               cfg_.strategies.end();
    }

    RunConfig cfg_;
    std::filesystem::path out_;
    DirLock lock_;
    KnowledgeBase kb_;
    ReportCache report_cache_;
    EmbeddingCache embed_cache_;
    std::unique_ptr<MockCurator> mock_curator_;
    std::unique_ptr<HttpCurator> http_curator_;
    std::unique_ptr<MockEmbedder> mock_embedder_;
    std::unique_ptr<HttpEmbedder> http_embedder_;
    CuratorProvider* curator_ = nullptr;
    EmbeddingProvider* embedder_ = nullptr;
};

}  // namespace gkc
