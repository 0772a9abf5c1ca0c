#pragma once

// Repeated stratified cross-validation with nested hyperparameter tuning.
// All randomness derives from (seed, repeat, fold, purpose), so folds can
// run in parallel without changing any result.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "gkc/features.hpp"
#include "gkc/metrics.hpp"
#include "gkc/model.hpp"
#include "gkc/rng.hpp"

namespace gkc {

struct CvPlan {
    int n_folds = 5;
    int n_repeats = 10;
    std::uint64_t seed = 0;
    // assignments[repeat][row] = fold index
    std::vector<std::vector<int>> assignments;

    std::size_t n_rows() const { return assignments.empty() ? 0 : assignments[0].size(); }
};

/// Stratified assignment: within each repeat, shuffle each class with a
/// seeded generator and deal round-robin, continuing the fold cursor across
/// classes so fold sizes stay within one row of each other.
inline CvPlan make_cv_plan(const std::vector<int>& labels, int n_folds = 5, int n_repeats = 10,
                           std::uint64_t seed = 0) {
    if (n_folds < 2) throw ConfigError("n_folds must be >= 2");
    if (n_repeats < 1) throw ConfigError("n_repeats must be >= 1");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
    if (static_cast<int>(pos.size()) < n_folds || static_cast<int>(neg.size()) < n_folds) {
        throw TooFewPerClassError("each class needs at least n_folds members");
    }
    CvPlan plan;
    plan.n_folds = n_folds;
    plan.n_repeats = n_repeats;
    plan.seed = seed;
    plan.assignments.assign(static_cast<std::size_t>(n_repeats),
                            std::vector<int>(labels.size(), -1));
    for (int r = 0; r < n_repeats; ++r) {
        auto& assign = plan.assignments[static_cast<std::size_t>(r)];
        int cursor = 0;
        int cls_tag = 0;
        for (const auto* cls : {&pos, &neg}) {
            auto rows = *cls;
            Rng rng = Rng::child(seed, "cv-shuffle", static_cast<std::uint64_t>(r),
                                 static_cast<std::uint64_t>(cls_tag++));
            rng.shuffle(rows);
            for (std::size_t row : rows) {
                assign[row] = cursor % n_folds;
                ++cursor;
            }
        }
    }
    return plan;
}

struct MetricsRecord {
    int repeat = 0;
    int fold = 0;
    Strategy strategy = Strategy::ENF;
    std::string subset;
    ModelKind model = ModelKind::LogRegEN;
    std::string hyperparams;  // canonical rendering of the chosen grid point
    double auc_roc = 0.0;
    double auc_prc = 0.0;
};

using Grid = std::vector<HyperParams>;

/// Declared, versioned default grids.
inline Grid default_grid(ModelKind kind) {
    Grid grid;
    switch (kind) {
        case ModelKind::LogRegEN:
            for (double lambda : {1e-3, 1e-2, 1e-1, 1.0}) {
                for (double alpha : {0.2, 0.5, 0.8}) {
                    LogRegSpec s;
                    s.lambda = lambda;
                    s.alpha = alpha;
                    grid.push_back(s);
                }
            }
            break;
        case ModelKind::GradBoost:
            for (int rounds : {50, 200}) {
                for (int depth : {2, 3}) {
                    for (double lr : {0.05, 0.1}) {
                        GbtSpec s;
                        s.n_rounds = rounds;
                        s.max_depth = depth;
                        s.learning_rate = lr;
                        grid.push_back(s);
                    }
                }
            }
            break;
        case ModelKind::RandomForest:
            for (int depth : {4, 8}) {
                RfSpec s;
                s.n_trees = 200;
                s.max_depth = depth;
                grid.push_back(s);
            }
            break;
    }
    return grid;
}

inline std::string hyperparams_label(const HyperParams& p) {
    std::ostringstream os;
    if (const auto* lr = std::get_if<LogRegSpec>(&p)) {
        os << "lambda=" << lr->lambda << ",alpha=" << lr->alpha;
    } else if (const auto* rf = std::get_if<RfSpec>(&p)) {
        os << "n_trees=" << rf->n_trees << ",max_depth=" << rf->max_depth
           << ",feature_fraction=" << rf->feature_fraction << ",min_leaf=" << rf->min_leaf;
    } else {
        const auto& g = std::get<GbtSpec>(p);
        os << "n_rounds=" << g.n_rounds << ",learning_rate=" << g.learning_rate
           << ",max_depth=" << g.max_depth << ",l2_leaf_reg=" << g.l2_leaf_reg;
    }
    return os.str();
}

namespace detail {

/// Rows of `fm` restricted to `rows`, with labels.
inline void extract_rows(const FeatureMatrix& fm, const std::vector<std::size_t>& rows,
                         std::vector<double>& data, std::vector<int>& labels) {
    data.resize(rows.size() * fm.n_cols);
    labels.resize(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const double* src = fm.row(rows[k]);
        std::copy(src, src + fm.n_cols, data.begin() + static_cast<std::ptrdiff_t>(k * fm.n_cols));
        labels[k] = fm.labels[rows[k]];
    }
}

/// Stratified inner-fold assignment over an index list.
inline std::vector<int> inner_assignments(const std::vector<int>& labels, int n_folds,
                                          Rng& rng) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
    std::vector<int> assign(labels.size(), -1);
    int cursor = 0;
    for (auto* cls : {&pos, &neg}) {
        rng.shuffle(*cls);
        for (std::size_t row : *cls) {
            assign[row] = cursor % n_folds;
            ++cursor;
        }
    }
    return assign;
}

/// Groups gradient-boosting grid points that differ only in n_rounds; one
/// training run covers every round count in the group because boosting
/// trajectories do not depend on later rounds.
struct GbtGridGroup {
    GbtSpec base;                    // n_rounds = max over the group
    std::vector<int> rounds;         // ascending
    std::vector<std::size_t> index;  // grid index per rounds entry
};

inline std::vector<GbtGridGroup> group_gbt_grid(const Grid& grid) {
    std::vector<GbtGridGroup> groups;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const auto& s = std::get<GbtSpec>(grid[gi]);
        GbtGridGroup* found = nullptr;
        for (auto& g : groups) {
            if (g.base.learning_rate == s.learning_rate && g.base.max_depth == s.max_depth &&
                g.base.l2_leaf_reg == s.l2_leaf_reg &&
                g.base.min_child_weight == s.min_child_weight) {
                found = &g;
                break;
            }
        }
        if (!found) {
            groups.push_back({s, {}, {}});
            found = &groups.back();
        }
        found->rounds.push_back(s.n_rounds);
        found->index.push_back(gi);
        found->base.n_rounds = std::max(found->base.n_rounds, s.n_rounds);
    }
    for (auto& g : groups) {
        std::vector<std::size_t> order(g.rounds.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return g.rounds[a] < g.rounds[b]; });
        std::vector<int> rounds;
        std::vector<std::size_t> index;
        for (auto o : order) {
            rounds.push_back(g.rounds[o]);
            index.push_back(g.index[o]);
        }
        g.rounds = std::move(rounds);
        g.index = std::move(index);
    }
    return groups;
}

}  // namespace detail

/// Nested stratified CV on the training rows only; selects the grid point
/// with the highest mean inner AUC-ROC, ties broken by grid order. A grid
/// of size one is returned unchanged with no inner fits. Grid points whose
/// training fails score -inf.
inline HyperParams inner_tune(const FeatureMatrix& fm, const std::vector<std::size_t>& train_rows,
                              const Grid& grid, int inner_folds, std::uint64_t seed,
                              const FoldContext* audit_ctx = nullptr) {
    if (grid.empty()) throw ConfigError("inner_tune: empty grid");
    if (grid.size() == 1) return grid[0];

    std::vector<int> y_train(train_rows.size());
    for (std::size_t k = 0; k < train_rows.size(); ++k) y_train[k] = fm.labels[train_rows[k]];
    Rng rng = Rng::child(seed, "inner-folds");
    auto assign = detail::inner_assignments(y_train, inner_folds, rng);

    std::vector<double> mean_auc(grid.size(), -std::numeric_limits<double>::infinity());
    std::vector<double> sum_auc(grid.size(), 0.0);
    std::vector<int> ok_folds(grid.size(), 0);

    for (int f = 0; f < inner_folds; ++f) {
        std::vector<std::size_t> sub_train, sub_test;  // indices into train_rows
        for (std::size_t k = 0; k < train_rows.size(); ++k) {
            (assign[k] == f ? sub_test : sub_train).push_back(train_rows[k]);
        }
        if (audit_ctx) {
            for (auto row : sub_train) audit_ctx->note(row, AccessPhase::InnerTune);
            for (auto row : sub_test) audit_ctx->note(row, AccessPhase::InnerTune);
        }
        std::vector<double> xtr, xte;
        std::vector<int> ytr, yte;
        detail::extract_rows(fm, sub_train, xtr, ytr);
        detail::extract_rows(fm, sub_test, xte, yte);
        MatrixView tr{xtr.data(), sub_train.size(), fm.n_cols};
        MatrixView te{xte.data(), sub_test.size(), fm.n_cols};

        const bool all_gbt = std::holds_alternative<GbtSpec>(grid[0]);
        if (all_gbt) {
            for (const auto& group : detail::group_gbt_grid(grid)) {
                try {
                    GbtModel model = train_gbt(tr, ytr, group.base);
                    // progressive margins over trees; snapshot at each rounds value
                    std::vector<double> margins(te.n_rows, model.base_margin);
                    std::size_t next = 0;
                    for (int t = 0; t <= static_cast<int>(model.trees.size()); ++t) {
                        while (next < group.rounds.size() && group.rounds[next] == t) {
                            std::vector<double> scores(te.n_rows);
                            for (std::size_t i = 0; i < te.n_rows; ++i) {
                                scores[i] = sigmoid(margins[i]);
                            }
                            double auc = auc_roc(scores, yte);
                            sum_auc[group.index[next]] += auc;
                            ++ok_folds[group.index[next]];
                            ++next;
                        }
                        if (t == static_cast<int>(model.trees.size())) break;
                        for (std::size_t i = 0; i < te.n_rows; ++i) {
                            margins[i] += model.trees[static_cast<std::size_t>(t)].value(te.row(i));
                        }
                    }
                } catch (const GkcError&) {
                    // group scores stay at -inf for folds it missed
                }
            }
        } else {
            for (std::size_t gi = 0; gi < grid.size(); ++gi) {
                try {
                    ModelSpec ms{grid[gi], Rng::derive(seed, "inner-train", gi)};
                    TrainedModel model = train_model(tr, ytr, ms);
                    double auc = auc_roc(predict_scores(model, te), yte);
                    sum_auc[gi] += auc;
                    ++ok_folds[gi];
                } catch (const GkcError&) {
                }
            }
        }
    }
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        if (ok_folds[gi] == inner_folds) mean_auc[gi] = sum_auc[gi] / inner_folds;
    }
    std::size_t best = 0;
    for (std::size_t gi = 1; gi < grid.size(); ++gi) {
        if (mean_auc[gi] > mean_auc[best]) best = gi;  // strict: ties keep first
    }
    return grid[best];
}

using MatrixFactory = std::function<FeatureMatrix(const FoldContext&)>;

struct AuditSummary {
    std::uint64_t stat_fit_reads = 0;
    std::uint64_t inner_tune_reads = 0;
    std::uint64_t train_reads = 0;
    std::uint64_t evaluate_reads = 0;
    std::uint64_t test_row_violations = 0;
};

struct CvRunResult {
    std::vector<MetricsRecord> records;
    AuditSummary audit;
};

struct CvRunOptions {
    int inner_folds = 3;
    unsigned n_threads = 0;  // 0: hardware default
    bool audit = false;
};

/// Runs the full plan: per fold, fit fold-scoped features, inner-tune on
/// training rows, train with the chosen grid point, and score the test rows
/// with both metrics. Any per-fold failure aborts the run so comparisons
/// always see complete paired samples.
inline CvRunResult run_cv(const CvPlan& plan, const MatrixFactory& factory, const Grid& grid,
                          const CvRunOptions& opts = {}) {
    if (grid.empty()) throw ConfigError("run_cv: empty grid");
    const ModelKind kind = kind_of(grid[0]);
    for (const auto& p : grid) {
        if (kind_of(p) != kind) throw ConfigError("run_cv: mixed model kinds in grid");
    }

    const std::size_t n_tasks =
        static_cast<std::size_t>(plan.n_repeats) * static_cast<std::size_t>(plan.n_folds);
    std::vector<MetricsRecord> records(n_tasks);
    std::vector<LeakAuditor> auditors(opts.audit ? n_tasks : 0);

    parallel_for(n_tasks, [&](std::size_t task) {
        const int repeat = static_cast<int>(task) / plan.n_folds;
        const int fold = static_cast<int>(task) % plan.n_folds;
        const auto& assign = plan.assignments[static_cast<std::size_t>(repeat)];

        std::vector<std::size_t> train_rows, test_rows;
        for (std::size_t i = 0; i < assign.size(); ++i) {
            (assign[i] == fold ? test_rows : train_rows).push_back(i);
        }

        FoldContext ctx;
        ctx.training_rows = train_rows;
        if (opts.audit) {
            auditors[task].set_test_rows(test_rows);
            ctx.auditor = &auditors[task];
        }

        FeatureMatrix fm = factory(ctx);
        if (fm.n_rows != assign.size()) {
            throw DimensionMismatchError("matrix factory returned wrong row count");
        }

        const std::uint64_t fold_seed = Rng::derive(plan.seed, "fold",
                                                    static_cast<std::uint64_t>(repeat),
                                                    static_cast<std::uint64_t>(fold));
        HyperParams best =
            inner_tune(fm, train_rows, grid, opts.inner_folds, fold_seed, &ctx);

        for (auto row : train_rows) ctx.note(row, AccessPhase::Train);
        std::vector<double> xtr, xte;
        std::vector<int> ytr, yte;
        detail::extract_rows(fm, train_rows, xtr, ytr);
        detail::extract_rows(fm, test_rows, xte, yte);
        MatrixView tr{xtr.data(), train_rows.size(), fm.n_cols};
        MatrixView te{xte.data(), test_rows.size(), fm.n_cols};

        ModelSpec spec{best, Rng::derive(fold_seed, "train")};
        TrainedModel model = train_model(tr, ytr, spec);
        auto scores = predict_scores(model, te);

        MetricsRecord rec;
        rec.repeat = repeat;
        rec.fold = fold;
        rec.strategy = fm.strategy;
        rec.subset = subset_name(fm.subset);
        rec.model = kind;
        rec.hyperparams = hyperparams_label(best);
        rec.auc_roc = auc_roc(scores, yte);
        rec.auc_prc = auc_prc(scores, yte);
        records[task] = rec;
    }, opts.n_threads);

    CvRunResult result;
    result.records = std::move(records);
    if (opts.audit) {
        for (const auto& a : auditors) {
            result.audit.stat_fit_reads += a.reads(AccessPhase::StatFit);
            result.audit.inner_tune_reads += a.reads(AccessPhase::InnerTune);
            result.audit.train_reads += a.reads(AccessPhase::Train);
            result.audit.evaluate_reads += a.reads(AccessPhase::Evaluate);
            result.audit.test_row_violations += a.violations();
        }
    }
    return result;
}

/// One run_cv per nonempty modality subset (7 rows), all with identical
/// fold assignments so pairwise comparisons stay valid.
inline std::vector<CvRunResult> run_ablation(
    const CvPlan& plan, const std::function<MatrixFactory(const ModalitySubset&)>& factory_for,
    const Grid& grid, const CvRunOptions& opts = {}) {
    std::vector<ModalitySubset> subsets = {
        {Modality::Lab},
        {Modality::Gene},
        {Modality::Med},
        {Modality::Lab, Modality::Gene},
        {Modality::Lab, Modality::Med},
        {Modality::Gene, Modality::Med},
        {Modality::Lab, Modality::Gene, Modality::Med},
    };
    std::vector<CvRunResult> out;
    out.reserve(subsets.size());
    for (const auto& subset : subsets) {
        out.push_back(run_cv(plan, factory_for(subset), grid, opts));
    }
    return out;
}

}  // namespace gkc
