#pragma once
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "booster.hpp"
#include "common.hpp"
#include "data.hpp"
#include "metrics.hpp"

namespace mtgbm {

// Metric per task, and per fold when produced by run_kfold.
struct MetricReport {
    std::vector<std::string> task_names;
    std::vector<std::string> metrics;  // per task
    Matrix<double> per_fold;           // folds x tasks; NaN where undefined
    std::vector<double> task_means;    // mean over folds, NaN-skipping
    std::size_t main_task = 0;

    std::vector<double> main_values() const { return per_fold.column(main_task); }
    double main_mean() const { return task_means.at(main_task); }
};

// Metric used for a task: the requested one, falling back to AUC for
// binary tasks and RMSE for regression when unset or inapplicable.
inline std::string metric_for_task(const std::string& requested, ObjectiveKind kind) {
    if (requested.empty()) return kind == ObjectiveKind::BinaryLogloss ? "auc" : "rmse";
    if (requested == "auc" && kind != ObjectiveKind::BinaryLogloss) return "rmse";
    return requested;
}

// Evaluates raw scores against labels. AUC uses raw scores directly (it is
// rank based); RMSE and MAPE use transformed predictions.
inline double evaluate_metric(const std::string& metric, std::span<const double> labels,
                              std::span<const double> raw_scores, ObjectiveKind kind) {
    if (metric == "auc") return roc_auc(labels, raw_scores);
    std::vector<double> pred(raw_scores.size());
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = transform_score(raw_scores[i], kind);
    if (metric == "rmse") return rmse(labels, pred);
    if (metric == "mape") return mape(labels, pred);
    fail(ErrorKind::InvalidArgument, "unknown metric '" + metric + "' (expected rmse, mape or auc)");
}

// Single-row report of a model on a labeled table.
inline MetricReport evaluate(const BoosterModel& model, const RawTable& table, const std::string& metric) {
    if (table.num_tasks() != model.num_tasks()) fail(ErrorKind::ShapeMismatch, "table and model disagree on task count");
    const Matrix<double> scores = predict(model, table.features);
    MetricReport rep;
    rep.task_names = model.task_names;
    rep.main_task = model.params.main_task_index;
    rep.per_fold = Matrix<double>(1, model.num_tasks());
    for (std::size_t t = 0; t < model.num_tasks(); ++t) {
        const std::string name = metric_for_task(metric, model.params.objectives[t]);
        rep.metrics.push_back(name);
        rep.per_fold(0, t) = evaluate_metric(name, table.labels.column(t), scores.column(t), model.params.objectives[t]);
    }
    rep.task_means.assign(rep.per_fold.row(0).begin(), rep.per_fold.row(0).end());
    return rep;
}

enum class FoldMode { Shuffled, Chronological };

struct KFoldOptions {
    std::size_t folds = 4;
    FoldMode mode = FoldMode::Shuffled;
    double holdout_fraction = 0.2;  // chronological mode
    std::string metric;             // empty = per-task default
    bool early_stop_on_holdout = false;
};

// Disjoint, exhaustive folds from a seeded shuffle; sizes differ by at
// most one.
inline std::vector<std::vector<std::size_t>> kfold_partition(std::size_t m, std::size_t k, std::uint64_t seed) {
    if (k < 2) fail(ErrorKind::InvalidArgument, "need at least 2 folds");
    if (m < k) fail(ErrorKind::TooFewSamples, std::to_string(m) + " rows cannot fill " + std::to_string(k) + " folds");
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    CounterRng rng(seed, 0x666F6C6473ULL);
    for (std::size_t i = m; i > 1; --i) std::swap(perm[i - 1], perm[rng.next_below(i)]);
    std::vector<std::vector<std::size_t>> folds(k);
    for (std::size_t i = 0; i < m; ++i) folds[i * k / m].push_back(perm[i]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

// Hold-out rows for chronological mode: the last `fraction` of rows.
inline std::vector<std::size_t> chronological_holdout(std::size_t m, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) fail(ErrorKind::InvalidArgument, "holdout_fraction must be in (0, 1)");
    const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(m)));
    if (count == 0 || count >= m) fail(ErrorKind::TooFewSamples, "not enough rows for a chronological split");
    std::vector<std::size_t> out(count);
    std::iota(out.begin(), out.end(), m - count);
    return out;
}

// Trains one model per hold-out fold (every fold uses params.seed) and
// scores it on that fold.
inline MetricReport run_kfold(const RawTable& table, const KFoldOptions& opts, const BoosterParams& params) {
    const std::size_t m = table.rows();
    std::vector<std::vector<std::size_t>> holdouts;
    if (opts.mode == FoldMode::Chronological) holdouts.push_back(chronological_holdout(m, opts.holdout_fraction));
    else holdouts = kfold_partition(m, opts.folds, params.seed);

    const std::size_t n = table.num_tasks();
    MetricReport rep;
    rep.task_names = table.task_names;
    rep.main_task = params.main_task_index;
    rep.per_fold = Matrix<double>(holdouts.size(), n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t t = 0; t < n; ++t) rep.metrics.push_back(metric_for_task(opts.metric, params.objectives.at(t)));

    for (std::size_t k = 0; k < holdouts.size(); ++k) {
        std::vector<bool> held(m, false);
        for (auto i : holdouts[k]) held[i] = true;
        std::vector<std::size_t> train_rows;
        for (std::size_t i = 0; i < m; ++i)
            if (!held[i]) train_rows.push_back(i);
        if (train_rows.empty()) fail(ErrorKind::TooFewSamples, "fold leaves no training rows");

        const RawTable train_raw = take_rows(table, train_rows);
        const RawTable test_raw = take_rows(table, holdouts[k]);
        const BinMapper mapper = fit_bins(train_raw, params.max_bins);
        const Dataset train_ds = apply_bins(train_raw, mapper);
        const Dataset test_ds = apply_bins(test_raw, mapper);
        const BoosterModel model = train(train_ds, opts.early_stop_on_holdout ? &test_ds : nullptr, params);
        const Matrix<double> scores = predict(model, test_ds);
        for (std::size_t t = 0; t < n; ++t) {
            try {
                rep.per_fold(k, t) = evaluate_metric(rep.metrics[t], test_raw.labels.column(t), scores.column(t),
                                                     params.objectives[t]);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::SingleClass && e.kind() != ErrorKind::ZeroLabelInMape) throw;
            }
        }
    }

    rep.task_means.assign(n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t t = 0; t < n; ++t) {
        double sum = 0.0;
        std::size_t cnt = 0;
        for (std::size_t k = 0; k < holdouts.size(); ++k)
            if (!std::isnan(rep.per_fold(k, t))) {
                sum += rep.per_fold(k, t);
                ++cnt;
            }
        if (cnt) rep.task_means[t] = sum / static_cast<double>(cnt);
    }
    return rep;
}

}  // namespace mtgbm
