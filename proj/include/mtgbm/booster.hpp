#pragma once
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"
#include "data.hpp"
#include "mtgrad.hpp"
#include "objective.hpp"
#include "tree.hpp"

namespace mtgbm {

struct BoosterParams {
    std::size_t num_iterations = 200;
    TreeParams tree;  // learning_rate, lambda, gamma_reg, depth/leaf limits
    std::size_t early_stopping_rounds = 0;  // 0 = off
    std::uint64_t seed = 0;
    std::size_t main_task_index = 0;
    int max_bins = BinMapper::kMaxBins;
    MTConfig mt;
    TaskObjectives objectives;

    // MTConfig with the booster-level seed and main task applied.
    MTConfig effective_mt() const {
        MTConfig c = mt;
        c.seed = seed;
        c.main_task = main_task_index;
        return c;
    }

    void validate(std::size_t num_tasks) const {
        if (num_iterations < 1) fail(ErrorKind::InvalidArgument, "num_iterations must be >= 1");
        if (!(tree.learning_rate > 0.0 && tree.learning_rate <= 1.0))
            fail(ErrorKind::InvalidArgument, "learning_rate must be in (0, 1]");
        if (!(tree.lambda >= 0.0)) fail(ErrorKind::InvalidArgument, "lambda must be >= 0");
        if (tree.max_leaves < 1) fail(ErrorKind::InvalidArgument, "max_leaves must be >= 1");
        if (!(tree.max_delta > 0.0)) fail(ErrorKind::InvalidArgument, "max_delta must be positive");
        if (objectives.size() != num_tasks)
            fail(ErrorKind::InvalidArgument, "expected " + std::to_string(num_tasks) + " objectives, got " +
                                                 std::to_string(objectives.size()));
        effective_mt().validate(num_tasks);
    }
};

struct TrainingLogRow {
    std::size_t iteration = 0;
    std::vector<double> train_loss;  // per task
    std::vector<double> valid_loss;  // per task, empty without validation data
};

struct BoosterModel {
    std::vector<MultiOutputTree> trees;
    BoosterParams params;
    BinMapper mapper;
    std::vector<double> base_scores;
    std::vector<std::string> feature_names;
    std::vector<std::string> task_names;
    std::vector<std::size_t> log_features;  // raw inputs mapped through log10(x + 1) before binning
    std::vector<TrainingLogRow> training_log;  // not persisted in model files
    std::optional<std::size_t> best_iteration;  // set when early stopping was active

    std::size_t num_tasks() const noexcept { return base_scores.size(); }
    std::size_t num_features() const noexcept { return mapper.num_features(); }
};

namespace detail {

inline void check_binary_labels(const Matrix<double>& labels, const TaskObjectives& objectives) {
    for (std::size_t t = 0; t < objectives.size(); ++t) {
        if (objectives[t] != ObjectiveKind::BinaryLogloss) continue;
        for (std::size_t i = 0; i < labels.rows(); ++i) {
            const double y = labels(i, t);
            if (y != 0.0 && y != 1.0)
                fail(ErrorKind::InvalidArgument, "task " + std::to_string(t) + " is binary but row " +
                                                     std::to_string(i) + " has label " + shortest_double(y));
        }
    }
}

inline std::vector<double> task_losses(const Matrix<double>& labels, const Matrix<double>& scores,
                                       const TaskObjectives& objectives) {
    std::vector<double> out(objectives.size());
    for (std::size_t t = 0; t < objectives.size(); ++t)
        out[t] = loss(labels.column(t), scores.column(t), objectives[t]);
    return out;
}

}  // namespace detail

// Boosts shared-structure trees. Each iteration: per-task derivatives at
// the current scores, scaled updating gradients for leaf outputs, ensemble
// gradients for the structure, one tree, score update.
inline BoosterModel train(const Dataset& data, const Dataset* valid, const BoosterParams& params) {
    if (data.rows() == 0) fail(ErrorKind::EmptyDataset, "training data has no rows");
    const std::size_t n = data.num_tasks();
    const std::size_t m = data.rows();
    params.validate(n);
    if (valid) {
        if (!(valid->mapper() == data.mapper()))
            fail(ErrorKind::MapperMismatch, "validation data must be binned with the training bin mapper");
        if (valid->num_tasks() != n) fail(ErrorKind::ShapeMismatch, "validation data has a different task count");
    }
    detail::check_binary_labels(data.labels(), params.objectives);
    if (valid) detail::check_binary_labels(valid->labels(), params.objectives);

    const MTConfig mt = params.effective_mt();
    BoosterModel model;
    model.params = params;
    model.params.mt = mt;
    model.mapper = data.mapper();
    model.feature_names = data.feature_names();
    model.task_names = data.task_names();
    model.base_scores.resize(n);
    for (std::size_t t = 0; t < n; ++t) model.base_scores[t] = base_score(data.labels().column(t), params.objectives[t]);

    Matrix<double> scores(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t t = 0; t < n; ++t) scores(i, t) = model.base_scores[t];
    Matrix<double> valid_scores;
    if (valid) {
        valid_scores = Matrix<double>(valid->rows(), n);
        for (std::size_t i = 0; i < valid->rows(); ++i)
            for (std::size_t t = 0; t < n; ++t) valid_scores(i, t) = model.base_scores[t];
    }

    const bool early_stopping = valid && params.early_stopping_rounds > 0;
    double best_valid = std::numeric_limits<double>::infinity();
    std::size_t best_iter = 0;

    for (std::size_t it = 0; it < params.num_iterations; ++it) {
        const GradHess gh = grad_hess(data.labels(), scores, params.objectives);
        const GradHess gu = updating_grad_hess(gh, mt);
        const EnsembleGrad eg = ensemble_grad_hess(gh, mt, it);
        const GrownTree grown = grow_tree(data, eg.g_e, eg.h_e, params.tree);
        MultiOutputTree tree = fit_leaf_values(grown, gu.g, gu.h, params.tree);

        for (std::size_t l = 0; l < grown.leaf_samples.size(); ++l)
            for (auto i : grown.leaf_samples[l])
                for (std::size_t t = 0; t < n; ++t) scores(i, t) += tree.leaf_values(l, t);

        TrainingLogRow row;
        row.iteration = it;
        row.train_loss = detail::task_losses(data.labels(), scores, params.objectives);
        if (valid) {
            for (std::size_t i = 0; i < valid->rows(); ++i) {
                const std::size_t leaf = tree.leaf_index([&](std::uint32_t f) { return valid->bin(i, f); });
                for (std::size_t t = 0; t < n; ++t) valid_scores(i, t) += tree.leaf_values(leaf, t);
            }
            row.valid_loss = detail::task_losses(valid->labels(), valid_scores, params.objectives);
        }
        model.trees.push_back(std::move(tree));
        model.training_log.push_back(std::move(row));

        if (early_stopping) {
            const double v = model.training_log.back().valid_loss[params.main_task_index];
            if (v < best_valid) {
                best_valid = v;
                best_iter = it;
            } else if (it - best_iter >= params.early_stopping_rounds) {
                break;
            }
        }
    }
    if (early_stopping) {
        model.best_iteration = best_iter;
        model.trees.resize(best_iter + 1);
    }
    return model;
}

inline BoosterModel train(const Dataset& data, const BoosterParams& params) { return train(data, nullptr, params); }

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

namespace detail {

template <class BinOf>
inline void accumulate_row(const BoosterModel& model, BinOf&& bin_of, std::optional<std::size_t> task,
                           std::span<double> out) {
    if (task) {
        out[0] = model.base_scores[*task];
        for (const auto& tree : model.trees) out[0] += tree.leaf_values(tree.leaf_index(bin_of), *task);
        return;
    }
    for (std::size_t t = 0; t < model.num_tasks(); ++t) out[t] = model.base_scores[t];
    for (const auto& tree : model.trees) {
        const auto values = tree.leaf_values.row(tree.leaf_index(bin_of));
        for (std::size_t t = 0; t < out.size(); ++t) out[t] += values[t];
    }
}

inline void check_task(const BoosterModel& model, std::optional<std::size_t> task) {
    if (task && *task >= model.num_tasks())
        fail(ErrorKind::TaskIndexOutOfRange, "task " + std::to_string(*task) + " but model has " +
                                                 std::to_string(model.num_tasks()) + " tasks");
}

}  // namespace detail

// Raw scores for k rows of raw features: k x n, or k x 1 when a task is
// given. Only the requested task's leaf outputs are read in that case.
inline Matrix<double> predict(const BoosterModel& model, const Matrix<double>& features,
                              std::optional<std::size_t> task = std::nullopt) {
    if (features.cols() != model.num_features())
        fail(ErrorKind::FeatureCountMismatch, "model expects " + std::to_string(model.num_features()) +
                                                  " features, got " + std::to_string(features.cols()));
    detail::check_task(model, task);
    Matrix<double> out(features.rows(), task ? 1 : model.num_tasks());
    std::vector<bool> log_feature(model.num_features(), false);
    for (auto f : model.log_features) log_feature.at(f) = true;
    std::vector<BinIndex> bins(model.num_features());
    for (std::size_t r = 0; r < features.rows(); ++r) {
        for (std::size_t f = 0; f < bins.size(); ++f) {
            double x = features(r, f);
            if (log_feature[f] && !std::isnan(x)) {
                if (x < 0.0) fail(ErrorKind::NegativeInput, "log-transformed feature " + std::to_string(f) + " is negative");
                x = std::log10(x + 1.0);
            }
            bins[f] = model.mapper.bin(f, x);
        }
        detail::accumulate_row(model, [&](std::uint32_t f) { return bins[f]; }, task, out.row(r));
    }
    return out;
}

// Same as predict() on an already binned dataset.
inline Matrix<double> predict(const BoosterModel& model, const Dataset& data,
                              std::optional<std::size_t> task = std::nullopt) {
    if (!(data.mapper() == model.mapper)) fail(ErrorKind::MapperMismatch, "dataset was binned with another mapper");
    detail::check_task(model, task);
    Matrix<double> out(data.rows(), task ? 1 : model.num_tasks());
    for (std::size_t r = 0; r < data.rows(); ++r)
        detail::accumulate_row(model, [&](std::uint32_t f) { return data.bin(r, f); }, task, out.row(r));
    return out;
}

// predict() followed by the per-task output transform (sigmoid for binary
// tasks, identity for regression).
inline Matrix<double> predict_proba(const BoosterModel& model, const Matrix<double>& features,
                                    std::optional<std::size_t> task = std::nullopt) {
    Matrix<double> out = predict(model, features, task);
    for (std::size_t c = 0; c < out.cols(); ++c) {
        const ObjectiveKind kind = model.params.objectives[task ? *task : c];
        for (std::size_t r = 0; r < out.rows(); ++r) out(r, c) = transform_score(out(r, c), kind);
    }
    return out;
}

// Single-task model that keeps the shared structure and only task `task`'s
// leaf outputs.
inline BoosterModel extract_task(const BoosterModel& model, std::size_t task) {
    if (task >= model.num_tasks())
        fail(ErrorKind::TaskIndexOutOfRange, "task " + std::to_string(task) + " but model has " +
                                                 std::to_string(model.num_tasks()) + " tasks");
    BoosterModel out;
    out.mapper = model.mapper;
    out.feature_names = model.feature_names;
    out.log_features = model.log_features;
    out.task_names = {model.task_names.at(task)};
    out.base_scores = {model.base_scores[task]};
    out.best_iteration = model.best_iteration;
    out.params = model.params;
    out.params.objectives = {model.params.objectives.at(task)};
    out.params.main_task_index = 0;
    out.params.mt.main_task = 0;
    out.params.mt.task_select = TaskSelect::AlwaysMain;
    out.params.mt.task_weights.clear();
    out.params.mt.n_selected = 1;
    out.trees.reserve(model.trees.size());
    for (const auto& tree : model.trees) out.trees.push_back(tree.single_task(task));
    for (const auto& row : model.training_log) {
        TrainingLogRow r;
        r.iteration = row.iteration;
        r.train_loss = {row.train_loss.at(task)};
        if (!row.valid_loss.empty()) r.valid_loss = {row.valid_loss.at(task)};
        out.training_log.push_back(std::move(r));
    }
    return out;
}

}  // namespace mtgbm
