#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mtgbm/mtgbm.hpp"

namespace {

using namespace mtgbm;

struct TrainArgs {
    std::string config, data, valid, out, log;
};
struct PredictArgs {
    std::string model, data, out, missing_token;
    std::optional<std::size_t> task;
    bool proba = false;
};
struct EvalArgs {
    std::string model, data, metric, missing_token;
};
struct SynthArgs {
    std::string scenario = "noisy_tasks", out;
    std::size_t m = 5000;
    std::size_t d = 0;
    double noise_rate = 0.15;
    double prevalence = 0.035;
    std::uint64_t seed = 0;
};
struct ExtractArgs {
    std::string model, out;
    std::size_t task = 0;
};
struct CvArgs {
    std::string config, data, metric;
    std::size_t folds = 4;
    bool chronological = false;
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot write " + path);
    out << text;
    if (!out) fail(ErrorKind::IoError, "write failed for " + path);
}

std::set<std::size_t> log_feature_indices(const TrainConfig& cfg, const RawTable& table) {
    std::set<std::size_t> out;
    for (const auto& name : cfg.log_transform) {
        auto it = std::find(table.feature_names.begin(), table.feature_names.end(), name);
        if (it == table.feature_names.end())
            fail(ErrorKind::ConfigError, "key=log_transform: feature '" + name + "' not in data");
        out.insert(static_cast<std::size_t>(it - table.feature_names.begin()));
    }
    return out;
}

std::string training_log_csv(const BoosterModel& model) {
    std::string out = "iteration";
    for (const auto& t : model.task_names) out += ",train_" + csv_escape(t);
    const bool has_valid = !model.training_log.empty() && !model.training_log.front().valid_loss.empty();
    if (has_valid)
        for (const auto& t : model.task_names) out += ",valid_" + csv_escape(t);
    out += '\n';
    for (const auto& row : model.training_log) {
        out += std::to_string(row.iteration);
        for (double v : row.train_loss) out += "," + shortest_double(v);
        for (double v : row.valid_loss) out += "," + shortest_double(v);
        out += '\n';
    }
    return out;
}

int run_train(const TrainArgs& a) {
    const TrainConfig cfg = load_train_config(a.config);
    RawTable table = load_csv(a.data, cfg.label_columns, cfg.missing_token);
    const auto log_idx = log_feature_indices(cfg, table);
    table = log_transform(std::move(table), log_idx);
    const BinMapper mapper = fit_bins(table, cfg.params.max_bins);
    const Dataset train_ds = apply_bins(table, mapper);

    std::optional<Dataset> valid_ds;
    if (!a.valid.empty()) {
        RawTable valid = load_csv(a.valid, cfg.label_columns, cfg.missing_token);
        if (valid.feature_names != table.feature_names)
            fail(ErrorKind::DimensionMismatch, "validation csv has different feature columns");
        valid_ds = apply_bins(log_transform(std::move(valid), log_idx), mapper);
    }
    BoosterModel model = train(train_ds, valid_ds ? &*valid_ds : nullptr, cfg.params);
    model.log_features.assign(log_idx.begin(), log_idx.end());
    save_model(model, a.out);
    write_text(a.log.empty() ? a.out + ".log.csv" : a.log, training_log_csv(model));
    std::cout << "trees=" << model.trees.size() << " tasks=" << model.num_tasks() << " model=" << a.out << "\n";
    return 0;
}

int run_predict(const PredictArgs& a) {
    const BoosterModel model = load_model(a.model);
    const CsvDocument doc = read_csv(a.data);
    const Matrix<double> features = features_from_csv(doc, model.feature_names, a.missing_token);
    const Matrix<double> scores = a.proba ? predict_proba(model, features, a.task) : predict(model, features, a.task);
    std::string out = "row";
    if (a.task) out += ",task_" + std::to_string(*a.task);
    else
        for (std::size_t t = 0; t < model.num_tasks(); ++t) out += ",task_" + std::to_string(t);
    out += '\n';
    for (std::size_t r = 0; r < scores.rows(); ++r) {
        out += std::to_string(r);
        for (double v : scores.row(r)) out += "," + shortest_double(v);
        out += '\n';
    }
    write_text(a.out, out);
    return 0;
}

int run_eval(const EvalArgs& a) {
    if (!a.metric.empty() && a.metric != "rmse" && a.metric != "mape" && a.metric != "auc")
        fail(ErrorKind::InvalidArgument, "unknown metric '" + a.metric + "' (expected rmse, mape or auc)");
    const BoosterModel model = load_model(a.model);
    const RawTable raw = load_csv(a.data, model.task_names, a.missing_token);
    const Matrix<double> features = features_from_csv(read_csv(a.data), model.feature_names, a.missing_token);
    RawTable table = raw;
    table.features = features;
    table.feature_names = model.feature_names;
    const MetricReport rep = evaluate(model, table, a.metric);
    std::cout << "task,metric,value\n";
    for (std::size_t t = 0; t < rep.task_names.size(); ++t)
        std::cout << csv_escape(rep.task_names[t]) << "," << rep.metrics[t] << "," << shortest_double(rep.task_means[t])
                  << "\n";
    return 0;
}

int run_synth(const SynthArgs& a) {
    SyntheticSpec spec;
    spec.scenario = parse_scenario(a.scenario);
    spec.m = a.m;
    spec.d = a.d;
    spec.noise_rate = a.noise_rate;
    spec.seed = a.seed;
    spec.subclass_prevalence = a.prevalence;
    write_csv(gen_synthetic(spec), a.out);
    return 0;
}

int run_extract(const ExtractArgs& a) {
    save_model(extract_task(load_model(a.model), a.task), a.out);
    return 0;
}

int run_cv(const CvArgs& a) {
    const TrainConfig cfg = load_train_config(a.config);
    RawTable table = load_csv(a.data, cfg.label_columns, cfg.missing_token);
    table = log_transform(std::move(table), log_feature_indices(cfg, table));
    KFoldOptions opts;
    opts.folds = a.folds;
    opts.mode = a.chronological ? FoldMode::Chronological : FoldMode::Shuffled;
    opts.metric = a.metric;
    const MetricReport rep = run_kfold(table, opts, cfg.params);
    std::cout << "fold";
    for (std::size_t t = 0; t < rep.task_names.size(); ++t) std::cout << "," << csv_escape(rep.task_names[t]) << "_" << rep.metrics[t];
    std::cout << "\n";
    for (std::size_t k = 0; k < rep.per_fold.rows(); ++k) {
        std::cout << k;
        for (double v : rep.per_fold.row(k)) std::cout << "," << shortest_double(v);
        std::cout << "\n";
    }
    std::cout << "mean";
    for (double v : rep.task_means) std::cout << "," << shortest_double(v);
    std::cout << "\n";
    return 0;
}

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-task gradient boosted trees"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train a model from a config file and a CSV");
    train_cmd->add_option("--config", train_args.config, "Config file")->required();
    train_cmd->add_option("--data", train_args.data, "Training CSV")->required();
    train_cmd->add_option("--valid", train_args.valid, "Validation CSV (enables validation logging and early stopping)");
    train_cmd->add_option("--out", train_args.out, "Model file to write")->required();
    train_cmd->add_option("--log", train_args.log, "Training-log CSV (default: <out>.log.csv)");

    PredictArgs predict_args;
    auto* predict_cmd = app.add_subcommand("predict", "Write per-task predictions");
    predict_cmd->add_option("--model", predict_args.model, "Model file")->required();
    predict_cmd->add_option("--data", predict_args.data, "Input CSV")->required();
    predict_cmd->add_option("--task", predict_args.task, "Only predict this task index");
    predict_cmd->add_option("--out", predict_args.out, "Prediction CSV to write")->required();
    predict_cmd->add_option("--missing-token", predict_args.missing_token, "Cell text treated as missing");
    predict_cmd->add_flag("--proba", predict_args.proba, "Apply the output transform (sigmoid for binary tasks)");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a labeled CSV");
    eval_cmd->add_option("--model", eval_args.model, "Model file")->required();
    eval_cmd->add_option("--data", eval_args.data, "Labeled CSV")->required();
    eval_cmd->add_option("--metric", eval_args.metric, "rmse, mape or auc (default: auc for binary, rmse otherwise)");
    eval_cmd->add_option("--missing-token", eval_args.missing_token, "Cell text treated as missing");

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic multi-task CSV");
    synth_cmd->add_option("--scenario", synth_args.scenario, "noisy_tasks, sub_tasks or timeseries_ratio");
    synth_cmd->add_option("--m", synth_args.m, "Number of rows");
    synth_cmd->add_option("--d", synth_args.d, "Number of features (0 = scenario default)");
    synth_cmd->add_option("--noise-rate", synth_args.noise_rate, "Label flip probability");
    synth_cmd->add_option("--prevalence", synth_args.prevalence, "Subclass prevalence (sub_tasks)");
    synth_cmd->add_option("--seed", synth_args.seed, "Random seed");
    synth_cmd->add_option("--out", synth_args.out, "CSV to write")->required();

    ExtractArgs extract_args;
    auto* extract_cmd = app.add_subcommand("extract", "Write a single-task model");
    extract_cmd->add_option("--model", extract_args.model, "Model file")->required();
    extract_cmd->add_option("--task", extract_args.task, "Task index")->required();
    extract_cmd->add_option("--out", extract_args.out, "Model file to write")->required();

    CvArgs cv_args;
    auto* cv_cmd = app.add_subcommand("cv", "K-fold (or chronological hold-out) evaluation");
    cv_cmd->add_option("--config", cv_args.config, "Config file")->required();
    cv_cmd->add_option("--data", cv_args.data, "Labeled CSV")->required();
    cv_cmd->add_option("--folds", cv_args.folds, "Number of folds");
    cv_cmd->add_option("--metric", cv_args.metric, "rmse, mape or auc");
    cv_cmd->add_flag("--chronological", cv_args.chronological, "Hold out the last 20% of rows instead");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: UsageError: " << one_line(e.what()) << "\n";
        return 2;
    }

    try {
        if (*train_cmd) return run_train(train_args);
        if (*predict_cmd) return run_predict(predict_args);
        if (*eval_cmd) return run_eval(eval_args);
        if (*synth_cmd) return run_synth(synth_args);
        if (*extract_cmd) return run_extract(extract_args);
        if (*cv_cmd) return run_cv(cv_args);
    } catch (const mtgbm::Error& e) {
        std::cerr << "error: " << to_string(e.kind()) << ": " << one_line(e.what()) << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: Internal: " << one_line(e.what()) << "\n";
        return 1;
    }
    return 1;
}
