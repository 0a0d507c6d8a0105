#pragma once
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "booster.hpp"
#include "common.hpp"

namespace mtgbm {

// Config files are `key = value` lines. '#' starts a comment, blank lines
// are ignored, list values are comma separated. Unknown keys are errors.

struct ConfigEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

// Everything `train` needs beyond the booster parameters.
struct TrainConfig {
    BoosterParams params;
    std::vector<std::string> label_columns;
    std::string missing_token;
    std::vector<std::string> log_transform;  // feature names mapped through log10(x + 1)
};

[[noreturn]] inline void config_error(const std::string& source, std::size_t line, const std::string& key,
                                      const std::string& what) {
    fail(ErrorKind::ConfigError,
         "file=" + source + " line=" + std::to_string(line) + " key=" + (key.empty() ? "-" : key) + ": " + what);
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    s = trim(s);
    if (s.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = s.find(',', start);
        out.emplace_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::vector<ConfigEntry> parse_key_values(std::string_view text, const std::string& source) {
    std::vector<ConfigEntry> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) {
            if (eol == text.size()) break;
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) config_error(source, line_no, std::string(line), "expected 'key = value'");
        ConfigEntry e{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no};
        if (e.key.empty()) config_error(source, line_no, "", "empty key");
        for (const auto& prev : out)
            if (prev.key == e.key) config_error(source, line_no, e.key, "duplicate key");
        out.push_back(std::move(e));
        if (eol == text.size()) break;
    }
    return out;
}

namespace detail {

struct ValueReader {
    const ConfigEntry& e;
    const std::string& source;

    double real() const {
        double v = 0.0;
        if (!parse_double(e.value, v) || !std::isfinite(v)) config_error(source, e.line, e.key, "expected a number");
        return v;
    }
    template <class Int>
    Int integer() const {
        Int v{};
        if (!parse_int(e.value, v)) config_error(source, e.line, e.key, "expected an integer");
        return v;
    }
};

}  // namespace detail

// Applies one booster parameter. Returns false for keys it doesn't know.
inline bool apply_param(BoosterParams& p, const ConfigEntry& e, const std::string& source) {
    const detail::ValueReader r{e, source};
    const std::string& k = e.key;
    if (k == "num_iterations") p.num_iterations = r.integer<std::size_t>();
    else if (k == "learning_rate") p.tree.learning_rate = r.real();
    else if (k == "lambda" || k == "lambda_l1") p.tree.lambda = r.real();
    else if (k == "gamma_reg") p.tree.gamma_reg = r.real();
    else if (k == "max_depth") p.tree.max_depth = r.integer<int>();
    else if (k == "max_leaves") p.tree.max_leaves = r.integer<int>();
    else if (k == "min_samples_leaf") p.tree.min_samples_leaf = r.integer<std::size_t>();
    else if (k == "min_hess_leaf") p.tree.min_hess_leaf = r.real();
    else if (k == "min_gain_to_split") p.tree.min_gain_to_split = r.real();
    else if (k == "max_delta") p.tree.max_delta = r.real();
    else if (k == "early_stopping_rounds") p.early_stopping_rounds = r.integer<std::size_t>();
    else if (k == "seed") p.seed = r.integer<std::uint64_t>();
    else if (k == "main_task") p.main_task_index = r.integer<std::size_t>();
    else if (k == "max_bins") p.max_bins = r.integer<int>();
    else if (k == "gamma_boost") p.mt.gamma_boost = r.real();
    else if (k == "g_target_mean") p.mt.g_target_mean = r.real();
    else if (k == "g_target_std") p.mt.g_target_std = r.real();
    else if (k == "h_target_mean") p.mt.h_target_mean = r.real();
    else if (k == "h_target_std") p.mt.h_target_std = r.real();
    else if (k == "n_selected") p.mt.n_selected = r.integer<std::size_t>();
    else if (k == "objectives") {
        p.objectives.clear();
        try {
            for (const auto& s : split_list(e.value)) p.objectives.push_back(parse_objective(s));
        } catch (const Error& err) {
            config_error(source, e.line, k, err.what());
        }
    } else if (k == "task_select") {
        if (e.value == "always_main") p.mt.task_select = TaskSelect::AlwaysMain;
        else if (e.value == "uniform_random") p.mt.task_select = TaskSelect::UniformRandom;
        else if (e.value == "weighted") p.mt.task_select = TaskSelect::Weighted;
        else config_error(source, e.line, k, "expected always_main, uniform_random or weighted");
    } else if (k == "task_weights") {
        p.mt.task_weights.clear();
        for (const auto& s : split_list(e.value)) {
            double v = 0.0;
            if (!parse_double(s, v)) config_error(source, e.line, k, "expected a list of numbers");
            p.mt.task_weights.push_back(v);
        }
    } else if (k == "corr_mode") {
        if (e.value == "pearson_to_main") p.mt.corr_mode = CorrMode::PearsonToMain;
        else if (e.value == "constant_one") p.mt.corr_mode = CorrMode::ConstantOne;
        else config_error(source, e.line, k, "expected pearson_to_main or constant_one");
    } else {
        return false;
    }
    return true;
}

inline TrainConfig parse_train_config(std::string_view text, const std::string& source) {
    TrainConfig cfg;
    bool objectives_set = false;
    for (const auto& e : parse_key_values(text, source)) {
        if (e.key == "label_columns") cfg.label_columns = split_list(e.value);
        else if (e.key == "missing_token") cfg.missing_token = e.value;
        else if (e.key == "log_transform") cfg.log_transform = split_list(e.value);
        else if (apply_param(cfg.params, e, source)) objectives_set = objectives_set || e.key == "objectives";
        else config_error(source, e.line, e.key, "unknown key");
    }
    if (cfg.label_columns.empty()) config_error(source, 0, "label_columns", "required key missing");
    if (!objectives_set) cfg.params.objectives.assign(cfg.label_columns.size(), ObjectiveKind::RegressionL2);
    if (cfg.params.objectives.size() != cfg.label_columns.size())
        config_error(source, 0, "objectives", "needs one entry per label column");
    return cfg;
}

inline TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::IoError, "cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_train_config(ss.str(), path);
}

// Booster parameters as config lines; parses back through apply_param.
inline std::vector<std::pair<std::string, std::string>> params_to_entries(const BoosterParams& p) {
    auto real = [](double v) { return shortest_double(v); };
    std::string objectives, weights;
    for (std::size_t i = 0; i < p.objectives.size(); ++i) objectives += (i ? "," : "") + std::string(to_string(p.objectives[i]));
    for (std::size_t i = 0; i < p.mt.task_weights.size(); ++i) weights += (i ? "," : "") + real(p.mt.task_weights[i]);
    std::vector<std::pair<std::string, std::string>> out = {
        {"num_iterations", std::to_string(p.num_iterations)},
        {"learning_rate", real(p.tree.learning_rate)},
        {"lambda", real(p.tree.lambda)},
        {"gamma_reg", real(p.tree.gamma_reg)},
        {"max_depth", std::to_string(p.tree.max_depth)},
        {"max_leaves", std::to_string(p.tree.max_leaves)},
        {"min_samples_leaf", std::to_string(p.tree.min_samples_leaf)},
        {"min_hess_leaf", real(p.tree.min_hess_leaf)},
        {"min_gain_to_split", real(p.tree.min_gain_to_split)},
        {"max_delta", real(p.tree.max_delta)},
        {"early_stopping_rounds", std::to_string(p.early_stopping_rounds)},
        {"seed", std::to_string(p.seed)},
        {"main_task", std::to_string(p.main_task_index)},
        {"max_bins", std::to_string(p.max_bins)},
        {"objectives", objectives},
        {"gamma_boost", real(p.mt.gamma_boost)},
        {"g_target_mean", real(p.mt.g_target_mean)},
        {"g_target_std", real(p.mt.g_target_std)},
        {"h_target_mean", real(p.mt.h_target_mean)},
        {"h_target_std", real(p.mt.h_target_std)},
        {"task_select", to_string(p.mt.task_select)},
        {"n_selected", std::to_string(p.mt.n_selected)},
        {"corr_mode", to_string(p.mt.corr_mode)},
    };
    if (!weights.empty()) out.emplace_back("task_weights", weights);
    return out;
}

}  // namespace mtgbm
