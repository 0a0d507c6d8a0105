#pragma once
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "booster.hpp"
#include "common.hpp"
#include "config.hpp"

namespace mtgbm {

// Model file, version 1. Line oriented, every real value is a hexadecimal
// float literal so the round trip is exact. Names run to the end of line.
//
//   mtgbm_model 1
//   tasks <n>
//   task <objective> <base_score> <name>            (n lines)
//   features <d>
//   feature <num_bounds> <name>                      (d pairs of lines)
//   bounds <b_0> ... <b_k>
//   log_transform <k> <feature index>...             (k may be 0)
//   params <count>
//   <key> = <value>                                  (count lines)
//   best_iteration <k | none>
//   trees <T>
//   tree <index> <num_nodes> <num_leaves>
//   node <feature> <threshold_bin> <left> <right>    (negative child c = leaf ~c)
//   leaf <count> <value_0..value_{n-1}> <residual_mean_0..residual_mean_{n-1}>
//   end_model

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline void check_name(const std::string& name) {
    if (name.empty() || name.find_first_of("\r\n") != std::string::npos)
        fail(ErrorKind::InvalidArgument, "names in model files must be non-empty single-line strings");
}

class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    std::string_view next() {
        if (pos_ >= text_.size()) fail(ErrorKind::ParseError, "model file truncated after line " + std::to_string(line_));
        std::size_t eol = text_.find('\n', pos_);
        if (eol == std::string_view::npos) eol = text_.size();
        std::string_view out = text_.substr(pos_, eol - pos_);
        if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
        pos_ = eol + 1;
        ++line_;
        return out;
    }

    [[noreturn]] void error(const std::string& what) const {
        fail(ErrorKind::ParseError, "model file line " + std::to_string(line_) + ": " + what);
    }

    std::size_t line() const noexcept { return line_; }
    bool at_end() const noexcept { return pos_ >= text_.size(); }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 0;
};

// Splits `line` into its first `count` whitespace-separated tokens plus the
// remainder of the line (for names).
inline std::vector<std::string_view> tokens(std::string_view line, std::size_t count, std::string_view* rest = nullptr) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (out.size() < count) {
        while (pos < line.size() && line[pos] == ' ') ++pos;
        if (pos >= line.size()) break;
        std::size_t end = line.find(' ', pos);
        if (end == std::string_view::npos) end = line.size();
        out.push_back(line.substr(pos, end - pos));
        pos = end;
    }
    if (rest) *rest = pos < line.size() ? line.substr(pos + 1) : std::string_view{};
    return out;
}

inline std::vector<std::string_view> all_tokens(std::string_view line) {
    return tokens(line, static_cast<std::size_t>(-1));
}

inline double hex_or_fail(const LineReader& in, std::string_view tok) {
    double v = 0.0;
    if (!parse_hex_double(tok, v)) in.error("bad float literal '" + std::string(tok) + "'");
    return v;
}

template <class Int>
inline Int int_or_fail(const LineReader& in, std::string_view tok) {
    Int v{};
    if (!parse_int(tok, v)) in.error("bad integer '" + std::string(tok) + "'");
    return v;
}

inline std::vector<std::string_view> expect(LineReader& in, std::string_view keyword, std::size_t count,
                                            std::string_view* rest = nullptr) {
    const std::string_view line = in.next();
    auto tok = tokens(line, count, rest);
    if (tok.empty() || tok[0] != keyword) in.error("expected '" + std::string(keyword) + "'");
    if (tok.size() != count) in.error("'" + std::string(keyword) + "' needs " + std::to_string(count - 1) + " fields");
    return tok;
}

}  // namespace detail

inline std::string serialize_model(const BoosterModel& model) {
    const std::size_t n = model.num_tasks();
    if (model.params.objectives.size() != n || model.task_names.size() != n)
        fail(ErrorKind::InvalidArgument, "model task metadata is inconsistent");
    if (model.feature_names.size() != model.num_features())
        fail(ErrorKind::InvalidArgument, "model feature metadata is inconsistent");

    std::string out;
    out += "mtgbm_model " + std::to_string(kModelFormatVersion) + "\n";
    out += "tasks " + std::to_string(n) + "\n";
    for (std::size_t t = 0; t < n; ++t) {
        detail::check_name(model.task_names[t]);
        out += "task " + std::string(to_string(model.params.objectives[t])) + " " + hex_double(model.base_scores[t]) +
               " " + model.task_names[t] + "\n";
    }
    out += "features " + std::to_string(model.num_features()) + "\n";
    for (std::size_t f = 0; f < model.num_features(); ++f) {
        detail::check_name(model.feature_names[f]);
        const auto& bounds = model.mapper.upper_bounds(f);
        out += "feature " + std::to_string(bounds.size()) + " " + model.feature_names[f] + "\nbounds";
        for (double b : bounds) out += " " + hex_double(b);
        out += "\n";
    }
    out += "log_transform " + std::to_string(model.log_features.size());
    for (auto f : model.log_features) out += " " + std::to_string(f);
    out += "\n";
    const auto entries = params_to_entries(model.params);
    out += "params " + std::to_string(entries.size()) + "\n";
    for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
    out += "best_iteration " + (model.best_iteration ? std::to_string(*model.best_iteration) : std::string("none")) + "\n";
    out += "trees " + std::to_string(model.trees.size()) + "\n";
    for (std::size_t i = 0; i < model.trees.size(); ++i) {
        const auto& tree = model.trees[i];
        if (tree.num_tasks() != n) fail(ErrorKind::InvalidArgument, "tree " + std::to_string(i) + " has wrong task count");
        out += "tree " + std::to_string(i) + " " + std::to_string(tree.nodes.size()) + " " +
               std::to_string(tree.num_leaves()) + "\n";
        for (const auto& node : tree.nodes)
            out += "node " + std::to_string(node.feature) + " " + std::to_string(node.threshold_bin) + " " +
                   std::to_string(node.left) + " " + std::to_string(node.right) + "\n";
        for (std::size_t l = 0; l < tree.num_leaves(); ++l) {
            out += "leaf " + std::to_string(tree.leaf_counts[l]);
            for (std::size_t t = 0; t < n; ++t) out += " " + hex_double(tree.leaf_values(l, t));
            for (std::size_t t = 0; t < n; ++t) out += " " + hex_double(tree.leaf_residual_means(l, t));
            out += "\n";
        }
    }
    out += "end_model\n";
    return out;
}

inline BoosterModel deserialize_model(std::string_view text) {
    detail::LineReader in(text);
    if (in.at_end()) fail(ErrorKind::FormatVersionMismatch, "empty model file");
    {
        const auto tok = detail::all_tokens(in.next());
        if (tok.size() != 2 || tok[0] != "mtgbm_model")
            fail(ErrorKind::FormatVersionMismatch, "not an mtgbm model file");
        int version = 0;
        if (!parse_int(tok[1], version) || version != kModelFormatVersion)
            fail(ErrorKind::FormatVersionMismatch, "unsupported model format version '" + std::string(tok[1]) + "'");
    }
    BoosterModel model;
    const auto n = detail::int_or_fail<std::size_t>(in, detail::expect(in, "tasks", 2)[1]);
    if (n == 0) in.error("model must have at least one task");
    for (std::size_t t = 0; t < n; ++t) {
        std::string_view name;
        const auto tok = detail::expect(in, "task", 3, &name);
        try {
            model.params.objectives.push_back(parse_objective(tok[1]));
        } catch (const Error& e) {
            in.error(e.what());
        }
        model.base_scores.push_back(detail::hex_or_fail(in, tok[2]));
        if (name.empty()) in.error("task name missing");
        model.task_names.emplace_back(name);
    }

    const auto d = detail::int_or_fail<std::size_t>(in, detail::expect(in, "features", 2)[1]);
    std::vector<std::vector<double>> bounds(d);
    for (std::size_t f = 0; f < d; ++f) {
        std::string_view name;
        const auto tok = detail::expect(in, "feature", 2, &name);
        const auto k = detail::int_or_fail<std::size_t>(in, tok[1]);
        if (name.empty()) in.error("feature name missing");
        model.feature_names.emplace_back(name);
        const auto btok = detail::all_tokens(in.next());
        if (btok.empty() || btok[0] != "bounds" || btok.size() != k + 1) in.error("bounds line does not match count");
        for (std::size_t j = 1; j < btok.size(); ++j) bounds[f].push_back(detail::hex_or_fail(in, btok[j]));
    }
    try {
        model.mapper = BinMapper(std::move(bounds));
    } catch (const Error& e) {
        in.error(e.what());
    }

    {
        const auto tok = detail::all_tokens(in.next());
        if (tok.size() < 2 || tok[0] != "log_transform") in.error("expected 'log_transform'");
        const auto k = detail::int_or_fail<std::size_t>(in, tok[1]);
        if (tok.size() != k + 2) in.error("log_transform count does not match");
        for (std::size_t j = 2; j < tok.size(); ++j) {
            const auto f = detail::int_or_fail<std::size_t>(in, tok[j]);
            if (f >= d) in.error("log_transform feature out of range");
            model.log_features.push_back(f);
        }
    }

    const auto num_params = detail::int_or_fail<std::size_t>(in, detail::expect(in, "params", 2)[1]);
    std::string params_text;
    const std::size_t params_first_line = in.line() + 1;
    for (std::size_t i = 0; i < num_params; ++i) {
        params_text += in.next();
        params_text += '\n';
    }
    const TaskObjectives objectives = model.params.objectives;
    for (const auto& e : parse_key_values(params_text, "model params")) {
        if (!apply_param(model.params, e, "model params"))
            fail(ErrorKind::ParseError, "model file line " + std::to_string(params_first_line + e.line - 1) +
                                            ": unknown parameter '" + e.key + "'");
    }
    if (model.params.objectives != objectives) in.error("params objectives disagree with task lines");

    {
        const auto tok = detail::expect(in, "best_iteration", 2);
        if (tok[1] != "none") model.best_iteration = detail::int_or_fail<std::size_t>(in, tok[1]);
    }

    const auto num_trees = detail::int_or_fail<std::size_t>(in, detail::expect(in, "trees", 2)[1]);
    model.trees.reserve(num_trees);
    for (std::size_t i = 0; i < num_trees; ++i) {
        const auto tok = detail::expect(in, "tree", 4);
        if (detail::int_or_fail<std::size_t>(in, tok[1]) != i) in.error("tree index out of sequence");
        const auto num_nodes = detail::int_or_fail<std::size_t>(in, tok[2]);
        const auto num_leaves = detail::int_or_fail<std::size_t>(in, tok[3]);
        if (num_leaves != num_nodes + 1) in.error("a tree with k nodes must have k + 1 leaves");
        MultiOutputTree tree;
        for (std::size_t j = 0; j < num_nodes; ++j) {
            const auto nt = detail::expect(in, "node", 5);
            TreeNode node;
            node.feature = detail::int_or_fail<std::uint32_t>(in, nt[1]);
            const auto thr = detail::int_or_fail<unsigned>(in, nt[2]);
            node.left = detail::int_or_fail<std::int32_t>(in, nt[3]);
            node.right = detail::int_or_fail<std::int32_t>(in, nt[4]);
            if (node.feature >= d || thr > 255) in.error("node split out of range");
            node.threshold_bin = static_cast<BinIndex>(thr);
            for (auto c : {node.left, node.right}) {
                const bool ok = c >= 0 ? static_cast<std::size_t>(c) < num_nodes && static_cast<std::size_t>(c) > j
                                       : static_cast<std::size_t>(~c) < num_leaves;
                if (!ok) in.error("node child out of range");
            }
            tree.nodes.push_back(node);
        }
        tree.leaf_values = Matrix<double>(num_leaves, n);
        tree.leaf_residual_means = Matrix<double>(num_leaves, n);
        for (std::size_t l = 0; l < num_leaves; ++l) {
            const auto lt = detail::all_tokens(in.next());
            if (lt.size() != 2 + 2 * n || lt[0] != "leaf") in.error("leaf line needs " + std::to_string(1 + 2 * n) + " fields");
            tree.leaf_counts.push_back(detail::int_or_fail<std::size_t>(in, lt[1]));
            for (std::size_t t = 0; t < n; ++t) {
                tree.leaf_values(l, t) = detail::hex_or_fail(in, lt[2 + t]);
                tree.leaf_residual_means(l, t) = detail::hex_or_fail(in, lt[2 + n + t]);
            }
        }
        model.trees.push_back(std::move(tree));
    }
    if (in.at_end() || in.next() != "end_model") in.error("missing end_model marker");
    return model;
}

inline void save_model(const BoosterModel& model, const std::string& path) {
    const std::string text = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot write " + path);
    out << text;
    out.flush();
    if (!out) fail(ErrorKind::IoError, "write failed for " + path);
}

inline BoosterModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (text.empty()) fail(ErrorKind::FormatVersionMismatch, path + " is empty");
    return deserialize_model(text);
}

}  // namespace mtgbm
