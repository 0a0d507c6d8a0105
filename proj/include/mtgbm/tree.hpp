#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "common.hpp"
#include "data.hpp"

namespace mtgbm {

struct TreeParams {
    double lambda = 0.1;     // denominator regularizer in gains and leaf values
    double gamma_reg = 0.0;  // per-split penalty
    int max_depth = 6;       // <= 0 means unlimited
    int max_leaves = 31;
    std::size_t min_samples_leaf = 20;
    double min_hess_leaf = 1e-3;
    double min_gain_to_split = 0.0;
    double learning_rate = 0.03;
    double max_delta = 1e10;  // clamp on leaf outputs
};

// ---------------------------------------------------------------------------
// Histogram
// ---------------------------------------------------------------------------

struct NodeSums {
    double g = 0.0;
    double h = 0.0;
    std::size_t count = 0;

    friend bool operator==(const NodeSums&, const NodeSums&) = default;
};

// Per (feature, bin) sums of the splitting gradients. The missing bin of
// each feature is its last bin.
class Histogram {
public:
    Histogram() = default;
    explicit Histogram(const BinMapper& mapper) {
        offsets_.resize(mapper.num_features() + 1, 0);
        for (std::size_t f = 0; f < mapper.num_features(); ++f)
            offsets_[f + 1] = offsets_[f] + static_cast<std::size_t>(mapper.bin_count(f));
        bins_.assign(offsets_.back(), NodeSums{});
    }

    std::size_t num_features() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t bin_count(std::size_t f) const noexcept { return offsets_[f + 1] - offsets_[f]; }

    std::span<NodeSums> feature(std::size_t f) { return {bins_.data() + offsets_[f], bin_count(f)}; }
    std::span<const NodeSums> feature(std::size_t f) const { return {bins_.data() + offsets_[f], bin_count(f)}; }

    NodeSums feature_total(std::size_t f) const {
        NodeSums s;
        for (const auto& b : feature(f)) {
            s.g += b.g;
            s.h += b.h;
            s.count += b.count;
        }
        return s;
    }

    // this - other, bin by bin.
    Histogram subtract(const Histogram& other) const {
        Histogram out = *this;
        for (std::size_t i = 0; i < bins_.size(); ++i) {
            out.bins_[i].g -= other.bins_[i].g;
            out.bins_[i].h -= other.bins_[i].h;
            out.bins_[i].count -= other.bins_[i].count;
        }
        return out;
    }

    friend bool operator==(const Histogram&, const Histogram&) = default;

private:
    std::vector<std::size_t> offsets_;
    std::vector<NodeSums> bins_;
};

// Accumulates (g_e, h_e, 1) per bin over the node's samples, in the order
// given (callers keep samples ascending).
inline Histogram build_histogram(std::span<const std::size_t> samples, const Dataset& data,
                                 std::span<const double> g_e, std::span<const double> h_e) {
    Histogram hist(data.mapper());
    for (std::size_t f = 0; f < data.num_features(); ++f) {
        const auto bins = data.feature_bins(f);
        auto out = hist.feature(f);
        for (auto i : samples) {
            auto& b = out[bins[i]];
            b.g += g_e[i];
            b.h += h_e[i];
            ++b.count;
        }
    }
    return hist;
}

inline NodeSums sum_samples(std::span<const std::size_t> samples, std::span<const double> g_e,
                            std::span<const double> h_e) {
    NodeSums s;
    for (auto i : samples) {
        s.g += g_e[i];
        s.h += h_e[i];
        ++s.count;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Split search
// ---------------------------------------------------------------------------

// Reduction of the structural loss -1/2 * G^2 / (H + lambda) when a node is
// split into (gl, hl) and (gr, hr), minus the split penalty.
inline double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma_reg) noexcept {
    const double g = gl + gr;
    const double h = hl + hr;
    return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda)) - gamma_reg;
}

struct SplitInfo {
    std::size_t feature = 0;
    BinIndex threshold_bin = 0;  // bins <= threshold go left
    double gain = -std::numeric_limits<double>::infinity();
    NodeSums left;
    NodeSums right;
    bool default_right = true;  // missing values always go right
};

// Best (feature, bin) boundary by split_gain. Ties keep the lower feature
// and then the lower bin. Returns nothing if no candidate satisfies the
// child constraints or the best gain is <= min_gain_to_split.
inline std::optional<SplitInfo> find_best_split(const Histogram& hist, const NodeSums& totals,
                                                const TreeParams& params) {
    const std::size_t min_leaf = std::max<std::size_t>(params.min_samples_leaf, 1);
    if (totals.count < 2 * min_leaf) return std::nullopt;

    std::optional<SplitInfo> best;
    for (std::size_t f = 0; f < hist.num_features(); ++f) {
        const auto bins = hist.feature(f);
        // the last bin is the missing bin; the last value bin can't be a boundary
        const std::size_t value_bins = bins.size() - 1;
        NodeSums left;
        for (std::size_t b = 0; b + 1 < value_bins; ++b) {
            left.g += bins[b].g;
            left.h += bins[b].h;
            left.count += bins[b].count;
            if (left.count < min_leaf) continue;
            const std::size_t right_count = totals.count - left.count;
            if (right_count < min_leaf) break;
            const double right_g = totals.g - left.g;
            const double right_h = totals.h - left.h;
            if (left.h < params.min_hess_leaf || right_h < params.min_hess_leaf) continue;
            const double gain = split_gain(left.g, left.h, right_g, right_h, params.lambda, params.gamma_reg);
            if (!best || gain > best->gain) {
                SplitInfo s;
                s.feature = f;
                s.threshold_bin = static_cast<BinIndex>(b);
                s.gain = gain;
                s.left = left;
                s.right = NodeSums{right_g, right_h, right_count};
                best = s;
            }
        }
    }
    if (!best || !(best->gain > params.min_gain_to_split)) return std::nullopt;
    return best;
}

// ---------------------------------------------------------------------------
// Tree
// ---------------------------------------------------------------------------

// Internal node. A negative child c refers to leaf ~c.
struct TreeNode {
    std::uint32_t feature = 0;
    BinIndex threshold_bin = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Routes by a per-feature bin lookup. Missing bins sit above every
// threshold, so they always take the right branch.
template <class BinOf>
inline std::size_t route_to_leaf(std::span<const TreeNode> nodes, BinOf&& bin_of) {
    if (nodes.empty()) return 0;
    std::int32_t cur = 0;
    while (cur >= 0) {
        const TreeNode& node = nodes[static_cast<std::size_t>(cur)];
        cur = bin_of(node.feature) <= node.threshold_bin ? node.left : node.right;
    }
    return static_cast<std::size_t>(~cur);
}

// Shared split structure with one output per task at every leaf.
struct MultiOutputTree {
    std::vector<TreeNode> nodes;
    Matrix<double> leaf_values;          // leaves x tasks
    Matrix<double> leaf_residual_means;  // leaves x tasks
    std::vector<std::size_t> leaf_counts;

    std::size_t num_leaves() const noexcept { return leaf_values.rows(); }
    std::size_t num_tasks() const noexcept { return leaf_values.cols(); }

    template <class BinOf>
    std::size_t leaf_index(BinOf&& bin_of) const {
        return route_to_leaf(nodes, std::forward<BinOf>(bin_of));
    }

    std::size_t depth() const {
        std::size_t best = 0;
        std::vector<std::pair<std::int32_t, std::size_t>> stack;
        if (!nodes.empty()) stack.push_back({0, 1});
        while (!stack.empty()) {
            auto [id, d] = stack.back();
            stack.pop_back();
            best = std::max(best, d);
            const auto& n = nodes[static_cast<std::size_t>(id)];
            if (n.left >= 0) stack.push_back({n.left, d + 1});
            if (n.right >= 0) stack.push_back({n.right, d + 1});
        }
        return best;
    }

    // Same structure, one task's outputs only.
    MultiOutputTree single_task(std::size_t task) const {
        MultiOutputTree out;
        out.nodes = nodes;
        out.leaf_counts = leaf_counts;
        out.leaf_values = Matrix<double>(num_leaves(), 1);
        out.leaf_residual_means = Matrix<double>(num_leaves(), 1);
        for (std::size_t l = 0; l < num_leaves(); ++l) {
            out.leaf_values(l, 0) = leaf_values(l, task);
            out.leaf_residual_means(l, 0) = leaf_residual_means(l, task);
        }
        return out;
    }

    friend bool operator==(const MultiOutputTree&, const MultiOutputTree&) = default;
};

// Structure produced by growth, before leaf outputs are fitted.
struct GrownTree {
    std::vector<TreeNode> nodes;
    std::vector<SplitInfo> splits;  // splits[k] created nodes[k]
    std::vector<std::vector<std::size_t>> leaf_samples;  // ascending per leaf
    std::vector<int> leaf_depths;
};

namespace detail {

struct GrowingLeaf {
    std::vector<std::size_t> samples;
    Histogram hist;
    NodeSums sums;
    int depth = 0;
    std::int32_t parent = -1;  // internal node pointing at this leaf
    bool is_left = false;
    std::optional<SplitInfo> best;
};

inline void evaluate_leaf(GrowingLeaf& leaf, const TreeParams& params) {
    const bool depth_ok = params.max_depth <= 0 || leaf.depth < params.max_depth;
    leaf.best = depth_ok ? find_best_split(leaf.hist, leaf.sums, params) : std::nullopt;
}

}  // namespace detail

// Best-first growth: repeatedly splits the leaf with the largest gain until
// max_leaves is reached or no leaf has an admissible split.
inline GrownTree grow_tree(const Dataset& data, std::span<const double> g_e, std::span<const double> h_e,
                           const TreeParams& params) {
    if (g_e.size() != data.rows() || h_e.size() != data.rows())
        fail(ErrorKind::LengthMismatch, "splitting gradients must have one entry per row");
    if (params.max_leaves < 1) fail(ErrorKind::InvalidArgument, "max_leaves must be >= 1");

    std::vector<detail::GrowingLeaf> leaves(1);
    auto& root = leaves[0];
    root.samples.resize(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) root.samples[i] = i;
    root.hist = build_histogram(root.samples, data, g_e, h_e);
    root.sums = sum_samples(root.samples, g_e, h_e);
    if (params.max_leaves > 1) detail::evaluate_leaf(root, params);

    GrownTree out;
    while (leaves.size() < static_cast<std::size_t>(params.max_leaves)) {
        std::size_t pick = leaves.size();
        for (std::size_t l = 0; l < leaves.size(); ++l)
            if (leaves[l].best && (pick == leaves.size() || leaves[l].best->gain > leaves[pick].best->gain)) pick = l;
        if (pick == leaves.size()) break;

        const SplitInfo split = *leaves[pick].best;
        const auto node_id = static_cast<std::int32_t>(out.nodes.size());
        const auto right_leaf = static_cast<std::int32_t>(leaves.size());
        out.nodes.push_back(TreeNode{static_cast<std::uint32_t>(split.feature), split.threshold_bin,
                                     ~static_cast<std::int32_t>(pick), ~right_leaf});
        out.splits.push_back(split);
        if (leaves[pick].parent >= 0) {
            auto& parent = out.nodes[static_cast<std::size_t>(leaves[pick].parent)];
            (leaves[pick].is_left ? parent.left : parent.right) = node_id;
        }

        detail::GrowingLeaf right;
        {
            auto& left = leaves[pick];
            const auto bins = data.feature_bins(split.feature);
            std::vector<std::size_t> left_samples;
            left_samples.reserve(split.left.count);
            right.samples.reserve(split.right.count);
            for (auto i : left.samples)
                (bins[i] <= split.threshold_bin ? left_samples : right.samples).push_back(i);
            left.samples = std::move(left_samples);

            // build the smaller child, derive the larger one by subtraction
            if (left.samples.size() <= right.samples.size()) {
                Histogram small = build_histogram(left.samples, data, g_e, h_e);
                right.hist = left.hist.subtract(small);
                left.hist = std::move(small);
            } else {
                right.hist = build_histogram(right.samples, data, g_e, h_e);
                left.hist = left.hist.subtract(right.hist);
            }
            left.sums = sum_samples(left.samples, g_e, h_e);
            right.sums = sum_samples(right.samples, g_e, h_e);
            left.depth += 1;
            right.depth = left.depth;
            left.parent = node_id;
            left.is_left = true;
            right.parent = node_id;
            right.is_left = false;
        }
        leaves.push_back(std::move(right));
        if (leaves.size() < static_cast<std::size_t>(params.max_leaves)) {
            detail::evaluate_leaf(leaves[pick], params);
            detail::evaluate_leaf(leaves.back(), params);
        }
    }

    out.leaf_samples.reserve(leaves.size());
    for (auto& leaf : leaves) {
        out.leaf_samples.push_back(std::move(leaf.samples));
        out.leaf_depths.push_back(leaf.depth);
    }
    return out;
}

// Per-task Newton step at each leaf from the updating gradients:
// value = -learning_rate * sum(g) / (sum(h) + lambda), clamped to
// +-max_delta. Also records sum(g) / count as the leaf's residual mean.
inline MultiOutputTree fit_leaf_values(const GrownTree& grown, const Matrix<double>& g_u, const Matrix<double>& h_u,
                                       const TreeParams& params) {
    if (!g_u.same_shape(h_u)) fail(ErrorKind::ShapeMismatch, "g_u and h_u differ in shape");
    const std::size_t n = g_u.cols();
    const std::size_t num_leaves = grown.leaf_samples.size();
    MultiOutputTree tree;
    tree.nodes = grown.nodes;
    tree.leaf_values = Matrix<double>(num_leaves, n);
    tree.leaf_residual_means = Matrix<double>(num_leaves, n);
    tree.leaf_counts.resize(num_leaves);
    std::vector<double> gs(n), hs(n);
    for (std::size_t l = 0; l < num_leaves; ++l) {
        const auto& samples = grown.leaf_samples[l];
        if (samples.empty()) fail(ErrorKind::EmptyLeaf, "leaf " + std::to_string(l) + " has no samples");
        std::fill(gs.begin(), gs.end(), 0.0);
        std::fill(hs.begin(), hs.end(), 0.0);
        for (auto i : samples) {
            if (i >= g_u.rows()) fail(ErrorKind::DimensionMismatch, "leaf sample index out of range");
            for (std::size_t t = 0; t < n; ++t) {
                gs[t] += g_u(i, t);
                hs[t] += h_u(i, t);
            }
        }
        tree.leaf_counts[l] = samples.size();
        for (std::size_t t = 0; t < n; ++t) {
            const double denom = hs[t] + params.lambda;
            double value = denom > 0.0 ? -params.learning_rate * gs[t] / denom : 0.0;
            if (!std::isfinite(value)) value = 0.0;
            tree.leaf_values(l, t) = std::clamp(value, -params.max_delta, params.max_delta);
            tree.leaf_residual_means(l, t) = gs[t] / static_cast<double>(samples.size());
        }
    }
    return tree;
}

}  // namespace mtgbm
