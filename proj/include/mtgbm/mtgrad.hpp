#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "common.hpp"
#include "objective.hpp"

namespace mtgbm {

// How the boosted tasks are picked each iteration.
enum class TaskSelect { AlwaysMain, UniformRandom, Weighted };

// How the shared update factor for leaf gradients is derived.
enum class CorrMode { PearsonToMain, ConstantOne };

inline const char* to_string(TaskSelect s) {
    switch (s) {
    case TaskSelect::AlwaysMain: return "always_main";
    case TaskSelect::UniformRandom: return "uniform_random";
    case TaskSelect::Weighted: return "weighted";
    }
    return "?";
}

inline const char* to_string(CorrMode c) {
    return c == CorrMode::PearsonToMain ? "pearson_to_main" : "constant_one";
}

// Knobs for building the splitting gradients (G_e, H_e) and the updating
// gradients (G_u, H_u).
struct MTConfig {
    double gamma_boost = 50.0;  // multiplier applied to the weights of the selected tasks
    double g_target_mean = 0.05;
    double g_target_std = 0.01;  // diagnostic only; a scalar weight cannot match it
    double h_target_mean = 1.0;
    double h_target_std = 0.1;   // diagnostic only
    TaskSelect task_select = TaskSelect::AlwaysMain;
    std::vector<double> task_weights;  // selection probabilities for TaskSelect::Weighted
    std::size_t n_selected = 1;
    CorrMode corr_mode = CorrMode::ConstantOne;
    std::uint64_t seed = 0;
    std::size_t main_task = 0;

    void validate(std::size_t num_tasks) const {
        if (num_tasks == 0) fail(ErrorKind::InvalidArgument, "at least one task is required");
        if (!(gamma_boost >= 1.0) || !std::isfinite(gamma_boost))
            fail(ErrorKind::InvalidArgument, "gamma_boost must be >= 1");
        if (!(g_target_mean > 0.0) || !(h_target_mean > 0.0))
            fail(ErrorKind::InvalidArgument, "target means must be positive");
        if (n_selected < 1 || n_selected > num_tasks)
            fail(ErrorKind::InvalidArgument, "n_selected must be in [1, num_tasks]");
        if (main_task >= num_tasks) fail(ErrorKind::TaskIndexOutOfRange, "main_task out of range");
        if (task_select == TaskSelect::Weighted) {
            if (task_weights.size() != num_tasks)
                fail(ErrorKind::InvalidArgument, "task_weights needs one entry per task");
            double sum = 0.0;
            std::size_t positive = 0;
            for (double p : task_weights) {
                if (!(p >= 0.0)) fail(ErrorKind::InvalidArgument, "task_weights must be non-negative");
                sum += p;
                positive += p > 0.0;
            }
            if (std::abs(sum - 1.0) > 1e-9) fail(ErrorKind::InvalidArgument, "task_weights must sum to 1");
            if (positive < n_selected)
                fail(ErrorKind::InvalidArgument, "fewer tasks with positive weight than n_selected");
        }
    }
};

// Splitting gradients for one iteration.
struct EnsembleGrad {
    std::vector<double> g_e;
    std::vector<double> h_e;
    std::vector<std::size_t> chosen_tasks;  // ascending
    std::vector<double> w;  // after the boost
    std::vector<double> v;
    std::vector<double> weighted_g_std;  // std of w_t * g[:, t] before boosting, per task
};

inline constexpr double kDeadTaskEps = 1e-12;
inline constexpr double kHessFloor = 1e-6;

// One weight per column scaling its mean absolute value onto target_mean.
// Columns whose mean magnitude is below 1e-12 keep weight 1.
inline std::vector<double> normalize_weights(const Matrix<double>& values, double target_mean) {
    if (values.rows() == 0) fail(ErrorKind::InvalidArgument, "normalize_weights needs at least one row");
    std::vector<double> w(values.cols(), 1.0);
    for (std::size_t t = 0; t < values.cols(); ++t) {
        double sum = 0.0;
        for (std::size_t i = 0; i < values.rows(); ++i) sum += std::abs(values(i, t));
        const double mean_abs = sum / static_cast<double>(values.rows());
        if (mean_abs >= kDeadTaskEps) w[t] = target_mean / mean_abs;
    }
    return w;
}

// Tasks whose splitting weight is boosted this iteration. The draw depends
// only on (seed, iteration).
inline std::vector<std::size_t> select_tasks(const MTConfig& config, std::size_t num_tasks, std::size_t iteration) {
    if (num_tasks == 1) return {0};
    CounterRng rng(config.seed, iteration);
    std::vector<std::size_t> chosen;
    const std::size_t k = std::min(config.n_selected, num_tasks);

    switch (config.task_select) {
    case TaskSelect::AlwaysMain: {
        chosen.push_back(config.main_task);
        std::vector<std::size_t> rest;
        for (std::size_t t = 0; t < num_tasks; ++t)
            if (t != config.main_task) rest.push_back(t);
        for (std::size_t j = 0; j + 1 < k; ++j) {
            const std::size_t pick = j + rng.next_below(rest.size() - j);
            std::swap(rest[j], rest[pick]);
            chosen.push_back(rest[j]);
        }
        break;
    }
    case TaskSelect::UniformRandom: {
        std::vector<std::size_t> pool(num_tasks);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t pick = j + rng.next_below(num_tasks - j);
            std::swap(pool[j], pool[pick]);
            chosen.push_back(pool[j]);
        }
        break;
    }
    case TaskSelect::Weighted: {
        std::vector<double> p = config.task_weights;
        for (std::size_t j = 0; j < k; ++j) {
            double total = 0.0;
            for (double x : p) total += x;
            const double u = rng.next_double() * total;
            double acc = 0.0;
            std::size_t pick = num_tasks;
            for (std::size_t t = 0; t < num_tasks; ++t) {
                if (p[t] <= 0.0) continue;
                acc += p[t];
                pick = t;  // falls back to the last positive entry on rounding
                if (u < acc) break;
            }
            chosen.push_back(pick);
            p[pick] = 0.0;
        }
        break;
    }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

inline void require_finite(const GradHess& gh) {
    for (double x : gh.g.data())
        if (!std::isfinite(x)) fail(ErrorKind::NonFiniteGradient, "non-finite gradient");
    for (double x : gh.h.data())
        if (!std::isfinite(x)) fail(ErrorKind::NonFiniteGradient, "non-finite hessian");
}

// Collapses per-task derivatives into one (g, h) pair per sample: each
// task is normalized to a common magnitude, the selected tasks are boosted
// by gamma_boost, and the columns are summed.
inline EnsembleGrad ensemble_grad_hess(const GradHess& gh, const MTConfig& config, std::size_t iteration) {
    const std::size_t m = gh.rows();
    const std::size_t n = gh.num_tasks();
    if (n == 0) fail(ErrorKind::InvalidArgument, "at least one task is required");
    if (!gh.g.same_shape(gh.h)) fail(ErrorKind::ShapeMismatch, "g and h differ in shape");
    require_finite(gh);

    EnsembleGrad eg;
    eg.w = normalize_weights(gh.g, config.g_target_mean);
    eg.v = normalize_weights(gh.h, config.h_target_mean);

    eg.weighted_g_std.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        double mean = 0.0;
        for (std::size_t i = 0; i < m; ++i) mean += eg.w[t] * gh.g(i, t);
        mean /= static_cast<double>(m);
        double var = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double d = eg.w[t] * gh.g(i, t) - mean;
            var += d * d;
        }
        eg.weighted_g_std[t] = std::sqrt(var / static_cast<double>(m));
    }

    eg.chosen_tasks = select_tasks(config, n, iteration);
    for (auto k : eg.chosen_tasks) eg.w[k] *= config.gamma_boost;

    eg.g_e.assign(m, 0.0);
    eg.h_e.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double g = 0.0;
        double h = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            g += eg.w[t] * gh.g(i, t);
            h += eg.v[t] * gh.h(i, t);
        }
        eg.g_e[i] = g;
        eg.h_e[i] = std::max(h, kHessFloor);
    }
    return eg;
}

// Pearson correlation; 0 when either side has zero variance.
inline double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail(ErrorKind::LengthMismatch, "pearson inputs differ in length");
    if (a.empty()) return 0.0;
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

// Mean correlation of every other task's gradient column with the main
// task's; 1 when there is only one task.
inline double gradient_correlation(const Matrix<double>& g, std::size_t main_task) {
    if (g.cols() <= 1) return 1.0;
    const std::vector<double> main_col = g.column(main_task);
    double sum = 0.0;
    for (std::size_t t = 0; t < g.cols(); ++t) {
        if (t == main_task) continue;
        sum += pearson(g.column(t), main_col);
    }
    return sum / static_cast<double>(g.cols() - 1);
}

inline double update_factor(double corr) noexcept { return std::clamp(corr, 0.5, 1.0); }

// Leaf-update gradients: every gradient column is scaled by one shared
// factor; hessians pass through.
inline GradHess updating_grad_hess(const GradHess& gh, const MTConfig& config) {
    if (config.corr_mode == CorrMode::ConstantOne) return gh;
    const double factor = update_factor(gradient_correlation(gh.g, config.main_task));
    GradHess out = gh;
    if (factor != 1.0)
        for (double& x : out.g.data()) x *= factor;
    return out;
}

}  // namespace mtgbm
