#pragma once
#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"
#include "data.hpp"

namespace mtgbm {

enum class Scenario {
    NoisyTasks,       // two independently noise-flipped copies of one binary target
    SubTasks,         // broad binary target plus a rare subclass of its positives
    TimeseriesRatio,  // positive AR series: next value and next/current ratio
};

inline const char* to_string(Scenario s) {
    switch (s) {
    case Scenario::NoisyTasks: return "noisy_tasks";
    case Scenario::SubTasks: return "sub_tasks";
    case Scenario::TimeseriesRatio: return "timeseries_ratio";
    }
    return "?";
}

inline Scenario parse_scenario(std::string_view s) {
    if (s == "noisy_tasks") return Scenario::NoisyTasks;
    if (s == "sub_tasks") return Scenario::SubTasks;
    if (s == "timeseries_ratio") return Scenario::TimeseriesRatio;
    fail(ErrorKind::InvalidSpec, "unknown scenario '" + std::string(s) + "'");
}

struct SyntheticSpec {
    Scenario scenario = Scenario::NoisyTasks;
    std::size_t m = 1000;
    std::size_t d = 0;  // 0 = scenario default; ignored for timeseries_ratio
    double noise_rate = 0.15;
    std::uint64_t seed = 0;
    double subclass_prevalence = 0.035;  // sub_tasks only

    void validate() const {
        if (m < 100) fail(ErrorKind::InvalidSpec, "m must be >= 100");
        if (!(noise_rate >= 0.0 && noise_rate < 0.5)) fail(ErrorKind::InvalidSpec, "noise_rate must be in [0, 0.5)");
        if (scenario == Scenario::NoisyTasks && d != 0 && d < 2)
            fail(ErrorKind::InvalidSpec, "noisy_tasks needs d >= 2");
        if (scenario == Scenario::SubTasks && d != 0 && d < 4) fail(ErrorKind::InvalidSpec, "sub_tasks needs d >= 4");
        if (scenario == Scenario::SubTasks && !(subclass_prevalence > 0.0 && subclass_prevalence < 0.5))
            fail(ErrorKind::InvalidSpec, "subclass_prevalence must be in (0, 0.5)");
    }
};

namespace detail {

inline std::vector<std::string> numbered(std::string_view prefix, std::size_t count) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(std::string(prefix) + std::to_string(i));
    return out;
}

// Uniform [0, 1) features; the first two drive the target through a wavy
// boundary, the rest are distractors.
inline RawTable gen_noisy_tasks(const SyntheticSpec& spec) {
    const std::size_t d = spec.d ? spec.d : 6;
    CounterRng rng(spec.seed, 0x6E6F697379ULL);
    RawTable t;
    t.features = Matrix<double>(spec.m, d);
    t.labels = Matrix<double>(spec.m, 2);
    t.feature_names = numbered("x", d);
    t.task_names = {"task_a", "task_b"};
    for (std::size_t i = 0; i < spec.m; ++i) {
        for (std::size_t f = 0; f < d; ++f) t.features(i, f) = rng.next_double();
        const double x0 = t.features(i, 0);
        const double x1 = t.features(i, 1);
        const bool truth = x1 > 0.5 + 0.3 * std::sin(6.283185307179586 * x0);
        for (std::size_t k = 0; k < 2; ++k) {
            const bool flip = rng.next_double() < spec.noise_rate;
            t.labels(i, k) = (truth != flip) ? 1.0 : 0.0;
        }
    }
    return t;
}

// Main positives: a broad region on x0 plus a small corner in (x2, x3)
// outside it. The sub label marks that corner. Label noise flips main
// labels outside the corner only, so the subclass stays inside the class.
inline RawTable gen_sub_tasks(const SyntheticSpec& spec) {
    const std::size_t d = spec.d ? spec.d : 6;
    constexpr double kBroadCut = 0.7;  // x0 > 0.7 is the broad class
    const double corner = 1.0 - std::sqrt(spec.subclass_prevalence / kBroadCut);
    CounterRng rng(spec.seed, 0x7375627461736BULL);
    RawTable t;
    t.features = Matrix<double>(spec.m, d);
    t.labels = Matrix<double>(spec.m, 2);
    t.feature_names = numbered("x", d);
    t.task_names = {"main", "sub"};
    for (std::size_t i = 0; i < spec.m; ++i) {
        for (std::size_t f = 0; f < d; ++f) t.features(i, f) = rng.next_double();
        const bool broad = t.features(i, 0) > kBroadCut;
        const bool sub = !broad && t.features(i, 2) > corner && t.features(i, 3) > corner;
        const bool flip = rng.next_double() < spec.noise_rate;
        const bool main = sub || (broad != flip);
        t.labels(i, 0) = main ? 1.0 : 0.0;
        t.labels(i, 1) = sub ? 1.0 : 0.0;
    }
    return t;
}

// Log-space mean-reverting series with a weekly cycle. Each row is one
// time step t >= 29: the current value and min/max/mean/variance over the
// trailing 3, 7, 14 and 30 steps; labels are the next value and
// next / current (next is computed as ratio * current).
inline RawTable gen_timeseries_ratio(const SyntheticSpec& spec) {
    constexpr std::size_t kWindows[] = {3, 7, 14, 30};
    constexpr std::size_t kWarmup = 29;
    CounterRng rng(spec.seed, 0x7473726174696FULL);
    const std::size_t steps = spec.m + kWarmup + 1;
    std::vector<double> series(steps);
    std::vector<double> ratio(steps, 1.0);
    const double mu = std::log(1000.0);
    series[0] = 1000.0;
    for (std::size_t s = 0; s + 1 < steps; ++s) {
        const double drift = 0.1 * (mu - std::log(series[s])) +
                             0.05 * std::sin(6.283185307179586 * static_cast<double>(s) / 7.0) + 0.04 * rng.next_normal();
        ratio[s] = std::exp(drift);
        series[s + 1] = ratio[s] * series[s];
    }

    RawTable t;
    t.feature_names.push_back("current");
    for (auto w : kWindows)
        for (const char* stat : {"min_", "max_", "mean_", "var_"}) t.feature_names.push_back(stat + std::to_string(w));
    t.task_names = {"next", "ratio"};
    t.features = Matrix<double>(spec.m, t.feature_names.size());
    t.labels = Matrix<double>(spec.m, 2);
    for (std::size_t i = 0; i < spec.m; ++i) {
        const std::size_t s = i + kWarmup;
        std::size_t col = 0;
        t.features(i, col++) = series[s];
        for (auto w : kWindows) {
            const auto first = series.begin() + static_cast<std::ptrdiff_t>(s + 1 - w);
            const auto last = series.begin() + static_cast<std::ptrdiff_t>(s + 1);
            double mean = 0.0;
            for (auto it = first; it != last; ++it) mean += *it;
            mean /= static_cast<double>(w);
            double var = 0.0;
            for (auto it = first; it != last; ++it) var += (*it - mean) * (*it - mean);
            var /= static_cast<double>(w);
            t.features(i, col++) = *std::min_element(first, last);
            t.features(i, col++) = *std::max_element(first, last);
            t.features(i, col++) = mean;
            t.features(i, col++) = var;
        }
        t.labels(i, 0) = series[s + 1];
        t.labels(i, 1) = ratio[s];
    }
    return t;
}

}  // namespace detail

inline RawTable gen_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    switch (spec.scenario) {
    case Scenario::NoisyTasks: return detail::gen_noisy_tasks(spec);
    case Scenario::SubTasks: return detail::gen_sub_tasks(spec);
    case Scenario::TimeseriesRatio: return detail::gen_timeseries_ratio(spec);
    }
    fail(ErrorKind::InvalidSpec, "unknown scenario");
}

}  // namespace mtgbm
