#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mtgbm/mtgrad.hpp"
#include "oracles.hpp"

using namespace mtgbm;

namespace {

GradHess make_gh(const std::vector<std::vector<double>>& g, const std::vector<std::vector<double>>& h) {
    const std::size_t n = g.size(), m = g[0].size();
    GradHess gh{Matrix<double>(m, n), Matrix<double>(m, n)};
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t i = 0; i < m; ++i) {
            gh.g(i, t) = g[t][i];
            gh.h(i, t) = h[t][i];
        }
    return gh;
}

GradHess random_gh(std::mt19937_64& rng, std::size_t m, std::size_t n) {
    std::normal_distribution<double> normal(0, 1);
    std::uniform_real_distribution<double> pos(0.01, 2);
    GradHess gh{Matrix<double>(m, n), Matrix<double>(m, n)};
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t t = 0; t < n; ++t) {
            gh.g(i, t) = normal(rng) * double(t + 1);
            gh.h(i, t) = pos(rng);
        }
    return gh;
}

}  // namespace

TEST(NormalizeWeights, Examples) {
    Matrix<double> g(2, 2);
    g(0, 0) = 0.1;
    g(1, 0) = -0.1;
    g(0, 1) = 1.0;
    g(1, 1) = 1.0;
    const auto w = normalize_weights(g, 0.05);
    EXPECT_NEAR(w[0], 0.5, 1e-15);
    EXPECT_NEAR(w[1], 0.05, 1e-15);

    Matrix<double> h(3, 1);
    h(0, 0) = h(1, 0) = h(2, 0) = 0.25;
    EXPECT_NEAR(normalize_weights(h, 1.0)[0], 4.0, 1e-15);
}

TEST(NormalizeWeights, DeadTaskGetsWeightOne) {
    Matrix<double> g(4, 2, 0.0);
    g(0, 1) = 1.0;
    const auto w = normalize_weights(g, 0.05);
    EXPECT_EQ(w[0], 1.0);
    EXPECT_NEAR(w[1], 0.2, 1e-15);
}

TEST(NormalizeWeights, ScaleCovariance) {
    std::mt19937_64 rng(2);
    const GradHess gh = random_gh(rng, 50, 3);
    const auto w = normalize_weights(gh.g, 0.05);
    for (double c : {0.001, 3.0, 1e4}) {
        Matrix<double> scaled = gh.g;
        for (double& x : scaled.data()) x *= c;
        const auto wc = normalize_weights(scaled, 0.05);
        for (std::size_t t = 0; t < 3; ++t) EXPECT_NEAR(wc[t] * c, w[t], 1e-12 * w[t]);
    }
}

TEST(SelectTasks, SingleTaskAlwaysZero) {
    MTConfig c;
    c.task_select = TaskSelect::UniformRandom;
    for (std::size_t it = 0; it < 10; ++it) EXPECT_EQ(select_tasks(c, 1, it), std::vector<std::size_t>{0});
}

TEST(SelectTasks, AlwaysMainIncludesMain) {
    MTConfig c;
    c.main_task = 2;
    c.n_selected = 2;
    for (std::size_t it = 0; it < 50; ++it) {
        const auto s = select_tasks(c, 4, it);
        ASSERT_EQ(s.size(), 2u);
        EXPECT_TRUE(std::ranges::find(s, 2u) != s.end());
        EXPECT_TRUE(std::ranges::is_sorted(s));
        EXPECT_NE(s[0], s[1]);
    }
}

TEST(SelectTasks, DeterministicPerSeedAndIteration) {
    MTConfig c;
    c.task_select = TaskSelect::UniformRandom;
    c.seed = 77;
    c.n_selected = 2;
    for (std::size_t it = 0; it < 20; ++it) EXPECT_EQ(select_tasks(c, 5, it), select_tasks(c, 5, it));
    std::vector<int> counts(5, 0);
    for (std::size_t it = 0; it < 5000; ++it)
        for (auto t : select_tasks(c, 5, it)) ++counts[t];
    for (int k : counts) EXPECT_NEAR(k / 5000.0, 0.4, 0.04);
}

TEST(SelectTasks, WeightedFollowsProbabilities) {
    MTConfig c;
    c.task_select = TaskSelect::Weighted;
    c.task_weights = {0.7, 0.0, 0.3};
    std::vector<int> counts(3, 0);
    for (std::size_t it = 0; it < 5000; ++it) ++counts[select_tasks(c, 3, it)[0]];
    EXPECT_EQ(counts[1], 0);
    EXPECT_NEAR(counts[0] / 5000.0, 0.7, 0.03);
}

// Four samples, two tasks, main task only boosted. Compared against the
// straight-line reference.
TEST(EnsembleGradHess, FourSampleExampleMatchesOracle) {
    const std::vector<std::vector<double>> g = {{0.4, -0.2, 0.1, -0.3}, {2.0, 1.0, -1.0, -2.0}};
    const std::vector<std::vector<double>> h = {{0.24, 0.16, 0.09, 0.21}, {1, 1, 1, 1}};
    MTConfig c;
    c.gamma_boost = 50;
    const EnsembleGrad eg = ensemble_grad_hess(make_gh(g, h), c, 0);
    const auto ref = oracle::ensemble_gradients(g, h, {0}, 50, 0.05, 1.0);
    EXPECT_EQ(eg.chosen_tasks, std::vector<std::size_t>{0});
    for (std::size_t t = 0; t < 2; ++t) {
        EXPECT_NEAR(eg.w[t], ref.w[t], 1e-12);
        EXPECT_NEAR(eg.v[t], ref.v[t], 1e-12);
    }
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(eg.g_e[i], ref.g_e[i], 1e-12);
        EXPECT_NEAR(eg.h_e[i], ref.h_e[i], 1e-12);
    }
    // hand values: w0 = 0.05/0.25 * 50 = 10, w1 = 0.05/1.5
    EXPECT_NEAR(eg.w[0], 10.0, 1e-12);
    EXPECT_NEAR(eg.g_e[0], 10 * 0.4 + 0.05 / 1.5 * 2.0, 1e-12);
}

TEST(EnsembleGradHess, RandomMatchesOracle) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 5 + rng() % 100, n = 1 + rng() % 5;
        const GradHess gh = random_gh(rng, m, n);
        MTConfig c;
        c.task_select = TaskSelect::UniformRandom;
        c.n_selected = 1 + rng() % n;
        c.seed = rng();
        const EnsembleGrad eg = ensemble_grad_hess(gh, c, std::size_t(trial));
        std::vector<std::vector<double>> g(n), h(n);
        for (std::size_t t = 0; t < n; ++t) {
            g[t] = gh.g.column(t);
            h[t] = gh.h.column(t);
        }
        const auto ref = oracle::ensemble_gradients(g, h, eg.chosen_tasks, c.gamma_boost, 0.05, 1.0);
        for (std::size_t i = 0; i < m; ++i) {
            EXPECT_NEAR(eg.g_e[i], ref.g_e[i], 1e-12 * (1 + std::abs(ref.g_e[i])));
            EXPECT_NEAR(eg.h_e[i], ref.h_e[i], 1e-12 * (1 + ref.h_e[i]));
        }
    }
}

TEST(EnsembleGradHess, HessianFloorAndNonFinite) {
    const GradHess zero = make_gh({{1, -1}}, {{0, 0}});
    const EnsembleGrad eg = ensemble_grad_hess(zero, MTConfig{}, 0);
    EXPECT_EQ(eg.h_e[0], kHessFloor);
    EXPECT_EQ(eg.h_e[1], kHessFloor);
    try {
        ensemble_grad_hess(make_gh({{1, std::nan("")}}, {{1, 1}}), MTConfig{}, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonFiniteGradient);
    }
}

TEST(EnsembleGradHess, SplittingGradientIsScaleFree) {
    std::mt19937_64 rng(8);
    const GradHess gh = random_gh(rng, 40, 2);
    MTConfig c;
    const EnsembleGrad base = ensemble_grad_hess(gh, c, 3);
    GradHess scaled = gh;
    for (std::size_t i = 0; i < 40; ++i) scaled.g(i, 1) *= 1000.0;
    const EnsembleGrad eg = ensemble_grad_hess(scaled, c, 3);
    for (std::size_t i = 0; i < 40; ++i) EXPECT_NEAR(eg.g_e[i], base.g_e[i], 1e-12);
}

TEST(UpdatingGradHess, ConstantOneIsIdentity) {
    std::mt19937_64 rng(1);
    const GradHess gh = random_gh(rng, 30, 3);
    MTConfig c;
    c.corr_mode = CorrMode::ConstantOne;
    const GradHess out = updating_grad_hess(gh, c);
    EXPECT_EQ(out.g, gh.g);
    EXPECT_EQ(out.h, gh.h);
}

TEST(UpdatingGradHess, PerfectlyCorrelatedIsIdentity) {
    const GradHess gh = make_gh({{1, 2, 3}, {2, 4, 6}}, {{1, 1, 1}, {1, 1, 1}});
    MTConfig c;
    c.corr_mode = CorrMode::PearsonToMain;
    const GradHess out = updating_grad_hess(gh, c);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(out.g(i, 0), gh.g(i, 0), 1e-15);
}

TEST(UpdatingGradHess, AntiCorrelatedClampsToHalf) {
    const GradHess gh = make_gh({{1, 2, 3}, {3, 2, 1}}, {{1, 1, 1}, {1, 1, 1}});
    MTConfig c;
    c.corr_mode = CorrMode::PearsonToMain;
    const GradHess out = updating_grad_hess(gh, c);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t t = 0; t < 2; ++t) EXPECT_NEAR(out.g(i, t), 0.5 * gh.g(i, t), 1e-15);
    EXPECT_EQ(out.h, gh.h);
}

TEST(UpdatingGradHess, SameFactorAcrossColumnsAndMatchesOracle) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 10 + rng() % 60, n = 2 + rng() % 4;
        GradHess gh = random_gh(rng, m, n);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t t = 1; t < n; ++t) gh.g(i, t) += 0.8 * gh.g(i, 0) * double(trial % 3);
        MTConfig c;
        c.corr_mode = CorrMode::PearsonToMain;
        c.main_task = trial % n;
        const GradHess out = updating_grad_hess(gh, c);
        std::vector<std::vector<double>> g(n);
        for (std::size_t t = 0; t < n; ++t) g[t] = gh.g.column(t);
        const auto ref = oracle::updating_gradients(g, true, c.main_task);
        double factor = std::nan("");
        for (std::size_t t = 0; t < n; ++t)
            for (std::size_t i = 0; i < m; ++i) {
                EXPECT_NEAR(out.g(i, t), ref[t][i], 1e-12 * (1 + std::abs(ref[t][i])));
                if (std::abs(gh.g(i, t)) > 1e-3) {
                    const double f = out.g(i, t) / gh.g(i, t);
                    if (std::isnan(factor)) factor = f;
                    EXPECT_NEAR(f, factor, 1e-12);
                }
            }
        EXPECT_GE(factor, 0.5 - 1e-15);
        EXPECT_LE(factor, 1.0 + 1e-15);
        EXPECT_EQ(out.h, gh.h);
    }
}

TEST(GradientCorrelation, EdgeCases) {
    Matrix<double> one(5, 1, 2.0);
    EXPECT_EQ(gradient_correlation(one, 0), 1.0);
    Matrix<double> flat(3, 2, 1.0);
    flat(0, 1) = 2.0;
    EXPECT_EQ(gradient_correlation(flat, 0), 0.0);
}

TEST(MTConfig, Validation) {
    MTConfig c;
    c.n_selected = 3;
    EXPECT_THROW(c.validate(2), Error);
    c = MTConfig{};
    c.gamma_boost = 0.5;
    EXPECT_THROW(c.validate(2), Error);
    c = MTConfig{};
    c.task_select = TaskSelect::Weighted;
    c.task_weights = {0.5, 0.4};
    EXPECT_THROW(c.validate(2), Error);
    c.task_weights = {0.5, 0.5};
    EXPECT_NO_THROW(c.validate(2));
}
