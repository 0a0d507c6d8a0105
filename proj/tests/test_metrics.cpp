#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mtgbm/metrics.hpp"
#include "oracles.hpp"

using namespace mtgbm;

TEST(Metrics, RmseAndMapeExamples) {
    EXPECT_DOUBLE_EQ(rmse(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}), 0.0);
    EXPECT_DOUBLE_EQ(rmse(std::vector<double>{0, 0}, std::vector<double>{3, 4}), std::sqrt(12.5));
    EXPECT_DOUBLE_EQ(mape(std::vector<double>{2, 4}, std::vector<double>{1, 5}), 0.375);
    try {
        mape(std::vector<double>{0, 1}, std::vector<double>{1, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ZeroLabelInMape);
    }
    try {
        rmse(std::vector<double>{1}, std::vector<double>{1, 2});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::LengthMismatch);
    }
}

TEST(Metrics, AucExamples) {
    EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0, 0, 1, 1}, std::vector<double>{0.1, 0.2, 0.3, 0.4}), 1.0);
    EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{1, 1, 0, 0}, std::vector<double>{0.1, 0.2, 0.3, 0.4}), 0.0);
    EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0, 1, 0, 1}, std::vector<double>{5, 5, 5, 5}), 0.5);
    EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0, 0, 1, 1}, std::vector<double>{0.1, 0.4, 0.35, 0.8}), 0.75);
    try {
        roc_auc(std::vector<double>{1, 1}, std::vector<double>{0.1, 0.2});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SingleClass);
    }
    EXPECT_THROW(roc_auc(std::vector<double>{0, 2}, std::vector<double>{0.1, 0.2}), Error);
}

TEST(Metrics, AucMatchesPairwiseAndIsRankInvariant) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 2 + rng() % 300;
        std::vector<double> y(m), s(m);
        for (std::size_t i = 0; i < m; ++i) {
            y[i] = double(rng() % 2);
            s[i] = double(rng() % 20) / 4.0;  // plenty of ties
        }
        y[0] = 0;
        y[1] = 1;
        const double auc = roc_auc(y, s);
        EXPECT_NEAR(auc, oracle::pairwise_auc(y, s), 1e-12);
        std::vector<double> t(m);
        for (std::size_t i = 0; i < m; ++i) t[i] = std::exp(3 * s[i]) - 7;
        EXPECT_NEAR(roc_auc(y, t), auc, 1e-12);
    }
}
