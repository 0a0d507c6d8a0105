#include <gtest/gtest.h>

#include <cmath>

#include "mtgbm/data.hpp"
#include "mtgbm/synthetic.hpp"

using namespace mtgbm;

TEST(Synthetic, NoiseZeroGivesIdenticalTaskColumns) {
    SyntheticSpec spec;
    spec.noise_rate = 0.0;
    spec.m = 500;
    const RawTable t = gen_synthetic(spec);
    EXPECT_EQ(t.num_tasks(), 2u);
    EXPECT_EQ(t.num_features(), 6u);
    EXPECT_EQ(t.labels.column(0), t.labels.column(1));
}

TEST(Synthetic, NoiseRateIsRoughlyRespected) {
    SyntheticSpec spec;
    spec.noise_rate = 0.2;
    spec.m = 20000;
    spec.seed = 4;
    const RawTable t = gen_synthetic(spec);
    std::size_t disagree = 0;
    for (std::size_t i = 0; i < t.rows(); ++i) disagree += t.labels(i, 0) != t.labels(i, 1);
    // two independent flips disagree with probability 2p(1-p)
    EXPECT_NEAR(double(disagree) / double(t.rows()), 2 * 0.2 * 0.8, 0.015);
}

TEST(Synthetic, SubclassInsideClassWithPrevalence) {
    SyntheticSpec spec;
    spec.scenario = Scenario::SubTasks;
    spec.m = 40000;
    spec.seed = 2;
    const RawTable t = gen_synthetic(spec);
    std::size_t sub = 0;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        if (t.labels(i, 1) == 1.0) {
            ++sub;
            EXPECT_EQ(t.labels(i, 0), 1.0);
        }
    }
    EXPECT_NEAR(double(sub) / double(t.rows()), 0.035, 0.005);
}

TEST(Synthetic, TimeseriesIdentityAndLayout) {
    SyntheticSpec spec;
    spec.scenario = Scenario::TimeseriesRatio;
    spec.m = 300;
    const RawTable t = gen_synthetic(spec);
    EXPECT_EQ(t.num_features(), 17u);
    EXPECT_EQ(t.feature_names[0], "current");
    for (std::size_t i = 0; i < t.rows(); ++i) {
        EXPECT_NEAR(t.labels(i, 0), t.labels(i, 1) * t.features(i, 0), 1e-9 * t.labels(i, 0));
        EXPECT_GT(t.labels(i, 0), 0.0);
        if (i + 1 < t.rows()) {
            EXPECT_EQ(t.features(i + 1, 0), t.labels(i, 0));
        }
        EXPECT_LE(t.features(i, 1), t.features(i, 0));  // min_3
        EXPECT_GE(t.features(i, 2), t.features(i, 0));  // max_3
    }
}

TEST(Synthetic, DeterministicAndSeedSensitive) {
    for (auto s : {Scenario::NoisyTasks, Scenario::SubTasks, Scenario::TimeseriesRatio}) {
        SyntheticSpec spec;
        spec.scenario = s;
        spec.m = 200;
        spec.seed = 10;
        const std::string a = table_to_csv(gen_synthetic(spec));
        EXPECT_EQ(a, table_to_csv(gen_synthetic(spec)));
        spec.seed = 11;
        EXPECT_NE(a, table_to_csv(gen_synthetic(spec)));
    }
}

TEST(Synthetic, InvalidSpec) {
    SyntheticSpec spec;
    spec.m = 50;
    EXPECT_THROW(gen_synthetic(spec), Error);
    spec.m = 500;
    spec.noise_rate = 0.5;
    try {
        gen_synthetic(spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidSpec);
    }
    try {
        parse_scenario("weather");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidSpec);
    }
}
