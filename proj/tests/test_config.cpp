#include <gtest/gtest.h>

#include "mtgbm/config.hpp"

using namespace mtgbm;

TEST(Config, ParsesAllKinds) {
    const TrainConfig cfg = parse_train_config(
        "# comment\n"
        "label_columns = a, b\n"
        "objectives = binary, regression_l2\n"
        "num_iterations = 7\n"
        "learning_rate = 0.25\n"
        "lambda_l1 = 2\n"
        "max_depth = -1\n"
        "task_select = weighted\n"
        "task_weights = 0.5,0.5\n"
        "n_selected = 2\n"
        "corr_mode = pearson_to_main\n"
        "missing_token = NA\n"
        "log_transform = x1\n",
        "cfg");
    EXPECT_EQ(cfg.label_columns, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(cfg.params.objectives, (TaskObjectives{ObjectiveKind::BinaryLogloss, ObjectiveKind::RegressionL2}));
    EXPECT_EQ(cfg.params.num_iterations, 7u);
    EXPECT_EQ(cfg.params.tree.learning_rate, 0.25);
    EXPECT_EQ(cfg.params.tree.lambda, 2.0);
    EXPECT_EQ(cfg.params.tree.max_depth, -1);
    EXPECT_EQ(cfg.params.mt.task_select, TaskSelect::Weighted);
    EXPECT_EQ(cfg.params.mt.n_selected, 2u);
    EXPECT_EQ(cfg.params.mt.corr_mode, CorrMode::PearsonToMain);
    EXPECT_EQ(cfg.missing_token, "NA");
    EXPECT_EQ(cfg.log_transform, std::vector<std::string>{"x1"});
}

TEST(Config, DefaultObjectivesAreL2) {
    const TrainConfig cfg = parse_train_config("label_columns = a,b,c\n", "cfg");
    EXPECT_EQ(cfg.params.objectives, TaskObjectives(3, ObjectiveKind::RegressionL2));
}

TEST(Config, UnknownKeyNamesKeyAndLine) {
    try {
        parse_train_config("label_columns = y\n\nlearning_rat = 0.1\n", "train.cfg");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
        const std::string msg = e.what();
        EXPECT_NE(msg.find("learning_rat"), std::string::npos) << msg;
        EXPECT_NE(msg.find("line=3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("train.cfg"), std::string::npos) << msg;
    }
}

TEST(Config, BadValuesAndStructure) {
    for (const char* text : {"label_columns = y\nlearning_rate = fast\n", "label_columns = y\nmax_leaves = 3.5\n",
                             "label_columns = y\nlabel_columns = z\n", "label_columns = y\nno equals sign\n",
                             "num_iterations = 3\n", "label_columns = y\nobjectives = poisson\n",
                             "label_columns = y,z\nobjectives = binary\n", "label_columns = y\ncorr_mode = maybe\n"}) {
        try {
            parse_train_config(text, "cfg");
            FAIL() << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::ConfigError) << text;
        }
    }
}

TEST(Config, ParamsRoundTripThroughEntries) {
    BoosterParams p;
    p.tree.learning_rate = 0.1 + 0.2;
    p.tree.lambda = 1.0 / 3.0;
    p.seed = 18446744073709551615ULL;
    p.objectives = {ObjectiveKind::BinaryLogloss, ObjectiveKind::RegressionL2};
    p.mt.task_weights = {0.1, 0.9};
    p.mt.task_select = TaskSelect::Weighted;
    BoosterParams q;
    for (const auto& [k, v] : params_to_entries(p)) ASSERT_TRUE(apply_param(q, {k, v, 1}, "x")) << k;
    EXPECT_EQ(params_to_entries(p), params_to_entries(q));
    EXPECT_EQ(q.tree.learning_rate, p.tree.learning_rate);
    EXPECT_EQ(q.tree.lambda, p.tree.lambda);
    EXPECT_EQ(q.seed, p.seed);
}
