#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

const std::string kCli = MTGBM_CLI_PATH;

std::string dir() { return ::testing::TempDir(); }

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CliResult {
    int code = -1;
    std::string out, err;
};

CliResult run(const std::string& args) {
    const std::string out = dir() + "cli_stdout.txt", err = dir() + "cli_stderr.txt";
    const int status = std::system((kCli + " " + args + " >" + out + " 2>" + err).c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

void write(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

}  // namespace

TEST(Cli, TrainPredictEvalPipeline) {
    const std::string data = dir() + "pipe.csv", cfg = dir() + "pipe.cfg", model = dir() + "pipe.model",
                      pred = dir() + "pipe_pred.csv";
    ASSERT_EQ(run("synth --scenario noisy_tasks --m 600 --seed 1 --out " + data).code, 0);
    write(cfg,
          "label_columns = task_a, task_b\nobjectives = binary, binary\nnum_iterations = 15\n"
          "learning_rate = 0.1\nmax_leaves = 8\n");
    const CliResult tr = run("train --config " + cfg + " --data " + data + " --out " + model);
    ASSERT_EQ(tr.code, 0) << tr.err;
    EXPECT_NE(slurp(model + ".log.csv").find("iteration,train_task_a,train_task_b"), std::string::npos);

    const CliResult pr = run("predict --model " + model + " --data " + data + " --out " + pred);
    ASSERT_EQ(pr.code, 0) << pr.err;
    const std::string preds = slurp(pred);
    EXPECT_EQ(preds.substr(0, preds.find('\n')), "row,task_0,task_1");
    EXPECT_EQ(std::count(preds.begin(), preds.end(), '\n'), 601);

    const CliResult ev = run("eval --model " + model + " --data " + data);
    ASSERT_EQ(ev.code, 0) << ev.err;
    EXPECT_NE(ev.out.find("task_a,auc,"), std::string::npos) << ev.out;
    EXPECT_NE(ev.out.find("task_b,auc,"), std::string::npos) << ev.out;

    const std::string single = dir() + "pipe_single.model";
    ASSERT_EQ(run("extract --model " + model + " --task 1 --out " + single).code, 0);
    EXPECT_LT(slurp(single).size(), slurp(model).size());
    EXPECT_EQ(run("predict --model " + model + " --data " + data + " --task 2 --out " + pred).code, 1);
}

TEST(Cli, UnknownConfigKeyFailsNamingKey) {
    const std::string data = dir() + "bad.csv", cfg = dir() + "bad.cfg";
    ASSERT_EQ(run("synth --m 200 --out " + data).code, 0);
    write(cfg, "label_columns = task_a\nlearnin_rate = 0.1\n");
    const CliResult r = run("train --config " + cfg + " --data " + data + " --out " + dir() + "bad.model");
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("learnin_rate"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("ConfigError"), std::string::npos) << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

TEST(Cli, SynthIsByteIdentical) {
    const std::string a = dir() + "s1.csv", b = dir() + "s2.csv";
    ASSERT_EQ(run("synth --scenario timeseries_ratio --m 150 --seed 5 --out " + a).code, 0);
    ASSERT_EQ(run("synth --scenario timeseries_ratio --m 150 --seed 5 --out " + b).code, 0);
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_FALSE(slurp(a).empty());
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("train --data x.csv").code, 2);
    const CliResult r = run("synth --scenario nope --out " + dir() + "n.csv");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("InvalidSpec"), std::string::npos);
}
