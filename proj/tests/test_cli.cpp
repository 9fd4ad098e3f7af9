#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int exit_code = -1;
  std::string output;
};

const fs::path& scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "structspan_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

CliRun cli(const std::string& args) {
  const fs::path log = scratch() / "last_run.txt";
  const std::string cmd = std::string("\"") + STRUCTSPAN_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream f(log);
  std::stringstream ss;
  ss << f.rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string tiny() { return std::string(" --config \"") + STRUCTSPAN_CONFIGS + "/tiny.json\""; }

std::string out(const std::string& name) { return " --out \"" + (scratch() / name).string() + "\""; }

}  // namespace

TEST(Cli, GenDataIsByteIdentical) {
  ASSERT_EQ(cli("gen-data" + tiny() + out("gen_a")).exit_code, 0);
  ASSERT_EQ(cli("gen-data" + tiny() + out("gen_b")).exit_code, 0);
  const std::string a = slurp(scratch() / "gen_a" / "corpus.jsonl");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(scratch() / "gen_b" / "corpus.jsonl"));
}

TEST(Cli, GradcheckPassesOnTinyConfig) {
  const CliRun r = cli("gradcheck" + tiny() + out("grad"));
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("PASS"), std::string::npos);
}

TEST(Cli, UnknownFlagIsUsageError) {
  EXPECT_EQ(cli("train --no-such-flag 3").exit_code, 2);
  EXPECT_EQ(cli("").exit_code, 2);
}

TEST(Cli, InvalidConfigValueIsError) {
  const CliRun r = cli("gen-data --lambda abc" + out("bad"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("--lambda"), std::string::npos);
}

TEST(Cli, TrainEvalPredictAndConfigEcho) {
  const CliRun train = cli("train" + tiny() + out("train_a"));
  ASSERT_EQ(train.exit_code, 0) << train.output;
  const fs::path a = scratch() / "train_a";
  ASSERT_TRUE(fs::exists(a / "checkpoint.json"));
  ASSERT_TRUE(fs::exists(a / "trainlog.json"));

  // The echoed config reproduces the run.
  const CliRun again = cli("train --config \"" + (a / "config.json").string() + "\"" + out("train_b"));
  ASSERT_EQ(again.exit_code, 0) << again.output;
  EXPECT_EQ(slurp(a / "checkpoint.json"), slurp(scratch() / "train_b" / "checkpoint.json"));
  EXPECT_EQ(slurp(a / "config.json"), slurp(scratch() / "train_b" / "config.json"));

  const std::string ckpt = " --checkpoint \"" + (a / "checkpoint.json").string() + "\"";
  const CliRun eval = cli("eval" + ckpt + out("eval"));
  ASSERT_EQ(eval.exit_code, 0) << eval.output;
  EXPECT_NE(slurp(scratch() / "eval" / "eval.json").find("\"nested\""), std::string::npos);

  const CliRun pred = cli("predict" + ckpt + out("pred"));
  ASSERT_EQ(pred.exit_code, 0) << pred.output;
  EXPECT_NE(slurp(scratch() / "pred" / "predictions.jsonl").find("\"forest\""), std::string::npos);

  const CliRun mismatch = cli("eval" + ckpt + " --hidden-dim 16" + out("eval_bad"));
  EXPECT_EQ(mismatch.exit_code, 1);
  EXPECT_NE(mismatch.output.find("W_s"), std::string::npos) << mismatch.output;

  EXPECT_EQ(cli("eval --checkpoint \"" + (scratch() / "missing.json").string() + "\"" + out("e2")).exit_code, 1);
}

TEST(Cli, SweepWritesCsv) {
  const CliRun r = cli("sweep" + tiny() + " --epochs 1 --axis hidden-dim --values 4,6" + out("sweep"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const std::string csv = slurp(scratch() / "sweep" / "sweep.csv");
  EXPECT_EQ(csv.rfind("axis,value,accuracy,precision,recall,f1,epochs,seconds\n", 0), 0u);
  EXPECT_NE(csv.find("hidden_dim,4,"), std::string::npos);
  EXPECT_NE(csv.find("hidden_dim,6,"), std::string::npos);
}
