#include <gtest/gtest.h>

#include "deepcars/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace deepcars;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "deepcars");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("deepcars_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

const std::vector<std::string> kSmallEnv = {"--lanes", "3", "--rows", "6", "--max-episode-steps",
                                            "10"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Trains a tiny DQN once and returns its run directory.
const fs::path& dqn_run() {
  static const fs::path dir = [] {
    const fs::path d = fresh_dir("dqn");
    const Result r = run(with({"train-dqn", "--steps", "2500", "--learn-start", "100",
                               "--batch-size", "8", "--fast-validation-period", "500",
                               "--deep-validation-period", "1000", "--fast-validation-episodes",
                               "2", "--deep-validation-episodes", "3", "--hidden", "8",
                               "--double-q", "--seed", "4", "--out", d.string()},
                              kSmallEnv));
    EXPECT_EQ(r.code, 0) << r.err;
    return d;
  }();
  return dir;
}

}  // namespace

TEST(Cli, TrainDqnWritesArtifacts) {
  const fs::path& dir = dqn_run();
  for (const char* f : {"config.txt", "best_model.txt", "best_model.meta", "final_model.txt",
                        "steps.csv", "windows.csv", "validation.csv", "reward.svg",
                        "validation.svg"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const std::string config = read_file(dir / "config.txt");
  EXPECT_NE(config.find("double_q=true"), std::string::npos);
  EXPECT_NE(config.find("hidden=8"), std::string::npos);
  EXPECT_NE(config.find("lanes=3"), std::string::npos);
}

TEST(Cli, EvaluatePrintsAccuracy) {
  const fs::path& dir = dqn_run();
  const fs::path out = fresh_dir("eval");
  const Result r = run(with({"evaluate", "--model", (dir / "best_model.txt").string(), "--steps",
                             "3000", "--out", out.string()},
                            kSmallEnv));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("accuracy: ", 0), 0u) << r.out;
  EXPECT_NE(r.out.find("steps 3000"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "evaluation.txt"));
}

TEST(Cli, EvaluateWithRunConfigFile) {
  const fs::path& dir = dqn_run();
  const Result r = run({"evaluate", "--model", (dir / "final_model.txt").string(), "--config",
                        (dir / "config.txt").string(), "--steps", "500", "--out",
                        fresh_dir("eval_config").string()});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Cli, EvaluateRejectsMismatchedEnvironment) {
  const Result r = run({"evaluate", "--model", (dqn_run() / "best_model.txt").string(), "--out",
                        fresh_dir("eval_mismatch").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("inputs"), std::string::npos) << r.err;
}

TEST(Cli, EmptyHiddenItemIsUsageError) {
  const Result r = run({"train-dqn", "--hidden", "16,,16", "--steps", "10", "--out",
                        fresh_dir("bad_hidden").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("16,,16"), std::string::npos) << r.err;
}

TEST(Cli, UnknownFlagOrSubcommandIsUsageError) {
  EXPECT_EQ(run({"train-dqn", "--no-such-flag", "1"}).code, 2);
  EXPECT_EQ(run({"fly"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"train-dqn", "--arch", "deep", "--hidden", "8"}).code, 2);
}

TEST(Cli, MissingModelIsUsageError) {
  const Result r = run({"evaluate", "--model", "/nonexistent/model.txt"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("not found"), std::string::npos);
}

TEST(Cli, CorruptModelNamesVersionMismatch) {
  const fs::path dir = fresh_dir("corrupt");
  fs::create_directories(dir);
  std::string text = read_file(dqn_run() / "best_model.txt");
  text.replace(0, text.find('\n'), "deepcars-mlp 7");
  std::ofstream(dir / "model.txt") << text;
  const Result r = run(with({"demo", "--model", (dir / "model.txt").string(), "--out",
                             (dir / "out").string()},
                            kSmallEnv));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("version"), std::string::npos) << r.err;
}

TEST(Cli, DemoTranscriptIsDeterministic) {
  const auto args = with({"demo", "--model", (dqn_run() / "best_model.txt").string(),
                          "--episodes", "2", "--out", fresh_dir("demo").string()},
                         kSmallEnv);
  const Result a = run(args);
  const Result b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("episode 2 reward: "), std::string::npos);
  EXPECT_NE(a.out.find("E"), std::string::npos);
}

TEST(Cli, TabularFlowAndPlot) {
  const fs::path dir = fresh_dir("tabular");
  const Result t = run({"train-tabular", "--lanes", "3", "--steps", "20000", "--seed", "2",
                        "--out", dir.string()});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_NE(t.out.find("training accuracy: "), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "qtable.txt"));
  EXPECT_TRUE(fs::exists(dir / "reward.svg"));

  const Result e = run({"evaluate", "--model", (dir / "qtable.txt").string(), "--lanes", "3",
                        "--steps", "2000", "--out", fresh_dir("tabular_eval").string()});
  EXPECT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(e.out.rfind("accuracy: ", 0), 0u);

  const fs::path plot = fresh_dir("plot");
  const Result p = run({"plot", "--input", dir.string(), "--label", "tabular", "--input",
                        dqn_run().string(), "--label", "DDQN", "--title", "reward", "--out",
                        plot.string()});
  ASSERT_EQ(p.code, 0) << p.err;
  const std::string svg = read_file(plot / "plot.svg");
  EXPECT_NE(svg.find(">tabular<"), std::string::npos);
  EXPECT_NE(svg.find(">DDQN<"), std::string::npos);

  EXPECT_EQ(run({"plot", "--input", dir.string(), "--label", "a", "--label", "b"}).code, 2);
}
