#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mace/extxyz.hpp"

using namespace mace;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(MACE_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("mace_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    auto all = read_extxyz_file(MACE_TEST_DATA_DIR "/synthetic.xyz");
    all.resize(12);
    write_extxyz_file((dir_ / "train.xyz").string(), all, false);
  }
  void TearDown() override { fs::remove_all(dir_); }

  json tiny_config(const std::string& out) const {
    return {{"schema", 1},
            {"seed", 3},
            {"model", {{"num_layers", 1}, {"correlation", 2}, {"l_max", 1}, {"L_max", 1}, {"channels", 3}, {"readout_mlp_width", 4}}},
            {"radial", {{"n_basis", 4}, {"r_cut", 4.0}, {"mlp_widths", {6}}}},
            {"optimizer", {{"max_epochs", 2}, {"batch_size", 4}}},
            {"data", {{"train_path", "train.xyz"}, {"valid_fraction", 0.25}}},
            {"output", {{"directory", out}}}};
  }

  fs::path write_config(const json& j, const std::string& name = "run.json") const {
    spit(dir_ / name, j.dump());
    return dir_ / name;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, MissingSubcommandOrConfigIsConfigError) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("train").code, 2);
  EXPECT_EQ(run("train --config " + (dir_ / "absent.json").string()).code, 2);
  json bad = tiny_config("out");
  bad["optimizer"]["lr_typo"] = 1.0;
  EXPECT_EQ(run("train --config " + write_config(bad).string()).code, 2);
}

TEST_F(CliTest, TrainReloadsBitExactlyAndIsDeterministic) {
  const std::string before = slurp(dir_ / "train.xyz");
  ASSERT_EQ(run("train --config " + write_config(tiny_config("a")).string()).code, 0);
  ASSERT_EQ(run("train --config " + write_config(tiny_config("b"), "b.json").string()).code, 0);
  EXPECT_EQ(slurp(dir_ / "train.xyz"), before);
  for (const char* f : {"model.mace", "best.mace", "history.csv", "summary.json"}) EXPECT_TRUE(fs::exists(dir_ / "a" / f)) << f;
  EXPECT_EQ(slurp(dir_ / "a" / "history.csv"), slurp(dir_ / "b" / "history.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "model.mace"), slurp(dir_ / "b" / "model.mace"));

  // Evaluating the saved model on its training split reproduces the logged metrics.
  const json summary = json::parse(slurp(dir_ / "a" / "summary.json"));
  const CliRun ev = run("eval --model " + (dir_ / "a" / "model.mace").string() + " --data " + (dir_ / "train.xyz").string());
  ASSERT_EQ(ev.code, 0);
  const json m = json::parse(ev.out);
  EXPECT_EQ(m["configs"], 12);
  EXPECT_GT(m["force_mae_meV_per_A"].get<double>(), 0.0);
  EXPECT_EQ(summary["train_metrics"]["configs"].get<int>() + summary["valid_metrics"]["configs"].get<int>(), 12);
}

TEST_F(CliTest, EvalMatchesTrainingSummaryWithExplicitSplit) {
  auto all = read_extxyz_file((dir_ / "train.xyz").string());
  write_extxyz_file((dir_ / "tr.xyz").string(), {all.begin(), all.begin() + 9}, false);
  write_extxyz_file((dir_ / "va.xyz").string(), {all.begin() + 9, all.end()}, false);
  json cfg = tiny_config("out");
  cfg["data"] = {{"train_path", "tr.xyz"}, {"valid_path", "va.xyz"}};
  ASSERT_EQ(run("train --config " + write_config(cfg).string()).code, 0);
  const json summary = json::parse(slurp(dir_ / "out" / "summary.json"));
  const json m = json::parse(run("eval --model " + (dir_ / "out" / "model.mace").string() + " --data " + (dir_ / "tr.xyz").string()).out);
  for (const char* k : {"energy_mae_meV", "force_mae_meV_per_A", "force_rmse_meV_per_A"})
    EXPECT_NEAR(m[k].get<double>(), summary["train_metrics"][k].get<double>(), 1e-10) << k;
}

TEST_F(CliTest, PredictWritesConsistentLabels) {
  ASSERT_EQ(run("train --config " + write_config(tiny_config("out")).string()).code, 0);
  const std::string model = (dir_ / "out" / "model.mace").string();
  auto data = read_extxyz_file((dir_ / "train.xyz").string());
  for (auto& c : data) {
    c.energy.reset();
    c.forces.reset();
  }
  write_extxyz_file((dir_ / "bare.xyz").string(), data, false);
  ASSERT_EQ(run("predict --model " + model + " --data " + (dir_ / "bare.xyz").string() + " --out " + (dir_ / "pred.xyz").string()).code, 0);
  const auto pred = read_extxyz_file((dir_ / "pred.xyz").string());
  ASSERT_EQ(pred.size(), data.size());
  for (const auto& c : pred) {
    ASSERT_TRUE(c.energy_pred && c.forces_pred);
    Vec3 net{0, 0, 0};
    for (const auto& f : *c.forces_pred)
      for (int a = 0; a < 3; ++a) net[a] += f[a];
    for (int a = 0; a < 3; ++a) EXPECT_LE(std::fabs(net[a]), 1e-8);
  }

  // Predictions relabelled as ground truth give zero error.
  std::vector<Configuration> relabelled = pred;
  for (auto& c : relabelled) {
    c.energy = c.energy_pred;
    c.forces = c.forces_pred;
    c.energy_pred.reset();
    c.forces_pred.reset();
  }
  write_extxyz_file((dir_ / "self.xyz").string(), relabelled, false);
  const json m = json::parse(run("eval --model " + model + " --data " + (dir_ / "self.xyz").string()).out);
  EXPECT_LT(m["energy_mae_meV"].get<double>(), 1e-6);
  EXPECT_LT(m["force_mae_meV_per_A"].get<double>(), 1e-6);

  // Unlabelled data cannot be evaluated.
  EXPECT_EQ(run("eval --model " + model + " --data " + (dir_ / "bare.xyz").string()).code, 3);

  // Empty input: empty output.
  spit(dir_ / "empty.xyz", "");
  ASSERT_EQ(run("predict --model " + model + " --data " + (dir_ / "empty.xyz").string() + " --out " + (dir_ / "empty_pred.xyz").string()).code, 0);
  EXPECT_EQ(slurp(dir_ / "empty_pred.xyz"), "");

  // Element outside the model.
  spit(dir_ / "fe.xyz", "1\nProperties=species:S:1:pos:R:3\nFe 0 0 0\n");
  EXPECT_EQ(run("predict --model " + model + " --data " + (dir_ / "fe.xyz").string() + " --out " + (dir_ / "x.xyz").string()).code, 3);
}

TEST_F(CliTest, DataErrorsExitThree) {
  spit(dir_ / "broken.xyz", "3\nProperties=species:S:1:pos:R:3\nH 0 0 0\n");
  json cfg = tiny_config("out");
  cfg["data"]["train_path"] = "broken.xyz";
  EXPECT_EQ(run("train --config " + write_config(cfg).string()).code, 3);
  cfg["data"]["train_path"] = "nope.xyz";
  EXPECT_EQ(run("train --config " + write_config(cfg).string()).code, 3);
  spit(dir_ / "garbage.mace", "not a model");
  EXPECT_EQ(run("eval --model " + (dir_ / "garbage.mace").string() + " --data " + (dir_ / "train.xyz").string()).code, 3);
}

TEST_F(CliTest, SelfcheckPassesAndDetectsInjectedFault) {
  const CliRun a = run("selfcheck --seed 5");
  const CliRun b = run("selfcheck --seed 5");
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("force_equivariance"), std::string::npos);
  EXPECT_EQ(run("selfcheck --inject-fault cg-sign-flip").code, 1);
  EXPECT_EQ(run("selfcheck --inject-fault nonsense").code, 2);
}
