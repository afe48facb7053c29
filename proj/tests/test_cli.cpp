#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;  // stdout and stderr together
};

Run run(const std::string& args) {
  const std::string cmd = std::string(FORAGE_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const fs::path& data_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("forage_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    const auto r = run("gen --tasks 30 --out " + d.string());
    EXPECT_EQ(r.code, 0) << r.out;
    return d;
  }();
  return dir;
}

}  // namespace

TEST(Cli, NoArgsIsUsage) {
  const auto r = run("");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("gen"), std::string::npos);
  EXPECT_NE(r.out.find("inspect"), std::string::npos);
}

TEST(Cli, UnknownSubcommandAndFlag) {
  EXPECT_EQ(run("frobnicate").code, 1);
  const auto r = run("eval --no-such-flag");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("Usage"), std::string::npos) << r.out;
}

TEST(Cli, HelpShowsDefaults) {
  const auto r = run("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("[0.2]"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("[0.95]"), std::string::npos);
  EXPECT_NE(r.out.find("[6]"), std::string::npos);
  EXPECT_NE(r.out.find("[3]"), std::string::npos);
}

TEST(Cli, GenIsByteStable) {
  const auto other = data_dir().parent_path() / (data_dir().filename().string() + "_again");
  ASSERT_EQ(run("gen --tasks 30 --out " + other.string()).code, 0);
  EXPECT_EQ(slurp(data_dir() / "corpus.jsonl"), slurp(other / "corpus.jsonl"));
  EXPECT_EQ(slurp(data_dir() / "tasks.jsonl"), slurp(other / "tasks.jsonl"));
}

TEST(Cli, EvalOracleEchoesConfig) {
  const auto r = run("eval --data " + data_dir().string() + " --policy oracle");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("alpha 0.2000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("beta 0.9500"), std::string::npos);
  EXPECT_NE(r.out.find("max_steps 6"), std::string::npos);
  const auto csv = run("eval --data " + data_dir().string() + " --policy baseline --format csv");
  ASSERT_EQ(csv.code, 0) << csv.out;
  EXPECT_EQ(csv.out.rfind("task_id,em,f1", 0), 0u);
}

TEST(Cli, SeedFromEnvironment) {
  const std::string base = "eval --data " + data_dir().string() + " --policy random --format csv";
  const auto a = run("--seed 5 " + base);
  const auto b = run("--seed 5 " + base);
  const auto c = run("--seed 6 " + base);
  ::setenv("FORAGE_SEED", "6", 1);
  const auto d = run("--seed 5 " + base);
  ::unsetenv("FORAGE_SEED");
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  EXPECT_EQ(c.out, d.out);
}

TEST(Cli, TrainRolloutInspect) {
  const auto params = data_dir() / "params.json";
  const auto report = data_dir() / "report.csv";
  auto r = run("train --data " + data_dir().string() + " --iters 3 --episodes 4 --bc-episodes 5 --heldout 10 --out " +
               params.string() + " --report " + report.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(slurp(report).rfind("iter,mean_reward,mean_outcome,mean_gain,mean_T,heldout_em,policy_loss,value_loss\n", 0), 0u);
  r = run("eval --data " + data_dir().string() + " --policy params --params " + params.string());
  EXPECT_EQ(r.code, 0) << r.out;

  const auto log = data_dir() / "rollout.jsonl";
  r = run("rollout --data " + data_dir().string() + " --policy oracle --task task-0003 --out " + log.string());
  ASSERT_EQ(r.code, 0) << r.out;
  r = run("inspect " + log.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("injected"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("model"), std::string::npos);
  EXPECT_NE(r.out.find("1.0830"), std::string::npos);
}

TEST(Cli, RuntimeErrorsExitTwo) {
  EXPECT_EQ(run("eval --data /nonexistent/dir").code, 2);
  EXPECT_EQ(run("eval --data " + data_dir().string() + " --policy params").code, 1);  // missing --params is usage
  EXPECT_EQ(run("eval --data " + data_dir().string() + " --policy params --params /nonexistent.json").code, 2);
  const auto bad = data_dir() / "bad.txt";
  std::ofstream(bad) << "<search>a</search><answer>x</answer>";
  const auto r = run("inspect " + bad.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("Search without Info at block 0"), std::string::npos) << r.out;
}
