#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "test_util.hpp"

namespace fs = std::filesystem;
using oltc::testing::data_path;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun opf(const std::string& args) {
  const std::string cmd = std::string(OPF_BIN) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / ("opf_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Cli, PowerFlowSucceeds) {
  const CliRun r = opf("pf --case " + quoted(data_path("case33.json")) + " --taps 2,2,2,2 --json");
  ASSERT_EQ(r.code, 0);
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["status"], "converged");
  EXPECT_EQ(doc["buses"].size(), 33u);
}

TEST(Cli, InputErrorsExitWithTwo) {
  EXPECT_EQ(opf("pf --case " + quoted(data_path("case33.json")) + " --taps 9,9,9,9").code, 2);
  EXPECT_EQ(opf("pf --case /nonexistent/case.json --taps 1").code, 2);
  EXPECT_EQ(opf("run --case " + quoted(data_path("case33.json")) + " --dt 0.003").code, 2);
  EXPECT_EQ(opf("run").code, 2);
  EXPECT_EQ(opf("lin-audit --case " + quoted(data_path("case33.json")) + " --branch 4-5").code, 2);
}

TEST(Cli, InfeasibleExitsWithOne) {
  const fs::path dir = scratch_dir();
  auto doc = nlohmann::json::parse(std::ifstream(data_path("two_bus.json")));
  doc["buses"][1]["v_min_pu"] = 0.999;
  std::ofstream(dir / "tight.json") << doc.dump();
  EXPECT_EQ(opf("run --case " + quoted(dir / "tight.json")).code, 1);
  fs::remove_all(dir);
}

TEST(Cli, FixedRunWritesReports) {
  const fs::path dir = scratch_dir();
  const CliRun r = opf("run --case " + quoted(data_path("case33.json")) + " --fixed 1,2,3,4 --out " + quoted(dir / "out"));
  ASSERT_EQ(r.code, 0);
  ASSERT_TRUE(fs::exists(dir / "out" / "report.json"));
  ASSERT_TRUE(fs::exists(dir / "out" / "report.txt"));
  const auto doc = nlohmann::json::parse(std::ifstream(dir / "out" / "report.json"));
  EXPECT_EQ(doc["scenarios"][0]["status"], "optimal");
  EXPECT_EQ(doc["scenarios"][0]["taps"], (std::vector<int>{1, 2, 3, 4}));
  fs::remove_all(dir);
}

TEST(Cli, FlagsOverrideConfig) {
  const fs::path dir = scratch_dir();
  std::ofstream(dir / "cfg.json") << R"({"solver": {"node_limit": 1, "rel_gap": 1e-6}})";
  const std::string base = "run --json --case " + quoted(data_path("case33.json")) + " --config " + quoted(dir / "cfg.json");
  const CliRun limited = opf(base);
  const CliRun flagged = opf(base + " --node-limit 100000");
  ASSERT_EQ(flagged.code, 0);
  const auto a = nlohmann::json::parse(limited.out);
  const auto b = nlohmann::json::parse(flagged.out);
  EXPECT_NE(a["scenarios"][0]["status"], "optimal");
  EXPECT_EQ(b["scenarios"][0]["status"], "optimal");
  std::ofstream(dir / "bad.json") << R"({"solver": {"mode": "simplex"}})";
  EXPECT_EQ(opf("run --case " + quoted(data_path("case33.json")) + " --config " + quoted(dir / "bad.json")).code, 2);
  fs::remove_all(dir);
}

TEST(Cli, EnumerateLinAuditAndDump) {
  const CliRun e = opf("enumerate --json --case " + quoted(data_path("feeder6_tx.json")));
  ASSERT_EQ(e.code, 0);
  EXPECT_EQ(nlohmann::json::parse(e.out)["grid_points"], 6);
  const CliRun a = opf("lin-audit --case " + quoted(data_path("case33.json")) + " --branch 2-19");
  ASSERT_EQ(a.code, 0);
  EXPECT_NE(a.out.find("worst residual"), std::string::npos);
  const CliRun d = opf("dump-model --case " + quoted(data_path("feeder6_tx.json")));
  ASSERT_EQ(d.code, 0);
  EXPECT_EQ(d.out.rfind("# opf-model/1", 0), 0u);
}
