// Copyright 2026 The ancff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Drives the ancff executable end to end.

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"

#include "ancff/text_io.hpp"
#include "test_support.hpp"

namespace ancff {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string output;
};

CliRun ancff_cli(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "cli.log";
  const std::string cmd = std::string(ANCFF_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = fs::exists(log) ? text::read_file(log.string()) : "";
  return r;
}

std::size_t line_count(const fs::path& p) {
  const std::string s = text::read_file(p.string());
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = testing::scratch_dir(::testing::UnitTest::GetInstance()->current_test_info()->name()); }
  std::string out(const std::string& sub = "out") const { return "--out " + (dir_ / sub).string(); }
  fs::path dir_;
};

TEST_F(Cli, SynthWritesAnArchiveAndChecksum) {
  const CliRun r = ancff_cli("synth --preset fast " + out(), dir_);
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir_ / "out/scene/manifest.json"));
  EXPECT_NE(r.output.find("checksum"), std::string::npos);
  const CliRun again = ancff_cli("synth --preset fast " + out("again"), dir_);
  EXPECT_EQ(r.output.substr(r.output.find("checksum")), again.output.substr(again.output.find("checksum")));
}

TEST_F(Cli, DesignEvaluateMarginsWorkflow) {
  ASSERT_EQ(ancff_cli("synth --preset fast " + out(), dir_).code, 0);
  const std::string scene = "--archive " + (dir_ / "out/scene").string();
  CliRun r = ancff_cli("design --preset fast " + scene + " --field ipsi --repetitions 0 " + out(), dir_);
  ASSERT_EQ(r.code, 0) << r.output;
  r = ancff_cli("design --preset fast " + scene + " --field diffuse --repetitions 0-5 " + out(), dir_);
  ASSERT_EQ(r.code, 0) << r.output;
  for (const char* f : {"w_ipsi.csv", "w_ipsi.wav", "w_ipsi.json", "w_diff_ri.csv", "w_diff_ri.json"})
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;

  const auto side = nlohmann::json::parse(text::read_file((dir_ / "out/w_diff_ri.json").string()));
  EXPECT_EQ(side["repetitions_used"].get<std::vector<int>>(), (std::vector<int>{0, 1, 2, 3, 4, 5}));
  EXPECT_TRUE(side["feasible"].get<bool>());
  EXPECT_EQ(line_count(dir_ / "out/w_ipsi.csv"), 64u);

  const std::string ctl = " --controller " + (dir_ / "out/w_ipsi.json").string() + " --controller " +
                          (dir_ / "out/w_diff_ri.json").string();
  r = ancff_cli("evaluate --preset fast " + scene + ctl + " --plan sweep " + out(), dir_);
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(line_count(dir_ / "out/w_ipsi_sweep_rep0.csv"), 49u);
  EXPECT_TRUE(fs::exists(dir_ / "out/summary_sweep.txt"));

  r = ancff_cli("evaluate --preset fast " + scene + ctl + " --plan reinsertion --held-out 6 " + out(), dir_);
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir_ / "out/reinsertion_rep6.csv"));

  r = ancff_cli("evaluate --preset fast " + scene + ctl + " --plan reinsertion --held-out 3 " + out(), dir_);
  EXPECT_EQ(r.code, 2) << r.output;

  r = ancff_cli("evaluate --preset fast " + scene + " --controller " + (dir_ / "out/w_ipsi.json").string() +
                    " --plan frequency " + out(), dir_);
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(text::read_file((dir_ / "out/w_ipsi_frequency_rep0.csv").string()).rfind("freq_hz,", 0), 0u);

  r = ancff_cli("margins --preset fast " + scene + ctl + " " + out(), dir_);
  ASSERT_EQ(r.code, 0) << r.output;
  const auto m = nlohmann::json::parse(text::read_file((dir_ / "out/w_ipsi_margins.json").string()));
  EXPECT_TRUE(m.contains("gain_margin"));
}

TEST_F(Cli, MarginsOfZeroAndAggressiveControllers) {
  text::write_file((dir_ / "zero.csv").string(), "0\n0\n0\n");
  text::write_file((dir_ / "loud.csv").string(), "-10\n");
  CliRun r = ancff_cli("margins --preset fast --controller " + (dir_ / "zero.csv").string() + " " + out(), dir_);
  ASSERT_EQ(r.code, 0) << r.output;
  const auto m = nlohmann::json::parse(text::read_file((dir_ / "out/zero_margins.json").string()));
  EXPECT_EQ(m["gain_margin"], "inf");
  r = ancff_cli("margins --preset fast --controller " + (dir_ / "loud.csv").string() + " " + out(), dir_);
  EXPECT_EQ(r.code, 4) << r.output;
  EXPECT_NE(r.output.find("violation"), std::string::npos);
}

TEST_F(Cli, ErrorsMapToExitCodes) {
  EXPECT_EQ(ancff_cli("design --preset fast --archive " + (dir_ / "nowhere").string() + " " + out(), dir_).code, 3);
  CliRun r = ancff_cli("design --preset fast --set design.rhoo=0.5 " + out(), dir_);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("rhoo"), std::string::npos);
  r = ancff_cli("synth --set scene.synthetic.perturbation=1.5 " + out(), dir_);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("synthetic.perturbation"), std::string::npos);
  EXPECT_EQ(ancff_cli("synth --preset slow " + out(), dir_).code, 2);
  EXPECT_EQ(ancff_cli("bogus", dir_).code, 2);
  EXPECT_EQ(ancff_cli("margins --preset fast --controller " + (dir_ / "none.csv").string() + " " + out(), dir_).code, 3);
}

TEST_F(Cli, ConfigFilePrintsAndRoundTrips) {
  text::write_file((dir_ / "c.json").string(), R"({"preset": "fast", "design": {"rho": 0.7}})");
  const CliRun r = ancff_cli("design --config " + (dir_ / "c.json").string() + " --seed 9 --print-config", dir_);
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = nlohmann::json::parse(r.output);
  EXPECT_EQ(j["design"]["rho"], 0.7);
  EXPECT_EQ(j["calibration"]["seed"], 9);
  EXPECT_EQ(j["preset"], "fast");
}

TEST_F(Cli, RepeatedRunsAreByteIdentical) {
  for (const char* sub : {"a", "b"}) {
    ASSERT_EQ(ancff_cli("design --preset fast --field ipsi --repetitions 0 --seed 5 " + out(sub), dir_).code, 0);
    ASSERT_EQ(ancff_cli("evaluate --preset fast --seed 5 --plan frequency --controller " +
                            (dir_ / sub / "w_ipsi.json").string() + " " + out(sub),
                        dir_).code,
              0);
  }
  for (const char* f : {"w_ipsi.csv", "w_ipsi.wav", "w_ipsi_frequency_rep0.csv"})
    EXPECT_EQ(text::read_file((dir_ / "a" / f).string()), text::read_file((dir_ / "b" / f).string())) << f;
}

}  // namespace
}  // namespace ancff
