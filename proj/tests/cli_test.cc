// Copyright 2026 The qroute Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <stdio.h>
#include <sys/wait.h>

#include <string>

#include "gtest/gtest.h"
#include "json.hpp"
#include "test_support.h"

namespace qroute {
namespace {

using ::qroute::testing::ReadFile;
using ::qroute::testing::TempDir;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult RunCli(const std::string& args) {
  const std::string cmd = std::string(QROUTE_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  RunResult r;
  if (pipe == nullptr) return r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// One small trained model shared by every test in the suite.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    const RunResult synth = RunCli("synth --family claude --records 300 --seed 4 --split-dir " +
                                dir_->path() + " --fractions 0.6,0.2,0.2");
    ASSERT_EQ(synth.exit_code, 0);
    const RunResult train = RunCli("train --train " + Path("train.jsonl") + " --dev " +
                                Path("dev.jsonl") + " --out " + Path("p.bin") +
                                " --epochs 2 --dim 32 --hidden 16 --identity-dim 8");
    ASSERT_EQ(train.exit_code, 0) << train.out;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string Path(const std::string& name) { return dir_->File(name); }

  static TempDir* dir_;
};

TempDir* CliTest::dir_ = nullptr;

TEST_F(CliTest, SynthWritesSplits) {
  EXPECT_FALSE(ReadFile(Path("train.jsonl")).empty());
  EXPECT_FALSE(ReadFile(Path("test.jsonl")).empty());
}

TEST_F(CliTest, MissingRequiredFlagExitsTwo) {
  EXPECT_EQ(RunCli("route --prompt hi").exit_code, 2);
  EXPECT_EQ(RunCli("").exit_code, 2);
  EXPECT_EQ(RunCli("frobnicate").exit_code, 2);
  EXPECT_EQ(RunCli("--help").exit_code, 0);
}

TEST_F(CliTest, FullToleranceRoutesToCheapest) {
  const RunResult r = RunCli("route --params " + Path("p.bin") + " --prompt 'hello world' "
                          "--tolerance 1 --request-id t1");
  ASSERT_EQ(r.exit_code, 0);
  const nlohmann::json doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["request_id"], "t1");
  EXPECT_EQ(doc["decision"]["selected_model"], "claude-3-haiku");
}

TEST_F(CliTest, OutOfRangeToleranceFails) {
  const RunResult r =
      RunCli("route --params " + Path("p.bin") + " --prompt hi --tolerance 1.5");
  EXPECT_NE(r.exit_code, 0);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, EvaluateWritesReportsWithSharedFingerprint) {
  const RunResult r = RunCli("evaluate --params " + Path("p.bin") + " --data " +
                          Path("test.jsonl") + " --out-dir " + Path("eval") +
                          " --policies ipr,oracle,random --grid-step 0.1");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  std::string fingerprint;
  for (const char* p : {"ipr", "oracle", "random"}) {
    const std::string text = ReadFile(Path(std::string("eval/report_") + p + ".json"));
    ASSERT_FALSE(text.empty()) << p;
    const nlohmann::json doc = nlohmann::json::parse(text);
    if (fingerprint.empty()) fingerprint = doc["dataset_fingerprint"];
    EXPECT_EQ(doc["dataset_fingerprint"], fingerprint);
    const std::string csv = ReadFile(Path(std::string("eval/curve_") + p + ".csv"));
    EXPECT_EQ(csv.rfind("tolerance,cost,quality,alpha,quality_norm\n", 0), 0u);
  }
  const nlohmann::json oracle = nlohmann::json::parse(ReadFile(Path("eval/report_oracle.json")));
  EXPECT_EQ(oracle["rel_arqgc"], 1.0);
}

TEST_F(CliTest, EvaluateToUnwritableDirectoryFails) {
  const RunResult r = RunCli("evaluate --data " + Path("test.jsonl") +
                          " --out-dir /proc/qroute-nope --policies oracle");
  EXPECT_EQ(r.exit_code, 1);
}

TEST_F(CliTest, TrainingIsSeedDeterministic) {
  const std::string common = "train --train " + Path("train.jsonl") +
                             " --epochs 1 --dim 16 --hidden 8 --identity-dim 4 --seed 9 --out ";
  ASSERT_EQ(RunCli(common + Path("a.bin")).exit_code, 0);
  ASSERT_EQ(RunCli(common + Path("b.bin")).exit_code, 0);
  EXPECT_EQ(ReadFile(Path("a.bin")), ReadFile(Path("b.bin")));
}

TEST_F(CliTest, RegistryFlagIsHonored) {
  TempDir local;
  ::qroute::testing::WriteText(local.File("reg.json"), "{\"schema\": 1}");
  const RunResult r = RunCli("--registry " + local.File("reg.json") + " synth --family claude "
                          "--records 5 --out " + local.File("x.jsonl"));
  EXPECT_EQ(r.exit_code, 1);
}

TEST_F(CliTest, BenchReportsPercentiles) {
  const RunResult r = RunCli("bench --dim 32 --tokens 50 --candidates 2 --warmup 1 --iters 5");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("p99"), std::string::npos);
}

}  // namespace
}  // namespace qroute
