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

#include "qroute/dataset.h"

#include <cmath>
#include <map>
#include <sstream>
#include <string>

#include "gtest/gtest.h"
#include "qroute/error.h"
#include "test_support.h"

namespace qroute {
namespace {

using testing::MakeRecord;
using testing::TempDir;

const std::vector<std::string> kNova = {"nova-pro", "nova-lite"};

std::string NovaLine(const std::string& id, double pro, double lite) {
  return RecordToJson(MakeRecord(id, "nova", kNova, {pro, lite}));
}

std::string ErrorOf(const std::string& text) {
  std::istringstream in(text);
  try {
    ParseJsonl(in, DefaultRegistry());
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(DatasetTest, LoadsRecordsInFileOrder) {
  const std::string text =
      NovaLine("a", 0.5, 0.4) + "\n" + NovaLine("b", 0.1, 0.9) + "\n" + NovaLine("c", 1, 0) + "\n";
  std::istringstream in(text);
  const DatasetSplit split = ParseJsonl(in, DefaultRegistry(), "test");
  ASSERT_EQ(split.size(), 3u);
  EXPECT_EQ(split.records[0].id, "a");
  EXPECT_EQ(split.records[2].id, "c");
  EXPECT_EQ(split.records[1].Label("nova-lite").reward, 0.9);
  EXPECT_EQ(split.family(), "nova");
  EXPECT_EQ(split.name, "test");
}

TEST(DatasetTest, RewardOutOfRangeNamesTheLine) {
  std::string bad = NovaLine("b", 0.5, 0.5);
  bad.replace(bad.find("0.5"), 3, "1.2");
  const std::string message = ErrorOf(NovaLine("a", 0.5, 0.5) + "\n" + bad + "\n");
  EXPECT_NE(message.find("reward out of range, line 2"), std::string::npos) << message;
}

TEST(DatasetTest, UnknownCandidateIsNamed) {
  const std::string line =
      R"({"v":1,"id":"x","prompt":"p","family":"nova","input_tokens":3,)"
      R"("labels":{"gpt-x":{"reward":0.5,"output_tokens":1}}})";
  const std::string message = ErrorOf(line + "\n");
  EXPECT_NE(message.find("gpt-x"), std::string::npos) << message;
  EXPECT_NE(message.find("line 1"), std::string::npos) << message;
}

TEST(DatasetTest, RejectsMalformedAndIncompleteRecords) {
  EXPECT_NE(ErrorOf("{not json\n").find("line 1"), std::string::npos);
  const std::string partial =
      R"({"v":1,"id":"x","prompt":"p","family":"nova","input_tokens":3,)"
      R"("labels":{"nova-pro":{"reward":0.5,"output_tokens":1}}})";
  EXPECT_NE(ErrorOf(partial + "\n").find("nova-lite"), std::string::npos);
  const std::string no_version =
      R"({"id":"x","prompt":"p","family":"nova","input_tokens":3,"labels":{}})";
  EXPECT_NE(ErrorOf(no_version + "\n"), "");
  EXPECT_NE(ErrorOf(NovaLine("a", 0.1, 0.2) + "\n" + NovaLine("a", 0.1, 0.2) + "\n")
                .find("duplicate"),
            std::string::npos);
  std::string negative = NovaLine("a", 0.1, 0.2);
  negative.replace(negative.find("\"input_tokens\":100"), 18, "\"input_tokens\":-1");
  EXPECT_NE(ErrorOf(negative + "\n"), "");
}

TEST(DatasetTest, WriteThenLoadIsIdentity) {
  const DatasetSplit split = testing::SmallSynthetic("claude", 40, 3);
  TempDir dir;
  const std::string path = dir.File("d.jsonl");
  WriteJsonl(split, path);
  const DatasetSplit loaded = LoadJsonl(path, DefaultRegistry());
  EXPECT_EQ(loaded.records, split.records);
  EXPECT_EQ(ToJsonl(loaded), testing::ReadFile(path));
  EXPECT_EQ(Fingerprint(loaded), Fingerprint(split));
}

TEST(DatasetTest, JoinTurnsUsesSeparator) {
  const std::vector<std::string> turns = {"hi", "there"};
  EXPECT_EQ(JoinTurns(turns), "hi <|turn|> there");
  EXPECT_EQ(JoinTurns({}), "");
}

TEST(DatasetTest, EmptySplitHasNoFamily) {
  DatasetSplit empty;
  EXPECT_THROW(empty.family(), Error);
}

TEST(SplitTest, SizesFollowFractions) {
  const DatasetSplit all = testing::SmallSynthetic("nova", 10, 1);
  const SplitResult s = SplitDataset(all.records, {0.8, 0.1, 0.1}, 4);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.dev.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
  EXPECT_EQ(s.train.name, "train");
  EXPECT_EQ(s.test.name, "test");
}

TEST(SplitTest, DeterministicDisjointAndExhaustive) {
  const DatasetSplit all = testing::SmallSynthetic("nova", 97, 2);
  const SplitResult a = SplitDataset(all.records, {0.6, 0.2, 0.2}, 11);
  const SplitResult b = SplitDataset(all.records, {0.6, 0.2, 0.2}, 11);
  EXPECT_EQ(a.train.records, b.train.records);
  EXPECT_EQ(a.test.records, b.test.records);
  std::map<std::string, int> seen;
  for (const DatasetSplit* s : {&a.train, &a.dev, &a.test}) {
    for (const PromptRecord& r : s->records) ++seen[r.id];
  }
  EXPECT_EQ(seen.size(), all.size());
  for (const auto& [id, count] : seen) EXPECT_EQ(count, 1) << id;
}

TEST(SplitTest, RejectsBadFractions) {
  const DatasetSplit all = testing::SmallSynthetic("nova", 10, 1);
  EXPECT_THROW(SplitDataset(all.records, {0.5, 0.5, 0.5}, 1), Error);
  EXPECT_THROW(SplitDataset(all.records, {1.0, 0.0, 0.0}, 1), Error);
}

TEST(SynthTest, SameSeedIsByteIdentical) {
  SynthConfig config;
  config.family = "claude";
  config.records = 1000;
  config.seed = 7;
  EXPECT_EQ(ToJsonl(Synthesize(config, DefaultRegistry())),
            ToJsonl(Synthesize(config, DefaultRegistry())));
  config.seed = 8;
  SynthConfig other = config;
  other.seed = 7;
  EXPECT_NE(ToJsonl(Synthesize(config, DefaultRegistry())),
            ToJsonl(Synthesize(other, DefaultRegistry())));
}

TEST(SynthTest, RejectsZeroRecordsAndUnknownFamily) {
  SynthConfig config;
  config.family = "claude";
  config.records = 0;
  EXPECT_THROW(Synthesize(config, DefaultRegistry()), Error);
  config.records = 5;
  config.family = "unknown";
  EXPECT_THROW(Synthesize(config, DefaultRegistry()), Error);
}

TEST(SynthTest, UniformModelMeansMatchConfiguration) {
  const SynthConfig config = LoadSynthConfig(testing::DataFile("synth_uniform.json"));
  ASSERT_EQ(config.records, 10000);
  const DatasetSplit data = Synthesize(config, DefaultRegistry());
  const std::vector<SynthCandidate> cs = ResolveSynthCandidates(config, DefaultRegistry());
  for (const SynthCandidate& c : cs) {
    double sum = 0.0;
    for (const PromptRecord& r : data.records) sum += r.Label(c.id).reward;
    const double mean = sum / static_cast<double>(data.size());
    EXPECT_NEAR(mean, c.mean, 0.02) << c.id;
  }
}

TEST(SynthTest, DominantCandidateHasLargestArgmaxShare) {
  SynthConfig config;
  config.family = "nova";
  config.records = 5000;
  config.model = DifficultyModel::kUniformIndependent;
  config.candidates = {{"nova-pro", 0.7, 0.2, 0.0}, {"nova-lite", 0.4, 0.2, 0.0}};
  const DatasetSplit data = Synthesize(config, DefaultRegistry());
  int pro = 0, lite = 0;
  for (const PromptRecord& r : data.records) {
    const double a = r.Label("nova-pro").reward, b = r.Label("nova-lite").reward;
    if (a > b) ++pro;
    if (b > a) ++lite;
  }
  EXPECT_GT(pro, lite);
}

TEST(SynthTest, RewardsAndTokensRespectBounds) {
  SynthConfig config;
  config.family = "llama";
  config.records = 500;
  config.noise = 0.5;
  config.input_tokens = {5, 9};
  config.output_tokens = {0, 3};
  const DatasetSplit data = Synthesize(config, DefaultRegistry());
  for (const PromptRecord& r : data.records) {
    EXPECT_GE(r.input_tokens, 5);
    EXPECT_LE(r.input_tokens, 9);
    for (const LabeledCandidate& l : r.labels) {
      EXPECT_GE(l.label.reward, 0.0);
      EXPECT_LE(l.label.reward, 1.0);
      EXPECT_LE(l.label.output_tokens, 3);
    }
  }
}

TEST(SynthTest, ConfigParsingRejectsUnknownModel) {
  EXPECT_THROW(ParseSynthConfig(R"({"family":"claude","difficulty_model":"weird"})"), Error);
  EXPECT_THROW(ParseSynthConfig(R"({"records":5})"), Error);
  const SynthConfig c = ParseSynthConfig(
      R"({"family":"claude","difficulty_model":"uniform-independent","records":3})");
  EXPECT_EQ(c.model, DifficultyModel::kUniformIndependent);
  EXPECT_EQ(c.records, 3);
}

}  // namespace
}  // namespace qroute
