// Copyright 2026 The fpsearch Authors.
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

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fixtures.h"
#include "fpsearch/pipeline.h"

namespace fpsearch {
namespace {

using nlohmann::json;
using testing::MakeFixtureCorpus;
using testing::TempDir;

struct CliRun {
  int exit_code = -1;
  std::string out;
};

CliRun Exec(const std::string& args) {
  const std::string cmd = std::string(FPSEARCH_CLI) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string TestData(const std::string& name) {
  return std::string(FPSEARCH_TEST_DIR) + "/" + name;
}

json ReadJson(const std::string& path) {
  std::ifstream in(path);
  return json::parse(in);
}

// Structural equality with a numeric tolerance for floats.
void ExpectJsonNear(const json& got, const json& want, const std::string& where = "$") {
  if (want.is_number() && got.is_number()) {
    EXPECT_NEAR(got.get<double>(), want.get<double>(), 1e-12) << where;
    return;
  }
  ASSERT_EQ(got.type(), want.type()) << where;
  if (want.is_object()) {
    ASSERT_EQ(got.size(), want.size()) << where;
    for (const auto& [k, v] : want.items()) {
      ASSERT_TRUE(got.contains(k)) << where << "." << k;
      ExpectJsonNear(got[k], v, where + "." + k);
    }
  } else if (want.is_array()) {
    ASSERT_EQ(got.size(), want.size()) << where;
    for (size_t i = 0; i < want.size(); ++i) {
      ExpectJsonNear(got[i], want[i], where + "[" + std::to_string(i) + "]");
    }
  } else {
    EXPECT_EQ(got, want) << where;
  }
}

const std::string kTaxonomy = std::string(FPSEARCH_DATA_DIR) + "/taxonomy.json";

TEST(Cli, TaxonomyValidateMatchesGolden) {
  const CliRun r = Exec("taxonomy-validate --taxonomy " + kTaxonomy + " --json");
  ASSERT_EQ(r.exit_code, 0);
  ExpectJsonNear(json::parse(r.out), ReadJson(TestData("golden/taxonomy_validate.json")));
  const CliRun plain = Exec("taxonomy-validate --taxonomy " + kTaxonomy);
  EXPECT_EQ(plain.exit_code, 0);
  EXPECT_EQ(plain.out, "OK\n");
}

TEST(Cli, InvalidTaxonomyExitsOne) {
  const std::string dir = TempDir("cli_badtax");
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/tax.json";
  // Duplicate name across category and attribute.
  std::ofstream(path) << R"({"categories":["top"],"groups":[{"name":"g","classes":["top"],)"
                         R"("applicable_categories":["top"]}]})";
  const CliRun r = Exec("taxonomy-validate --taxonomy " + path);
  EXPECT_EQ(r.exit_code, 1);
  std::filesystem::remove_all(dir);
}

TEST(Cli, EvalDetectorMatchesGolden) {
  const CliRun r = Exec("eval-detector --pred " + TestData("data/guided_pred.jsonl") + " --gt " +
                     TestData("data/guided_gt.jsonl") + " --guided --json");
  ASSERT_EQ(r.exit_code, 0);
  const json got = json::parse(r.out);
  ExpectJsonNear(got, ReadJson(TestData("golden/eval_detector_guided.json")));
  for (double m : got["rows"][0]["map"]) EXPECT_EQ(m, 1.0);
  for (double m : got["rows"][1]["map"]) EXPECT_EQ(m, 0.75);
}

TEST(Cli, EvalDetectorTableHasIouHeader) {
  const CliRun r = Exec("eval-detector --pred " + TestData("data/guided_pred.jsonl") + " --gt " +
                     TestData("data/guided_gt.jsonl") + " --iou 0.5,0.9");
  ASSERT_EQ(r.exit_code, 0);
  std::istringstream lines(r.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(header.rfind("IoU", 0), 0u);
  EXPECT_NE(header.find("0.50"), std::string::npos);
  EXPECT_NE(header.find("0.90"), std::string::npos);
  EXPECT_NE(row.find("0.750"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(Exec("").exit_code, 2);
  EXPECT_EQ(Exec("no-such-command").exit_code, 2);
  EXPECT_EQ(Exec("taxonomy-validate --taxonomy " + kTaxonomy + " --bogus").exit_code, 2);
  EXPECT_EQ(Exec("taxonomy-validate").exit_code, 2);
  EXPECT_EQ(Exec("eval-detector --pred " + TestData("data/guided_pred.jsonl") + " --gt " +
                 TestData("data/guided_gt.jsonl") + " --iou 1.5")
                .exit_code,
            2);
  EXPECT_EQ(Exec("--help").exit_code, 0);
}

TEST(Cli, BenchHammingSelfChecks) {
  const CliRun r = Exec("bench-hamming --bits 256 --n 5000 --repeats 1 --json");
  ASSERT_EQ(r.exit_code, 0);
  const json j = json::parse(r.out);
  EXPECT_TRUE(j["paths_agree"].get<bool>());
  EXPECT_EQ(j["oracle_mismatches"].get<int>(), 0);
  EXPECT_GT(j["comparisons_per_sec"].get<double>(), 0.0);
}

class CliCorpus : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    corpus_ = new testing::FixtureCorpus(MakeFixtureCorpus(TempDir("cli_corpus"), 40, 20));
  }
  static void TearDownTestSuite() {
    std::filesystem::remove_all(corpus_->dir);
    delete corpus_;
  }
  static testing::FixtureCorpus* corpus_;
};
testing::FixtureCorpus* CliCorpus::corpus_ = nullptr;

TEST_F(CliCorpus, IngestThenSearchMatchesInProcess) {
  const auto& c = *corpus_;
  const std::string index = c.dir + "/cli_index.fpsi";
  const CliRun ingest = Exec("ingest --taxonomy " + c.taxonomy_path + " --manifest " +
                          c.manifest_path + " --checkpoint " + c.checkpoint_path +
                          " --keywords " + c.keywords_path + " --detector-fixture " +
                          c.detections_path + " --index " + index + " --json");
  ASSERT_EQ(ingest.exit_code, 0) << ingest.out;
  EXPECT_EQ(json::parse(ingest.out)["inserted"].get<size_t>(), c.items.size());

  const auto& item = c.items[3];
  const std::string feature = c.dir + "/features/" + item.item_id + ".fpsf";
  const CliRun search = Exec("search --taxonomy " + c.taxonomy_path + " --index " + index +
                          " --checkpoint " + c.checkpoint_path + " --option 1 --feature " +
                          feature + " --k 5 --json");
  ASSERT_EQ(search.exit_code, 0);
  const json got = json::parse(search.out);

  QueryRequest r;
  r.option = QueryOption::kAutomatic;
  r.feature = item.feature;
  r.k = 5;
  const QueryResult want = RunQuery(r, c.models, *c.index);
  ASSERT_EQ(got["results"].size(), want.hits.size());
  for (size_t i = 0; i < want.hits.size(); ++i) {
    EXPECT_EQ(got["results"][i]["item_id"], want.hits[i].item_id);
    EXPECT_EQ(got["results"][i]["match_count"].get<uint32_t>(), want.hits[i].match_count);
    EXPECT_NEAR(got["results"][i]["distance"].get<double>(), want.hits[i].distance, 1e-12);
  }
  EXPECT_EQ(got["category"], c.taxonomy->SymbolName(want.category));
}

TEST_F(CliCorpus, OperationalFailuresExitOne) {
  const auto& c = *corpus_;
  const std::string corrupt = c.dir + "/corrupt.fpsi";
  std::ofstream(corrupt, std::ios::binary) << "FPSI not really a snapshot";
  const std::string feature = c.dir + "/features/" + c.items[0].item_id + ".fpsf";
  EXPECT_EQ(Exec("search --taxonomy " + c.taxonomy_path + " --index " + corrupt +
                 " --checkpoint " + c.checkpoint_path + " --option 1 --feature " + feature)
                .exit_code,
            1);
  // Option 2 without a guide is a semantic error caught after parsing.
  EXPECT_EQ(Exec("search --taxonomy " + c.taxonomy_path + " --index " + c.index_path +
                 " --checkpoint " + c.checkpoint_path + " --option 2 --feature " + feature)
                .exit_code,
            1);
}

TEST_F(CliCorpus, TrainAndEvalSeqRoundTrip) {
  const auto& c = *corpus_;
  const std::string ckpt = c.dir + "/cli_model.fpsm";
  const std::string args = "--taxonomy " + c.taxonomy_path + " --manifest " + c.dir +
                           "/sequences.jsonl";
  const CliRun train =
      Exec("train-seq " + args + " --checkpoint " + ckpt + " --epochs 3 --hidden 8 --embed 4 --json");
  ASSERT_EQ(train.exit_code, 0);
  const json t = json::parse(train.out);
  EXPECT_EQ(t["history"].size(), 3u);
  EXPECT_TRUE(std::filesystem::exists(ckpt));

  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string again = c.dir + "/cli_model_again.fpsm";
  ASSERT_EQ(Exec("train-seq " + args + " --checkpoint " + again +
                 " --epochs 3 --hidden 8 --embed 4 --batch-size 4 --seed 7")
                .exit_code,
            0);
  const std::string first = slurp(again);
  ASSERT_EQ(Exec("train-seq " + args + " --checkpoint " + again +
                 " --epochs 3 --hidden 8 --embed 4 --batch-size 4 --seed 7")
                .exit_code,
            0);
  EXPECT_EQ(slurp(again), first) << "same seed must give the same checkpoint";

  const CliRun eval = Exec("eval-seq " + args + " --checkpoint " + ckpt + " --json");
  ASSERT_EQ(eval.exit_code, 0);
  const json e = json::parse(eval.out);
  ASSERT_FALSE(e["splits"].empty());
  for (const auto& row : e["splits"]) {
    EXPECT_GE(row["precision"].get<double>(), 0.0);
    EXPECT_LE(row["recall"].get<double>(), 1.0);
    EXPECT_GT(row["nll"].get<double>(), 0.0);
  }
}

}  // namespace
}  // namespace fpsearch
