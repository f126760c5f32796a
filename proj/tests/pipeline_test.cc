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

#include "fpsearch/pipeline.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "fixtures.h"
#include "fpsearch/error.h"
#include "fpsearch/synthetic.h"

namespace fpsearch {
namespace {

using testing::FixtureCorpus;

const FixtureCorpus& Corpus() {
  static const FixtureCorpus c =
      testing::MakeFixtureCorpus(testing::TempDir("pipeline_corpus"), 100);
  return c;
}

KeywordTable Table(std::vector<std::pair<std::string, std::string>> rows) {
  std::vector<KeywordEntry> entries;
  for (auto& [k, c] : rows) entries.push_back({k, c});
  return KeywordTable(std::move(entries));
}

TEST(KeywordTest, ExtractCategory) {
  const auto table = Table({{"shirt", "blouse"}, {"t-shirt", "t-shirts"}, {"Cardigan", "cardigan"}});
  EXPECT_EQ(ExtractCategory("brown cardigan knit top", table), "cardigan");
  EXPECT_EQ(ExtractCategory("BROWN CARDIGAN", table), "cardigan");
  EXPECT_EQ(ExtractCategory("plain linen trousers", table), std::nullopt);
  EXPECT_EQ(ExtractCategory("a t-shirt, not a shirt", table), "t-shirts");
  // Equal lengths: earlier entry wins.
  const auto tie = Table({{"abc", "pants"}, {"xyz", "skirt"}});
  EXPECT_EQ(ExtractCategory("xyz abc", tie), "pants");
}

TEST(KeywordTest, TableValidation) {
  EXPECT_THROW(Table({{"", "pants"}}), Error);
  EXPECT_THROW(Table({{"Pants", "pants"}, {"pants", "pants"}}), Error);
  EXPECT_THROW(KeywordTable::FromJson("{"), Error);
  EXPECT_THROW(Table({{"hat", "hats"}}).CheckAgainst(*testing::FashionTaxonomy()), Error);
  const auto shipped = KeywordTable::Load(testing::DataPath("keywords.json"));
  EXPECT_NO_THROW(shipped.CheckAgainst(*testing::FashionTaxonomy()));
  EXPECT_EQ(ExtractCategory("Red T-Shirts no.4", shipped), "t-shirts");
}

TEST(FeatureTest, ModelInputPoolsBlocks) {
  const std::vector<float> dense{1, 3, 5, 7, 2, 2};
  const Vector m = ModelInput(dense, 3);
  EXPECT_EQ(m, (Vector(3) << 2, 6, 2).finished());
  EXPECT_THROW(ModelInput(dense, 7), Error);
  Rng rng(1);
  Vector v(64);
  for (double& x : v) x = static_cast<float>(rng.Normal());
  const Vector back = ModelInput(synthetic::Upsample(v, 1024), 64);
  EXPECT_LT((back - v).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(FeatureTest, FallbackFeatureIsDeterministic) {
  const auto& item = Corpus().items[0];
  const auto a = FallbackFeature(item.image, 1024);
  EXPECT_EQ(a.size(), 1024u);
  EXPECT_EQ(a, FallbackFeature(item.image, 1024));
  EXPECT_NE(a, FallbackFeature(Corpus().items[1].image, 1024));
  EXPECT_THROW(FallbackFeature(Image{}, 16), Error);
}

PipelineModels ModelsWith(std::shared_ptr<const Detector> detector) {
  PipelineModels m = Corpus().models;
  m.detector = std::move(detector);
  return m;
}

TEST(IngestTest, MatchingDetectionBecomesRoi) {
  const auto& item = Corpus().items[0];
  DetectionsByImage dets{{"new", {{{3, 4, 20, 21}, item.category, 0.5},
                                  {{0, 0, 8, 8}, "bags", 0.99}}}};
  const auto models = ModelsWith(std::make_shared<FixtureDetector>(dets));
  InvertedIndex index(Corpus().taxonomy, {});
  const auto rec = Ingest({"new", item.image, item.meta_text, item.feature, {}},
                          Corpus().keywords, models, index);
  EXPECT_EQ(rec.roi, (Box{3, 4, 20, 21}));
  EXPECT_EQ(index.Find("new")->roi, rec.roi);
}

TEST(IngestTest, WrongCategoryDetectionsFallBackToFullImage) {
  const auto& item = Corpus().items[0];
  ASSERT_NE(item.category, "bags");
  DetectionsByImage dets{{"new", {{{0, 0, 8, 8}, "bags", 0.99}}}};
  const auto models = ModelsWith(std::make_shared<FixtureDetector>(dets));
  InvertedIndex index(Corpus().taxonomy, {});
  const auto rec = Ingest({"new", item.image, item.meta_text, item.feature, {}},
                          Corpus().keywords, models, index);
  EXPECT_EQ(rec.roi, FullImageBox(item.image));
}

TEST(IngestTest, RejectedItemLeavesIndexUnchanged) {
  const auto& item = Corpus().items[0];
  InvertedIndex index(Corpus().taxonomy, {});
  Ingest({"a", item.image, item.meta_text, item.feature, {}}, Corpus().keywords,
         Corpus().models, index);
  const auto before = index.Serialize();
  EXPECT_THROW(Ingest({"b", item.image, "no keyword here", item.feature, {}},
                      Corpus().keywords, Corpus().models, index),
               Error);
  EXPECT_THROW(Ingest({"c", item.image, item.meta_text, DenseFeature(12, 1.0f), {}},
                      Corpus().keywords, Corpus().models, index),
               Error);
  EXPECT_THROW(Ingest({"a", item.image, item.meta_text, item.feature, {}},
                      Corpus().keywords, Corpus().models, index),
               Error);
  EXPECT_EQ(index.Serialize(), before);
}

TEST(IngestTest, ExplicitCategoryOverridesKeywords) {
  const auto& item = Corpus().items[0];
  InvertedIndex index(Corpus().taxonomy, {});
  const auto rec = Ingest({"a", item.image, "nothing useful", item.feature, "skirt"},
                          Corpus().keywords, Corpus().models, index);
  EXPECT_EQ(rec.category, Corpus().taxonomy->CategoryIndex("skirt"));
}

TEST(IngestTest, CorpusInvariantSweep) {
  const auto& c = Corpus();
  ASSERT_EQ(c.index->size(), 100u);
  EXPECT_FALSE(c.index->CheckConsistency().has_value());
  for (const auto& [id, rec] : c.index->items()) {
    ASSERT_FALSE(rec.attributes.empty());
    EXPECT_EQ(rec.attributes[0], rec.category);
    EXPECT_EQ(c.taxonomy->SymbolName(rec.category), ExtractCategory(rec.meta_text, c.keywords));
    for (SymbolId a : rec.attributes) EXPECT_TRUE(c.taxonomy->IsApplicable(rec.category, a));
  }
}

TEST(IngestTest, IngestOrderDoesNotMatter) {
  const auto& c = Corpus();
  auto entries = LoadManifest(c.manifest_path);
  entries.resize(30);
  InvertedIndex forward(c.taxonomy, {});
  IngestManifest(entries, c.keywords, c.models, forward);
  std::reverse(entries.begin(), entries.end());
  InvertedIndex backward(c.taxonomy, {});
  IngestManifest(entries, c.keywords, c.models, backward);
  EXPECT_EQ(forward.Serialize(), backward.Serialize());
}

TEST(IngestTest, ManifestResolvesRelativePathsAndReportsRejections) {
  const std::string dir = testing::TempDir("manifest");
  const auto& item = Corpus().items[2];
  WritePpm(item.image, dir + "/img.ppm");
  {
    std::ofstream m(dir + "/m.jsonl");
    m << R"({"item_id":"ok","image_path":"img.ppm","meta_text":")" << item.meta_text
      << "\"}\n";
    m << R"({"item_id":"nokw","image_path":"img.ppm","meta_text":"mystery"})" << "\n";
    m << R"({"item_id":"noimg","image_path":"missing.ppm","meta_text":"skirt"})" << "\n";
  }
  const auto entries = LoadManifest(dir + "/m.jsonl");
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_EQ(entries[0].image_path, dir + "/img.ppm");
  InvertedIndex index(Corpus().taxonomy, {});
  const auto report = IngestManifest(entries, Corpus().keywords, Corpus().models, index);
  EXPECT_EQ(report.inserted, 1u);
  ASSERT_EQ(report.rejected.size(), 2u);
  EXPECT_EQ(report.rejected[0].first, "nokw");
  EXPECT_EQ(report.rejected[1].first, "noimg");
}

QueryRequest ImageQuery(const synthetic::CatalogueItem& item, QueryOption option) {
  QueryRequest r;
  r.option = option;
  r.image = item.image;
  r.feature = item.feature;
  r.image_id = item.item_id;
  return r;
}

TEST(QueryTest, GuidedResultsStayInCategory) {
  const auto& c = Corpus();
  for (const auto& item : c.items) {
    auto r = ImageQuery(item, QueryOption::kGuided);
    r.guided_category = "blouse";
    r.k = 50;
    const auto result = RunQuery(r, c.models, *c.index);
    EXPECT_EQ(result.sequence.symbols[0], c.taxonomy->CategoryIndex("blouse"));
    ASSERT_FALSE(result.hits.empty());
    for (const auto& h : result.hits) {
      EXPECT_EQ(c.index->Find(h.item_id)->category, c.taxonomy->CategoryIndex("blouse"));
    }
  }
}

TEST(QueryTest, FullImageRoiMatchesAutomaticFallback) {
  const auto& c = Corpus();
  const auto models = ModelsWith(nullptr);
  for (size_t i = 0; i < 20; ++i) {
    const auto& item = c.items[i];
    auto auto_req = ImageQuery(item, QueryOption::kAutomatic);
    auto roi_req = ImageQuery(item, QueryOption::kUserRoi);
    roi_req.roi = FullImageBox(item.image);
    const auto a = RunQuery(auto_req, models, *c.index);
    const auto b = RunQuery(roi_req, models, *c.index);
    EXPECT_EQ(a.hits, b.hits);
    EXPECT_EQ(a.roi, b.roi);
  }
}

TEST(QueryTest, DifferentGuideGivesDisjointCategories) {
  const auto& c = Corpus();
  const auto& item = c.items[3];
  auto r1 = ImageQuery(item, QueryOption::kAutomatic);
  r1.k = 100;
  const auto automatic = RunQuery(r1, c.models, *c.index);
  auto r2 = ImageQuery(item, QueryOption::kGuided);
  r2.k = 100;
  r2.guided_category =
      c.taxonomy->SymbolName((automatic.category + 1) % c.taxonomy->num_categories());
  const auto guided = RunQuery(r2, c.models, *c.index);
  std::set<SymbolId> a, b;
  for (const auto& h : automatic.hits) a.insert(c.index->Find(h.item_id)->category);
  for (const auto& h : guided.hits) b.insert(c.index->Find(h.item_id)->category);
  ASSERT_FALSE(a.empty());
  ASSERT_FALSE(b.empty());
  for (SymbolId s : a) EXPECT_EQ(b.count(s), 0u);
}

TEST(QueryTest, AutomaticFindsTheSameItemFirst) {
  // The model was trained on these items, so its category guess and the
  // identical features should surface the item itself at rank one.
  const auto& c = Corpus();
  size_t top1 = 0;
  for (const auto& item : c.items) {
    const auto result = RunQuery(ImageQuery(item, QueryOption::kAutomatic), c.models, *c.index);
    top1 += !result.hits.empty() && result.hits[0].item_id == item.item_id;
  }
  EXPECT_GE(top1, c.items.size() * 8 / 10);
}

TEST(QueryTest, UserRoiDrivesHistogram) {
  const auto& c = Corpus();
  const auto& item = c.items[1];
  auto r = ImageQuery(item, QueryOption::kUserRoi);
  r.roi = item.garment;
  const auto result = RunQuery(r, c.models, *c.index);
  EXPECT_EQ(result.roi, item.garment);
}

TEST(QueryTest, FeatureOnlyQueryUsesAppearanceAlone) {
  const auto& c = Corpus();
  QueryRequest r;
  r.option = QueryOption::kGuided;
  r.feature = c.items[5].feature;
  r.guided_category = c.items[5].category;
  const auto result = RunQuery(r, c.models, *c.index);
  EXPECT_FALSE(result.roi.has_value());
  ASSERT_FALSE(result.hits.empty());
  EXPECT_EQ(result.hits[0].item_id, c.items[5].item_id);
  EXPECT_EQ(result.hits[0].distance, 0.0);
}

TEST(QueryTest, MalformedRequestsRejected) {
  const auto& c = Corpus();
  const auto& item = c.items[0];
  auto expect_invalid = [&](QueryRequest r) {
    try {
      RunQuery(r, c.models, *c.index);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument) << e.what();
    }
  };
  auto r = ImageQuery(item, QueryOption::kGuided);
  expect_invalid(r);  // no guide
  r.guided_category = "hat";
  expect_invalid(r);
  r.guided_category = "top";  // attribute, not a category
  expect_invalid(r);
  auto a = ImageQuery(item, QueryOption::kAutomatic);
  a.roi = Box{0, 0, 2, 2};
  expect_invalid(a);
  auto u = ImageQuery(item, QueryOption::kUserRoi);
  expect_invalid(u);  // no ROI
  u.roi = Box{40, 40, 20, 20};
  expect_invalid(u);  // outside the image
  auto k = ImageQuery(item, QueryOption::kAutomatic);
  k.k = 0;
  expect_invalid(k);
  QueryRequest empty;
  expect_invalid(empty);
  auto dims = ImageQuery(item, QueryOption::kAutomatic);
  dims.feature = DenseFeature(10, 1.0f);
  expect_invalid(dims);
}

}  // namespace
}  // namespace fpsearch
