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

#include "fixtures.h"

#include <algorithm>
#include <filesystem>
#include <set>

#include <unistd.h>

#include "fpsearch/error.h"

namespace fpsearch::testing {

std::string DataPath(const std::string& name) {
  return std::string(FPSEARCH_DATA_DIR) + "/" + name;
}

std::shared_ptr<const Taxonomy> FashionTaxonomy() {
  static const auto tax =
      std::make_shared<const Taxonomy>(Taxonomy::Load(DataPath("taxonomy.json")));
  return tax;
}

std::shared_ptr<const Taxonomy> TinyTaxonomy() {
  return std::make_shared<const Taxonomy>(Taxonomy(
      {"pants", "skirt"},
      {AttributeGroup{"gender", {"male", "female"}, {}},
       AttributeGroup{"length", {"mini", "knee"}, {"skirt"}}}));
}

Taxonomy VocabThreeTaxonomy() {
  return Taxonomy({"cat"}, {AttributeGroup{"g", {"attr"}, {}}});
}

BinaryCode RandomCode(Rng& rng, size_t bits) {
  BinaryCode c(bits);
  for (size_t i = 0; i < bits; ++i) c.Set(i, rng.NextU64() & 1u);
  return c;
}

ColorHistogram RandomHistogram(Rng& rng, const HistogramBins& bins) {
  ColorHistogram h;
  h.bins.assign(bins.total(), 0.0);
  // A few integer counts so equal histograms are likely across items.
  const uint32_t n = 4;
  for (uint32_t i = 0; i < n; ++i) h.bins[rng.Below(std::min<uint32_t>(bins.total(), 6))] += 1.0 / n;
  h.normalized = true;
  return h;
}

ItemRecord RandomItem(const Taxonomy& taxonomy, Rng& rng, std::string id,
                      const IndexConfig& config, uint32_t code_pool) {
  ItemRecord r;
  r.item_id = std::move(id);
  r.category = static_cast<SymbolId>(rng.Below(taxonomy.num_categories()));
  for (SymbolId s = taxonomy.num_categories(); s < taxonomy.eos(); ++s) {
    if (taxonomy.IsApplicable(r.category, s) && rng.Uniform() < 0.3) r.attributes.push_back(s);
  }
  if (code_pool == 0) {
    r.code = RandomCode(rng, config.code_bits);
  } else {
    Rng pool(1000 + rng.Below(code_pool));
    r.code = RandomCode(pool, config.code_bits);
  }
  r.histogram = RandomHistogram(rng, config.bins);
  r.roi = {0, 0, 1 + static_cast<uint32_t>(rng.Below(64)), 1 + static_cast<uint32_t>(rng.Below(64))};
  r.meta_text = "item " + r.item_id;
  return r;
}

SearchQuery RandomQuery(const Taxonomy& taxonomy, Rng& rng, const IndexConfig& config,
                        bool guided) {
  SearchQuery q;
  q.code = RandomCode(rng, config.code_bits);
  q.histogram = RandomHistogram(rng, config.bins);
  const size_t n = 1 + rng.Below(4);
  std::set<SymbolId> attrs;
  for (size_t i = 0; i < n; ++i) {
    attrs.insert(static_cast<SymbolId>(rng.Below(taxonomy.eos())));
  }
  q.attributes.assign(attrs.begin(), attrs.end());
  if (guided) q.guided_category = static_cast<SymbolId>(rng.Below(taxonomy.num_categories()));
  return q;
}

InvertedIndex RandomIndex(std::shared_ptr<const Taxonomy> taxonomy, size_t n,
                          uint64_t seed, const IndexConfig& config, uint32_t code_pool) {
  InvertedIndex index(taxonomy, config);
  Rng rng(seed);
  for (size_t i = 0; i < n; ++i) {
    index.Insert(RandomItem(*taxonomy, rng, "i" + std::to_string(i), config, code_pool));
  }
  return index;
}

GuidedRoiFixture MakeGuidedRoiFixture() {
  GuidedRoiFixture f;
  f.ground_truth = {{"img-a", {0, 0, 20, 20}, "pants"},
                    {"img-b", {10, 10, 20, 20}, "skirt"}};
  f.predictions["img-a"] = {{{1, 0, 20, 20}, "pants", 0.8},
                            {{30, 30, 10, 10}, "skirt", 0.9}};
  f.predictions["img-b"] = {{{10, 11, 20, 20}, "skirt", 0.7}};
  f.guides = {{"img-a", "pants"}, {"img-b", "skirt"}};
  return f;
}

DetectionsByImage ApplyGuides(const DetectionsByImage& predictions,
                              const std::map<std::string, std::string>& guides) {
  DetectionsByImage out;
  for (const auto& [image, dets] : predictions) {
    auto it = guides.find(image);
    out[image] = GuidedFilter(dets, it == guides.end() ? std::nullopt
                                                       : std::optional(it->second));
  }
  return out;
}

std::map<std::string, std::string> GuidesFromGroundTruth(
    const std::vector<GroundTruthBox>& ground_truth) {
  std::map<std::string, std::set<std::string>> cats;
  for (const auto& g : ground_truth) cats[g.image_id].insert(g.category);
  std::map<std::string, std::string> out;
  for (const auto& [image, set] : cats) {
    if (set.size() == 1) out[image] = *set.begin();
  }
  return out;
}

std::string TempDir(const std::string& name) {
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() / ("fpsearch_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

FixtureCorpus MakeFixtureCorpus(const std::string& dir, size_t num_items,
                                size_t train_epochs) {
  FixtureCorpus c;
  c.dir = dir;
  c.taxonomy = FashionTaxonomy();
  c.taxonomy_path = DataPath("taxonomy.json");
  c.keywords_path = DataPath("keywords.json");
  c.manifest_path = dir + "/manifest.jsonl";
  c.detections_path = dir + "/detections.jsonl";
  c.checkpoint_path = dir + "/model.fpsm";
  c.index_path = dir + "/index.fpsi";

  synthetic::CatalogueOptions opts;
  opts.num_items = num_items;
  c.items = synthetic::MakeCatalogue(*c.taxonomy, opts);
  const auto dets = synthetic::MakeDetections(*c.taxonomy, c.items, 5);
  synthetic::WriteCatalogue(*c.taxonomy, c.items, dets, dir, opts.model_dim);

  const auto data = LoadSequenceDataset(dir + "/sequences.jsonl", *c.taxonomy);
  TrainConfig cfg;
  cfg.max_epochs = train_epochs;
  cfg.patience = train_epochs;
  auto trained = Train(
      SeqModelParams::Random(DimsForTaxonomy(*c.taxonomy, opts.model_dim, 16, 32), 3),
      data.train, {}, cfg);
  SaveCheckpoint(trained.params, *c.taxonomy, c.checkpoint_path);

  c.models.taxonomy = c.taxonomy;
  c.models.model = std::make_shared<const SeqModelParams>(std::move(trained.params));
  c.models.detector =
      std::make_shared<const FixtureDetector>(FixtureDetector::Load(c.detections_path));
  c.keywords = KeywordTable::Load(c.keywords_path);
  c.index = std::make_shared<InvertedIndex>(c.taxonomy, IndexConfig{});
  const auto report = IngestManifest(LoadManifest(c.manifest_path), c.keywords, c.models,
                                     *c.index);
  if (!report.rejected.empty()) {
    Throw(ErrorCode::kInternal, "fixture ingest rejected " + report.rejected[0].first +
                                    ": " + report.rejected[0].second);
  }
  c.index->Save(c.index_path);
  return c;
}

}  // namespace fpsearch::testing
