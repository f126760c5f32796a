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

#ifndef FPSEARCH_TESTS_FIXTURES_H_
#define FPSEARCH_TESTS_FIXTURES_H_

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fpsearch/attrseq.h"
#include "fpsearch/index.h"
#include "fpsearch/pipeline.h"
#include "fpsearch/random.h"
#include "fpsearch/roi.h"
#include "fpsearch/synthetic.h"
#include "fpsearch/taxonomy.h"

namespace fpsearch::testing {

std::string DataPath(const std::string& name);

// data/taxonomy.json.
std::shared_ptr<const Taxonomy> FashionTaxonomy();

// Two categories (pants, skirt), one universal group and one group that
// applies to skirts only.
std::shared_ptr<const Taxonomy> TinyTaxonomy();

// One category and one attribute: vocabulary {cat, attr, EOS}.
Taxonomy VocabThreeTaxonomy();

// Random record with a random category and a random applicable attribute
// subset. Codes are drawn from a pool of `code_pool` patterns (0: fully
// random) so equal distances, and hence tie-breaks, actually occur.
ItemRecord RandomItem(const Taxonomy& taxonomy, Rng& rng, std::string id,
                      const IndexConfig& config, uint32_t code_pool = 0);
ColorHistogram RandomHistogram(Rng& rng, const HistogramBins& bins);
BinaryCode RandomCode(Rng& rng, size_t bits);
SearchQuery RandomQuery(const Taxonomy& taxonomy, Rng& rng, const IndexConfig& config,
                        bool guided);
InvertedIndex RandomIndex(std::shared_ptr<const Taxonomy> taxonomy, size_t n,
                          uint64_t seed, const IndexConfig& config,
                          uint32_t code_pool = 0);

// Two images, two categories, three detections: a correct pants box and a
// correct skirt box, plus a higher-scoring skirt box in the pants image that
// matches nothing. Boxes are offset from the truth so IoU is ~0.905.
struct GuidedRoiFixture {
  DetectionsByImage predictions;
  std::vector<GroundTruthBox> ground_truth;
  std::map<std::string, std::string> guides;  // image -> category
  // Hand-computed PR areas. Unguided: pants AP 1; skirt ranks FP then TP,
  // precision 1/2 at recall 1, AP 1/2; mAP 3/4. Guided: both APs 1.
  double unguided_map = 0.75;
  double guided_map = 1.0;
};
GuidedRoiFixture MakeGuidedRoiFixture();

DetectionsByImage ApplyGuides(const DetectionsByImage& predictions,
                              const std::map<std::string, std::string>& guides);

// Ground-truth category per image, for images whose boxes agree on one.
std::map<std::string, std::string> GuidesFromGroundTruth(
    const std::vector<GroundTruthBox>& ground_truth);

// Synthetic catalogue on disk with a briefly trained model, keyword table,
// detector fixture and ingested index snapshot.
struct FixtureCorpus {
  std::string dir;
  std::shared_ptr<const Taxonomy> taxonomy;
  std::vector<synthetic::CatalogueItem> items;
  PipelineModels models;
  KeywordTable keywords;
  std::shared_ptr<InvertedIndex> index;
  std::string taxonomy_path, keywords_path, manifest_path, detections_path,
      checkpoint_path, index_path;
};
FixtureCorpus MakeFixtureCorpus(const std::string& dir, size_t num_items,
                                size_t train_epochs = 40);

std::string TempDir(const std::string& name);

}  // namespace fpsearch::testing

#endif  // FPSEARCH_TESTS_FIXTURES_H_
