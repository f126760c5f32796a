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

#ifndef FPSEARCH_SYNTHETIC_H_
#define FPSEARCH_SYNTHETIC_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fpsearch/attrseq.h"
#include "fpsearch/random.h"
#include "fpsearch/roi.h"
#include "fpsearch/taxonomy.h"
#include "fpsearch/visfeat.h"

// Deterministic synthetic catalogue used by the demo fixture, the tests and
// the acceptance suite. Image features are sums of per-symbol prototype
// vectors, so an item's attribute sequence is a fixed function of its
// feature and a small model can learn it.
namespace fpsearch::synthetic {

// Category first, then one class for a random subset of the applicable
// groups in taxonomy order, then EOS.
std::vector<SymbolId> SampleSequence(const Taxonomy& taxonomy, Rng& rng,
                                     std::optional<SymbolId> category = {});

// vocab x dim Gaussian prototypes.
Matrix SymbolPrototypes(const Taxonomy& taxonomy, uint32_t dim, uint64_t seed);

Vector PrototypeFeature(const Matrix& prototypes, const std::vector<SymbolId>& seq,
                        double noise, Rng& rng);

// Repeats each entry over the block ModelInput() would pool back together.
DenseFeature Upsample(const Vector& model_feature, uint32_t dense_dim);

std::vector<SeqExample> MakeSequenceDataset(const Taxonomy& taxonomy, size_t n,
                                            uint32_t feature_dim, uint64_t seed);

struct CatalogueItem {
  std::string item_id;
  std::string category;
  std::vector<SymbolId> sequence;  // ground-truth attributes
  Image image;
  Box garment;
  std::string meta_text;
  DenseFeature feature;
};

struct CatalogueOptions {
  size_t num_items = 40;
  uint32_t image_size = 48;
  uint32_t model_dim = 64;
  uint32_t dense_dim = kDefaultFeatureDim;
  uint64_t seed = 7;
};

std::vector<CatalogueItem> MakeCatalogue(const Taxonomy& taxonomy,
                                         const CatalogueOptions& options);

// One true box per item plus, for every second item, a higher-scoring box
// of a different category elsewhere in the image.
DetectionsByImage MakeDetections(const Taxonomy& taxonomy,
                                 const std::vector<CatalogueItem>& items,
                                 uint64_t seed);

// Writes images/, features/, manifest.jsonl, detections.jsonl,
// ground_truth.jsonl and sequences.jsonl under `dir`. Sequence features are
// the dense features pooled to `model_dim`; every tenth item goes to
// validation and the one after it to test.
void WriteCatalogue(const Taxonomy& taxonomy,
                    const std::vector<CatalogueItem>& items,
                    const DetectionsByImage& detections, const std::string& dir,
                    uint32_t model_dim = 64);

}  // namespace fpsearch::synthetic

#endif  // FPSEARCH_SYNTHETIC_H_
