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

#ifndef FPSEARCH_PIPELINE_H_
#define FPSEARCH_PIPELINE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fpsearch/attrseq.h"
#include "fpsearch/index.h"
#include "fpsearch/roi.h"
#include "fpsearch/taxonomy.h"
#include "fpsearch/visfeat.h"

namespace fpsearch {

struct KeywordEntry {
  std::string keyword;  // lowercase
  std::string category;
};

// Ordered keyword -> category table used to read seller intent out of the
// listing text.
class KeywordTable {
 public:
  KeywordTable() = default;
  // Lowercases keywords; throws on empty or duplicate keywords.
  explicit KeywordTable(std::vector<KeywordEntry> entries);

  static KeywordTable FromJson(std::string_view text);
  static KeywordTable Load(const std::string& path);

  const std::vector<KeywordEntry>& entries() const { return entries_; }
  // Throws kFailedPrecondition when a category is unknown to `taxonomy`.
  void CheckAgainst(const Taxonomy& taxonomy) const;

 private:
  std::vector<KeywordEntry> entries_;
};

// Case-insensitive substring scan. The longest matching keyword wins; equal
// lengths resolve to the earlier table entry.
std::optional<std::string> ExtractCategory(std::string_view meta_text,
                                           const KeywordTable& table);

// Reduces a dense appearance feature to the sequence model's input size by
// mean-pooling contiguous blocks.
Vector ModelInput(std::span<const float> dense, uint32_t model_dim);

inline constexpr uint64_t kFallbackProjectionSeed = 0x5eed5eedULL;
inline constexpr uint32_t kFallbackGrid = 4;

// Stand-in appearance feature for images without a precomputed descriptor:
// per-block mean RGB over a 4x4 grid, centred, then projected to `dim` by a
// fixed seeded Gaussian matrix.
DenseFeature FallbackFeature(const Image& image, uint32_t dim);

struct PipelineModels {
  std::shared_ptr<const Taxonomy> taxonomy;
  std::shared_ptr<const SeqModelParams> model;
  std::shared_ptr<const Detector> detector;  // null: no detections
  size_t max_length = 12;
};

// Guided generation restricted to what the index accepts: the category
// first, then generated attributes that apply to it. EOS dropped.
std::vector<SymbolId> IndexableAttributes(const Taxonomy& taxonomy,
                                          SymbolId category,
                                          std::span<const SymbolId> generated);

struct IngestInput {
  std::string item_id;
  Image image;
  std::string meta_text;
  std::optional<DenseFeature> feature;
  std::optional<std::string> category;  // overrides keyword extraction
};

// Builds the record without touching the index. Throws kInvalidArgument
// when no category can be resolved.
ItemRecord BuildRecord(const IngestInput& input, const KeywordTable& keywords,
                       const PipelineModels& models, const IndexConfig& config);

// BuildRecord + insert. A rejected item leaves the index unchanged.
ItemRecord Ingest(const IngestInput& input, const KeywordTable& keywords,
                  const PipelineModels& models, InvertedIndex& index);

enum class QueryOption { kAutomatic = 1, kGuided = 2, kUserRoi = 3 };

struct QueryRequest {
  QueryOption option = QueryOption::kAutomatic;
  std::optional<Image> image;
  std::optional<DenseFeature> feature;
  std::optional<std::string> guided_category;
  std::optional<Box> roi;
  std::string image_id;  // lets a fixture detector recognise the image
  size_t k = 10;
  DistanceWeights weights;
};

struct QueryResult {
  std::vector<SearchHit> hits;
  AttributeSequence sequence;  // as generated, EOS-terminated
  SymbolId category = 0;
  std::optional<Box> roi;  // absent for feature-only queries
};

// Throws kInvalidArgument when option and fields disagree.
void ValidateRequest(const QueryRequest& request);

QueryResult RunQuery(const QueryRequest& request, const PipelineModels& models,
                     const InvertedIndex& index);

struct ManifestEntry {
  std::string item_id;
  std::string image_path;
  std::string meta_text;
  std::optional<std::string> feature_path;
  std::optional<std::string> category;
};

// JSON Lines manifest; relative paths resolve against the manifest folder.
std::vector<ManifestEntry> LoadManifest(const std::string& path);

struct IngestReport {
  size_t inserted = 0;
  std::vector<std::pair<std::string, std::string>> rejected;  // id, reason
};

// Decodes images and features in parallel, then inserts in manifest order.
IngestReport IngestManifest(const std::vector<ManifestEntry>& entries,
                            const KeywordTable& keywords,
                            const PipelineModels& models, InvertedIndex& index);

}  // namespace fpsearch

#endif  // FPSEARCH_PIPELINE_H_
