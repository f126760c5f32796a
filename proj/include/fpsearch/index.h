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

#ifndef FPSEARCH_INDEX_H_
#define FPSEARCH_INDEX_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpsearch/taxonomy.h"
#include "fpsearch/visfeat.h"

namespace fpsearch {

struct ItemRecord {
  std::string item_id;
  SymbolId category = 0;
  // Attribute symbols in generation order. May contain the category symbol
  // itself (the pipeline stores the full generated sequence minus EOS).
  std::vector<SymbolId> attributes;
  BinaryCode code;
  ColorHistogram histogram;
  Box roi;
  std::string meta_text;
};

struct IndexConfig {
  uint32_t code_bits = kDefaultFeatureDim;
  HistogramBins bins;
};

struct Candidate {
  std::string item_id;
  uint32_t match_count = 0;
};

struct SearchQuery {
  BinaryCode code;
  ColorHistogram histogram;
  std::vector<SymbolId> attributes;
  std::optional<SymbolId> guided_category;
};

struct SearchHit {
  std::string item_id;
  double distance = 0.0;
  uint32_t match_count = 0;

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

// Total order used to rank hits: more matching attributes first, then
// smaller combined distance, then smaller item id.
bool RanksBefore(const SearchHit& a, const SearchHit& b);

// Attribute-keyed inverted index. Each item is posted under every symbol of
// its key set (attributes plus category). Not internally synchronized: any
// number of concurrent const calls, or one mutating call.
class InvertedIndex {
 public:
  InvertedIndex(std::shared_ptr<const Taxonomy> taxonomy, IndexConfig config);

  // Throws kAlreadyExists / kInvalidArgument; the index is unchanged on
  // failure.
  void Insert(ItemRecord item);
  // Throws kNotFound.
  void Remove(std::string_view item_id);

  // Guided: every item posted under the category. Otherwise: union of the
  // postings of the query attributes. Sorted by item id; match_count counts
  // query symbols found in the item's key set.
  std::vector<Candidate> Candidates(std::span<const SymbolId> query_attributes,
                                    std::optional<SymbolId> guided_category) const;

  // Exact top-k over the candidates by RanksBefore.
  std::vector<SearchHit> Search(const SearchQuery& query, size_t k,
                                const DistanceWeights& weights) const;

  const ItemRecord* Find(std::string_view item_id) const;
  size_t size() const { return store_.size(); }
  const std::map<std::string, ItemRecord, std::less<>>& items() const { return store_; }
  const std::map<SymbolId, std::vector<std::string>>& postings() const {
    return postings_;
  }
  const IndexConfig& config() const { return config_; }
  const Taxonomy& taxonomy() const { return *taxonomy_; }
  std::shared_ptr<const Taxonomy> shared_taxonomy() const { return taxonomy_; }

  // Compares postings against a rebuild from the store. Returns a
  // description of the first inconsistency, or nullopt.
  std::optional<std::string> CheckConsistency() const;

  // Snapshot format "FPSI" v1 followed by a SHA-256 trailer over all
  // preceding bytes.
  std::vector<uint8_t> Serialize() const;
  static InvertedIndex Deserialize(std::span<const uint8_t> bytes,
                                   std::shared_ptr<const Taxonomy> taxonomy);
  void Save(const std::string& path) const;
  static InvertedIndex Load(const std::string& path,
                            std::shared_ptr<const Taxonomy> taxonomy);

 private:
  std::vector<SymbolId> KeySet(const ItemRecord& item) const;
  void ValidateRecord(const ItemRecord& item) const;
  void ValidateQuerySymbols(std::span<const SymbolId> attrs,
                            std::optional<SymbolId> guided) const;

  std::shared_ptr<const Taxonomy> taxonomy_;
  IndexConfig config_;
  std::map<std::string, ItemRecord, std::less<>> store_;
  std::map<SymbolId, std::vector<std::string>> postings_;
};

inline constexpr uint32_t kSnapshotVersion = 1;

}  // namespace fpsearch

#endif  // FPSEARCH_INDEX_H_
