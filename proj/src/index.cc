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

#include "fpsearch/index.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "fpsearch/binary_io.h"
#include "fpsearch/error.h"
#include "fpsearch/kernels.h"

namespace fpsearch {

bool RanksBefore(const SearchHit& a, const SearchHit& b) {
  if (a.match_count != b.match_count) return a.match_count > b.match_count;
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.item_id < b.item_id;
}

InvertedIndex::InvertedIndex(std::shared_ptr<const Taxonomy> taxonomy,
                             IndexConfig config)
    : taxonomy_(std::move(taxonomy)), config_(config) {
  FPS_CHECK_ARG(taxonomy_ != nullptr, "index needs a taxonomy");
  taxonomy_->RequireValid();
  FPS_CHECK_ARG(config_.code_bits > 0, "code length must be positive");
  FPS_CHECK_ARG(config_.bins.total() > 0, "histogram bin counts must be positive");
}

std::vector<SymbolId> InvertedIndex::KeySet(const ItemRecord& item) const {
  std::vector<SymbolId> keys = item.attributes;
  keys.push_back(item.category);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

void InvertedIndex::ValidateRecord(const ItemRecord& item) const {
  const std::string who = "item '" + item.item_id + "': ";
  FPS_CHECK_ARG(!item.item_id.empty(), "item id must not be empty");
  FPS_CHECK_ARG(taxonomy_->IsCategory(item.category),
                who + "category symbol " + std::to_string(item.category) +
                    " is not a category");
  std::set<SymbolId> seen;
  for (SymbolId a : item.attributes) {
    FPS_CHECK_ARG(a < taxonomy_->eos(), who + "attribute symbol " +
                                            std::to_string(a) + " out of range");
    FPS_CHECK_ARG(taxonomy_->IsApplicable(item.category, a),
                  who + "attribute '" + taxonomy_->SymbolName(a) +
                      "' does not apply to category '" +
                      taxonomy_->SymbolName(item.category) + "'");
    FPS_CHECK_ARG(seen.insert(a).second,
                  who + "duplicate attribute '" + taxonomy_->SymbolName(a) + "'");
  }
  FPS_CHECK_ARG(item.code.size() == config_.code_bits,
                who + "code has " + std::to_string(item.code.size()) +
                    " bits, index expects " + std::to_string(config_.code_bits));
  FPS_CHECK_ARG(item.histogram.bins.size() == config_.bins.total(),
                who + "histogram has " + std::to_string(item.histogram.bins.size()) +
                    " bins, index expects " + std::to_string(config_.bins.total()));
  double sum = 0.0;
  for (double b : item.histogram.bins) {
    FPS_CHECK_ARG(std::isfinite(b) && b >= 0.0, who + "negative histogram bin");
    sum += b;
  }
  FPS_CHECK_ARG(item.histogram.normalized && std::abs(sum - 1.0) <= 1e-9,
                who + "histogram is not normalized");
  FPS_CHECK_ARG(item.roi.w > 0 && item.roi.h > 0, who + "ROI has zero area");
}

void InvertedIndex::Insert(ItemRecord item) {
  if (store_.count(item.item_id)) {
    Throw(ErrorCode::kAlreadyExists, "item '" + item.item_id + "' already indexed");
  }
  ValidateRecord(item);
  for (SymbolId key : KeySet(item)) {
    auto& list = postings_[key];
    list.insert(std::lower_bound(list.begin(), list.end(), item.item_id),
                item.item_id);
  }
  std::string id = item.item_id;
  store_.emplace(std::move(id), std::move(item));
}

void InvertedIndex::Remove(std::string_view item_id) {
  auto it = store_.find(item_id);
  if (it == store_.end()) {
    Throw(ErrorCode::kNotFound, "item '" + std::string(item_id) + "' not indexed");
  }
  for (SymbolId key : KeySet(it->second)) {
    auto pit = postings_.find(key);
    auto& list = pit->second;
    auto pos = std::lower_bound(list.begin(), list.end(), item_id);
    list.erase(pos);
    if (list.empty()) postings_.erase(pit);
  }
  store_.erase(it);
}

const ItemRecord* InvertedIndex::Find(std::string_view item_id) const {
  auto it = store_.find(item_id);
  return it == store_.end() ? nullptr : &it->second;
}

void InvertedIndex::ValidateQuerySymbols(std::span<const SymbolId> attrs,
                                         std::optional<SymbolId> guided) const {
  for (SymbolId a : attrs) {
    FPS_CHECK_ARG(a < taxonomy_->eos(),
                  "unknown query attribute symbol " + std::to_string(a));
  }
  if (guided) {
    FPS_CHECK_ARG(taxonomy_->IsCategory(*guided),
                  "guided symbol " + std::to_string(*guided) + " is not a category");
  }
}

std::vector<Candidate> InvertedIndex::Candidates(
    std::span<const SymbolId> query_attributes,
    std::optional<SymbolId> guided_category) const {
  ValidateQuerySymbols(query_attributes, guided_category);
  std::vector<SymbolId> query(query_attributes.begin(), query_attributes.end());
  std::sort(query.begin(), query.end());
  query.erase(std::unique(query.begin(), query.end()), query.end());

  std::vector<std::string_view> ids;
  auto add_list = [&](SymbolId key) {
    auto it = postings_.find(key);
    if (it == postings_.end()) return;
    std::vector<std::string_view> merged;
    merged.reserve(ids.size() + it->second.size());
    std::set_union(ids.begin(), ids.end(), it->second.begin(), it->second.end(),
                   std::back_inserter(merged));
    ids = std::move(merged);
  };
  if (guided_category) {
    add_list(*guided_category);
  } else {
    for (SymbolId a : query) add_list(a);
  }

  std::vector<Candidate> out;
  out.reserve(ids.size());
  for (std::string_view id : ids) {
    const ItemRecord& item = store_.find(id)->second;
    uint32_t matches = 0;
    for (SymbolId key : KeySet(item)) {
      matches += std::binary_search(query.begin(), query.end(), key) ? 1 : 0;
    }
    out.push_back({std::string(id), matches});
  }
  return out;
}

std::vector<SearchHit> InvertedIndex::Search(const SearchQuery& query, size_t k,
                                             const DistanceWeights& weights) const {
  FPS_CHECK_ARG(k >= 1, "k must be at least 1");
  FPS_CHECK_ARG(query.code.size() == config_.code_bits,
                "query code has " + std::to_string(query.code.size()) +
                    " bits, index expects " + std::to_string(config_.code_bits));
  FPS_CHECK_ARG(query.histogram.bins.size() == config_.bins.total(),
                "query histogram has " + std::to_string(query.histogram.bins.size()) +
                    " bins, index expects " + std::to_string(config_.bins.total()));
  FPS_CHECK_ARG(weights.appearance >= 0.0 && weights.appearance <= 1.0,
                "appearance weight must lie in [0, 1]");

  auto cands = Candidates(query.attributes, query.guided_category);
  if (cands.empty()) return {};

  std::vector<kernels::CandidateView> views;
  views.reserve(cands.size());
  for (const auto& c : cands) {
    const ItemRecord& item = store_.find(c.item_id)->second;
    views.push_back({&item.code, &item.histogram});
  }
  std::vector<double> dist(cands.size());
  kernels::ScoreCandidates(query.code, query.histogram, views, weights, dist);

  std::vector<SearchHit> hits;
  hits.reserve(cands.size());
  for (size_t i = 0; i < cands.size(); ++i) {
    hits.push_back({std::move(cands[i].item_id), dist[i], cands[i].match_count});
  }
  const size_t n = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n),
                    hits.end(), RanksBefore);
  hits.resize(n);
  return hits;
}

std::optional<std::string> InvertedIndex::CheckConsistency() const {
  std::map<SymbolId, std::vector<std::string>> rebuilt;
  for (const auto& [id, item] : store_) {
    if (id != item.item_id) return "store key '" + id + "' holds item '" + item.item_id + "'";
    for (SymbolId key : KeySet(item)) rebuilt[key].push_back(id);
  }
  if (rebuilt != postings_) return std::string("postings differ from rebuild");
  return std::nullopt;
}

std::vector<uint8_t> InvertedIndex::Serialize() const {
  ByteWriter w;
  w.Magic("FPSI");
  w.U32(kSnapshotVersion);
  w.Bytes(taxonomy_->content_hash());
  w.U32(config_.code_bits);
  w.U32(config_.bins.hue);
  w.U32(config_.bins.saturation);
  w.U32(config_.bins.value);
  w.U64(store_.size());
  for (const auto& [id, item] : store_) {
    w.String(item.item_id);
    w.U32(item.category);
    w.U32(static_cast<uint32_t>(item.attributes.size()));
    for (SymbolId a : item.attributes) w.U32(a);
    for (uint64_t word : item.code.words()) w.U64(word);
    for (double b : item.histogram.bins) w.F64(b);
    w.U32(item.roi.x);
    w.U32(item.roi.y);
    w.U32(item.roi.w);
    w.U32(item.roi.h);
    w.String(item.meta_text);
  }
  auto digest = Sha256(w.data());
  w.Bytes(digest);
  return w.Release();
}

InvertedIndex InvertedIndex::Deserialize(std::span<const uint8_t> bytes,
                                         std::shared_ptr<const Taxonomy> taxonomy) {
  ByteReader head(bytes);
  head.ExpectMagic("FPSI", "index snapshot");
  const uint32_t version = head.U32();
  if (version != kSnapshotVersion) {
    Throw(ErrorCode::kFailedPrecondition,
          "unsupported snapshot version " + std::to_string(version));
  }
  Sha256Digest hash;
  head.Bytes(hash);
  if (hash != taxonomy->content_hash()) {
    Throw(ErrorCode::kFailedPrecondition,
          "snapshot was built for a different taxonomy (hash " + ToHex(hash) + ")");
  }
  if (bytes.size() < head.position() + 32) {
    Throw(ErrorCode::kDataLoss, "snapshot truncated");
  }
  const auto body = bytes.first(bytes.size() - 32);
  Sha256Digest trailer;
  std::copy(bytes.end() - 32, bytes.end(), trailer.begin());
  if (Sha256(body) != trailer) {
    Throw(ErrorCode::kDataLoss, "snapshot checksum mismatch (corrupt or truncated)");
  }

  ByteReader r(body);
  r.ExpectMagic("FPSI", "index snapshot");
  r.U32();
  r.Bytes(hash);
  IndexConfig config;
  config.code_bits = r.U32();
  config.bins.hue = r.U32();
  config.bins.saturation = r.U32();
  config.bins.value = r.U32();
  if (config.code_bits == 0 || config.code_bits > (1u << 20) ||
      config.bins.total() == 0 || config.bins.total() > (1u << 20)) {
    Throw(ErrorCode::kDataLoss, "snapshot has implausible configuration");
  }
  InvertedIndex index(std::move(taxonomy), config);
  const uint64_t count = r.U64();
  const size_t words = (config.code_bits + 63) / 64;
  for (uint64_t i = 0; i < count; ++i) {
    ItemRecord item;
    item.item_id = r.String();
    item.category = r.U32();
    const uint32_t n_attr = r.U32();
    r.Require(size_t{n_attr} * 4);
    item.attributes.resize(n_attr);
    for (auto& a : item.attributes) a = r.U32();
    r.Require(words * 8);
    std::vector<uint64_t> code_words(words);
    for (auto& wd : code_words) wd = r.U64();
    try {
      item.code = BinaryCode(config.code_bits, std::move(code_words));
    } catch (const Error& e) {
      Throw(ErrorCode::kDataLoss, std::string("corrupt code: ") + e.what());
    }
    r.Require(size_t{config.bins.total()} * 8);
    item.histogram.bins.resize(config.bins.total());
    for (auto& b : item.histogram.bins) b = r.F64();
    item.histogram.normalized = true;
    item.roi = {r.U32(), r.U32(), r.U32(), r.U32()};
    item.meta_text = r.String();
    try {
      index.Insert(std::move(item));
    } catch (const Error& e) {
      Throw(ErrorCode::kDataLoss, std::string("invalid record in snapshot: ") + e.what());
    }
  }
  if (r.remaining() != 0) Throw(ErrorCode::kDataLoss, "trailing bytes in snapshot");
  return index;
}

void InvertedIndex::Save(const std::string& path) const {
  WriteFileBytes(path, Serialize());
}

InvertedIndex InvertedIndex::Load(const std::string& path,
                                  std::shared_ptr<const Taxonomy> taxonomy) {
  return Deserialize(ReadFileBytes(path), std::move(taxonomy));
}

}  // namespace fpsearch
