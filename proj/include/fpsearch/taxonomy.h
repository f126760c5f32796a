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

#ifndef FPSEARCH_TAXONOMY_H_
#define FPSEARCH_TAXONOMY_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fpsearch/binary_io.h"

namespace fpsearch {

// Reserved end-of-sequence symbol. Taxonomy files may not use it.
inline constexpr std::string_view kEosSymbol = "<EOS>";

using SymbolId = uint32_t;

struct AttributeGroup {
  std::string name;
  std::vector<std::string> classes;
  // Empty means the group applies to every category.
  std::vector<std::string> applicable_categories;
};

// Ordered group positions that a sequence for `category` visits; the
// category symbol itself is always position 0.
struct SequenceTemplate {
  SymbolId category = 0;
  std::vector<size_t> groups;
};

// Attribute vocabulary. Symbol layout is dense and fixed:
//   [0, C)           categories, in file order
//   [C, C + A)       attribute classes, group by group in file order
//   C + A            EOS
// so vocab_size() = C + A + 1 and EOS is always the last index.
class Taxonomy {
 public:
  Taxonomy() = default;
  Taxonomy(std::vector<std::string> categories,
           std::vector<AttributeGroup> groups);

  static Taxonomy FromJson(std::string_view json_text);
  static Taxonomy Load(const std::string& path);
  std::string ToJson() const;

  // Violations as human-readable lines; empty means valid.
  std::vector<std::string> Validate() const;
  // Throws kFailedPrecondition listing the violations.
  void RequireValid() const;

  const std::vector<std::string>& categories() const { return categories_; }
  const std::vector<AttributeGroup>& groups() const { return groups_; }

  uint32_t num_categories() const {
    return static_cast<uint32_t>(categories_.size());
  }
  uint32_t num_attributes() const { return num_attributes_; }
  uint32_t vocab_size() const { return num_categories() + num_attributes_ + 1; }
  SymbolId eos() const { return vocab_size() - 1; }

  bool IsCategory(SymbolId s) const { return s < num_categories(); }
  bool IsAttribute(SymbolId s) const {
    return s >= num_categories() && s < eos();
  }

  // Throws kNotFound for unknown symbols.
  SymbolId SymbolIndex(std::string_view symbol) const;
  std::optional<SymbolId> FindSymbol(std::string_view symbol) const;
  const std::string& SymbolName(SymbolId id) const;
  SymbolId CategoryIndex(std::string_view category) const;

  // Group owning an attribute symbol. Requires IsAttribute(s).
  size_t GroupOf(SymbolId s) const;
  bool GroupAppliesTo(size_t group, SymbolId category) const;
  // True for the category itself and for attributes whose group applies.
  bool IsApplicable(SymbolId category, SymbolId symbol) const;

  SequenceTemplate Template(std::string_view category) const;

  // SHA-256 of the canonical JSON form. Stamped into checkpoints and index
  // snapshots to bind them to a vocabulary.
  const Sha256Digest& content_hash() const { return hash_; }

 private:
  void Rebuild();

  std::vector<std::string> categories_;
  std::vector<AttributeGroup> groups_;
  uint32_t num_attributes_ = 0;
  std::vector<std::string> symbols_;
  std::vector<uint32_t> group_of_;  // indexed by symbol - num_categories
  std::vector<std::vector<bool>> applies_;  // [group][category]
  std::unordered_map<std::string, SymbolId> index_;
  Sha256Digest hash_{};
};

}  // namespace fpsearch

#endif  // FPSEARCH_TAXONOMY_H_
