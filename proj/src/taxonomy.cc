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

#include "fpsearch/taxonomy.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fpsearch/error.h"

namespace fpsearch {

using nlohmann::json;

Taxonomy::Taxonomy(std::vector<std::string> categories,
                   std::vector<AttributeGroup> groups)
    : categories_(std::move(categories)), groups_(std::move(groups)) {
  Rebuild();
}

void Taxonomy::Rebuild() {
  num_attributes_ = 0;
  for (const auto& g : groups_) {
    num_attributes_ += static_cast<uint32_t>(g.classes.size());
  }
  symbols_.clear();
  group_of_.clear();
  index_.clear();
  symbols_.reserve(vocab_size());
  for (const auto& c : categories_) symbols_.push_back(c);
  for (size_t gi = 0; gi < groups_.size(); ++gi) {
    for (const auto& cls : groups_[gi].classes) {
      symbols_.push_back(cls);
      group_of_.push_back(static_cast<uint32_t>(gi));
    }
  }
  symbols_.emplace_back(kEosSymbol);
  // First occurrence wins for duplicates; Validate() reports them.
  for (SymbolId i = 0; i < symbols_.size(); ++i) index_.emplace(symbols_[i], i);

  applies_.assign(groups_.size(), std::vector<bool>(categories_.size(), false));
  for (size_t gi = 0; gi < groups_.size(); ++gi) {
    const auto& app = groups_[gi].applicable_categories;
    for (size_t ci = 0; ci < categories_.size(); ++ci) {
      applies_[gi][ci] = app.empty() || std::find(app.begin(), app.end(),
                                                  categories_[ci]) != app.end();
    }
  }
  hash_ = Sha256(ToJson());
}

Taxonomy Taxonomy::FromJson(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    Throw(ErrorCode::kInvalidArgument,
          std::string("taxonomy is not valid JSON: ") + e.what());
  }
  try {
    std::vector<std::string> categories =
        doc.at("categories").get<std::vector<std::string>>();
    std::vector<AttributeGroup> groups;
    for (const auto& g : doc.at("groups")) {
      AttributeGroup group;
      group.name = g.at("name").get<std::string>();
      group.classes = g.at("classes").get<std::vector<std::string>>();
      if (g.contains("applicable_categories")) {
        group.applicable_categories =
            g["applicable_categories"].get<std::vector<std::string>>();
      }
      groups.push_back(std::move(group));
    }
    return Taxonomy(std::move(categories), std::move(groups));
  } catch (const json::exception& e) {
    Throw(ErrorCode::kInvalidArgument,
          std::string("malformed taxonomy document: ") + e.what());
  }
}

Taxonomy Taxonomy::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) Throw(ErrorCode::kIo, "cannot open taxonomy file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return FromJson(ss.str());
}

std::string Taxonomy::ToJson() const {
  json groups = json::array();
  for (const auto& g : groups_) {
    groups.push_back({{"name", g.name},
                      {"classes", g.classes},
                      {"applicable_categories", g.applicable_categories}});
  }
  json doc = {{"categories", categories_}, {"groups", groups}};
  return doc.dump();
}

std::vector<std::string> Taxonomy::Validate() const {
  std::vector<std::string> out;
  if (categories_.empty()) out.push_back("category list is empty");

  std::set<std::string> seen;
  auto check_symbol = [&](const std::string& s, const std::string& where) {
    if (s.empty()) out.push_back("empty symbol in " + where);
    if (s == kEosSymbol) {
      out.push_back("reserved symbol " + std::string(kEosSymbol) + " used in " +
                    where);
    }
    if (!seen.insert(s).second) {
      out.push_back("duplicate symbol '" + s + "' in " + where);
    }
  };
  for (const auto& c : categories_) check_symbol(c, "categories");

  std::set<std::string> category_set(categories_.begin(), categories_.end());
  for (const auto& g : groups_) {
    const std::string where = "group '" + g.name + "'";
    if (g.classes.empty()) out.push_back(where + " has no classes");
    for (const auto& cls : g.classes) check_symbol(cls, where);
    for (const auto& c : g.applicable_categories) {
      if (!category_set.count(c)) {
        out.push_back(where + " references unknown category '" + c + "'");
      }
    }
  }
  return out;
}

void Taxonomy::RequireValid() const {
  auto violations = Validate();
  if (violations.empty()) return;
  std::string msg = "invalid taxonomy:";
  for (const auto& v : violations) msg += "\n  " + v;
  Throw(ErrorCode::kFailedPrecondition, msg);
}

std::optional<SymbolId> Taxonomy::FindSymbol(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SymbolId Taxonomy::SymbolIndex(std::string_view symbol) const {
  auto id = FindSymbol(symbol);
  if (!id) Throw(ErrorCode::kNotFound, "unknown symbol '" + std::string(symbol) + "'");
  return *id;
}

const std::string& Taxonomy::SymbolName(SymbolId id) const {
  if (id >= symbols_.size()) {
    Throw(ErrorCode::kNotFound, "symbol index " + std::to_string(id) +
                                    " out of range (vocab " +
                                    std::to_string(symbols_.size()) + ")");
  }
  return symbols_[id];
}

SymbolId Taxonomy::CategoryIndex(std::string_view category) const {
  auto id = FindSymbol(category);
  if (!id || !IsCategory(*id)) {
    Throw(ErrorCode::kNotFound, "unknown category '" + std::string(category) + "'");
  }
  return *id;
}

size_t Taxonomy::GroupOf(SymbolId s) const {
  if (!IsAttribute(s)) {
    Throw(ErrorCode::kInvalidArgument,
          "symbol " + std::to_string(s) + " is not an attribute");
  }
  return group_of_[s - num_categories()];
}

bool Taxonomy::GroupAppliesTo(size_t group, SymbolId category) const {
  return applies_.at(group).at(category);
}

bool Taxonomy::IsApplicable(SymbolId category, SymbolId symbol) const {
  if (symbol == category) return true;
  if (!IsAttribute(symbol) || !IsCategory(category)) return false;
  return GroupAppliesTo(GroupOf(symbol), category);
}

SequenceTemplate Taxonomy::Template(std::string_view category) const {
  SequenceTemplate t;
  t.category = CategoryIndex(category);
  for (size_t gi = 0; gi < groups_.size(); ++gi) {
    if (applies_[gi][t.category]) t.groups.push_back(gi);
  }
  return t;
}

}  // namespace fpsearch
