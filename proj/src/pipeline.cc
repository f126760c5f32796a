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

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fpsearch/error.h"
#include "fpsearch/random.h"

namespace fpsearch {

using nlohmann::json;

namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string Slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) Throw(ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SymbolId MostLikelyCategory(const SeqModelParams& model, const Vector& input,
                            size_t max_length) {
  GenerateOptions opts;
  opts.max_length = max_length;
  auto seq = Generate(model, input, opts);
  if (seq.symbols.front() < model.dims.num_categories) return seq.symbols.front();
  // The free decode opened with a non-category symbol; take the best
  // category from the first-step distribution instead.
  StepOutput first = Step(model, model.eos(), Encode(model, input));
  Eigen::Index best = 0;
  first.logits.head(model.dims.num_categories).maxCoeff(&best);
  return static_cast<SymbolId>(best);
}

void CheckFeatureDim(const DenseFeature& f, const IndexConfig& config) {
  if (f.size() != config.code_bits) {
    Throw(ErrorCode::kInvalidArgument,
          "dense feature has " + std::to_string(f.size()) +
              " dims, index expects " + std::to_string(config.code_bits));
  }
}

void CheckRoiInside(const Box& roi, const Image& image) {
  FPS_CHECK_ARG(roi.w > 0 && roi.h > 0, "ROI has zero area");
  FPS_CHECK_ARG(uint64_t{roi.x} + roi.w <= image.width &&
                    uint64_t{roi.y} + roi.h <= image.height,
                "ROI lies outside the image bounds");
}

}  // namespace

KeywordTable::KeywordTable(std::vector<KeywordEntry> entries) {
  std::set<std::string> seen;
  for (auto& e : entries) {
    e.keyword = Lower(e.keyword);
    FPS_CHECK_ARG(!e.keyword.empty(), "keyword must not be empty");
    FPS_CHECK_ARG(seen.insert(e.keyword).second,
                  "duplicate keyword '" + e.keyword + "'");
  }
  entries_ = std::move(entries);
}

KeywordTable KeywordTable::FromJson(std::string_view text) {
  std::vector<KeywordEntry> entries;
  try {
    for (const auto& j : json::parse(text)) {
      entries.push_back(
          {j.at("keyword").get<std::string>(), j.at("category").get<std::string>()});
    }
  } catch (const json::exception& e) {
    Throw(ErrorCode::kInvalidArgument, std::string("malformed keyword table: ") + e.what());
  }
  return KeywordTable(std::move(entries));
}

KeywordTable KeywordTable::Load(const std::string& path) {
  return FromJson(Slurp(path));
}

void KeywordTable::CheckAgainst(const Taxonomy& taxonomy) const {
  for (const auto& e : entries_) {
    auto id = taxonomy.FindSymbol(e.category);
    if (!id || !taxonomy.IsCategory(*id)) {
      Throw(ErrorCode::kFailedPrecondition, "keyword '" + e.keyword +
                                                "' maps to unknown category '" +
                                                e.category + "'");
    }
  }
}

std::optional<std::string> ExtractCategory(std::string_view meta_text,
                                           const KeywordTable& table) {
  const std::string text = Lower(meta_text);
  const KeywordEntry* best = nullptr;
  for (const auto& e : table.entries()) {
    if (text.find(e.keyword) == std::string::npos) continue;
    if (!best || e.keyword.size() > best->keyword.size()) best = &e;
  }
  if (!best) return std::nullopt;
  return best->category;
}

Vector ModelInput(std::span<const float> dense, uint32_t model_dim) {
  FPS_CHECK_ARG(model_dim > 0 && dense.size() >= model_dim,
                "dense feature (" + std::to_string(dense.size()) +
                    " dims) is smaller than the model input (" +
                    std::to_string(model_dim) + ")");
  Vector out(model_dim);
  const size_t n = dense.size();
  for (size_t j = 0; j < model_dim; ++j) {
    const size_t lo = j * n / model_dim;
    const size_t hi = (j + 1) * n / model_dim;
    double sum = 0.0;
    for (size_t i = lo; i < hi; ++i) sum += dense[i];
    out(static_cast<Eigen::Index>(j)) = sum / static_cast<double>(hi - lo);
  }
  return out;
}

DenseFeature FallbackFeature(const Image& image, uint32_t dim) {
  FPS_CHECK_ARG(image.width > 0 && image.height > 0, "image is empty");
  constexpr uint32_t g = kFallbackGrid;
  std::vector<double> pooled(g * g * 3, 0.0);
  for (uint32_t by = 0; by < g; ++by) {
    for (uint32_t bx = 0; bx < g; ++bx) {
      // Blocks partition the image; tiny images reuse edge pixels.
      const uint32_t x0 = bx * image.width / g;
      const uint32_t x1 = std::max(x0 + 1, (bx + 1) * image.width / g);
      const uint32_t y0 = by * image.height / g;
      const uint32_t y1 = std::max(y0 + 1, (by + 1) * image.height / g);
      double sum[3] = {0, 0, 0};
      uint64_t count = 0;
      for (uint32_t y = y0; y < std::min(y1, image.height); ++y) {
        for (uint32_t x = x0; x < std::min(x1, image.width); ++x) {
          const uint8_t* p = image.Pixel(x, y);
          for (int c = 0; c < 3; ++c) sum[c] += p[c];
          ++count;
        }
      }
      for (int c = 0; c < 3; ++c) {
        pooled[(by * g + bx) * 3 + c] =
            count ? sum[c] / (255.0 * static_cast<double>(count)) - 0.5 : 0.0;
      }
    }
  }
  Rng rng(kFallbackProjectionSeed);
  DenseFeature out(dim);
  for (uint32_t i = 0; i < dim; ++i) {
    double acc = 0.0;
    for (double v : pooled) acc += rng.Normal() * v;
    out[i] = static_cast<float>(acc);
  }
  return out;
}

std::vector<SymbolId> IndexableAttributes(const Taxonomy& taxonomy,
                                          SymbolId category,
                                          std::span<const SymbolId> generated) {
  std::vector<SymbolId> out{category};
  for (SymbolId s : generated) {
    if (s == category || !taxonomy.IsAttribute(s)) continue;
    if (!taxonomy.IsApplicable(category, s)) continue;
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

ItemRecord BuildRecord(const IngestInput& input, const KeywordTable& keywords,
                       const PipelineModels& models, const IndexConfig& config) {
  const Taxonomy& tax = *models.taxonomy;
  std::optional<std::string> category_name =
      input.category ? input.category : ExtractCategory(input.meta_text, keywords);
  if (!category_name) {
    Throw(ErrorCode::kInvalidArgument,
          "no category keyword found in meta text of '" + input.item_id + "'");
  }
  const SymbolId category = tax.CategoryIndex(*category_name);

  DenseFeature feature =
      input.feature ? *input.feature : FallbackFeature(input.image, config.code_bits);
  CheckFeatureDim(feature, config);

  GenerateOptions gen;
  gen.guided_category = category;
  gen.max_length = models.max_length;
  auto seq = Generate(*models.model, ModelInput(feature, models.model->dims.feature_dim),
                      gen);

  std::vector<Detection> dets;
  if (models.detector) dets = models.detector->Detect(input.image, input.item_id);
  const Box roi = SelectRoi(GuidedFilter(dets, *category_name), FullImageBox(input.image));

  ItemRecord rec;
  rec.item_id = input.item_id;
  rec.category = category;
  rec.attributes = IndexableAttributes(tax, category, seq.symbols);
  rec.code = Binarize(feature);
  rec.histogram = ComputeColorHistogram(input.image, roi, config.bins);
  rec.roi = roi;
  rec.meta_text = input.meta_text;
  return rec;
}

ItemRecord Ingest(const IngestInput& input, const KeywordTable& keywords,
                  const PipelineModels& models, InvertedIndex& index) {
  ItemRecord rec = BuildRecord(input, keywords, models, index.config());
  ItemRecord copy = rec;
  index.Insert(std::move(copy));
  return rec;
}

void ValidateRequest(const QueryRequest& r) {
  FPS_CHECK_ARG(r.k >= 1, "k must be at least 1");
  FPS_CHECK_ARG(r.weights.appearance >= 0.0 && r.weights.appearance <= 1.0,
                "appearance_weight must lie in [0, 1]");
  FPS_CHECK_ARG(r.image || r.feature, "query needs an image or a feature");
  switch (r.option) {
    case QueryOption::kAutomatic:
      FPS_CHECK_ARG(!r.guided_category, "option 1 does not take a guided category");
      FPS_CHECK_ARG(!r.roi, "option 1 does not take an ROI");
      break;
    case QueryOption::kGuided:
      FPS_CHECK_ARG(r.guided_category.has_value(),
                    "option 2 requires a guided category");
      FPS_CHECK_ARG(!r.roi, "option 2 does not take an ROI");
      break;
    case QueryOption::kUserRoi:
      FPS_CHECK_ARG(r.roi.has_value(), "option 3 requires an ROI");
      FPS_CHECK_ARG(r.image.has_value(), "option 3 requires an image");
      break;
    default:
      Throw(ErrorCode::kInvalidArgument, "option must be 1, 2 or 3");
  }
  if (r.roi && r.image) CheckRoiInside(*r.roi, *r.image);
}

QueryResult RunQuery(const QueryRequest& request, const PipelineModels& models,
                     const InvertedIndex& index) {
  ValidateRequest(request);
  const Taxonomy& tax = *models.taxonomy;
  const SeqModelParams& model = *models.model;

  std::optional<SymbolId> guide;
  if (request.guided_category) {
    auto id = tax.FindSymbol(*request.guided_category);
    FPS_CHECK_ARG(id && tax.IsCategory(*id),
                  "unknown guided category '" + *request.guided_category + "'");
    guide = *id;
  }

  DenseFeature feature = request.feature
                             ? *request.feature
                             : FallbackFeature(*request.image, index.config().code_bits);
  CheckFeatureDim(feature, index.config());
  const Vector input = ModelInput(feature, model.dims.feature_dim);

  QueryResult result;
  result.category = guide ? *guide : MostLikelyCategory(model, input, models.max_length);

  GenerateOptions gen;
  gen.guided_category = result.category;
  gen.max_length = models.max_length;
  result.sequence = Generate(model, input, gen);

  SearchQuery query;
  query.code = Binarize(feature);
  query.attributes = IndexableAttributes(tax, result.category, result.sequence.symbols);
  query.guided_category = result.category;
  DistanceWeights weights = request.weights;

  if (request.image) {
    const Image& image = *request.image;
    Box roi;
    if (request.option == QueryOption::kUserRoi) {
      roi = *request.roi;
    } else {
      std::vector<Detection> dets;
      if (models.detector) dets = models.detector->Detect(image, request.image_id);
      roi = SelectRoi(GuidedFilter(dets, tax.SymbolName(result.category)),
                      FullImageBox(image));
    }
    query.histogram = ComputeColorHistogram(image, roi, index.config().bins);
    result.roi = roi;
  } else {
    // Feature-only query: appearance distance alone.
    query.histogram.bins.assign(index.config().bins.total(), 0.0);
    weights.appearance = 1.0;
  }

  result.hits = index.Search(query, request.k, weights);
  return result;
}

std::vector<ManifestEntry> LoadManifest(const std::string& path) {
  namespace fs = std::filesystem;
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path fp(p);
    return (fp.is_absolute() ? fp : base / fp).string();
  };
  std::istringstream in(Slurp(path));
  std::vector<ManifestEntry> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      ManifestEntry e;
      e.item_id = j.at("item_id").get<std::string>();
      e.image_path = resolve(j.at("image_path").get<std::string>());
      e.meta_text = j.value("meta_text", "");
      if (j.contains("feature_path") && !j["feature_path"].is_null()) {
        e.feature_path = resolve(j["feature_path"].get<std::string>());
      }
      if (j.contains("category") && !j["category"].is_null()) {
        e.category = j["category"].get<std::string>();
      }
      out.push_back(std::move(e));
    } catch (const json::exception& ex) {
      Throw(ErrorCode::kInvalidArgument,
            path + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

IngestReport IngestManifest(const std::vector<ManifestEntry>& entries,
                            const KeywordTable& keywords,
                            const PipelineModels& models, InvertedIndex& index) {
  const auto n = static_cast<std::ptrdiff_t>(entries.size());
  std::vector<std::optional<ItemRecord>> records(entries.size());
  std::vector<std::string> errors(entries.size());
  const IndexConfig config = index.config();

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& e = entries[static_cast<size_t>(i)];
    try {
      IngestInput input;
      input.item_id = e.item_id;
      input.image = ReadPpm(e.image_path);
      input.meta_text = e.meta_text;
      if (e.feature_path) input.feature = ReadFeature(*e.feature_path);
      input.category = e.category;
      records[static_cast<size_t>(i)] = BuildRecord(input, keywords, models, config);
    } catch (const std::exception& ex) {
      errors[static_cast<size_t>(i)] = ex.what();
    }
  }

  IngestReport report;
  for (size_t i = 0; i < entries.size(); ++i) {
    if (!records[i]) {
      report.rejected.emplace_back(entries[i].item_id, errors[i]);
      continue;
    }
    try {
      index.Insert(std::move(*records[i]));
      ++report.inserted;
    } catch (const Error& ex) {
      report.rejected.emplace_back(entries[i].item_id, ex.what());
    }
  }
  return report;
}

}  // namespace fpsearch
