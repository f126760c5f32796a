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

#include "fpsearch/synthetic.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fpsearch/error.h"
#include "fpsearch/pipeline.h"

namespace fpsearch::synthetic {

using Eigen::Index;

namespace {

constexpr double kGroupKeepProbability = 0.7;
constexpr double kPrototypeNoise = 0.1;
constexpr double kDenseNoise = 0.3;

struct Rgb {
  uint8_t r, g, b;
};

Rgb HueColor(double hue_deg, double s, double v) {
  const double c = v * s;
  const double hp = std::fmod(hue_deg, 360.0) / 60.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  auto q = [m](double t) { return static_cast<uint8_t>(std::lround((t + m) * 255.0)); };
  return {q(r), q(g), q(b)};
}

const char* HueName(double hue_deg) {
  static const char* kNames[] = {"red", "orange", "yellow", "green", "teal",
                                 "blue", "purple", "pink"};
  return kNames[static_cast<int>(std::fmod(hue_deg, 360.0) / 45.0) % 8];
}

void FillBox(Image& img, const Box& b, Rgb c) {
  for (uint32_t y = b.y; y < b.y + b.h; ++y) {
    for (uint32_t x = b.x; x < b.x + b.w; ++x) {
      uint8_t* p = img.rgb.data() + (size_t{y} * img.width + x) * 3;
      p[0] = c.r;
      p[1] = c.g;
      p[2] = c.b;
    }
  }
}

// Square in the bottom-right corner, clear of every garment box.
Box DistractorBox(uint32_t size) {
  const uint32_t side = size / 4;
  return {size - side - 2, size - side - 2, side, side};
}

}  // namespace

std::vector<SymbolId> SampleSequence(const Taxonomy& taxonomy, Rng& rng,
                                     std::optional<SymbolId> category) {
  const SymbolId cat = category ? *category
                                : static_cast<SymbolId>(rng.Below(taxonomy.num_categories()));
  FPS_CHECK_ARG(taxonomy.IsCategory(cat), "not a category");
  std::vector<SymbolId> seq{cat};
  SymbolId base = taxonomy.num_categories();
  const auto& groups = taxonomy.groups();
  for (size_t g = 0; g < groups.size(); ++g) {
    const auto n = static_cast<SymbolId>(groups[g].classes.size());
    if (taxonomy.GroupAppliesTo(g, cat) && rng.Uniform() < kGroupKeepProbability) {
      seq.push_back(base + static_cast<SymbolId>(rng.Below(n)));
    }
    base += n;
  }
  seq.push_back(taxonomy.eos());
  return seq;
}

Matrix SymbolPrototypes(const Taxonomy& taxonomy, uint32_t dim, uint64_t seed) {
  Rng rng(seed);
  Matrix p(taxonomy.vocab_size(), dim);
  for (Index r = 0; r < p.rows(); ++r) {
    for (Index c = 0; c < p.cols(); ++c) p(r, c) = rng.Normal();
  }
  return p;
}

Vector PrototypeFeature(const Matrix& prototypes, const std::vector<SymbolId>& seq,
                        double noise, Rng& rng) {
  Vector f = Vector::Zero(prototypes.cols());
  for (SymbolId s : seq) {
    FPS_CHECK_ARG(s < prototypes.rows(), "symbol out of range");
    f += prototypes.row(s).transpose();
  }
  for (Index i = 0; i < f.size(); ++i) f(i) += noise * rng.Normal();
  return f;
}

DenseFeature Upsample(const Vector& model_feature, uint32_t dense_dim) {
  const auto m = static_cast<size_t>(model_feature.size());
  FPS_CHECK_ARG(m > 0 && dense_dim >= m, "dense_dim must be at least the model dim");
  DenseFeature out(dense_dim);
  for (size_t j = 0; j < m; ++j) {
    const size_t lo = j * dense_dim / m;
    const size_t hi = (j + 1) * dense_dim / m;
    for (size_t i = lo; i < hi; ++i) {
      out[i] = static_cast<float>(model_feature(static_cast<Index>(j)));
    }
  }
  return out;
}

std::vector<SeqExample> MakeSequenceDataset(const Taxonomy& taxonomy, size_t n,
                                            uint32_t feature_dim, uint64_t seed) {
  const Matrix protos = SymbolPrototypes(taxonomy, feature_dim, seed);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<SeqExample> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    SeqExample ex;
    ex.symbols = SampleSequence(taxonomy, rng);
    ex.feature = PrototypeFeature(protos, ex.symbols, kPrototypeNoise, rng);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<CatalogueItem> MakeCatalogue(const Taxonomy& taxonomy,
                                         const CatalogueOptions& options) {
  FPS_CHECK_ARG(options.image_size >= 40, "image_size must be at least 40");
  const Matrix protos = SymbolPrototypes(taxonomy, options.model_dim, options.seed);
  Rng rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  const uint32_t size = options.image_size;
  const uint32_t lo = size * 3 / 8;
  const uint32_t span = size / 6;

  std::vector<CatalogueItem> items;
  items.reserve(options.num_items);
  for (size_t i = 0; i < options.num_items; ++i) {
    CatalogueItem item;
    const auto cat = static_cast<SymbolId>(i % taxonomy.num_categories());
    item.item_id = "item-" + std::string(i < 10 ? "00" : i < 100 ? "0" : "") +
                   std::to_string(i);
    item.category = taxonomy.SymbolName(cat);
    item.sequence = SampleSequence(taxonomy, rng, cat);

    Vector mf = PrototypeFeature(protos, item.sequence, kPrototypeNoise, rng);
    item.feature = Upsample(mf, options.dense_dim);
    for (float& v : item.feature) v += static_cast<float>(kDenseNoise * rng.Normal());

    const double hue = rng.Uniform(0.0, 360.0);
    item.garment = {2 + static_cast<uint32_t>(rng.Below(4)),
                    2 + static_cast<uint32_t>(rng.Below(4)),
                    lo + static_cast<uint32_t>(rng.Below(span)),
                    lo + static_cast<uint32_t>(rng.Below(span))};
    item.image.width = size;
    item.image.height = size;
    item.image.rgb.assign(size_t{size} * size * 3, 200);
    FillBox(item.image, item.garment, HueColor(hue, 0.8, 0.85));
    if (i % 2 == 1) {
      FillBox(item.image, DistractorBox(size), HueColor(hue + 180.0, 0.9, 0.4));
    }
    item.meta_text = std::string(HueName(hue)) + " " + item.category + " no." +
                     std::to_string(i);
    items.push_back(std::move(item));
  }
  return items;
}

DetectionsByImage MakeDetections(const Taxonomy& taxonomy,
                                 const std::vector<CatalogueItem>& items,
                                 uint64_t seed) {
  Rng rng(seed);
  DetectionsByImage out;
  for (size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    auto& dets = out[item.item_id];
    dets.push_back({item.garment, item.category, rng.Uniform(0.55, 0.85)});
    if (i % 2 == 1) {
      const SymbolId cat = taxonomy.CategoryIndex(item.category);
      const SymbolId other = (cat + 1 + static_cast<SymbolId>(
                                            rng.Below(taxonomy.num_categories() - 1))) %
                             taxonomy.num_categories();
      dets.push_back({DistractorBox(item.image.width), taxonomy.SymbolName(other),
                      rng.Uniform(0.9, 0.99)});
    }
  }
  return out;
}

void WriteCatalogue(const Taxonomy& taxonomy, const std::vector<CatalogueItem>& items,
                    const DetectionsByImage& detections, const std::string& dir,
                    uint32_t model_dim) {
  namespace fs = std::filesystem;
  using nlohmann::json;
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  fs::create_directories(root / "features", ec);
  if (ec) Throw(ErrorCode::kIo, "cannot create " + dir + ": " + ec.message());

  auto open = [&](const char* name) {
    std::ofstream f(root / name, std::ios::trunc);
    if (!f) Throw(ErrorCode::kIo, "cannot write " + (root / name).string());
    return f;
  };
  auto manifest = open("manifest.jsonl");
  auto gt = open("ground_truth.jsonl");
  auto seqs = open("sequences.jsonl");

  for (size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    const std::string image_rel = "images/" + item.item_id + ".ppm";
    const std::string feature_rel = "features/" + item.item_id + ".fpsf";
    WritePpm(item.image, (root / image_rel).string());
    WriteFeature(item.feature, (root / feature_rel).string());
    manifest << json{{"item_id", item.item_id},
                     {"image_path", image_rel},
                     {"meta_text", item.meta_text},
                     {"feature_path", feature_rel}}
                    .dump()
             << '\n';
    gt << json{{"image_id", item.item_id}, {"x", item.garment.x},
               {"y", item.garment.y},      {"w", item.garment.w},
               {"h", item.garment.h},      {"category", item.category}}
              .dump()
       << '\n';

    const Vector mf = ModelInput(item.feature, model_dim);
    json names = json::array();
    for (SymbolId s : item.sequence) {
      if (s != taxonomy.eos()) names.push_back(taxonomy.SymbolName(s));
    }
    const char* split = i % 10 == 8 ? "validation" : i % 10 == 9 ? "test" : "train";
    seqs << json{{"item_id", item.item_id},
                 {"split", split},
                 {"feature", std::vector<double>(mf.data(), mf.data() + mf.size())},
                 {"attributes", names}}
                .dump()
         << '\n';
  }

  auto det = open("detections.jsonl");
  for (const auto& item : items) {
    auto it = detections.find(item.item_id);
    if (it == detections.end()) continue;
    for (const auto& d : it->second) {
      det << json{{"image_id", item.item_id}, {"x", d.box.x}, {"y", d.box.y},
                  {"w", d.box.w}, {"h", d.box.h}, {"category", d.category},
                  {"score", d.score}}
                 .dump()
          << '\n';
    }
  }
}

}  // namespace fpsearch::synthetic
