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

#include "fpsearch/roi.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fpsearch/error.h"

namespace fpsearch {

using nlohmann::json;

namespace {

Box ParseBox(const json& j) {
  Box b;
  auto get = [&](const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<int64_t>() < 0 ||
        v.get<int64_t>() > int64_t{UINT32_MAX}) {
      Throw(ErrorCode::kInvalidArgument,
            std::string("box field '") + key + "' must be a non-negative integer");
    }
    return v.get<uint32_t>();
  };
  b.x = get("x");
  b.y = get("y");
  b.w = get("w");
  b.h = get("h");
  FPS_CHECK_ARG(b.w > 0 && b.h > 0, "box must have positive width and height");
  return b;
}

template <typename Fn>
void ForEachJsonLine(std::string_view text, Fn&& fn) {
  std::istringstream in{std::string(text)};
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      Throw(ErrorCode::kInvalidArgument,
            "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      Throw(e.code(), "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::string Slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) Throw(ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

DetectionsByImage ParseDetectionsJsonl(std::string_view text) {
  DetectionsByImage out;
  ForEachJsonLine(text, [&](const json& j) {
    Detection d;
    d.box = ParseBox(j);
    d.category = j.at("category").get<std::string>();
    d.score = j.at("score").get<double>();
    FPS_CHECK_ARG(d.score >= 0.0 && d.score <= 1.0, "score must lie in [0, 1]");
    out[j.at("image_id").get<std::string>()].push_back(std::move(d));
  });
  return out;
}

std::vector<GroundTruthBox> ParseGroundTruthJsonl(std::string_view text) {
  std::vector<GroundTruthBox> out;
  ForEachJsonLine(text, [&](const json& j) {
    GroundTruthBox g;
    g.image_id = j.at("image_id").get<std::string>();
    g.box = ParseBox(j);
    g.category = j.at("category").get<std::string>();
    out.push_back(std::move(g));
  });
  return out;
}

DetectionsByImage LoadDetections(const std::string& path) {
  return ParseDetectionsJsonl(Slurp(path));
}

std::vector<GroundTruthBox> LoadGroundTruth(const std::string& path) {
  return ParseGroundTruthJsonl(Slurp(path));
}

FixtureDetector FixtureDetector::Load(const std::string& path) {
  return FixtureDetector(LoadDetections(path));
}

std::vector<Detection> FixtureDetector::Detect(const Image&,
                                               std::string_view image_id) const {
  auto it = detections_.find(std::string(image_id));
  if (it == detections_.end()) return {};
  return it->second;
}

double Iou(const Box& a, const Box& b) {
  const int64_t x0 = std::max<int64_t>(a.x, b.x);
  const int64_t y0 = std::max<int64_t>(a.y, b.y);
  const int64_t x1 = std::min<int64_t>(int64_t{a.x} + a.w, int64_t{b.x} + b.w);
  const int64_t y1 = std::min<int64_t>(int64_t{a.y} + a.h, int64_t{b.y} + b.h);
  if (x1 <= x0 || y1 <= y0) return 0.0;
  const double inter = static_cast<double>((x1 - x0) * (y1 - y0));
  const double area_a = static_cast<double>(int64_t{a.w} * a.h);
  const double area_b = static_cast<double>(int64_t{b.w} * b.h);
  return inter / (area_a + area_b - inter);
}

std::vector<Detection> GuidedFilter(const std::vector<Detection>& detections,
                                    const std::optional<std::string>& guided) {
  if (!guided) return detections;
  std::vector<Detection> out;
  std::copy_if(detections.begin(), detections.end(), std::back_inserter(out),
               [&](const Detection& d) { return d.category == *guided; });
  return out;
}

Box SelectRoi(const std::vector<Detection>& detections, const Box& image_bounds) {
  std::optional<Box> best;
  double best_score = 0.0;
  for (const auto& d : detections) {
    const uint64_t x0 = std::max<uint64_t>(d.box.x, image_bounds.x);
    const uint64_t y0 = std::max<uint64_t>(d.box.y, image_bounds.y);
    const uint64_t x1 = std::min<uint64_t>(uint64_t{d.box.x} + d.box.w,
                                           uint64_t{image_bounds.x} + image_bounds.w);
    const uint64_t y1 = std::min<uint64_t>(uint64_t{d.box.y} + d.box.h,
                                           uint64_t{image_bounds.y} + image_bounds.h);
    if (x1 <= x0 || y1 <= y0) continue;  // nothing left inside the image
    if (!best || d.score > best_score) {
      best = Box{static_cast<uint32_t>(x0), static_cast<uint32_t>(y0),
                 static_cast<uint32_t>(x1 - x0), static_cast<uint32_t>(y1 - y0)};
      best_score = d.score;
    }
  }
  return best.value_or(image_bounds);
}

double AveragePrecision(const std::vector<bool>& ranked_true_positive,
                        size_t num_ground_truth) {
  if (num_ground_truth == 0) return 0.0;
  const size_t n = ranked_true_positive.size();
  std::vector<double> precision(n), recall(n);
  size_t tp = 0;
  for (size_t i = 0; i < n; ++i) {
    tp += ranked_true_positive[i] ? 1 : 0;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_ground_truth);
  }
  // Precision envelope: best precision at any equal-or-higher recall.
  for (size_t i = n; i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (recall[i] > prev_recall) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

std::vector<MapRow> EvaluateMap(const DetectionsByImage& predictions,
                                const std::vector<GroundTruthBox>& ground_truth,
                                const std::vector<double>& iou_thresholds) {
  if (ground_truth.empty()) {
    Throw(ErrorCode::kInvalidArgument, "ground truth is empty");
  }
  std::set<std::string> categories;
  for (const auto& g : ground_truth) categories.insert(g.category);

  std::vector<MapRow> rows;
  for (double threshold : iou_thresholds) {
    FPS_CHECK_ARG(threshold > 0.0 && threshold <= 1.0,
                  "IoU threshold must lie in (0, 1]");
    MapRow row;
    row.iou_threshold = threshold;
    for (const auto& category : categories) {
      struct Ranked {
        const std::string* image;
        const Detection* det;
      };
      std::vector<Ranked> ranked;
      for (const auto& [image, dets] : predictions) {
        for (const auto& d : dets) {
          if (d.category == category) ranked.push_back({&image, &d});
        }
      }
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const Ranked& a, const Ranked& b) {
                         return a.det->score > b.det->score;
                       });

      std::vector<const GroundTruthBox*> gts;
      for (const auto& g : ground_truth) {
        if (g.category == category) gts.push_back(&g);
      }
      std::vector<bool> matched(gts.size(), false);
      std::vector<bool> tp;
      tp.reserve(ranked.size());
      for (const auto& r : ranked) {
        double best_iou = -1.0;
        size_t best = gts.size();
        for (size_t k = 0; k < gts.size(); ++k) {
          if (matched[k] || gts[k]->image_id != *r.image) continue;
          const double v = Iou(r.det->box, gts[k]->box);
          if (v > best_iou) {
            best_iou = v;
            best = k;
          }
        }
        const bool hit = best < gts.size() && best_iou >= threshold;
        if (hit) matched[best] = true;
        tp.push_back(hit);
      }
      row.per_category_ap[category] = AveragePrecision(tp, gts.size());
    }
    double sum = 0.0;
    for (const auto& [_, ap] : row.per_category_ap) sum += ap;
    row.map = sum / static_cast<double>(row.per_category_ap.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace fpsearch
