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

#ifndef FPSEARCH_ROI_H_
#define FPSEARCH_ROI_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fpsearch/visfeat.h"

namespace fpsearch {

struct Detection {
  Box box;
  std::string category;
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct GroundTruthBox {
  std::string image_id;
  Box box;
  std::string category;
};

// Detections keyed by image id.
using DetectionsByImage = std::map<std::string, std::vector<Detection>>;

// Pluggable detector. Implementations return boxes for every category at
// once and must be deterministic for a fixed input.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<Detection> Detect(const Image& image,
                                        std::string_view image_id) const = 0;
};

// Replays detections from a JSON Lines fixture
// ({image_id, x, y, w, h, category, score} per line).
class FixtureDetector : public Detector {
 public:
  FixtureDetector() = default;
  explicit FixtureDetector(DetectionsByImage detections)
      : detections_(std::move(detections)) {}
  static FixtureDetector Load(const std::string& path);

  std::vector<Detection> Detect(const Image& image,
                                std::string_view image_id) const override;

 private:
  DetectionsByImage detections_;
};

DetectionsByImage ParseDetectionsJsonl(std::string_view text);
std::vector<GroundTruthBox> ParseGroundTruthJsonl(std::string_view text);
DetectionsByImage LoadDetections(const std::string& path);
std::vector<GroundTruthBox> LoadGroundTruth(const std::string& path);

double Iou(const Box& a, const Box& b);

// Keeps detections whose category equals `guided`, in order. Identity when
// no guide is given.
std::vector<Detection> GuidedFilter(const std::vector<Detection>& detections,
                                    const std::optional<std::string>& guided);

// Highest-scoring box clipped to `image_bounds` (earliest wins ties).
// Boxes entirely outside are ignored; falls back to `image_bounds`.
Box SelectRoi(const std::vector<Detection>& detections, const Box& image_bounds);

struct MapRow {
  double iou_threshold = 0.0;
  double map = 0.0;
  std::map<std::string, double> per_category_ap;
};

// Mean average precision per IoU threshold. Per category, detections are
// ranked by score and greedily matched to the highest-IoU unmatched ground
// truth of that category in the same image; a match with IoU >= threshold
// is a true positive. AP is the all-point interpolated PR area; the mean
// runs over categories present in the ground truth.
std::vector<MapRow> EvaluateMap(const DetectionsByImage& predictions,
                                const std::vector<GroundTruthBox>& ground_truth,
                                const std::vector<double>& iou_thresholds);

// All-point interpolated area under a ranked TP/FP list.
double AveragePrecision(const std::vector<bool>& ranked_true_positive,
                        size_t num_ground_truth);

}  // namespace fpsearch

#endif  // FPSEARCH_ROI_H_
