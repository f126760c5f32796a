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

#include "fpsearch/kernels.h"

#include <omp.h>

#include "fpsearch/error.h"

namespace fpsearch::kernels {

namespace {

// Below this many items the fork/join cost dominates.
constexpr std::ptrdiff_t kParallelThreshold = 2048;

void CheckScan(const BinaryCode& query, const PackedCodes& codes,
               std::span<uint32_t> out) {
  FPS_CHECK_ARG(query.size() == codes.bits(),
                "query has " + std::to_string(query.size()) +
                    " bits, codes have " + std::to_string(codes.bits()));
  FPS_CHECK_ARG(out.size() == codes.size(), "output span size mismatch");
}

void CheckScore(const BinaryCode& query_code, const ColorHistogram& query_hist,
                std::span<const CandidateView> candidates, std::span<double> out,
                const DistanceWeights& weights) {
  FPS_CHECK_ARG(out.size() == candidates.size(), "output span size mismatch");
  FPS_CHECK_ARG(query_code.size() > 0, "empty query code");
  FPS_CHECK_ARG(weights.appearance >= 0.0 && weights.appearance <= 1.0,
                "appearance weight must lie in [0, 1]");
  for (const auto& c : candidates) {
    FPS_CHECK_ARG(c.code->size() == query_code.size(),
                  "candidate code length differs from query");
    FPS_CHECK_ARG(c.histogram->bins.size() == query_hist.bins.size(),
                  "candidate histogram size differs from query");
  }
}

inline double Score(const BinaryCode& qc, const ColorHistogram& qh,
                    const CandidateView& c, double wa, uint32_t ham) {
  double l1 = 0.0;
  const auto& a = qh.bins;
  const auto& b = c.histogram->bins;
  for (size_t k = 0; k < a.size(); ++k) l1 += a[k] > b[k] ? a[k] - b[k] : b[k] - a[k];
  return wa * (static_cast<double>(ham) / qc.size()) + (1.0 - wa) * (0.5 * l1);
}

}  // namespace

void PackedCodes::Append(const BinaryCode& code) {
  FPS_CHECK_ARG(code.size() == bits_, "code length differs from block");
  AppendWords(code.words());
}

void PackedCodes::AppendWords(std::span<const uint64_t> words) {
  FPS_CHECK_ARG(words.size() == stride_, "word count differs from block stride");
  words_.insert(words_.end(), words.begin(), words.end());
}

int MaxThreads() { return omp_get_max_threads(); }

void HammingScan(const BinaryCode& query, const PackedCodes& codes,
                 std::span<uint32_t> out) {
  CheckScan(query, codes, out);
  const auto n = static_cast<std::ptrdiff_t>(codes.size());
  const uint64_t* q = query.words().data();
  const size_t stride = codes.stride();
#pragma omp parallel for schedule(static) if (n >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<size_t>(i)] =
        HammingWords(q, codes.Code(static_cast<size_t>(i)), stride);
  }
}

void ScoreCandidates(const BinaryCode& query_code,
                     const ColorHistogram& query_hist,
                     std::span<const CandidateView> candidates,
                     const DistanceWeights& weights, std::span<double> out) {
  CheckScore(query_code, query_hist, candidates, out, weights);
  const auto n = static_cast<std::ptrdiff_t>(candidates.size());
  const uint64_t* q = query_code.words().data();
  const size_t words = query_code.num_words();
#pragma omp parallel for schedule(static) if (n >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& c = candidates[static_cast<size_t>(i)];
    const uint32_t ham = HammingWords(q, c.code->words().data(), words);
    out[static_cast<size_t>(i)] =
        Score(query_code, query_hist, c, weights.appearance, ham);
  }
}

namespace serial {

void HammingScan(const BinaryCode& query, const PackedCodes& codes,
                 std::span<uint32_t> out) {
  CheckScan(query, codes, out);
  const uint64_t* q = query.words().data();
  for (size_t i = 0; i < codes.size(); ++i) {
    out[i] = HammingWordsPortable(q, codes.Code(i), codes.stride());
  }
}

void ScoreCandidates(const BinaryCode& query_code,
                     const ColorHistogram& query_hist,
                     std::span<const CandidateView> candidates,
                     const DistanceWeights& weights, std::span<double> out) {
  CheckScore(query_code, query_hist, candidates, out, weights);
  for (size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    const uint32_t ham = HammingWordsPortable(
        query_code.words().data(), c.code->words().data(), query_code.num_words());
    out[i] = Score(query_code, query_hist, c, weights.appearance, ham);
  }
}

}  // namespace serial
}  // namespace fpsearch::kernels
