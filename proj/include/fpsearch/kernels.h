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

#ifndef FPSEARCH_KERNELS_H_
#define FPSEARCH_KERNELS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fpsearch/visfeat.h"

// Data-parallel scan kernels. The default entry points use OpenMP; the
// `serial` namespace holds the single-threaded reference implementations the
// tests and benchmarks compare against. Both produce identical results.
namespace fpsearch::kernels {

// Row-major block of equal-length binary codes.
class PackedCodes {
 public:
  explicit PackedCodes(size_t bits) : bits_(bits), stride_((bits + 63) / 64) {}

  void Append(const BinaryCode& code);
  void AppendWords(std::span<const uint64_t> words);

  size_t bits() const { return bits_; }
  size_t stride() const { return stride_; }
  size_t size() const { return stride_ == 0 ? 0 : words_.size() / stride_; }
  const uint64_t* Code(size_t i) const { return words_.data() + i * stride_; }

 private:
  size_t bits_;
  size_t stride_;
  std::vector<uint64_t> words_;
};

struct CandidateView {
  const BinaryCode* code;
  const ColorHistogram* histogram;
};

// out[i] = hamming(query, codes[i]).
void HammingScan(const BinaryCode& query, const PackedCodes& codes,
                 std::span<uint32_t> out);

// out[i] = CombinedDistance(query, candidates[i]).
void ScoreCandidates(const BinaryCode& query_code,
                     const ColorHistogram& query_hist,
                     std::span<const CandidateView> candidates,
                     const DistanceWeights& weights, std::span<double> out);

int MaxThreads();

namespace serial {

// Portable popcount, one thread.
void HammingScan(const BinaryCode& query, const PackedCodes& codes,
                 std::span<uint32_t> out);

void ScoreCandidates(const BinaryCode& query_code,
                     const ColorHistogram& query_hist,
                     std::span<const CandidateView> candidates,
                     const DistanceWeights& weights, std::span<double> out);

}  // namespace serial
}  // namespace fpsearch::kernels

#endif  // FPSEARCH_KERNELS_H_
