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

#ifndef FPSEARCH_ATTRSEQ_H_
#define FPSEARCH_ATTRSEQ_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpsearch/binary_io.h"
#include "fpsearch/residual.h"
#include "fpsearch/taxonomy.h"

namespace fpsearch {

struct SeqModelDims {
  uint32_t feature_dim = 64;
  uint32_t embed_dim = 32;
  uint32_t hidden_dim = 64;
  uint32_t vocab_size = 0;
  // Categories occupy symbols [0, num_categories); EOS is vocab_size - 1.
  uint32_t num_categories = 0;
};

// Number of residual blocks in the image encoder. Block 0 maps
// feature_dim -> hidden_dim (projection shortcut when they differ), the
// remaining blocks are hidden_dim -> hidden_dim with identity shortcuts.
inline constexpr size_t kEncoderDepth = 2;

// Image encoder + LSTM decoder + softmax output layer. The encoder output
// seeds the LSTM hidden state; the first decoder input is EOS, which doubles
// as the start symbol.
struct SeqModelParams {
  SeqModelDims dims;
  ResidualStack encoder;
  Matrix embedding;    // vocab x embed
  Matrix gate_weight;  // 4*hidden x (embed + hidden), gate rows i, f, g, o
  Vector gate_bias;    // 4*hidden
  Matrix out_weight;   // vocab x hidden
  Vector out_bias;     // vocab

  static SeqModelParams Zeros(const SeqModelDims& dims);
  // Uniform(-scale, scale) initialization from a seeded generator.
  static SeqModelParams Random(const SeqModelDims& dims, uint64_t seed,
                               double scale = 0.08);

  // All parameter tensors in checkpoint order: encoder blocks (weight, bias,
  // projection when present), embedding, gate_weight, gate_bias, out_weight,
  // out_bias.
  std::vector<std::span<double>> Blocks();
  std::vector<std::span<const double>> Blocks() const;
  size_t num_parameters() const;

  SymbolId eos() const { return dims.vocab_size - 1; }
  void CheckShapes() const;
};

SeqModelDims DimsForTaxonomy(const Taxonomy& taxonomy, uint32_t feature_dim = 64,
                             uint32_t embed_dim = 32, uint32_t hidden_dim = 64);

struct LstmState {
  Vector hidden;
  Vector cell;
};

struct StepOutput {
  Vector logits;
  LstmState state;
};

// One decoder step: consumes `input`, returns logits over the vocabulary.
StepOutput Step(const SeqModelParams& params, SymbolId input,
                const LstmState& state);

// Initial decoder state for an image feature.
LstmState Encode(const SeqModelParams& params, const Vector& feature);

Vector Softmax(const Vector& logits);
double LogSumExp(const Vector& logits);

// Negative log-likelihood of an EOS-terminated target under teacher forcing.
double SequenceNll(const SeqModelParams& params, const Vector& feature,
                   std::span<const SymbolId> target);

// Same as SequenceNll but also returns p(a_t | a_<t, image) per step.
double SequenceNll(const SeqModelParams& params, const Vector& feature,
                   std::span<const SymbolId> target,
                   std::vector<double>* step_probabilities);

// NLL of a prefix that has not terminated yet (no EOS anywhere).
double PrefixNll(const SeqModelParams& params, const Vector& feature,
                 std::span<const SymbolId> prefix);

// NLL plus its gradient (back-propagated through time and into the image
// encoder). `grad` is overwritten and takes the shape of `params`.
double SequenceNllGradient(const SeqModelParams& params, const Vector& feature,
                           std::span<const SymbolId> target,
                           SeqModelParams* grad);

struct SeqExample {
  Vector feature;
  std::vector<SymbolId> symbols;  // EOS-terminated
};

struct TrainConfig {
  double learning_rate = 0.05;
  size_t batch_size = 1;
  size_t max_epochs = 500;
  size_t patience = 20;
  uint64_t seed = 1;
  size_t max_length = 12;
  double gradient_clip = 5.0;
};

struct EpochStats {
  size_t epoch = 0;  // 1-based
  double train_nll = 0.0;
  double validation_nll = 0.0;  // equals train_nll when no validation set
};

struct TrainResult {
  SeqModelParams params;  // best-monitor checkpoint
  std::vector<EpochStats> history;
  size_t best_epoch = 0;
};

// Plain SGD with global-norm clipping. Both encoder and decoder parameters
// are updated. Stops at max_epochs, or once the monitored NLL (validation
// when given, else training) has not improved for `patience` epochs.
TrainResult Train(SeqModelParams params, std::span<const SeqExample> train,
                  std::span<const SeqExample> validation,
                  const TrainConfig& config);

double MeanNll(const SeqModelParams& params, std::span<const SeqExample> data);

enum class DecodeMode { kGreedy, kSample };

struct GenerateOptions {
  DecodeMode mode = DecodeMode::kGreedy;
  uint64_t seed = 0;
  double temperature = 1.0;
  // Injected as the first symbol instead of decoding it.
  std::optional<SymbolId> guided_category;
  size_t max_length = 12;
};

struct AttributeSequence {
  std::vector<SymbolId> symbols;  // EOS-terminated, no repeats
  std::vector<double> probabilities;
};

// Symbols already emitted are masked out at later steps, and EOS is forced at
// max_length. Recorded probabilities are post-mask softmax values; an
// injected guide is recorded with probability 1.
AttributeSequence Generate(const SeqModelParams& params, const Vector& feature,
                           const GenerateOptions& options);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double nll = 0.0;
};

// Per-item precision/recall of a greedy decode against ground truth, as
// symbol sets with EOS removed, averaged over items.
PrecisionRecall EvaluatePr(const SeqModelParams& params,
                           std::span<const SeqExample> data,
                           size_t max_length = 12);

// Set overlap for one item. Empty prediction with non-empty truth is (0, 0);
// both empty is (1, 1).
std::pair<double, double> SetPrecisionRecall(std::span<const SymbolId> predicted,
                                             std::span<const SymbolId> truth,
                                             SymbolId eos);

struct SequenceDataset {
  std::vector<SeqExample> train;
  std::vector<SeqExample> validation;
  std::vector<SeqExample> test;
};

// JSON Lines, one example per line:
//   {"split": "train"|"validation"|"test", "feature": [number, ...],
//    "attributes": [symbol, ...]}
// EOS is appended to every attribute list.
SequenceDataset ParseSequenceDataset(std::string_view jsonl, const Taxonomy& taxonomy);
SequenceDataset LoadSequenceDataset(const std::string& path, const Taxonomy& taxonomy);

inline constexpr uint32_t kCheckpointVersion = 1;

std::vector<uint8_t> SerializeCheckpoint(const SeqModelParams& params,
                                         const Sha256Digest& taxonomy_hash);
SeqModelParams ParseCheckpoint(std::span<const uint8_t> bytes,
                               const Taxonomy& taxonomy);
void SaveCheckpoint(const SeqModelParams& params, const Taxonomy& taxonomy,
                    const std::string& path);
SeqModelParams LoadCheckpoint(const std::string& path, const Taxonomy& taxonomy);

}  // namespace fpsearch

#endif  // FPSEARCH_ATTRSEQ_H_
