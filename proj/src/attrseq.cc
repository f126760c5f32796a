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

#include "fpsearch/attrseq.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fpsearch/error.h"
#include "fpsearch/random.h"

namespace fpsearch {

namespace {

using Index = Eigen::Index;

Index I(uint32_t v) { return static_cast<Index>(v); }

std::span<double> Span(Matrix& m) {
  return {m.data(), static_cast<size_t>(m.size())};
}
std::span<double> Span(Vector& v) {
  return {v.data(), static_cast<size_t>(v.size())};
}

ResidualStack MakeEncoder(const SeqModelDims& dims) {
  ResidualStack enc;
  enc.layers.push_back(MakeResidualLayer(dims.feature_dim, dims.hidden_dim));
  for (size_t l = 1; l < kEncoderDepth; ++l) {
    enc.layers.push_back(MakeResidualLayer(dims.hidden_dim, dims.hidden_dim));
  }
  return enc;
}

Vector Sigmoid(const Vector& a) {
  return (1.0 / (1.0 + (-a.array()).exp())).matrix();
}

// Everything a step needs for back-propagation.
struct StepCache {
  SymbolId input;
  Vector concat;  // [embedding; h_prev]
  Vector in_gate, forget_gate, cell_gate, out_gate;
  Vector cell_prev, cell, cell_tanh, hidden;
  Vector probs;
};

StepCache ForwardStep(const SeqModelParams& p, SymbolId input,
                      const LstmState& state) {
  const Index h = I(p.dims.hidden_dim);
  const Index e = I(p.dims.embed_dim);
  StepCache c;
  c.input = input;
  c.concat.resize(e + h);
  c.concat.head(e) = p.embedding.row(input).transpose();
  c.concat.tail(h) = state.hidden;
  Vector a = p.gate_weight * c.concat + p.gate_bias;
  c.in_gate = Sigmoid(a.segment(0, h));
  c.forget_gate = Sigmoid(a.segment(h, h));
  c.cell_gate = a.segment(2 * h, h).array().tanh();
  c.out_gate = Sigmoid(a.segment(3 * h, h));
  c.cell_prev = state.cell;
  c.cell = c.forget_gate.cwiseProduct(state.cell) +
           c.in_gate.cwiseProduct(c.cell_gate);
  c.cell_tanh = c.cell.array().tanh();
  c.hidden = c.out_gate.cwiseProduct(c.cell_tanh);
  return c;
}

void CheckSymbol(const SeqModelParams& p, SymbolId s) {
  if (s >= p.dims.vocab_size) {
    Throw(ErrorCode::kInvalidArgument,
          "symbol " + std::to_string(s) + " outside vocabulary of size " +
              std::to_string(p.dims.vocab_size));
  }
}

void CheckTarget(const SeqModelParams& p, std::span<const SymbolId> target) {
  FPS_CHECK_ARG(!target.empty() && target.back() == p.eos(),
                "target sequence must end with EOS");
  for (size_t t = 0; t < target.size(); ++t) {
    CheckSymbol(p, target[t]);
    FPS_CHECK_ARG(t + 1 == target.size() || target[t] != p.eos(),
                  "EOS may only appear at the end of a target sequence");
  }
}

void CheckFeature(const SeqModelParams& p, const Vector& feature) {
  FPS_CHECK_ARG(feature.size() == I(p.dims.feature_dim),
                "image feature has " + std::to_string(feature.size()) +
                    " entries, model expects " +
                    std::to_string(p.dims.feature_dim));
}

// Teacher-forced score shared by SequenceNll and PrefixNll.
double ScoreTeacherForced(const SeqModelParams& p, const Vector& feature,
                          std::span<const SymbolId> target,
                          std::vector<double>* step_probs) {
  LstmState state = Encode(p, feature);
  SymbolId input = p.eos();
  double nll = 0.0;
  if (step_probs) step_probs->clear();
  for (SymbolId y : target) {
    StepOutput out = Step(p, input, state);
    double logp = out.logits(y) - LogSumExp(out.logits);
    nll -= logp;
    if (step_probs) step_probs->push_back(std::exp(logp));
    state = std::move(out.state);
    input = y;
  }
  return nll;
}

void ZeroLike(const SeqModelParams& like, SeqModelParams* out) {
  *out = SeqModelParams::Zeros(like.dims);
}

}  // namespace

SeqModelParams SeqModelParams::Zeros(const SeqModelDims& dims) {
  FPS_CHECK_ARG(dims.feature_dim > 0 && dims.embed_dim > 0 &&
                    dims.hidden_dim > 0,
                "model dimensions must be positive");
  FPS_CHECK_ARG(dims.vocab_size >= 2, "vocabulary needs at least 2 symbols");
  FPS_CHECK_ARG(dims.num_categories < dims.vocab_size,
                "category count must leave room for EOS");
  SeqModelParams p;
  p.dims = dims;
  p.encoder = MakeEncoder(dims);
  const Index v = I(dims.vocab_size), e = I(dims.embed_dim), h = I(dims.hidden_dim);
  p.embedding = Matrix::Zero(v, e);
  p.gate_weight = Matrix::Zero(4 * h, e + h);
  p.gate_bias = Vector::Zero(4 * h);
  p.out_weight = Matrix::Zero(v, h);
  p.out_bias = Vector::Zero(v);
  return p;
}

SeqModelParams SeqModelParams::Random(const SeqModelDims& dims, uint64_t seed,
                                      double scale) {
  SeqModelParams p = Zeros(dims);
  Rng rng(seed);
  for (auto block : p.Blocks()) {
    for (double& x : block) x = rng.Uniform(-scale, scale);
  }
  return p;
}

std::vector<std::span<double>> SeqModelParams::Blocks() {
  std::vector<std::span<double>> out;
  for (auto& layer : encoder.layers) {
    out.push_back(Span(layer.weight));
    out.push_back(Span(layer.bias));
    if (layer.shortcut == ShortcutKind::kProjection) {
      out.push_back(Span(layer.projection));
    }
  }
  out.push_back(Span(embedding));
  out.push_back(Span(gate_weight));
  out.push_back(Span(gate_bias));
  out.push_back(Span(out_weight));
  out.push_back(Span(out_bias));
  return out;
}

std::vector<std::span<const double>> SeqModelParams::Blocks() const {
  auto mut = const_cast<SeqModelParams*>(this)->Blocks();
  return {mut.begin(), mut.end()};
}

size_t SeqModelParams::num_parameters() const {
  size_t n = 0;
  for (auto b : Blocks()) n += b.size();
  return n;
}

void SeqModelParams::CheckShapes() const {
  const Index v = I(dims.vocab_size), e = I(dims.embed_dim), h = I(dims.hidden_dim);
  encoder.CheckShapes();
  FPS_CHECK_ARG(encoder.input_dim() == dims.feature_dim &&
                    encoder.output_dim() == dims.hidden_dim,
                "encoder dims do not match model dims");
  FPS_CHECK_ARG(embedding.rows() == v && embedding.cols() == e,
                "embedding shape mismatch");
  FPS_CHECK_ARG(gate_weight.rows() == 4 * h && gate_weight.cols() == e + h,
                "gate weight shape mismatch");
  FPS_CHECK_ARG(gate_bias.size() == 4 * h, "gate bias shape mismatch");
  FPS_CHECK_ARG(out_weight.rows() == v && out_weight.cols() == h,
                "output weight shape mismatch");
  FPS_CHECK_ARG(out_bias.size() == v, "output bias shape mismatch");
}

SeqModelDims DimsForTaxonomy(const Taxonomy& taxonomy, uint32_t feature_dim,
                             uint32_t embed_dim, uint32_t hidden_dim) {
  SeqModelDims d;
  d.feature_dim = feature_dim;
  d.embed_dim = embed_dim;
  d.hidden_dim = hidden_dim;
  d.vocab_size = taxonomy.vocab_size();
  d.num_categories = taxonomy.num_categories();
  return d;
}

double LogSumExp(const Vector& logits) {
  const double m = logits.maxCoeff();
  return m + std::log((logits.array() - m).exp().sum());
}

Vector Softmax(const Vector& logits) {
  Vector e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

LstmState Encode(const SeqModelParams& params, const Vector& feature) {
  CheckFeature(params, feature);
  auto acts = Forward(params.encoder, feature);
  return {std::move(acts.back()), Vector::Zero(I(params.dims.hidden_dim))};
}

StepOutput Step(const SeqModelParams& params, SymbolId input,
                const LstmState& state) {
  CheckSymbol(params, input);
  const Index h = I(params.dims.hidden_dim);
  FPS_CHECK_ARG(state.hidden.size() == h && state.cell.size() == h,
                "LSTM state has wrong dimension (expected " +
                    std::to_string(h) + ")");
  StepCache c = ForwardStep(params, input, state);
  StepOutput out;
  out.logits = params.out_weight * c.hidden + params.out_bias;
  out.state = {std::move(c.hidden), std::move(c.cell)};
  return out;
}

double SequenceNll(const SeqModelParams& params, const Vector& feature,
                   std::span<const SymbolId> target) {
  return SequenceNll(params, feature, target, nullptr);
}

double SequenceNll(const SeqModelParams& params, const Vector& feature,
                   std::span<const SymbolId> target,
                   std::vector<double>* step_probabilities) {
  CheckTarget(params, target);
  return ScoreTeacherForced(params, feature, target, step_probabilities);
}

double PrefixNll(const SeqModelParams& params, const Vector& feature,
                 std::span<const SymbolId> prefix) {
  for (SymbolId s : prefix) {
    CheckSymbol(params, s);
    FPS_CHECK_ARG(s != params.eos(), "prefix must not contain EOS");
  }
  return ScoreTeacherForced(params, feature, prefix, nullptr);
}

double SequenceNllGradient(const SeqModelParams& params, const Vector& feature,
                           std::span<const SymbolId> target,
                           SeqModelParams* grad) {
  CheckTarget(params, target);
  CheckFeature(params, feature);
  const Index h = I(params.dims.hidden_dim);
  const Index e = I(params.dims.embed_dim);

  const auto enc_acts = Forward(params.encoder, feature);
  LstmState state{enc_acts.back(), Vector::Zero(h)};

  std::vector<StepCache> caches;
  caches.reserve(target.size());
  double nll = 0.0;
  SymbolId input = params.eos();
  for (SymbolId y : target) {
    StepCache c = ForwardStep(params, input, state);
    Vector logits = params.out_weight * c.hidden + params.out_bias;
    const double lse = LogSumExp(logits);
    nll -= logits(y) - lse;
    c.probs = (logits.array() - lse).exp();
    state = {c.hidden, c.cell};
    caches.push_back(std::move(c));
    input = y;
  }

  ZeroLike(params, grad);
  Vector dh_next = Vector::Zero(h);
  Vector dc_next = Vector::Zero(h);
  for (size_t t = caches.size(); t-- > 0;) {
    const StepCache& c = caches[t];
    Vector dlogits = c.probs;
    dlogits(target[t]) -= 1.0;
    grad->out_weight.noalias() += dlogits * c.hidden.transpose();
    grad->out_bias += dlogits;

    Vector dh = params.out_weight.transpose() * dlogits + dh_next;
    Vector dc = dh.cwiseProduct(c.out_gate)
                    .cwiseProduct((1.0 - c.cell_tanh.array().square()).matrix()) +
                dc_next;
    Vector da(4 * h);
    da.segment(0, h) = dc.cwiseProduct(c.cell_gate).cwiseProduct(
        (c.in_gate.array() * (1.0 - c.in_gate.array())).matrix());
    da.segment(h, h) = dc.cwiseProduct(c.cell_prev).cwiseProduct(
        (c.forget_gate.array() * (1.0 - c.forget_gate.array())).matrix());
    da.segment(2 * h, h) = dc.cwiseProduct(c.in_gate).cwiseProduct(
        (1.0 - c.cell_gate.array().square()).matrix());
    da.segment(3 * h, h) = dh.cwiseProduct(c.cell_tanh).cwiseProduct(
        (c.out_gate.array() * (1.0 - c.out_gate.array())).matrix());

    grad->gate_weight.noalias() += da * c.concat.transpose();
    grad->gate_bias += da;
    Vector dconcat = params.gate_weight.transpose() * da;
    grad->embedding.row(c.input) += dconcat.head(e).transpose();
    dh_next = dconcat.tail(h);
    dc_next = dc.cwiseProduct(c.forget_gate);
  }

  // dh_next now holds dL/dh0, i.e. the gradient at the encoder output.
  auto enc_grad = Backward(params.encoder, enc_acts, dh_next);
  for (size_t l = 0; l < params.encoder.layers.size(); ++l) {
    auto& dst = grad->encoder.layers[l];
    dst.weight = std::move(enc_grad.layer_grads[l].weight);
    dst.bias = std::move(enc_grad.layer_grads[l].bias);
    if (dst.shortcut == ShortcutKind::kProjection) {
      dst.projection = std::move(enc_grad.layer_grads[l].projection);
    }
  }
  return nll;
}

double MeanNll(const SeqModelParams& params, std::span<const SeqExample> data) {
  FPS_CHECK_ARG(!data.empty(), "dataset is empty");
  double sum = 0.0;
  for (const auto& ex : data) sum += SequenceNll(params, ex.feature, ex.symbols);
  return sum / static_cast<double>(data.size());
}

TrainResult Train(SeqModelParams params, std::span<const SeqExample> train,
                  std::span<const SeqExample> validation,
                  const TrainConfig& config) {
  FPS_CHECK_ARG(!train.empty(), "training set is empty");
  FPS_CHECK_ARG(config.learning_rate > 0 && config.batch_size > 0 &&
                    config.max_epochs > 0 && config.patience > 0 &&
                    config.max_length > 0 && config.gradient_clip > 0,
                "training configuration values must be positive");
  params.CheckShapes();
  for (const auto* set : {&train, &validation}) {
    for (const auto& ex : *set) {
      CheckTarget(params, ex.symbols);
      CheckFeature(params, ex.feature);
      FPS_CHECK_ARG(ex.symbols.size() <= config.max_length,
                    "target sequence longer than max_length");
    }
  }

  Rng rng(config.seed);
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});

  TrainResult result;
  result.params = params;
  double best = std::numeric_limits<double>::infinity();
  size_t since_best = 0;

  SeqModelParams grad, batch_grad;
  for (size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.Below(i)]);
    }
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      ZeroLike(params, &batch_grad);
      auto acc = batch_grad.Blocks();
      for (size_t k = start; k < end; ++k) {
        const auto& ex = train[order[k]];
        SequenceNllGradient(params, ex.feature, ex.symbols, &grad);
        auto g = grad.Blocks();
        for (size_t b = 0; b < g.size(); ++b) {
          for (size_t j = 0; j < g[b].size(); ++j) acc[b][j] += g[b][j];
        }
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      double sq = 0.0;
      for (auto b : acc) {
        for (double& x : b) {
          x *= inv;
          sq += x * x;
        }
      }
      const double norm = std::sqrt(sq);
      const double scale = config.learning_rate *
                           (norm > config.gradient_clip ? config.gradient_clip / norm : 1.0);
      auto w = params.Blocks();
      for (size_t b = 0; b < w.size(); ++b) {
        for (size_t j = 0; j < w[b].size(); ++j) w[b][j] -= scale * acc[b][j];
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_nll = MeanNll(params, train);
    stats.validation_nll =
        validation.empty() ? stats.train_nll : MeanNll(params, validation);
    result.history.push_back(stats);

    if (stats.validation_nll < best) {
      best = stats.validation_nll;
      result.params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

AttributeSequence Generate(const SeqModelParams& params, const Vector& feature,
                           const GenerateOptions& options) {
  FPS_CHECK_ARG(options.max_length >= (options.guided_category ? 2u : 1u),
                "max_length too small to hold a terminated sequence");
  FPS_CHECK_ARG(options.mode == DecodeMode::kGreedy || options.temperature > 0,
                "sampling temperature must be positive");
  if (options.guided_category &&
      *options.guided_category >= params.dims.num_categories) {
    Throw(ErrorCode::kInvalidArgument,
          "guided symbol " + std::to_string(*options.guided_category) +
              " is not a category");
  }
  const SymbolId eos = params.eos();
  const Index vocab = I(params.dims.vocab_size);

  Rng rng(options.seed);
  LstmState state = Encode(params, feature);
  std::vector<bool> used(params.dims.vocab_size, false);
  AttributeSequence seq;
  SymbolId input = eos;

  while (true) {
    StepOutput out = Step(params, input, state);
    state = std::move(out.state);
    SymbolId chosen;
    double prob;
    const bool last = seq.symbols.size() + 1 >= options.max_length;
    if (seq.symbols.empty() && options.guided_category) {
      chosen = *options.guided_category;
      prob = 1.0;
    } else {
      Vector logits = out.logits;
      if (options.mode == DecodeMode::kSample) logits /= options.temperature;
      for (Index s = 0; s < vocab; ++s) {
        if (used[static_cast<size_t>(s)] || (last && s != eos)) {
          logits(s) = -std::numeric_limits<double>::infinity();
        }
      }
      Vector probs = Softmax(logits);
      if (options.mode == DecodeMode::kGreedy) {
        Index best = 0;
        probs.maxCoeff(&best);  // first maximum on ties
        chosen = static_cast<SymbolId>(best);
      } else {
        const double u = rng.Uniform();
        double cum = 0.0;
        chosen = eos;
        for (Index s = 0; s < vocab; ++s) {
          if (probs(s) <= 0.0) continue;
          cum += probs(s);
          chosen = static_cast<SymbolId>(s);
          if (u < cum) break;
        }
      }
      prob = probs(chosen);
    }
    seq.symbols.push_back(chosen);
    seq.probabilities.push_back(prob);
    if (chosen == eos) break;
    used[chosen] = true;
    input = chosen;
  }
  return seq;
}

std::pair<double, double> SetPrecisionRecall(std::span<const SymbolId> predicted,
                                             std::span<const SymbolId> truth,
                                             SymbolId eos) {
  std::set<SymbolId> pred, gt;
  for (SymbolId s : predicted) if (s != eos) pred.insert(s);
  for (SymbolId s : truth) if (s != eos) gt.insert(s);
  if (pred.empty() && gt.empty()) return {1.0, 1.0};
  if (pred.empty() || gt.empty()) return {0.0, 0.0};
  size_t hit = 0;
  for (SymbolId s : pred) hit += gt.count(s);
  return {static_cast<double>(hit) / static_cast<double>(pred.size()),
          static_cast<double>(hit) / static_cast<double>(gt.size())};
}

PrecisionRecall EvaluatePr(const SeqModelParams& params,
                           std::span<const SeqExample> data, size_t max_length) {
  FPS_CHECK_ARG(!data.empty(), "evaluation set is empty");
  PrecisionRecall r;
  GenerateOptions opts;
  opts.max_length = max_length;
  for (const auto& ex : data) {
    auto seq = Generate(params, ex.feature, opts);
    auto [p, rc] = SetPrecisionRecall(seq.symbols, ex.symbols, params.eos());
    r.precision += p;
    r.recall += rc;
    r.nll += SequenceNll(params, ex.feature, ex.symbols);
  }
  const double n = static_cast<double>(data.size());
  r.precision /= n;
  r.recall /= n;
  r.nll /= n;
  return r;
}

std::vector<uint8_t> SerializeCheckpoint(const SeqModelParams& params,
                                         const Sha256Digest& taxonomy_hash) {
  params.CheckShapes();
  ByteWriter w;
  w.Magic("FPSM");
  w.U32(kCheckpointVersion);
  w.Bytes(taxonomy_hash);
  w.U32(params.dims.feature_dim);
  w.U32(params.dims.embed_dim);
  w.U32(params.dims.hidden_dim);
  w.U32(params.dims.vocab_size);
  for (auto block : params.Blocks()) {
    for (double x : block) w.F64(x);
  }
  return w.Release();
}

SeqModelParams ParseCheckpoint(std::span<const uint8_t> bytes,
                               const Taxonomy& taxonomy) {
  ByteReader r(bytes);
  r.ExpectMagic("FPSM", "model checkpoint");
  const uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    Throw(ErrorCode::kFailedPrecondition,
          "unsupported checkpoint version " + std::to_string(version));
  }
  Sha256Digest hash;
  r.Bytes(hash);
  if (hash != taxonomy.content_hash()) {
    Throw(ErrorCode::kFailedPrecondition,
          "checkpoint was trained for a different taxonomy (hash " +
              ToHex(hash) + ", loaded taxonomy " +
              ToHex(taxonomy.content_hash()) + ")");
  }
  SeqModelDims dims;
  dims.feature_dim = r.U32();
  dims.embed_dim = r.U32();
  dims.hidden_dim = r.U32();
  dims.vocab_size = r.U32();
  dims.num_categories = taxonomy.num_categories();
  if (dims.vocab_size != taxonomy.vocab_size()) {
    Throw(ErrorCode::kDataLoss, "checkpoint vocabulary size " +
                                    std::to_string(dims.vocab_size) +
                                    " does not match taxonomy");
  }
  constexpr uint32_t kMaxDim = 1u << 16;
  if (dims.feature_dim == 0 || dims.embed_dim == 0 || dims.hidden_dim == 0 ||
      dims.feature_dim > kMaxDim || dims.embed_dim > kMaxDim ||
      dims.hidden_dim > kMaxDim) {
    Throw(ErrorCode::kDataLoss, "checkpoint has implausible dimensions");
  }
  SeqModelParams p = SeqModelParams::Zeros(dims);
  r.Require(p.num_parameters() * sizeof(double));
  for (auto block : p.Blocks()) {
    for (double& x : block) {
      x = r.F64();
      if (!std::isfinite(x)) Throw(ErrorCode::kDataLoss, "non-finite parameter in checkpoint");
    }
  }
  if (r.remaining() != 0) {
    Throw(ErrorCode::kDataLoss, "trailing bytes after checkpoint payload");
  }
  return p;
}

void SaveCheckpoint(const SeqModelParams& params, const Taxonomy& taxonomy,
                    const std::string& path) {
  WriteFileBytes(path, SerializeCheckpoint(params, taxonomy.content_hash()));
}

SeqModelParams LoadCheckpoint(const std::string& path, const Taxonomy& taxonomy) {
  return ParseCheckpoint(ReadFileBytes(path), taxonomy);
}

SequenceDataset ParseSequenceDataset(std::string_view jsonl, const Taxonomy& taxonomy) {
  SequenceDataset out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      SeqExample ex;
      auto values = j.at("feature").get<std::vector<double>>();
      ex.feature = Eigen::Map<const Vector>(values.data(),
                                            static_cast<Index>(values.size()));
      for (const auto& name : j.at("attributes")) {
        SymbolId s = taxonomy.SymbolIndex(name.get<std::string>());
        FPS_CHECK_ARG(s != taxonomy.eos(), "attribute lists must not contain EOS");
        ex.symbols.push_back(s);
      }
      ex.symbols.push_back(taxonomy.eos());
      const std::string split = j.value("split", "train");
      if (split == "train") {
        out.train.push_back(std::move(ex));
      } else if (split == "validation") {
        out.validation.push_back(std::move(ex));
      } else if (split == "test") {
        out.test.push_back(std::move(ex));
      } else {
        Throw(ErrorCode::kInvalidArgument, "unknown split '" + split + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      Throw(ErrorCode::kInvalidArgument,
            "sequence dataset line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      Throw(e.code(), "sequence dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

SequenceDataset LoadSequenceDataset(const std::string& path, const Taxonomy& taxonomy) {
  std::ifstream in(path);
  if (!in) Throw(ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseSequenceDataset(ss.str(), taxonomy);
}

}  // namespace fpsearch
