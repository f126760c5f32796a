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

#ifndef FPSEARCH_RESIDUAL_H_
#define FPSEARCH_RESIDUAL_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace fpsearch {

// Row-major so that data() matches the checkpoint byte order.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class ShortcutKind : uint32_t { kIdentity = 0, kProjection = 1 };
enum class Activation : uint32_t { kTanh = 0, kLinear = 1 };

// One residual block: x' = act(W x + b) + shortcut(x), where shortcut is the
// identity or a learned projection P x when in/out dims differ.
struct ResidualLayer {
  Matrix weight;      // out x in
  Vector bias;        // out
  ShortcutKind shortcut = ShortcutKind::kIdentity;
  Matrix projection;  // out x in, only for kProjection
  Activation activation = Activation::kTanh;

  size_t in_dim() const { return static_cast<size_t>(weight.cols()); }
  size_t out_dim() const { return static_cast<size_t>(weight.rows()); }
};

struct ResidualStack {
  std::vector<ResidualLayer> layers;

  size_t input_dim() const;
  size_t output_dim() const;
  // Throws kInvalidArgument when shapes are inconsistent.
  void CheckShapes() const;
};

// Zero-initialized layer; projection shortcut chosen iff in != out.
ResidualLayer MakeResidualLayer(size_t in, size_t out,
                                Activation act = Activation::kTanh);

struct LayerGradients {
  Matrix weight;
  Vector bias;
  Matrix projection;  // empty for identity shortcuts
};

struct BackwardResult {
  // input_grads[l] = dL/dx^l for l = 0..L.
  std::vector<Vector> input_grads;
  std::vector<LayerGradients> layer_grads;
};

struct GradientReport {
  Vector total_gradient;
  Vector direct_term;
  std::vector<Vector> path_terms;  // one per layer i = l..L-1
  double max_abs_residual = 0.0;   // against Backward()
};

// activations[0] = x, activations[l + 1] = H_l(x^l) + shortcut_l(x^l).
std::vector<Vector> Forward(const ResidualStack& stack, const Vector& x);

// Gradients of a loss whose gradient w.r.t. the final activation is
// `upstream`.
BackwardResult Backward(const ResidualStack& stack,
                        const std::vector<Vector>& activations,
                        const Vector& upstream);

// Rebuilds dL/dx^layer as the unit path plus one additive term per later
// block, each term being the full chain through dH(x^i)/dx^layer. Only
// defined for identity shortcuts.
GradientReport GradientDecomposition(const ResidualStack& stack, const Vector& x,
                                     const Vector& upstream, size_t layer = 0);

}  // namespace fpsearch

#endif  // FPSEARCH_RESIDUAL_H_
