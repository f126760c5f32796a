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

#include "fpsearch/residual.h"

#include <cmath>
#include <string>

#include "fpsearch/error.h"

namespace fpsearch {

namespace {

Vector Activate(Activation act, const Vector& z) {
  return act == Activation::kTanh ? Vector(z.array().tanh()) : z;
}

// Elementwise derivative expressed through the activation output.
Vector ActivationSlope(Activation act, const Vector& out) {
  if (act == Activation::kLinear) return Vector::Ones(out.size());
  return (1.0 - out.array().square()).matrix();
}

Vector Shortcut(const ResidualLayer& layer, const Vector& x) {
  return layer.shortcut == ShortcutKind::kIdentity ? x
                                                   : Vector(layer.projection * x);
}

std::string Dims(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

size_t ResidualStack::input_dim() const {
  return layers.empty() ? 0 : layers.front().in_dim();
}

size_t ResidualStack::output_dim() const {
  return layers.empty() ? 0 : layers.back().out_dim();
}

void ResidualStack::CheckShapes() const {
  for (size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const std::string at = "residual layer " + std::to_string(l) + ": ";
    FPS_CHECK_ARG(layer.bias.size() == layer.weight.rows(),
                  at + "bias has " + std::to_string(layer.bias.size()) +
                      " entries for weight " +
                      Dims(layer.weight.rows(), layer.weight.cols()));
    if (layer.shortcut == ShortcutKind::kIdentity) {
      FPS_CHECK_ARG(layer.in_dim() == layer.out_dim(),
                    at + "identity shortcut needs equal dims, got " +
                        Dims(layer.weight.rows(), layer.weight.cols()));
    } else {
      FPS_CHECK_ARG(layer.projection.rows() == layer.weight.rows() &&
                        layer.projection.cols() == layer.weight.cols(),
                    at + "projection is " +
                        Dims(layer.projection.rows(), layer.projection.cols()) +
                        ", expected " +
                        Dims(layer.weight.rows(), layer.weight.cols()));
    }
    if (l > 0) {
      FPS_CHECK_ARG(layers[l - 1].out_dim() == layer.in_dim(),
                    at + "input dim does not match previous layer output");
    }
  }
}

ResidualLayer MakeResidualLayer(size_t in, size_t out, Activation act) {
  ResidualLayer layer;
  const auto r = static_cast<Eigen::Index>(out);
  const auto c = static_cast<Eigen::Index>(in);
  layer.weight = Matrix::Zero(r, c);
  layer.bias = Vector::Zero(r);
  layer.activation = act;
  if (in != out) {
    layer.shortcut = ShortcutKind::kProjection;
    layer.projection = Matrix::Zero(r, c);
  }
  return layer;
}

std::vector<Vector> Forward(const ResidualStack& stack, const Vector& x) {
  stack.CheckShapes();
  FPS_CHECK_ARG(static_cast<size_t>(x.size()) == stack.input_dim(),
                "input has " + std::to_string(x.size()) + " entries, stack expects " +
                    std::to_string(stack.input_dim()));
  FPS_CHECK_ARG(x.allFinite(), "input contains non-finite values");
  std::vector<Vector> acts;
  acts.reserve(stack.layers.size() + 1);
  acts.push_back(x);
  for (const auto& layer : stack.layers) {
    const Vector& in = acts.back();
    Vector h = Activate(layer.activation, layer.weight * in + layer.bias);
    acts.push_back(h + Shortcut(layer, in));
  }
  return acts;
}

BackwardResult Backward(const ResidualStack& stack,
                        const std::vector<Vector>& activations,
                        const Vector& upstream) {
  stack.CheckShapes();
  const size_t depth = stack.layers.size();
  FPS_CHECK_ARG(activations.size() == depth + 1,
                "expected " + std::to_string(depth + 1) + " activations, got " +
                    std::to_string(activations.size()));
  FPS_CHECK_ARG(upstream.size() == activations.back().size(),
                "upstream gradient has " + std::to_string(upstream.size()) +
                    " entries, output has " +
                    std::to_string(activations.back().size()));

  BackwardResult out;
  out.input_grads.resize(depth + 1);
  out.layer_grads.resize(depth);
  out.input_grads[depth] = upstream;
  for (size_t l = depth; l-- > 0;) {
    const auto& layer = stack.layers[l];
    const Vector& x = activations[l];
    const Vector& g = out.input_grads[l + 1];
    // Recompute the branch output; activations only hold the block sums.
    Vector h = Activate(layer.activation, layer.weight * x + layer.bias);
    Vector dz = g.cwiseProduct(ActivationSlope(layer.activation, h));

    auto& lg = out.layer_grads[l];
    lg.weight = dz * x.transpose();
    lg.bias = dz;
    Vector dx = layer.weight.transpose() * dz;
    if (layer.shortcut == ShortcutKind::kIdentity) {
      dx += g;
    } else {
      lg.projection = g * x.transpose();
      dx += layer.projection.transpose() * g;
    }
    out.input_grads[l] = std::move(dx);
  }
  return out;
}

GradientReport GradientDecomposition(const ResidualStack& stack, const Vector& x,
                                     const Vector& upstream, size_t layer) {
  for (size_t l = 0; l < stack.layers.size(); ++l) {
    if (stack.layers[l].shortcut != ShortcutKind::kIdentity) {
      Throw(ErrorCode::kFailedPrecondition,
            "gradient decomposition needs identity shortcuts; layer " +
                std::to_string(l) + " uses a projection");
    }
  }
  const auto acts = Forward(stack, x);
  const size_t depth = stack.layers.size();
  FPS_CHECK_ARG(layer <= depth, "layer index out of range");
  FPS_CHECK_ARG(upstream.size() == acts.back().size(),
                "upstream gradient dimension mismatch");

  const auto n = static_cast<Eigen::Index>(stack.input_dim());
  GradientReport report;
  report.direct_term = upstream;
  report.total_gradient = upstream;

  // chain = dx^i / dx^layer, advanced block by block.
  Matrix chain = Matrix::Identity(n, n);
  for (size_t i = layer; i < depth; ++i) {
    const auto& block = stack.layers[i];
    Vector h = Activate(block.activation, block.weight * acts[i] + block.bias);
    Matrix branch_jacobian =
        ActivationSlope(block.activation, h).asDiagonal() * block.weight;
    Matrix term = branch_jacobian * chain;  // dH(x^i)/dx^layer
    Vector path = term.transpose() * upstream;
    report.total_gradient += path;
    report.path_terms.push_back(std::move(path));
    chain += term;
  }

  const auto reference = Backward(stack, acts, upstream);
  report.max_abs_residual =
      (report.total_gradient - reference.input_grads[layer]).cwiseAbs().maxCoeff();
  return report;
}

}  // namespace fpsearch
