// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "triage/corpus.hpp"
#include "triage/nn/tensor.hpp"
#include "triage/rng.hpp"

namespace triage::nn {

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// y = x W + b for x [B x n], W [n x m], b [m].
Tensor affine_forward(const Tensor& x, const Parameter& weight, const Parameter& bias);
/// Accumulates into weight.grad and bias.grad; returns dL/dx.
Tensor affine_backward(const Tensor& x, const Tensor& upstream, Parameter& weight, Parameter& bias);

/// Fully connected layer that remembers its last input for backward.
class Affine {
 public:
  Affine() = default;
  Affine(const std::string& name, std::size_t in, std::size_t out, Rng& rng);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& upstream);

  std::size_t in_dim() const { return weight_.value.dim(0); }
  std::size_t out_dim() const { return weight_.value.dim(1); }
  Parameter& weight() noexcept { return weight_; }
  Parameter& bias() noexcept { return bias_; }
  void collect(std::vector<Parameter*>& out) { out.push_back(&weight_), out.push_back(&bias_); }

 private:
  Parameter weight_;
  Parameter bias_;
  Tensor input_;
};

/// Elementwise tanh that caches its output.
class Tanh {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& upstream) const;

 private:
  Tensor output_;
};

/// Row-wise softmax of [B x C] logits with max subtraction.
Tensor softmax(const Tensor& logits);

struct LossResult {
  double loss = 0.0;
  /// dL/dlogits = (probs - onehot) / B.
  Tensor logit_grad;
};

/// Mean over the batch of -log(max(p[true], 1e-12)).
LossResult cross_entropy(const Tensor& probs, std::span<const ClassId> labels);

enum class Mode { Train, Eval };

struct DropoutSpec {
  double p = 0.5;
  Mode mode = Mode::Train;
  std::uint64_t seed = 0;
};

/// Inverted dropout: units zeroed with probability p, survivors scaled by
/// 1/(1-p). Identity in eval mode. The mask is drawn from Rng(spec.seed).
Tensor dropout(const Tensor& x, const DropoutSpec& spec);

/// Dropout layer drawing its masks from a caller-owned stream.
class Dropout {
 public:
  explicit Dropout(double p = 0.5);

  Tensor forward(const Tensor& x, Mode mode, Rng& rng);
  Tensor backward(const Tensor& upstream) const;
  double p() const noexcept { return p_; }

 private:
  double p_;
  bool active_ = false;
  Tensor mask_;
};

}  // namespace triage::nn
