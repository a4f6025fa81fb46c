// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "triage/nn/layers.hpp"
#include "triage/seq/gru.hpp"

namespace triage::seq {

/// Softmax-weighted sum of encoder outputs. Scores are dot products with a
/// learned context vector u; with `projection` enabled the outputs first
/// pass through tanh(h W + b).
class AttentionPool {
 public:
  struct Result {
    Tensor pooled;   // [B x k]
    Tensor weights;  // [T x B], exactly zero at masked steps
  };

  AttentionPool() = default;
  AttentionPool(const std::string& name, std::size_t dim, bool projection, Rng& rng);

  /// Throws if some batch row has no unmasked step.
  Result forward(const Tensor& outputs, const SequenceMask& mask);
  Tensor backward(const Tensor& d_pooled);

  std::size_t dim() const { return context_.value.dim(0); }
  Parameter& context() { return context_; }
  void collect(std::vector<Parameter*>& out);

 private:
  Parameter context_;
  std::optional<nn::Affine> projection_;
  nn::Tanh squash_;
  Tensor outputs_;
  Tensor keys_;  // outputs or their projection, [T*B x k]
  Tensor weights_;
  SequenceMask mask_;
};

/// GRU encoder, attention pooling, then dropout on the pooled vector.
class DeepAttentionBlock {
 public:
  DeepAttentionBlock() = default;
  DeepAttentionBlock(const std::string& name, std::size_t input_dim, std::size_t hidden_dim,
                     double dropout, bool projection, Rng& rng);

  /// [T x B x n] -> [B x k].
  Tensor forward(const Tensor& inputs, const SequenceMask& mask, nn::Mode mode, Rng& rng);
  Tensor backward(const Tensor& d_pooled);

  const Tensor& attention_weights() const { return weights_; }
  std::size_t output_dim() const { return gru_.output_dim(); }
  void collect(std::vector<Parameter*>& out);

 private:
  GruEncoder gru_;
  AttentionPool pool_;
  nn::Dropout dropout_;
  Tensor weights_;
};

}  // namespace triage::seq
