// SPDX-License-Identifier: Apache-2.0
#include "triage/seq/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "triage/error.hpp"

namespace triage::seq {

AttentionPool::AttentionPool(const std::string& name, std::size_t dim, bool projection, Rng& rng)
    : context_(name + ".context", nn::glorot_uniform({dim}, dim, 1, rng)) {
  if (projection) projection_.emplace(name + ".projection", dim, dim, rng);
}

void AttentionPool::collect(std::vector<Parameter*>& out) {
  out.push_back(&context_);
  if (projection_) projection_->collect(out);
}

AttentionPool::Result AttentionPool::forward(const Tensor& outputs, const SequenceMask& mask) {
  if (outputs.rank() != 3 || outputs.dim(2) != dim()) {
    throw ShapeError("attention expects [T x B x " + std::to_string(dim()) + "], got " +
                     nn::shape_string(outputs.shape()));
  }
  const std::size_t T = outputs.dim(0), B = outputs.dim(1), k = dim();
  if (mask.steps != T || mask.batch != B) throw ShapeError("attention: mask shape mismatch");
  outputs_ = outputs;
  mask_ = mask;
  keys_ = Tensor({T * B, k}, std::vector<double>(outputs.data().begin(), outputs.data().end()));
  if (projection_) keys_ = squash_.forward(projection_->forward(keys_));

  weights_ = Tensor({T, B});
  Tensor pooled({B, k});
  const auto& u = context_.value;
  for (std::size_t b = 0; b < B; ++b) {
    double top = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t t = 0; t < T; ++t) {
      if (!mask(t, b)) continue;
      const auto key = keys_.row(t * B + b);
      double score = 0.0;
      for (std::size_t j = 0; j < k; ++j) score += key[j] * u[j];
      weights_.at(t, b) = score;
      top = std::max(top, score);
      any = true;
    }
    if (!any) throw Error("attention: batch row " + std::to_string(b) + " is fully masked");
    double sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      if (!mask(t, b)) continue;
      weights_.at(t, b) = std::exp(weights_.at(t, b) - top);
      sum += weights_.at(t, b);
    }
    for (std::size_t t = 0; t < T; ++t) {
      if (!mask(t, b)) continue;
      const double w = weights_.at(t, b) /= sum;
      for (std::size_t j = 0; j < k; ++j) pooled.at(b, j) += w * outputs.at(t, b, j);
    }
  }
  return {std::move(pooled), weights_};
}

Tensor AttentionPool::backward(const Tensor& d_pooled) {
  const std::size_t T = outputs_.dim(0), B = outputs_.dim(1), k = dim();
  nn::require_shape(d_pooled, {B, k}, "attention backward upstream");
  Tensor d_outputs({T, B, k});
  Tensor d_keys({T * B, k});
  const auto& u = context_.value;
  for (std::size_t b = 0; b < B; ++b) {
    const auto dp = d_pooled.row(b);
    // d(score_t) = w_t (g_t - sum_s w_s g_s), with g_t = dp . h_t.
    double mean = 0.0;
    std::vector<double> g(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      if (!mask_(t, b)) continue;
      for (std::size_t j = 0; j < k; ++j) g[t] += dp[j] * outputs_.at(t, b, j);
      mean += weights_.at(t, b) * g[t];
    }
    for (std::size_t t = 0; t < T; ++t) {
      if (!mask_(t, b)) continue;
      const double w = weights_.at(t, b);
      const double d_score = w * (g[t] - mean);
      const auto key = keys_.row(t * B + b);
      auto d_key = d_keys.row(t * B + b);
      for (std::size_t j = 0; j < k; ++j) {
        d_outputs.at(t, b, j) += w * dp[j];
        context_.grad[j] += d_score * key[j];
        d_key[j] += d_score * u[j];
      }
    }
  }
  if (projection_) d_keys = projection_->backward(squash_.backward(d_keys));
  for (std::size_t i = 0; i < d_outputs.size(); ++i) d_outputs[i] += d_keys[i];
  return d_outputs;
}

DeepAttentionBlock::DeepAttentionBlock(const std::string& name, std::size_t input_dim,
                                       std::size_t hidden_dim, double dropout, bool projection,
                                       Rng& rng)
    : gru_(name + ".gru", input_dim, hidden_dim, false, rng),
      pool_(name + ".attention", hidden_dim, projection, rng),
      dropout_(dropout) {}

void DeepAttentionBlock::collect(std::vector<Parameter*>& out) {
  gru_.collect(out);
  pool_.collect(out);
}

Tensor DeepAttentionBlock::forward(const Tensor& inputs, const SequenceMask& mask, nn::Mode mode,
                                   Rng& rng) {
  auto encoded = gru_.forward(inputs, mask);
  auto pooled = pool_.forward(encoded.outputs, mask);
  weights_ = std::move(pooled.weights);
  return dropout_.forward(pooled.pooled, mode, rng);
}

Tensor DeepAttentionBlock::backward(const Tensor& d_pooled) {
  return gru_.backward(pool_.backward(dropout_.backward(d_pooled)), Tensor());
}

}  // namespace triage::seq
