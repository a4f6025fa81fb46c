// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "triage/nn/tensor.hpp"

namespace triage::nn {

struct RmsPropState {
  double learning_rate = 1e-3;
  double decay = 0.9;
  double epsilon = 1e-8;
  /// Running mean of squared gradients, parallel to the parameter list.
  /// Allocated as zeros on the first step.
  std::vector<Tensor> cache;

  void validate() const;
};

/// cache <- decay*cache + (1-decay)*g^2; value <- value - lr*g/(sqrt(cache)+eps);
/// then zeroes every gradient. Throws before touching anything if a
/// gradient is non-finite.
void rmsprop_step(std::span<Parameter* const> params, RmsPropState& state);

void zero_grads(std::span<Parameter* const> params);

}  // namespace triage::nn
