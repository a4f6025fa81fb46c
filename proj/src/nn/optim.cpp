// SPDX-License-Identifier: Apache-2.0
#include "triage/nn/optim.hpp"

#include <cmath>

#include "triage/error.hpp"

namespace triage::nn {

void RmsPropState::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error("rmsprop: learning rate must be finite and non-negative");
  }
  if (!(decay > 0.0 && decay < 1.0)) throw Error("rmsprop: decay must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw Error("rmsprop: epsilon must be positive");
}

void zero_grads(std::span<Parameter* const> params) {
  for (auto* p : params) p->zero_grad();
}

void rmsprop_step(std::span<Parameter* const> params, RmsPropState& state) {
  state.validate();
  if (state.cache.empty()) {
    state.cache.reserve(params.size());
    for (const auto* p : params) state.cache.emplace_back(p->value.shape());
  }
  if (state.cache.size() != params.size()) {
    throw ShapeError("rmsprop: cache holds " + std::to_string(state.cache.size()) +
                     " tensors for " + std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_shape(state.cache[i], params[i]->value.shape(), "rmsprop cache");
    if (!params[i]->grad.all_finite()) {
      throw DivergenceError("rmsprop: non-finite gradient in parameter " + params[i]->name);
    }
  }
  const double rho = state.decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i]->value;
    const auto& grad = params[i]->grad;
    auto& cache = state.cache[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j];
      cache[j] = rho * cache[j] + (1.0 - rho) * g * g;
      value[j] -= state.learning_rate * g / (std::sqrt(cache[j]) + state.epsilon);
    }
    params[i]->zero_grad();
  }
}

}  // namespace triage::nn
