// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "triage/nn/tensor.hpp"

namespace triage::nn {

/// A differentiable piece of a network with a scalar loss attached.
/// `loss()` must be deterministic; `backward()` populates the gradients of
/// every parameter for the most recent `loss()` call.
class GradCheckFragment {
 public:
  virtual ~GradCheckFragment() = default;
  virtual double loss() = 0;
  virtual void backward() = 0;
  virtual std::vector<Parameter*> parameters() = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  /// Worst relative error per parameter, in parameter order.
  std::vector<std::pair<std::string, double>> per_parameter;
};

/// Compares analytic gradients against central differences
/// (L(v+h) - L(v-h)) / 2h, element by element. Relative error is
/// |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult gradient_check(GradCheckFragment& fragment, double h = 1e-4);

}  // namespace triage::nn
