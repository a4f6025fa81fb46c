// SPDX-License-Identifier: Apache-2.0
#include "triage/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace triage::nn {

GradCheckResult gradient_check(GradCheckFragment& fragment, double h) {
  auto params = fragment.parameters();
  for (auto* p : params) p->zero_grad();
  fragment.loss();
  fragment.backward();

  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad);

  GradCheckResult result;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i]->value;
    double worst = 0.0;
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double original = value[j];
      value[j] = original + h;
      const double plus = fragment.loss();
      value[j] = original - h;
      const double minus = fragment.loss();
      value[j] = original;
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic[i][j];
      const double err =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, err);
    }
    result.per_parameter.emplace_back(params[i]->name, worst);
    result.max_relative_error = std::max(result.max_relative_error, worst);
  }
  return result;
}

}  // namespace triage::nn
