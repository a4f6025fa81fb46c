// SPDX-License-Identifier: Apache-2.0
#include "triage/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "triage/error.hpp"

namespace triage::nn {

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

Tensor affine_forward(const Tensor& x, const Parameter& weight, const Parameter& bias) {
  if (x.rank() != 2 || weight.value.rank() != 2 || bias.value.rank() != 1 ||
      x.dim(1) != weight.value.dim(0) || bias.value.dim(0) != weight.value.dim(1)) {
    throw ShapeError("affine: input " + shape_string(x.shape()) + " incompatible with weight " +
                     shape_string(weight.value.shape()) + " and bias " +
                     shape_string(bias.value.shape()));
  }
  const std::size_t rows = x.dim(0), n = x.dim(1), m = weight.value.dim(1);
  Tensor y({rows, m});
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy(bias.value.data().begin(), bias.value.data().end(), y.row(i).begin());
  }
  matmul_add(x.data(), weight.value.data(), y.data(), rows, n, m);
  return y;
}

Tensor affine_backward(const Tensor& x, const Tensor& upstream, Parameter& weight, Parameter& bias) {
  const std::size_t rows = x.dim(0), n = x.dim(1), m = weight.value.dim(1);
  require_shape(upstream, {rows, m}, "affine backward upstream");
  matmul_add_at(x.data(), upstream.data(), weight.grad.data(), rows, n, m);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < m; ++j) bias.grad[j] += upstream.at(i, j);
  }
  Tensor dx({rows, n});
  matmul_add_bt(upstream.data(), weight.value.data(), dx.data(), rows, n, m);
  return dx;
}

Affine::Affine(const std::string& name, std::size_t in, std::size_t out, Rng& rng)
    : weight_(name + ".weight", glorot_uniform({in, out}, in, out, rng)),
      bias_(name + ".bias", Tensor({out})) {}

Tensor Affine::forward(const Tensor& x) {
  input_ = x;
  return affine_forward(x, weight_, bias_);
}

Tensor Affine::backward(const Tensor& upstream) {
  return affine_backward(input_, upstream, weight_, bias_);
}

Tensor Tanh::forward(const Tensor& x) {
  output_ = x;
  for (double& v : output_.data()) v = std::tanh(v);
  return output_;
}

Tensor Tanh::backward(const Tensor& upstream) const {
  Tensor dx = upstream;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= 1.0 - output_[i] * output_[i];
  return dx;
}

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 2 || logits.dim(1) < 1) {
    throw ShapeError("softmax expects [B x C] with C >= 1, got " + shape_string(logits.shape()));
  }
  Tensor probs = logits;
  for (std::size_t i = 0; i < probs.dim(0); ++i) {
    auto row = probs.row(i);
    const double top = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - top);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
  return probs;
}

LossResult cross_entropy(const Tensor& probs, std::span<const ClassId> labels) {
  if (probs.rank() != 2 || probs.dim(0) != labels.size()) {
    throw ShapeError("cross_entropy: probs " + shape_string(probs.shape()) + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t batch = probs.dim(0), classes = probs.dim(1);
  LossResult out{0.0, probs};
  for (std::size_t i = 0; i < batch; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw Error("cross_entropy: class id " + std::to_string(labels[i]) + " out of range for " +
                  std::to_string(classes) + " classes");
    }
    const auto c = static_cast<std::size_t>(labels[i]);
    out.loss -= std::log(std::max(probs.at(i, c), 1e-12));
    out.logit_grad.at(i, c) -= 1.0;
  }
  const double scale = 1.0 / static_cast<double>(batch);
  out.loss *= scale;
  for (double& g : out.logit_grad.data()) g *= scale;
  return out;
}

namespace {

void check_probability(double p) {
  if (!(p >= 0.0 && p < 1.0)) throw Error("dropout probability must lie in [0, 1)");
}

}  // namespace

Tensor dropout(const Tensor& x, const DropoutSpec& spec) {
  check_probability(spec.p);
  Rng rng(spec.seed);
  Dropout layer(spec.p);
  return layer.forward(x, spec.mode, rng);
}

Dropout::Dropout(double p) : p_(p) { check_probability(p); }

Tensor Dropout::forward(const Tensor& x, Mode mode, Rng& rng) {
  active_ = mode == Mode::Train && p_ > 0.0;
  if (!active_) return x;
  mask_ = Tensor(x.shape());
  const double keep = 1.0 / (1.0 - p_);
  for (double& m : mask_.data()) m = rng.uniform() < p_ ? 0.0 : keep;
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask_[i];
  return y;
}

Tensor Dropout::backward(const Tensor& upstream) const {
  if (!active_) return upstream;
  Tensor dx = upstream;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= mask_[i];
  return dx;
}

}  // namespace triage::nn
