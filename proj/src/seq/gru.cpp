// SPDX-License-Identifier: Apache-2.0
#include "triage/seq/gru.hpp"

#include <algorithm>
#include <cmath>

#include "triage/error.hpp"
#include "triage/nn/layers.hpp"

namespace triage::seq {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// out = x W + h U + b, all rows.
Tensor gate_input(const Tensor& x, const Parameter& w, const Tensor& h, const Parameter& u,
                  const Parameter& b) {
  const std::size_t rows = x.dim(0), n = x.dim(1), k = w.value.dim(1);
  Tensor out({rows, k});
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy(b.value.data().begin(), b.value.data().end(), out.row(i).begin());
  }
  nn::matmul_add(x.data(), w.value.data(), out.data(), rows, n, k);
  nn::matmul_add(h.data(), u.value.data(), out.data(), rows, k, k);
  return out;
}

void accumulate_gate(const Tensor& da, const Tensor& x, const Tensor& h, Parameter& w, Parameter& u,
                     Parameter& b, Tensor& dx, Tensor& dh) {
  const std::size_t rows = x.dim(0), n = x.dim(1), k = w.value.dim(1);
  nn::matmul_add_at(x.data(), da.data(), w.grad.data(), rows, n, k);
  nn::matmul_add_at(h.data(), da.data(), u.grad.data(), rows, k, k);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < k; ++j) b.grad[j] += da.at(i, j);
  }
  nn::matmul_add_bt(da.data(), w.value.data(), dx.data(), rows, n, k);
  nn::matmul_add_bt(da.data(), u.value.data(), dh.data(), rows, k, k);
}

}  // namespace

GruCell::GruCell(const std::string& name, std::size_t n, std::size_t k, Rng& rng) {
  const auto weight = [&](const char* suffix, std::size_t rows) {
    return Parameter(name + "." + suffix, nn::glorot_uniform({rows, k}, rows, k, rng));
  };
  const auto bias = [&](const char* suffix) { return Parameter(name + "." + suffix, Tensor({k})); };
  w_z = weight("w_z", n);
  u_z = weight("u_z", k);
  b_z = bias("b_z");
  w_r = weight("w_r", n);
  u_r = weight("u_r", k);
  b_r = bias("b_r");
  w_h = weight("w_h", n);
  u_h = weight("u_h", k);
  b_h = bias("b_h");
}

void GruCell::collect(std::vector<Parameter*>& out) {
  for (auto* p : {&w_z, &u_z, &b_z, &w_r, &u_r, &b_r, &w_h, &u_h, &b_h}) out.push_back(p);
}

Tensor gru_step(const GruCell& cell, const Tensor& x, const Tensor& h_prev, GruStepCache* cache) {
  const std::size_t n = cell.input_dim(), k = cell.hidden_dim();
  if (x.rank() != 2 || x.dim(1) != n || h_prev.rank() != 2 || h_prev.dim(1) != k ||
      h_prev.dim(0) != x.dim(0)) {
    throw ShapeError("gru_step: x " + nn::shape_string(x.shape()) + " and h " +
                     nn::shape_string(h_prev.shape()) + " do not fit a cell with n=" +
                     std::to_string(n) + ", k=" + std::to_string(k));
  }
  Tensor z = gate_input(x, cell.w_z, h_prev, cell.u_z, cell.b_z);
  for (double& v : z.data()) v = sigmoid(v);
  Tensor r = gate_input(x, cell.w_r, h_prev, cell.u_r, cell.b_r);
  for (double& v : r.data()) v = sigmoid(v);
  Tensor reset_state = r;
  for (std::size_t i = 0; i < reset_state.size(); ++i) reset_state[i] *= h_prev[i];
  Tensor candidate = gate_input(x, cell.w_h, reset_state, cell.u_h, cell.b_h);
  for (double& v : candidate.data()) v = std::tanh(v);

  Tensor h(h_prev.shape());
  for (std::size_t i = 0; i < h.size(); ++i) {
    h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * candidate[i];
  }
  if (cache) {
    cache->x = x;
    cache->h_prev = h_prev;
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->candidate = std::move(candidate);
    cache->reset_state = std::move(reset_state);
  }
  return h;
}

void gru_step_backward(GruCell& cell, const GruStepCache& c, const Tensor& dh, Tensor& dx,
                       Tensor& dh_prev) {
  nn::require_shape(dh, c.h_prev.shape(), "gru_step_backward upstream");
  const std::size_t size = dh.size();
  dx = Tensor(c.x.shape());
  dh_prev = Tensor(c.h_prev.shape());

  Tensor da_z(dh.shape()), da_h(dh.shape());
  for (std::size_t i = 0; i < size; ++i) {
    const double z = c.z[i], g = c.candidate[i];
    dh_prev[i] = dh[i] * (1.0 - z);
    da_z[i] = dh[i] * (g - c.h_prev[i]) * z * (1.0 - z);
    da_h[i] = dh[i] * z * (1.0 - g * g);
  }

  Tensor d_reset_state(dh.shape());
  accumulate_gate(da_h, c.x, c.reset_state, cell.w_h, cell.u_h, cell.b_h, dx, d_reset_state);

  Tensor da_r(dh.shape());
  for (std::size_t i = 0; i < size; ++i) {
    const double r = c.r[i];
    dh_prev[i] += d_reset_state[i] * r;
    da_r[i] = d_reset_state[i] * c.h_prev[i] * r * (1.0 - r);
  }
  accumulate_gate(da_z, c.x, c.h_prev, cell.w_z, cell.u_z, cell.b_z, dx, dh_prev);
  accumulate_gate(da_r, c.x, c.h_prev, cell.w_r, cell.u_r, cell.b_r, dx, dh_prev);
}

GruEncoder::GruEncoder(const std::string& name, std::size_t n, std::size_t k, bool bidirectional,
                       Rng& rng)
    : forward_(name + (bidirectional ? ".fwd" : ""), n, k, rng), bidirectional_(bidirectional) {
  if (bidirectional_) backward_ = GruCell(name + ".bwd", n, k, rng);
}

void GruEncoder::collect(std::vector<Parameter*>& out) {
  forward_.collect(out);
  if (bidirectional_) backward_.collect(out);
}

void GruEncoder::run(GruCell& cell, bool reverse, const Tensor& inputs, Tensor& outputs,
                     Tensor& final_state, std::size_t offset, Pass& pass) {
  const std::size_t T = steps_, B = batch_, n = cell.input_dim(), k = cell.hidden_dim();
  pass.steps.assign(T, {});
  Tensor h({B, k});
  Tensor x({B, n});
  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t t = reverse ? T - 1 - s : s;
    std::copy_n(inputs.data().begin() + static_cast<std::ptrdiff_t>(t * B * n), B * n, x.data().begin());
    Tensor next = gru_step(cell, x, h, &pass.steps[t]);
    for (std::size_t b = 0; b < B; ++b) {
      if (!mask_(t, b)) std::copy_n(h.row(b).begin(), k, next.row(b).begin());
    }
    for (std::size_t b = 0; b < B; ++b) {
      std::copy_n(next.row(b).begin(), k, &outputs.at(t, b, offset));
    }
    h = std::move(next);
  }
  for (std::size_t b = 0; b < B; ++b) std::copy_n(h.row(b).begin(), k, &final_state.at(b, offset));
}

EncoderOutput GruEncoder::forward(const Tensor& inputs, const SequenceMask& mask) {
  if (inputs.rank() != 3 || inputs.dim(2) != input_dim()) {
    throw ShapeError("encoder expects [T x B x " + std::to_string(input_dim()) + "], got " +
                     nn::shape_string(inputs.shape()));
  }
  steps_ = inputs.dim(0);
  batch_ = inputs.dim(1);
  if (mask.steps != steps_ || mask.batch != batch_) throw ShapeError("encoder: mask shape mismatch");
  mask_ = mask;
  const std::size_t k = hidden_dim();
  EncoderOutput out{Tensor({steps_, batch_, output_dim()}), Tensor({batch_, output_dim()})};
  run(forward_, false, inputs, out.outputs, out.final_state, 0, forward_pass_);
  if (bidirectional_) run(backward_, true, inputs, out.outputs, out.final_state, k, backward_pass_);
  return out;
}

void GruEncoder::run_backward(GruCell& cell, bool reverse, const Tensor& d_outputs,
                              const Tensor& d_final, std::size_t offset, const Pass& pass,
                              Tensor& d_inputs) {
  const std::size_t T = steps_, B = batch_, n = cell.input_dim(), k = cell.hidden_dim();
  Tensor carry({B, k});
  if (!d_final.empty()) {
    for (std::size_t b = 0; b < B; ++b) std::copy_n(d_final.ptr() + b * d_final.dim(1) + offset, k, carry.row(b).begin());
  }
  Tensor dx, dh_prev;
  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t t = reverse ? s : T - 1 - s;
    Tensor dh = carry;
    if (!d_outputs.empty()) {
      for (std::size_t b = 0; b < B; ++b) {
        const double* src = d_outputs.ptr() + (t * B + b) * d_outputs.dim(2) + offset;
        auto row = dh.row(b);
        for (std::size_t j = 0; j < k; ++j) row[j] += src[j];
      }
    }
    Tensor dh_step = dh;
    for (std::size_t b = 0; b < B; ++b) {
      if (!mask_(t, b)) std::fill(dh_step.row(b).begin(), dh_step.row(b).end(), 0.0);
    }
    gru_step_backward(cell, pass.steps[t], dh_step, dx, dh_prev);
    for (std::size_t b = 0; b < B; ++b) {
      if (!mask_(t, b)) std::copy_n(dh.row(b).begin(), k, dh_prev.row(b).begin());
    }
    double* dst = d_inputs.ptr() + t * B * n;
    for (std::size_t i = 0; i < B * n; ++i) dst[i] += dx[i];
    carry = std::move(dh_prev);
  }
}

Tensor GruEncoder::backward(const Tensor& d_outputs, const Tensor& d_final) {
  if (!d_outputs.empty()) nn::require_shape(d_outputs, {steps_, batch_, output_dim()}, "encoder d_outputs");
  if (!d_final.empty()) nn::require_shape(d_final, {batch_, output_dim()}, "encoder d_final");
  Tensor d_inputs({steps_, batch_, input_dim()});
  run_backward(forward_, false, d_outputs, d_final, 0, forward_pass_, d_inputs);
  if (bidirectional_) {
    run_backward(backward_, true, d_outputs, d_final, hidden_dim(), backward_pass_, d_inputs);
  }
  return d_inputs;
}

}  // namespace triage::seq
