// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "triage/nn/tensor.hpp"
#include "triage/rng.hpp"

namespace triage::seq {

using nn::Parameter;
using nn::Tensor;

/// Gated recurrent unit with input dim n and hidden dim k:
///
///   z  = sigmoid(x W_z + h U_z + b_z)
///   r  = sigmoid(x W_r + h U_r + b_r)
///   h~ = tanh(x W_h + (r * h) U_h + b_h)
///   h' = (1 - z) * h + z * h~
struct GruCell {
  Parameter w_z, u_z, b_z;
  Parameter w_r, u_r, b_r;
  Parameter w_h, u_h, b_h;

  GruCell() = default;
  /// Glorot-uniform weights, zero biases.
  GruCell(const std::string& name, std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

  std::size_t input_dim() const { return w_z.value.dim(0); }
  std::size_t hidden_dim() const { return w_z.value.dim(1); }
  void collect(std::vector<Parameter*>& out);
};

struct GruStepCache {
  Tensor x, h_prev, z, r, candidate, reset_state;
};

/// One step over a batch: x [B x n], h_prev [B x k] -> h [B x k].
Tensor gru_step(const GruCell& cell, const Tensor& x, const Tensor& h_prev,
                GruStepCache* cache = nullptr);

/// Accumulates parameter gradients for upstream `dh` and returns the
/// gradients with respect to x and h_prev.
void gru_step_backward(GruCell& cell, const GruStepCache& cache, const Tensor& dh, Tensor& dx,
                       Tensor& dh_prev);

/// valid(t, b) is false at padded positions.
struct SequenceMask {
  std::size_t steps = 0;
  std::size_t batch = 0;
  std::vector<std::uint8_t> valid;

  SequenceMask() = default;
  SequenceMask(std::size_t steps, std::size_t batch, bool fill = true)
      : steps(steps), batch(batch), valid(steps * batch, fill ? 1 : 0) {}

  bool operator()(std::size_t t, std::size_t b) const { return valid[t * batch + b] != 0; }
  void set(std::size_t t, std::size_t b, bool v) { valid[t * batch + b] = v ? 1 : 0; }
};

struct EncoderOutput {
  /// [T x B x k], or [T x B x 2k] when bidirectional (forward half first).
  Tensor outputs;
  /// [B x k] or [B x 2k]: forward state after the last step, backward state
  /// after the first.
  Tensor final_state;
};

/// GRU over a [T x B x n] sequence. At padded positions the previous state
/// is carried forward unchanged, so trailing padding never alters the final
/// state and an all-padding row stays at zero.
class GruEncoder {
 public:
  GruEncoder() = default;
  GruEncoder(const std::string& name, std::size_t input_dim, std::size_t hidden_dim,
             bool bidirectional, Rng& rng);

  EncoderOutput forward(const Tensor& inputs, const SequenceMask& mask);
  /// Either upstream tensor may be empty when no gradient flows through it.
  Tensor backward(const Tensor& d_outputs, const Tensor& d_final);

  std::size_t input_dim() const { return forward_.input_dim(); }
  std::size_t hidden_dim() const { return forward_.hidden_dim(); }
  std::size_t output_dim() const { return bidirectional_ ? 2 * hidden_dim() : hidden_dim(); }
  bool bidirectional() const { return bidirectional_; }
  void collect(std::vector<Parameter*>& out);

 private:
  struct Pass {
    std::vector<GruStepCache> steps;
  };

  void run(GruCell& cell, bool reverse, const Tensor& inputs, Tensor& outputs, Tensor& final_state,
           std::size_t offset, Pass& pass);
  void run_backward(GruCell& cell, bool reverse, const Tensor& d_outputs, const Tensor& d_final,
                    std::size_t offset, const Pass& pass, Tensor& d_inputs);

  GruCell forward_;
  GruCell backward_;
  bool bidirectional_ = false;
  SequenceMask mask_;
  Pass forward_pass_;
  Pass backward_pass_;
  std::size_t steps_ = 0, batch_ = 0;
};

}  // namespace triage::seq
