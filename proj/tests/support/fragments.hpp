// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "triage/embeddings.hpp"
#include "triage/nn/gradcheck.hpp"
#include "triage/nn/layers.hpp"
#include "triage/seq/attention.hpp"
#include "triage/seq/gru.hpp"
#include "triage/seq/models.hpp"

namespace triage::testing {

using nn::Parameter;
using nn::Tensor;

Tensor random_tensor(nn::Shape shape, Rng& rng, double scale = 1.0);
/// Sum of elementwise products; the gradient of <x, w> w.r.t. x is w.
double weighted_sum(const Tensor& x, const Tensor& w);

/// Loss <x W + b, R> with x trainable.
class AffineFragment final : public nn::GradCheckFragment {
 public:
  AffineFragment(std::size_t batch, std::size_t in, std::size_t out, std::uint64_t seed);
  double loss() override;
  void backward() override;
  std::vector<Parameter*> parameters() override;

 private:
  Parameter x_;
  nn::Affine layer_;
  Tensor probe_;
};

/// Cross-entropy of softmax(logits) with logits trainable.
class SoftmaxCrossEntropyFragment final : public nn::GradCheckFragment {
 public:
  SoftmaxCrossEntropyFragment(std::size_t batch, std::size_t classes, std::uint64_t seed);
  double loss() override;
  void backward() override;
  std::vector<Parameter*> parameters() override;

 private:
  Parameter logits_;
  std::vector<ClassId> labels_;
  nn::LossResult last_;
};

/// <dropout(tanh(x)), R> in train mode with a fixed mask seed.
class DropoutFragment final : public nn::GradCheckFragment {
 public:
  DropoutFragment(std::size_t rows, std::size_t cols, double p, std::uint64_t seed);
  double loss() override;
  void backward() override;
  std::vector<Parameter*> parameters() override;

 private:
  Parameter x_;
  nn::Dropout dropout_;
  nn::Tanh tanh_;
  std::uint64_t mask_seed_;
  Tensor probe_;
};

/// Three hand-unrolled gru_step calls with trainable inputs and initial state.
class GruCellFragment final : public nn::GradCheckFragment {
 public:
  GruCellFragment(std::size_t batch, std::size_t in, std::size_t hidden, std::uint64_t seed,
                  std::size_t steps = 3);
  double loss() override;
  void backward() override;
  std::vector<Parameter*> parameters() override;

 private:
  seq::GruCell cell_;
  std::vector<Parameter> inputs_;
  Parameter h0_;
  std::vector<Tensor> probes_;
  std::vector<seq::GruStepCache> caches_;
};

/// GRU encoder over a padded batch; loss reads both outputs and final state.
class GruEncoderFragment final : public nn::GradCheckFragment {
 public:
  GruEncoderFragment(std::size_t steps, std::size_t batch, std::size_t in, std::size_t hidden,
                     bool bidirectional, std::uint64_t seed);
  double loss() override;
  void backward() override;
  std::vector<Parameter*> parameters() override;

 private:
  seq::GruEncoder encoder_;
  Parameter inputs_;
  seq::SequenceMask mask_;
  Tensor probe_outputs_, probe_final_;
};

/// Attention pooling over trainable encoder outputs with some masked steps.
class AttentionFragment final : public nn::GradCheckFragment {
 public:
  AttentionFragment(std::size_t steps, std::size_t batch, std::size_t dim, bool projection,
                    std::uint64_t seed);
  double loss() override;
  void backward() override;
  std::vector<Parameter*> parameters() override;

 private:
  seq::AttentionPool pool_;
  Parameter outputs_;
  seq::SequenceMask mask_;
  Tensor probe_;
};

/// Two documents of two sentences with three tokens each, two classes.
std::vector<EncodedDocument> micro_documents();
/// Random table over `vocab` rows of width `dim`; row 0 is zero.
EmbeddingTable random_table(std::size_t vocab, std::size_t dim, std::uint64_t seed);
/// Small sizes of the given architecture for gradient checks.
seq::ModelSpec micro_spec(seq::Architecture arch);

/// Cross-entropy of a full model on the micro-instance. In train mode the
/// dropout stream is restarted before every forward so all evaluations
/// share one mask.
class ModelFragment final : public nn::GradCheckFragment {
 public:
  ModelFragment(seq::Architecture arch, nn::Mode mode, std::uint64_t seed);
  double loss() override;
  void backward() override;
  std::vector<Parameter*> parameters() override;

 private:
  EmbeddingTable table_;
  std::unique_ptr<seq::Model> model_;
  std::vector<EncodedDocument> docs_;
  seq::Batch batch_;
  std::vector<ClassId> labels_;
  nn::Mode mode_;
  std::uint64_t seed_;
  nn::LossResult last_;
};

}  // namespace triage::testing
