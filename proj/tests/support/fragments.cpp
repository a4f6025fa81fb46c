// SPDX-License-Identifier: Apache-2.0
#include "support/fragments.hpp"

namespace triage::testing {

Tensor random_tensor(nn::Shape shape, Rng& rng, double scale) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-scale, scale);
  return t;
}

double weighted_sum(const Tensor& x, const Tensor& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w[i];
  return s;
}

// ---- affine -------------------------------------------------------------------

AffineFragment::AffineFragment(std::size_t batch, std::size_t in, std::size_t out, std::uint64_t seed) {
  Rng rng(seed);
  x_ = Parameter("x", random_tensor({batch, in}, rng));
  layer_ = nn::Affine("affine", in, out, rng);
  for (auto& v : layer_.bias().value.data()) v = rng.uniform(-0.5, 0.5);
  probe_ = random_tensor({batch, out}, rng);
}

double AffineFragment::loss() { return weighted_sum(layer_.forward(x_.value), probe_); }

void AffineFragment::backward() { x_.grad += layer_.backward(probe_); }

std::vector<Parameter*> AffineFragment::parameters() {
  std::vector<Parameter*> out{&x_};
  layer_.collect(out);
  return out;
}

// ---- softmax + cross-entropy --------------------------------------------------

SoftmaxCrossEntropyFragment::SoftmaxCrossEntropyFragment(std::size_t batch, std::size_t classes,
                                                         std::uint64_t seed) {
  Rng rng(seed);
  logits_ = Parameter("logits", random_tensor({batch, classes}, rng, 2.0));
  for (std::size_t b = 0; b < batch; ++b) labels_.push_back(static_cast<ClassId>(rng.below(classes)));
}

double SoftmaxCrossEntropyFragment::loss() {
  last_ = nn::cross_entropy(nn::softmax(logits_.value), labels_);
  return last_.loss;
}

void SoftmaxCrossEntropyFragment::backward() { logits_.grad += last_.logit_grad; }

std::vector<Parameter*> SoftmaxCrossEntropyFragment::parameters() { return {&logits_}; }

// ---- dropout ------------------------------------------------------------------

DropoutFragment::DropoutFragment(std::size_t rows, std::size_t cols, double p, std::uint64_t seed)
    : dropout_(p), mask_seed_(Rng::derive(seed, 1)) {
  Rng rng(seed);
  x_ = Parameter("x", random_tensor({rows, cols}, rng));
  probe_ = random_tensor({rows, cols}, rng);
}

double DropoutFragment::loss() {
  Rng mask(mask_seed_);
  return weighted_sum(dropout_.forward(tanh_.forward(x_.value), nn::Mode::Train, mask), probe_);
}

void DropoutFragment::backward() { x_.grad += tanh_.backward(dropout_.backward(probe_)); }

std::vector<Parameter*> DropoutFragment::parameters() { return {&x_}; }

// ---- GRU cell -------------------------------------------------------------------

GruCellFragment::GruCellFragment(std::size_t batch, std::size_t in, std::size_t hidden,
                                 std::uint64_t seed, std::size_t steps) {
  Rng rng(seed);
  cell_ = seq::GruCell("gru", in, hidden, rng);
  for (auto* p : std::initializer_list<Parameter*>{&cell_.b_z, &cell_.b_r, &cell_.b_h}) {
    for (auto& v : p->value.data()) v = rng.uniform(-0.5, 0.5);
  }
  for (std::size_t t = 0; t < steps; ++t) {
    inputs_.emplace_back("x" + std::to_string(t), random_tensor({batch, in}, rng));
    probes_.push_back(random_tensor({batch, hidden}, rng));
  }
  h0_ = Parameter("h0", random_tensor({batch, hidden}, rng, 0.5));
}

double GruCellFragment::loss() {
  caches_.assign(inputs_.size(), {});
  Tensor h = h0_.value;
  double total = 0.0;
  for (std::size_t t = 0; t < inputs_.size(); ++t) {
    h = seq::gru_step(cell_, inputs_[t].value, h, &caches_[t]);
    total += weighted_sum(h, probes_[t]);
  }
  return total;
}

void GruCellFragment::backward() {
  Tensor carry(h0_.value.shape());
  for (std::size_t s = inputs_.size(); s > 0; --s) {
    const std::size_t t = s - 1;
    Tensor dh = probes_[t];
    dh += carry;
    Tensor dx, dh_prev;
    seq::gru_step_backward(cell_, caches_[t], dh, dx, dh_prev);
    inputs_[t].grad += dx;
    carry = std::move(dh_prev);
  }
  h0_.grad += carry;
}

std::vector<Parameter*> GruCellFragment::parameters() {
  std::vector<Parameter*> out;
  cell_.collect(out);
  for (auto& x : inputs_) out.push_back(&x);
  out.push_back(&h0_);
  return out;
}

// ---- GRU encoder ----------------------------------------------------------------

GruEncoderFragment::GruEncoderFragment(std::size_t steps, std::size_t batch, std::size_t in,
                                       std::size_t hidden, bool bidirectional, std::uint64_t seed)
    : mask_(steps, batch, true) {
  Rng rng(seed);
  encoder_ = seq::GruEncoder("enc", in, hidden, bidirectional, rng);
  inputs_ = Parameter("inputs", random_tensor({steps, batch, in}, rng));
  // Ragged lengths: row b keeps its first steps - b positions.
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = steps > b ? steps - b : 1; t < steps; ++t) mask_.set(t, b, false);
  }
  probe_outputs_ = random_tensor({steps, batch, encoder_.output_dim()}, rng);
  probe_final_ = random_tensor({batch, encoder_.output_dim()}, rng);
}

double GruEncoderFragment::loss() {
  const auto out = encoder_.forward(inputs_.value, mask_);
  return weighted_sum(out.outputs, probe_outputs_) + weighted_sum(out.final_state, probe_final_);
}

void GruEncoderFragment::backward() { inputs_.grad += encoder_.backward(probe_outputs_, probe_final_); }

std::vector<Parameter*> GruEncoderFragment::parameters() {
  std::vector<Parameter*> out;
  encoder_.collect(out);
  out.push_back(&inputs_);
  return out;
}

// ---- attention ------------------------------------------------------------------

AttentionFragment::AttentionFragment(std::size_t steps, std::size_t batch, std::size_t dim,
                                     bool projection, std::uint64_t seed)
    : mask_(steps, batch, true) {
  Rng rng(seed);
  pool_ = seq::AttentionPool("attn", dim, projection, rng);
  for (auto& v : pool_.context().value.data()) v = rng.uniform(-1.0, 1.0);
  outputs_ = Parameter("outputs", random_tensor({steps, batch, dim}, rng));
  for (std::size_t b = 1; b < batch && steps > 1; ++b) mask_.set(steps - 1, b, false);
  probe_ = random_tensor({batch, dim}, rng);
}

double AttentionFragment::loss() { return weighted_sum(pool_.forward(outputs_.value, mask_).pooled, probe_); }

void AttentionFragment::backward() { outputs_.grad += pool_.backward(probe_); }

std::vector<Parameter*> AttentionFragment::parameters() {
  std::vector<Parameter*> out;
  pool_.collect(out);
  out.push_back(&outputs_);
  return out;
}

// ---- full models ----------------------------------------------------------------

std::vector<EncodedDocument> micro_documents() {
  return {{{2, 3, 4}, {5, 6, 7}}, {{3, 5, 7}, {2, 4, 6}}};
}

EmbeddingTable random_table(std::size_t vocab, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingTable table;
  table.matrix = random_tensor({vocab, dim}, rng);
  for (std::size_t j = 0; j < dim; ++j) table.matrix.at(0, j) = 0.0;
  for (std::size_t i = 0; i < vocab; ++i) table.tokens.push_back("w" + std::to_string(i));
  table.vocab_hash = "micro";
  return table;
}

seq::ModelSpec micro_spec(seq::Architecture arch) {
  seq::ModelSpec spec;
  spec.architecture = arch;
  spec.num_classes = 2;
  spec.fine_tune_embeddings = true;
  switch (arch) {
    case seq::Architecture::EmbeddingBag:
      spec.block_sizes = {};
      break;
    case seq::Architecture::DeepTriage:
      spec.block_sizes = {3};
      spec.fc_width = 3;
      break;
    case seq::Architecture::Han:
      spec.block_sizes = {3};
      spec.attention_projection = true;
      break;
    case seq::Architecture::Proposed:
      spec.block_sizes = {2, 3};
      spec.shallow_size = 2;
      spec.fc_width = 3;
      break;
  }
  return spec;
}

ModelFragment::ModelFragment(seq::Architecture arch, nn::Mode mode, std::uint64_t seed)
    : table_(random_table(8, 4, Rng::derive(seed, 7))),
      model_(seq::build_model(micro_spec(arch), table_, seed)),
      docs_(micro_documents()),
      labels_{0, 1},
      mode_(mode),
      seed_(seed) {
  std::vector<const EncodedDocument*> ptrs;
  for (const auto& d : docs_) ptrs.push_back(&d);
  batch_ = seq::make_batch(ptrs);
}

double ModelFragment::loss() {
  model_->reseed(Rng::derive(seed_, 99));
  last_ = nn::cross_entropy(nn::softmax(model_->forward(batch_, mode_)), labels_);
  return last_.loss;
}

void ModelFragment::backward() { model_->backward(last_.logit_grad); }

std::vector<Parameter*> ModelFragment::parameters() { return model_->parameters(); }

}  // namespace triage::testing
