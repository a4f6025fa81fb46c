// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/embeddings.hpp"
#include "triage/nn/layers.hpp"
#include "triage/preprocess.hpp"
#include "triage/seq/attention.hpp"
#include "triage/seq/gru.hpp"

namespace triage::seq {

enum class Architecture { EmbeddingBag, DeepTriage, Han, Proposed };

std::string to_string(Architecture arch);
/// Accepts "embedding-bag", "deeptriage", "han", "proposed".
Architecture parse_architecture(const std::string& tag);

struct ModelSpec {
  Architecture architecture = Architecture::Proposed;
  /// GRU sizes of the deep attention blocks (proposed), or the single GRU
  /// size of han / deeptriage (first entry).
  std::vector<std::size_t> block_sizes{32, 64, 128};
  /// Flat single-GRU encoder alongside the blocks; 0 removes it.
  std::size_t shallow_size = 64;
  /// Hidden fully connected width before the output layer; 0 connects the
  /// document vector straight to the output (proposed only).
  std::size_t fc_width = 64;
  double dropout = 0.5;
  std::size_t num_classes = 2;
  /// tanh(h W + b) before the attention dot product.
  bool attention_projection = false;
  bool fine_tune_embeddings = false;

  void validate() const;
};

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j, ModelSpec defaults = {});

struct TokenGrid {
  std::size_t steps = 0;
  std::size_t batch = 0;
  std::vector<TokenId> ids;  // [steps x batch], <pad> where absent
  SequenceMask mask;

  TokenId at(std::size_t t, std::size_t b) const { return ids[t * batch + b]; }
};

/// Two views of a batch of documents. Documents with no token other than
/// <pad> are treated as the single-token document [[<oov>]]; sentences made
/// only of <pad> are dropped.
struct Batch {
  std::size_t size = 0;
  /// Every document as one token stream.
  TokenGrid flat;
  /// One column per kept sentence across the batch.
  TokenGrid words;
  std::vector<std::size_t> sentence_doc;
  std::vector<std::size_t> sentence_slot;
  /// [max sentences x size].
  SequenceMask sentences;
};

Batch make_batch(std::span<const EncodedDocument* const> docs);

/// Embedding lookup; gradients reach the table only when trainable, and
/// never the <pad> row.
class EmbeddingLayer {
 public:
  EmbeddingLayer() = default;
  EmbeddingLayer(const EmbeddingTable& table, bool trainable);

  Tensor forward(const TokenGrid& grid) const;
  void backward(const TokenGrid& grid, const Tensor& d_out);

  std::size_t dim() const { return table_.value.dim(1); }
  std::size_t vocab_size() const { return table_.value.dim(0); }
  bool trainable() const { return trainable_; }
  Parameter& table() { return table_; }

 private:
  Parameter table_;
  bool trainable_ = false;
};

class Model {
 public:
  virtual ~Model() = default;

  /// Logits [B x C].
  virtual Tensor forward(const Batch& batch, nn::Mode mode) = 0;
  /// Backpropagates dL/dlogits from the most recent forward.
  virtual void backward(const Tensor& d_logits) = 0;
  /// Length of the vector fed to the classifier head.
  virtual std::size_t document_dim() const = 0;

  std::vector<Parameter*> parameters();
  const ModelSpec& spec() const { return spec_; }
  EmbeddingLayer& embedding() { return embedding_; }
  /// Restarts the dropout stream.
  void reseed(std::uint64_t seed) { rng_ = Rng(seed); }

 protected:
  Model(const ModelSpec& spec, const EmbeddingTable& table, std::uint64_t seed);
  virtual void collect(std::vector<Parameter*>& out) = 0;

  ModelSpec spec_;
  EmbeddingLayer embedding_;
  Rng rng_;
};

/// Parameters are initialized from Rng(seed).
std::unique_ptr<Model> build_model(const ModelSpec& spec, const EmbeddingTable& table,
                                   std::uint64_t seed);

}  // namespace triage::seq
