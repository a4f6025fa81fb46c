// SPDX-License-Identifier: Apache-2.0
#include "triage/seq/models.hpp"

#include <algorithm>
#include <numeric>

#include "triage/error.hpp"

namespace triage::seq {

std::string to_string(Architecture arch) {
  switch (arch) {
    case Architecture::EmbeddingBag: return "embedding-bag";
    case Architecture::DeepTriage: return "deeptriage";
    case Architecture::Han: return "han";
    case Architecture::Proposed: return "proposed";
  }
  return "unknown";
}

Architecture parse_architecture(const std::string& tag) {
  if (tag == "embedding-bag") return Architecture::EmbeddingBag;
  if (tag == "deeptriage") return Architecture::DeepTriage;
  if (tag == "han") return Architecture::Han;
  if (tag == "proposed") return Architecture::Proposed;
  throw Error("unknown architecture \"" + tag + "\"");
}

void ModelSpec::validate() const {
  if (num_classes < 2) throw Error("model spec: need at least 2 classes");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("model spec: dropout must lie in [0, 1)");
  const bool needs_blocks = architecture != Architecture::EmbeddingBag;
  if (needs_blocks && block_sizes.empty()) {
    throw Error("model spec: " + to_string(architecture) + " needs at least one block size");
  }
  if (std::any_of(block_sizes.begin(), block_sizes.end(), [](std::size_t k) { return k == 0; })) {
    throw Error("model spec: block sizes must be positive");
  }
  if (architecture == Architecture::DeepTriage && fc_width == 0) {
    throw Error("model spec: deeptriage needs a positive fc_width");
  }
}

nlohmann::json spec_to_json(const ModelSpec& s) {
  return {{"architecture", to_string(s.architecture)},
          {"block_sizes", s.block_sizes},
          {"shallow_size", s.shallow_size},
          {"fc_width", s.fc_width},
          {"dropout", s.dropout},
          {"num_classes", s.num_classes},
          {"attention_projection", s.attention_projection},
          {"fine_tune_embeddings", s.fine_tune_embeddings}};
}

ModelSpec spec_from_json(const nlohmann::json& j, ModelSpec s) {
  if (j.contains("architecture")) s.architecture = parse_architecture(j.at("architecture").get<std::string>());
  s.block_sizes = j.value("block_sizes", s.block_sizes);
  s.shallow_size = j.value("shallow_size", s.shallow_size);
  s.fc_width = j.value("fc_width", s.fc_width);
  s.dropout = j.value("dropout", s.dropout);
  s.num_classes = j.value("num_classes", s.num_classes);
  s.attention_projection = j.value("attention_projection", s.attention_projection);
  s.fine_tune_embeddings = j.value("fine_tune_embeddings", s.fine_tune_embeddings);
  s.validate();
  return s;
}

// ---- batching --------------------------------------------------------------

namespace {

bool has_token(const std::vector<TokenId>& sentence) {
  return std::any_of(sentence.begin(), sentence.end(), [](TokenId id) { return id != Vocabulary::kPad; });
}

TokenGrid make_grid(const std::vector<std::vector<TokenId>>& columns) {
  TokenGrid grid;
  grid.batch = columns.size();
  for (const auto& c : columns) grid.steps = std::max(grid.steps, c.size());
  grid.ids.assign(grid.steps * grid.batch, Vocabulary::kPad);
  grid.mask = SequenceMask(grid.steps, grid.batch, false);
  for (std::size_t b = 0; b < columns.size(); ++b) {
    for (std::size_t t = 0; t < columns[b].size(); ++t) {
      grid.ids[t * grid.batch + b] = columns[b][t];
      grid.mask.set(t, b, columns[b][t] != Vocabulary::kPad);
    }
  }
  return grid;
}

}  // namespace

Batch make_batch(std::span<const EncodedDocument* const> docs) {
  Batch batch;
  batch.size = docs.size();
  std::vector<std::vector<TokenId>> streams(docs.size());
  std::vector<std::vector<TokenId>> sentences;
  std::size_t max_sentences = 0;
  std::vector<std::size_t> per_doc(docs.size(), 0);

  for (std::size_t b = 0; b < docs.size(); ++b) {
    const auto& doc = *docs[b];
    const bool empty = std::none_of(doc.begin(), doc.end(), has_token);
    if (empty) {
      streams[b] = {Vocabulary::kOov};
      sentences.push_back({Vocabulary::kOov});
      batch.sentence_doc.push_back(b);
      batch.sentence_slot.push_back(0);
      per_doc[b] = 1;
    } else {
      for (const auto& sentence : doc) {
        streams[b].insert(streams[b].end(), sentence.begin(), sentence.end());
        if (!has_token(sentence)) continue;
        sentences.push_back(sentence);
        batch.sentence_doc.push_back(b);
        batch.sentence_slot.push_back(per_doc[b]++);
      }
    }
    max_sentences = std::max(max_sentences, per_doc[b]);
  }
  batch.flat = make_grid(streams);
  batch.words = make_grid(sentences);
  batch.sentences = SequenceMask(max_sentences, docs.size(), false);
  for (std::size_t b = 0; b < docs.size(); ++b) {
    for (std::size_t s = 0; s < per_doc[b]; ++s) batch.sentences.set(s, b, true);
  }
  return batch;
}

// ---- embeddings -------------------------------------------------------------

EmbeddingLayer::EmbeddingLayer(const EmbeddingTable& table, bool trainable)
    : table_("embedding", table.matrix), trainable_(trainable) {
  if (table.matrix.rank() != 2 || table.vocab_size() == 0) throw Error("embedding table is empty");
}

Tensor EmbeddingLayer::forward(const TokenGrid& grid) const {
  const std::size_t d = dim(), V = vocab_size();
  Tensor out({grid.steps, grid.batch, d});
  for (std::size_t t = 0; t < grid.steps; ++t) {
    for (std::size_t b = 0; b < grid.batch; ++b) {
      const TokenId id = grid.at(t, b);
      if (id < 0 || static_cast<std::size_t>(id) >= V) {
        throw Error("token id " + std::to_string(id) + " outside the embedding table");
      }
      if (id == Vocabulary::kPad) continue;
      const auto row = table_.value.row(static_cast<std::size_t>(id));
      std::copy(row.begin(), row.end(), &out.at(t, b, 0));
    }
  }
  return out;
}

void EmbeddingLayer::backward(const TokenGrid& grid, const Tensor& d_out) {
  if (!trainable_) return;
  const std::size_t d = dim();
  for (std::size_t t = 0; t < grid.steps; ++t) {
    for (std::size_t b = 0; b < grid.batch; ++b) {
      const TokenId id = grid.at(t, b);
      if (id == Vocabulary::kPad || !grid.mask(t, b)) continue;
      auto row = table_.grad.row(static_cast<std::size_t>(id));
      for (std::size_t j = 0; j < d; ++j) row[j] += d_out.at(t, b, j);
    }
  }
}

// ---- models -----------------------------------------------------------------

Model::Model(const ModelSpec& spec, const EmbeddingTable& table, std::uint64_t seed)
    : spec_(spec), embedding_(table, spec.fine_tune_embeddings), rng_(Rng::derive(seed, 0xD0)) {
  spec_.validate();
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  if (embedding_.trainable()) out.push_back(&embedding_.table());
  collect(out);
  return out;
}

namespace {

/// Word-level block per sentence, then a sentence-level block per document.
class HierarchicalEncoder {
 public:
  HierarchicalEncoder(const std::string& name, std::size_t input_dim, std::size_t k, double dropout,
                      bool projection, Rng& rng)
      : word_(name + ".word", input_dim, k, dropout, projection, rng),
        sentence_(name + ".sentence", k, k, dropout, projection, rng),
        k_(k) {}

  Tensor forward(const Tensor& word_inputs, const Batch& batch, nn::Mode mode, Rng& rng) {
    sentence_doc_ = batch.sentence_doc;
    sentence_slot_ = batch.sentence_slot;
    const Tensor vectors = word_.forward(word_inputs, batch.words.mask, mode, rng);
    Tensor inputs({batch.sentences.steps, batch.size, k_});
    for (std::size_t r = 0; r < sentence_doc_.size(); ++r) {
      std::copy_n(vectors.row(r).begin(), k_, &inputs.at(sentence_slot_[r], sentence_doc_[r], 0));
    }
    return sentence_.forward(inputs, batch.sentences, mode, rng);
  }

  Tensor backward(const Tensor& d_doc) {
    const Tensor d_inputs = sentence_.backward(d_doc);
    Tensor d_vectors({sentence_doc_.size(), k_});
    for (std::size_t r = 0; r < sentence_doc_.size(); ++r) {
      const double* src = d_inputs.ptr() + (sentence_slot_[r] * d_inputs.dim(1) + sentence_doc_[r]) * k_;
      std::copy_n(src, k_, d_vectors.row(r).begin());
    }
    return word_.backward(d_vectors);
  }

  std::size_t output_dim() const { return k_; }
  void collect(std::vector<Parameter*>& out) {
    word_.collect(out);
    sentence_.collect(out);
  }

 private:
  DeepAttentionBlock word_;
  DeepAttentionBlock sentence_;
  std::size_t k_;
  std::vector<std::size_t> sentence_doc_, sentence_slot_;
};

class EmbeddingBagModel final : public Model {
 public:
  EmbeddingBagModel(const ModelSpec& spec, const EmbeddingTable& table, std::uint64_t seed)
      : Model(spec, table, seed) {
    Rng init(seed);
    output_ = nn::Affine("output", embedding_.dim(), spec.num_classes, init);
  }

  Tensor forward(const Batch& batch, nn::Mode) override {
    grid_ = batch.flat;
    const Tensor embedded = embedding_.forward(grid_);
    const std::size_t d = embedding_.dim();
    Tensor mean({batch.size, d});
    counts_.assign(batch.size, 0.0);
    for (std::size_t b = 0; b < batch.size; ++b) {
      for (std::size_t t = 0; t < grid_.steps; ++t) {
        if (!grid_.mask(t, b)) continue;
        counts_[b] += 1.0;
        for (std::size_t j = 0; j < d; ++j) mean.at(b, j) += embedded.at(t, b, j);
      }
      for (std::size_t j = 0; j < d; ++j) mean.at(b, j) /= counts_[b];
    }
    return output_.forward(mean);
  }

  void backward(const Tensor& d_logits) override {
    const Tensor d_mean = output_.backward(d_logits);
    if (!embedding_.trainable()) return;
    const std::size_t d = embedding_.dim();
    Tensor d_embedded({grid_.steps, grid_.batch, d});
    for (std::size_t t = 0; t < grid_.steps; ++t) {
      for (std::size_t b = 0; b < grid_.batch; ++b) {
        if (!grid_.mask(t, b)) continue;
        for (std::size_t j = 0; j < d; ++j) d_embedded.at(t, b, j) = d_mean.at(b, j) / counts_[b];
      }
    }
    embedding_.backward(grid_, d_embedded);
  }

  std::size_t document_dim() const override { return embedding_.dim(); }

 protected:
  void collect(std::vector<Parameter*>& out) override { output_.collect(out); }

 private:
  nn::Affine output_;
  TokenGrid grid_;
  std::vector<double> counts_;
};

class DeepTriageModel final : public Model {
 public:
  DeepTriageModel(const ModelSpec& spec, const EmbeddingTable& table, std::uint64_t seed)
      : Model(spec, table, seed), drop_state_(spec.dropout), drop_hidden_(spec.dropout) {
    Rng init(seed);
    const std::size_t k = spec.block_sizes.front();
    encoder_ = GruEncoder("bigru", embedding_.dim(), k, true, init);
    hidden_ = nn::Affine("fc1", 2 * k, spec.fc_width, init);
    output_ = nn::Affine("fc2", spec.fc_width, spec.num_classes, init);
  }

  Tensor forward(const Batch& batch, nn::Mode mode) override {
    grid_ = batch.flat;
    const auto encoded = encoder_.forward(embedding_.forward(grid_), grid_.mask);
    Tensor x = drop_state_.forward(encoded.final_state, mode, rng_);
    x = drop_hidden_.forward(tanh_.forward(hidden_.forward(x)), mode, rng_);
    return output_.forward(x);
  }

  void backward(const Tensor& d_logits) override {
    Tensor d = output_.backward(d_logits);
    d = hidden_.backward(tanh_.backward(drop_hidden_.backward(d)));
    const Tensor d_inputs = encoder_.backward(Tensor(), drop_state_.backward(d));
    embedding_.backward(grid_, d_inputs);
  }

  std::size_t document_dim() const override { return encoder_.output_dim(); }

 protected:
  void collect(std::vector<Parameter*>& out) override {
    encoder_.collect(out);
    hidden_.collect(out);
    output_.collect(out);
  }

 private:
  GruEncoder encoder_;
  nn::Dropout drop_state_, drop_hidden_;
  nn::Affine hidden_, output_;
  nn::Tanh tanh_;
  TokenGrid grid_;
};

class HanModel final : public Model {
 public:
  HanModel(const ModelSpec& spec, const EmbeddingTable& table, std::uint64_t seed)
      : Model(spec, table, seed), drop_(spec.dropout) {
    Rng init(seed);
    const std::size_t k = spec.block_sizes.front();
    encoder_.emplace("han", embedding_.dim(), k, 0.0, spec.attention_projection, init);
    output_ = nn::Affine("output", k, spec.num_classes, init);
  }

  Tensor forward(const Batch& batch, nn::Mode mode) override {
    grid_ = batch.words;
    const Tensor doc = encoder_->forward(embedding_.forward(grid_), batch, mode, rng_);
    return output_.forward(drop_.forward(doc, mode, rng_));
  }

  void backward(const Tensor& d_logits) override {
    const Tensor d_words = encoder_->backward(drop_.backward(output_.backward(d_logits)));
    embedding_.backward(grid_, d_words);
  }

  std::size_t document_dim() const override { return encoder_->output_dim(); }

 protected:
  void collect(std::vector<Parameter*>& out) override {
    encoder_->collect(out);
    output_.collect(out);
  }

 private:
  std::optional<HierarchicalEncoder> encoder_;
  nn::Dropout drop_;
  nn::Affine output_;
  TokenGrid grid_;
};

class ProposedModel final : public Model {
 public:
  ProposedModel(const ModelSpec& spec, const EmbeddingTable& table, std::uint64_t seed)
      : Model(spec, table, seed), drop_shallow_(spec.dropout), drop_hidden_(spec.dropout) {
    Rng init(seed);
    const std::size_t d = embedding_.dim();
    for (std::size_t i = 0; i < spec.block_sizes.size(); ++i) {
      blocks_.emplace_back("block" + std::to_string(i), d, spec.block_sizes[i], spec.dropout,
                           spec.attention_projection, init);
    }
    if (spec.shallow_size > 0) shallow_ = GruEncoder("shallow", d, spec.shallow_size, false, init);
    concat_dim_ = std::accumulate(spec.block_sizes.begin(), spec.block_sizes.end(), spec.shallow_size);
    if (spec.fc_width > 0) {
      hidden_.emplace("fc", concat_dim_, spec.fc_width, init);
      output_ = nn::Affine("output", spec.fc_width, spec.num_classes, init);
    } else {
      output_ = nn::Affine("output", concat_dim_, spec.num_classes, init);
    }
  }

  Tensor forward(const Batch& batch, nn::Mode mode) override {
    words_ = batch.words;
    flat_ = batch.flat;
    const Tensor word_inputs = embedding_.forward(words_);
    Tensor concat({batch.size, concat_dim_});
    std::size_t offset = 0;
    const auto place = [&](const Tensor& part) {
      const std::size_t w = part.dim(1);
      for (std::size_t b = 0; b < batch.size; ++b) {
        std::copy_n(part.row(b).begin(), w, &concat.at(b, offset));
      }
      offset += w;
    };
    for (auto& block : blocks_) place(block.forward(word_inputs, batch, mode, rng_));
    if (spec_.shallow_size > 0) {
      const auto encoded = shallow_.forward(embedding_.forward(flat_), flat_.mask);
      place(drop_shallow_.forward(encoded.final_state, mode, rng_));
    }
    if (hidden_) {
      return output_.forward(drop_hidden_.forward(tanh_.forward(hidden_->forward(concat)), mode, rng_));
    }
    return output_.forward(concat);
  }

  void backward(const Tensor& d_logits) override {
    Tensor d_concat = output_.backward(d_logits);
    if (hidden_) d_concat = hidden_->backward(tanh_.backward(drop_hidden_.backward(d_concat)));
    const std::size_t B = d_concat.dim(0);
    std::size_t offset = 0;
    const auto slice = [&](std::size_t w) {
      Tensor part({B, w});
      for (std::size_t b = 0; b < B; ++b) std::copy_n(&d_concat.at(b, offset), w, part.row(b).begin());
      offset += w;
      return part;
    };
    Tensor d_words;
    for (auto& block : blocks_) {
      Tensor d = block.backward(slice(block.output_dim()));
      if (d_words.empty()) {
        d_words = std::move(d);
      } else {
        d_words += d;
      }
    }
    if (embedding_.trainable()) embedding_.backward(words_, d_words);
    if (spec_.shallow_size > 0) {
      const Tensor d_flat = shallow_.backward(Tensor(), drop_shallow_.backward(slice(spec_.shallow_size)));
      embedding_.backward(flat_, d_flat);
    }
  }

  std::size_t document_dim() const override { return concat_dim_; }

 protected:
  void collect(std::vector<Parameter*>& out) override {
    for (auto& block : blocks_) block.collect(out);
    if (spec_.shallow_size > 0) shallow_.collect(out);
    if (hidden_) hidden_->collect(out);
    output_.collect(out);
  }

 private:
  std::vector<HierarchicalEncoder> blocks_;
  GruEncoder shallow_;
  nn::Dropout drop_shallow_, drop_hidden_;
  std::optional<nn::Affine> hidden_;
  nn::Affine output_;
  nn::Tanh tanh_;
  std::size_t concat_dim_ = 0;
  TokenGrid words_, flat_;
};

}  // namespace

std::unique_ptr<Model> build_model(const ModelSpec& spec, const EmbeddingTable& table,
                                   std::uint64_t seed) {
  spec.validate();
  switch (spec.architecture) {
    case Architecture::EmbeddingBag: return std::make_unique<EmbeddingBagModel>(spec, table, seed);
    case Architecture::DeepTriage: return std::make_unique<DeepTriageModel>(spec, table, seed);
    case Architecture::Han: return std::make_unique<HanModel>(spec, table, seed);
    case Architecture::Proposed: return std::make_unique<ProposedModel>(spec, table, seed);
  }
  throw Error("unknown architecture");
}

}  // namespace triage::seq
