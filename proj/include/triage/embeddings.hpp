// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/nn/tensor.hpp"
#include "triage/preprocess.hpp"
#include "triage/rng.hpp"

namespace triage {

struct SkipGramConfig {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  /// Initial rate; decays linearly towards 1e-4 of itself.
  double learning_rate = 0.025;
  std::uint64_t seed = 1;

  void validate() const;
};

SkipGramConfig skipgram_from_json(const nlohmann::json& j, SkipGramConfig defaults = {});
nlohmann::json skipgram_to_json(const SkipGramConfig& config);

/// V x d matrix of input vectors; row 0 (<pad>) is all zeros.
struct EmbeddingTable {
  nn::Tensor matrix;
  std::vector<std::string> tokens;
  std::string vocab_hash;

  std::size_t vocab_size() const { return matrix.empty() ? 0 : matrix.dim(0); }
  std::size_t dim() const { return matrix.empty() ? 0 : matrix.dim(1); }
};

/// Draws token ids with probability proportional to count^0.75.
class NegativeSampler {
 public:
  explicit NegativeSampler(std::span<const std::uint64_t> counts);

  TokenId sample(Rng& rng) const;
  double probability(TokenId id) const;
  std::size_t size() const noexcept { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

struct SkipGramReport {
  /// Mean negative-sampling loss per (center, context) pair, per epoch.
  std::vector<double> epoch_loss;
};

/// Skip-gram with negative sampling over each document's flattened token
/// stream. <pad> and <oov> are never centers; <pad> is never a context.
/// Context vectors are discarded at the end.
EmbeddingTable train_skipgram(std::span<const EncodedDocument> docs, const Vocabulary& vocab,
                              const SkipGramConfig& config, SkipGramReport* report = nullptr);

/// Row gather: [ids.size() x d].
nn::Tensor lookup(const EmbeddingTable& table, std::span<const TokenId> ids);

/// word2vec text format: "V d" header, then "token v1 ... vd" per row.
void write_embeddings(std::ostream& out, const EmbeddingTable& table);
EmbeddingTable read_embeddings(std::istream& in);
void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace triage
