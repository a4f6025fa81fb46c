// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/preprocess.hpp"

namespace triage {

/// Sparse vector with strictly increasing indices and no stored zeros.
class SparseVector {
 public:
  SparseVector() = default;
  explicit SparseVector(std::size_t dim) : dim_(dim) {}
  /// Entries may arrive in any order; duplicates are summed and zeros dropped.
  SparseVector(std::size_t dim, std::vector<std::pair<std::size_t, double>> entries);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t nnz() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& mutable_values() noexcept { return values_; }

  /// Value at `index`, zero if absent.
  double at(std::size_t index) const;
  double norm() const;
  double dot(std::span<const double> dense) const;

  bool operator==(const SparseVector&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<std::size_t> indices_;
  std::vector<double> values_;
};

/// Occurrence counts over the flattened document, keyed by token id.
SparseVector term_counts(const ProcessedDocument& doc, const Vocabulary& vocab);

class TfidfModel {
 public:
  static constexpr int kFormatVersion = 1;

  TfidfModel() = default;
  TfidfModel(std::vector<double> idf, std::size_t doc_count, std::string vocab_hash);

  const std::vector<double>& idf() const noexcept { return idf_; }
  std::size_t doc_count() const noexcept { return doc_count_; }
  const std::string& vocab_hash() const noexcept { return vocab_hash_; }

  nlohmann::json to_json() const;
  static TfidfModel from_json(const nlohmann::json& j);

 private:
  std::vector<double> idf_;
  std::size_t doc_count_ = 0;
  std::string vocab_hash_;
};

/// idf(t) = ln((1 + N) / (1 + df(t))) + 1.
TfidfModel fit_tfidf(std::span<const ProcessedDocument> docs, const Vocabulary& vocab);

/// count(t) * idf(t), then L2-normalized.
SparseVector transform_tfidf(const ProcessedDocument& doc, const Vocabulary& vocab,
                             const TfidfModel& model);

}  // namespace triage
