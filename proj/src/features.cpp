// SPDX-License-Identifier: Apache-2.0
#include "triage/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "triage/error.hpp"

namespace triage {

SparseVector::SparseVector(std::size_t dim, std::vector<std::pair<std::size_t, double>> entries)
    : dim_(dim) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [index, value] : entries) {
    if (index >= dim_) throw Error("sparse index " + std::to_string(index) + " out of range");
    if (!indices_.empty() && indices_.back() == index) {
      values_.back() += value;
    } else {
      indices_.push_back(index);
      values_.push_back(value);
    }
  }
  for (std::size_t i = indices_.size(); i-- > 0;) {
    if (values_[i] == 0.0) {
      indices_.erase(indices_.begin() + static_cast<std::ptrdiff_t>(i));
      values_.erase(values_.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }
}

double SparseVector::at(std::size_t index) const {
  auto it = std::lower_bound(indices_.begin(), indices_.end(), index);
  if (it == indices_.end() || *it != index) return 0.0;
  return values_[static_cast<std::size_t>(it - indices_.begin())];
}

double SparseVector::norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

double SparseVector::dot(std::span<const double> dense) const {
  if (dense.size() != dim_) {
    throw ShapeError("dot: dense length " + std::to_string(dense.size()) +
                     " does not match sparse dim " + std::to_string(dim_));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < indices_.size(); ++i) sum += values_[i] * dense[indices_[i]];
  return sum;
}

SparseVector term_counts(const ProcessedDocument& doc, const Vocabulary& vocab) {
  std::map<std::size_t, double> counts;
  for (const auto& sentence : doc.sentences) {
    for (const auto& token : sentence) counts[static_cast<std::size_t>(vocab.id(token))] += 1.0;
  }
  counts.erase(static_cast<std::size_t>(Vocabulary::kPad));
  // The zero-token placeholder is not an occurrence.
  if (doc.sentences.size() == 1 && doc.sentences[0].size() == 1 && doc.sentences[0][0] == kOovToken) {
    counts.clear();
  }
  return SparseVector(vocab.size(), {counts.begin(), counts.end()});
}

TfidfModel::TfidfModel(std::vector<double> idf, std::size_t doc_count, std::string vocab_hash)
    : idf_(std::move(idf)), doc_count_(doc_count), vocab_hash_(std::move(vocab_hash)) {}

nlohmann::json TfidfModel::to_json() const {
  return {{"version", kFormatVersion},
          {"doc_count", doc_count_},
          {"vocab_hash", vocab_hash_},
          {"idf", idf_}};
}

TfidfModel TfidfModel::from_json(const nlohmann::json& j) {
  if (j.value("version", 0) != kFormatVersion) throw Error("unsupported tf-idf model version");
  return TfidfModel(j.at("idf").get<std::vector<double>>(), j.at("doc_count").get<std::size_t>(),
                    j.value("vocab_hash", std::string()));
}

TfidfModel fit_tfidf(std::span<const ProcessedDocument> docs, const Vocabulary& vocab) {
  if (docs.empty()) throw Error("cannot fit tf-idf on an empty corpus");
  std::vector<std::size_t> df(vocab.size(), 0);
  for (const auto& doc : docs) {
    const auto counts = term_counts(doc, vocab);
    for (std::size_t index : counts.indices()) ++df[index];
  }
  const double n = static_cast<double>(docs.size());
  std::vector<double> idf(vocab.size());
  for (std::size_t t = 0; t < idf.size(); ++t) {
    idf[t] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[t]))) + 1.0;
  }
  return TfidfModel(std::move(idf), docs.size(), vocab.hash());
}

SparseVector transform_tfidf(const ProcessedDocument& doc, const Vocabulary& vocab,
                             const TfidfModel& model) {
  if (model.idf().size() != vocab.size()) {
    throw ShapeError("tf-idf model covers " + std::to_string(model.idf().size()) +
                     " terms, vocabulary has " + std::to_string(vocab.size()));
  }
  SparseVector v = term_counts(doc, vocab);
  auto& values = v.mutable_values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] *= model.idf()[v.indices()[i]];
  const double norm = v.norm();
  if (norm > 0.0) {
    for (double& value : values) value /= norm;
  }
  return v;
}

}  // namespace triage
