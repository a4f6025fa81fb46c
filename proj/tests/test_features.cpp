// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "triage/error.hpp"
#include "triage/features.hpp"

using namespace triage;

namespace {

ProcessedDocument single(std::vector<Sentence> sentences) { return ProcessedDocument{"x", std::move(sentences)}; }

Vocabulary vocab_ab() { return Vocabulary({"a", "b", "c"}, {3, 2, 1}, 1); }

}  // namespace

TEST_CASE("term counts") {
  const auto v = vocab_ab();
  const auto c = term_counts(single({{"a", "b", "a"}}), v);
  CHECK(c.indices() == std::vector<std::size_t>{2, 3});
  CHECK(c.values() == std::vector<double>{2.0, 1.0});
  CHECK(term_counts(single({}), v).empty());
  const auto unknown = term_counts(single({{"w", "x"}, {"y", "z"}}), v);
  CHECK(unknown.nnz() == 1);
  CHECK(unknown.at(Vocabulary::kOov) == 4.0);
}

TEST_CASE("sparse vector contract") {
  const SparseVector s(5, {{3, 1.0}, {1, 2.0}});
  CHECK(s.indices() == std::vector<std::size_t>{1, 3});
  CHECK(s.at(0) == 0.0);
  CHECK(s.norm() == doctest::Approx(std::sqrt(5.0)));
  const std::vector<double> dense{1, 1, 1, 1, 1};
  CHECK(s.dot(dense) == 3.0);
  CHECK_THROWS_AS(SparseVector(2, {{2, 1.0}}), Error);
}

TEST_CASE("idf values") {
  const auto v = vocab_ab();
  std::vector<ProcessedDocument> docs{single({{"a", "b"}}), single({{"a"}}), single({{"a"}})};
  const auto m = fit_tfidf(docs, v);
  CHECK(m.doc_count() == 3);
  CHECK(m.idf()[v.id("a")] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.idf()[v.id("b")] == doctest::Approx(1.6931).epsilon(1e-4));
  CHECK(m.idf()[v.id("c")] == doctest::Approx(2.3863).epsilon(1e-4));
  CHECK_THROWS_AS(fit_tfidf(std::vector<ProcessedDocument>{}, v), Error);
}

TEST_CASE("tf-idf transform") {
  const auto v = vocab_ab();
  std::vector<ProcessedDocument> docs{single({{"a", "b"}}), single({{"a", "b"}})};
  const auto m = fit_tfidf(docs, v);
  const auto x = transform_tfidf(single({{"a", "b"}}), v, m);
  CHECK(x.values()[0] == doctest::Approx(0.7071).epsilon(1e-4));
  CHECK(x.values()[1] == doctest::Approx(0.7071).epsilon(1e-4));
  const auto one = transform_tfidf(single({{"b", "b"}}), v, m);
  CHECK(one.values() == std::vector<double>{1.0});
  CHECK(transform_tfidf(single({}), v, m).empty());
}

TEST_CASE("tf-idf model serialization checks the vocabulary") {
  const auto v = vocab_ab();
  std::vector<ProcessedDocument> docs{single({{"a"}})};
  const auto m = fit_tfidf(docs, v);
  const auto back = TfidfModel::from_json(m.to_json());
  CHECK(back.idf() == m.idf());
  CHECK(back.vocab_hash() == v.hash());
  const Vocabulary other({"q"}, {1}, 1);
  CHECK_THROWS_AS(transform_tfidf(single({{"q"}}), other, m), Error);
}
