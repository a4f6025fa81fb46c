// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/corpus.hpp"
#include "triage/rng.hpp"

namespace triage::bench {

/// Separable corpus: each class owns a set of keywords that appear, mixed
/// with shared filler words, only in documents of that class.
struct KeywordCorpusSpec {
  std::size_t documents = 600;
  std::size_t classes = 3;
  std::size_t keywords_per_class = 8;
  std::size_t filler_words = 120;
  std::size_t min_sentences = 2;
  std::size_t max_sentences = 5;
  std::size_t min_words = 5;
  std::size_t max_words = 10;
  /// Chance that a body word is a class keyword.
  double keyword_rate = 0.25;
  std::uint64_t seed = 2024;
};

/// Documents whose sentences draw only from the words of their own topic.
struct TopicCorpusSpec {
  std::size_t documents = 400;
  std::size_t topics = 2;
  std::size_t words_per_topic = 10;
  std::size_t min_sentences = 3;
  std::size_t max_sentences = 6;
  std::size_t min_words = 6;
  std::size_t max_words = 10;
  std::uint64_t seed = 77;
};

struct SyntheticCorpus {
  Dataset dataset;
  std::string field;
  /// Words owned by each class or topic, in class order.
  std::vector<std::vector<std::string>> vocabularies;
};

inline constexpr const char* kSyntheticField = "topic";

/// Distinct pronounceable lowercase words that are not stopwords.
std::vector<std::string> pseudo_words(std::size_t count, Rng& rng);

/// Missing keys keep the defaults.
KeywordCorpusSpec keyword_spec_from_json(const nlohmann::json& j);
nlohmann::json keyword_spec_to_json(const KeywordCorpusSpec& spec);
TopicCorpusSpec topic_spec_from_json(const nlohmann::json& j);

SyntheticCorpus make_keyword_corpus(const KeywordCorpusSpec& spec);
SyntheticCorpus make_topic_corpus(const TopicCorpusSpec& spec);

}  // namespace triage::bench
