// SPDX-License-Identifier: Apache-2.0
#include "triage/bench/synthetic.hpp"

#include <cstdio>
#include <set>

#include "triage/error.hpp"
#include "triage/preprocess.hpp"

namespace triage::bench {

namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

std::string class_name(std::size_t c) { return "topic_" + std::string(1, static_cast<char>('a' + c % 26)) + (c >= 26 ? std::to_string(c / 26) : ""); }

std::string doc_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "syn-%05zu", i);
  return buf;
}

std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

const std::string& pick(const std::vector<std::string>& words, Rng& rng) {
  return words[rng.below(words.size())];
}

std::string join_sentence(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out + ".";
}

void check_ranges(std::size_t min_s, std::size_t max_s, std::size_t min_w, std::size_t max_w) {
  if (min_s == 0 || min_s > max_s || min_w == 0 || min_w > max_w) {
    throw Error("synthetic corpus: invalid sentence or word count range");
  }
}

Dataset assemble(std::vector<Document> docs, std::size_t classes) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < classes; ++c) names.push_back(class_name(c));
  std::map<std::string, ClassSet> fields;
  fields.emplace(kSyntheticField, ClassSet(names));
  return Dataset(std::move(docs), std::move(fields));
}

}  // namespace

KeywordCorpusSpec keyword_spec_from_json(const nlohmann::json& j) {
  KeywordCorpusSpec s;
  s.documents = j.value("documents", s.documents);
  s.classes = j.value("classes", s.classes);
  s.keywords_per_class = j.value("keywords_per_class", s.keywords_per_class);
  s.filler_words = j.value("filler_words", s.filler_words);
  s.min_sentences = j.value("min_sentences", s.min_sentences);
  s.max_sentences = j.value("max_sentences", s.max_sentences);
  s.min_words = j.value("min_words", s.min_words);
  s.max_words = j.value("max_words", s.max_words);
  s.keyword_rate = j.value("keyword_rate", s.keyword_rate);
  s.seed = j.value("seed", s.seed);
  return s;
}

nlohmann::json keyword_spec_to_json(const KeywordCorpusSpec& s) {
  return {{"documents", s.documents},         {"classes", s.classes},
          {"keywords_per_class", s.keywords_per_class}, {"filler_words", s.filler_words},
          {"min_sentences", s.min_sentences}, {"max_sentences", s.max_sentences},
          {"min_words", s.min_words},         {"max_words", s.max_words},
          {"keyword_rate", s.keyword_rate},   {"seed", s.seed}};
}

TopicCorpusSpec topic_spec_from_json(const nlohmann::json& j) {
  TopicCorpusSpec s;
  s.documents = j.value("documents", s.documents);
  s.topics = j.value("topics", s.topics);
  s.words_per_topic = j.value("words_per_topic", s.words_per_topic);
  s.min_sentences = j.value("min_sentences", s.min_sentences);
  s.max_sentences = j.value("max_sentences", s.max_sentences);
  s.min_words = j.value("min_words", s.min_words);
  s.max_words = j.value("max_words", s.max_words);
  s.seed = j.value("seed", s.seed);
  return s;
}

std::vector<std::string> pseudo_words(std::size_t count, Rng& rng) {
  const auto stopwords = default_stopwords();
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (out.size() < count) {
    std::string word;
    for (int s = 0; s < 3; ++s) {
      word += kConsonants[rng.below(kConsonants.size())];
      word += kVowels[rng.below(kVowels.size())];
    }
    if (stopwords.contains(word) || !seen.insert(word).second) continue;
    out.push_back(std::move(word));
  }
  return out;
}

SyntheticCorpus make_keyword_corpus(const KeywordCorpusSpec& spec) {
  if (spec.classes < 2 || spec.documents < spec.classes) {
    throw Error("keyword corpus: need at least 2 classes and one document per class");
  }
  if (spec.keywords_per_class == 0 || spec.filler_words == 0) throw Error("keyword corpus: empty word lists");
  if (!(spec.keyword_rate > 0.0 && spec.keyword_rate <= 1.0)) throw Error("keyword corpus: keyword_rate must lie in (0, 1]");
  check_ranges(spec.min_sentences, spec.max_sentences, spec.min_words, spec.max_words);

  Rng rng(spec.seed);
  auto words = pseudo_words(spec.classes * spec.keywords_per_class + spec.filler_words, rng);
  SyntheticCorpus corpus;
  corpus.field = kSyntheticField;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    const auto first = words.begin() + static_cast<std::ptrdiff_t>(c * spec.keywords_per_class);
    corpus.vocabularies.emplace_back(first, first + static_cast<std::ptrdiff_t>(spec.keywords_per_class));
  }
  const std::vector<std::string> filler(words.begin() + static_cast<std::ptrdiff_t>(spec.classes * spec.keywords_per_class),
                                        words.end());

  std::vector<Document> docs;
  for (std::size_t i = 0; i < spec.documents; ++i) {
    const std::size_t c = i % spec.classes;
    const auto& keywords = corpus.vocabularies[c];
    Document doc;
    doc.id = doc_id(i);
    doc.labels[kSyntheticField] = class_name(c);

    std::vector<std::string> title{pick(keywords, rng)};
    for (std::size_t n = between(rng, 2, 4); n > 0; --n) title.push_back(pick(filler, rng));
    rng.shuffle(std::span<std::string>(title));
    doc.title = join_sentence(title);
    doc.title.pop_back();

    const std::size_t sentences = between(rng, spec.min_sentences, spec.max_sentences);
    for (std::size_t s = 0; s < sentences; ++s) {
      std::vector<std::string> sentence;
      for (std::size_t n = between(rng, spec.min_words, spec.max_words); n > 0; --n) {
        sentence.push_back(rng.uniform() < spec.keyword_rate ? pick(keywords, rng) : pick(filler, rng));
      }
      if (!doc.body.empty()) doc.body += ' ';
      doc.body += join_sentence(sentence);
    }
    docs.push_back(std::move(doc));
  }
  corpus.dataset = assemble(std::move(docs), spec.classes);
  return corpus;
}

SyntheticCorpus make_topic_corpus(const TopicCorpusSpec& spec) {
  if (spec.topics < 2 || spec.words_per_topic < 2 || spec.documents < spec.topics) {
    throw Error("topic corpus: need at least 2 topics of 2 words and one document per topic");
  }
  check_ranges(spec.min_sentences, spec.max_sentences, spec.min_words, spec.max_words);

  Rng rng(spec.seed);
  const auto words = pseudo_words(spec.topics * spec.words_per_topic, rng);
  SyntheticCorpus corpus;
  corpus.field = kSyntheticField;
  for (std::size_t t = 0; t < spec.topics; ++t) {
    const auto first = words.begin() + static_cast<std::ptrdiff_t>(t * spec.words_per_topic);
    corpus.vocabularies.emplace_back(first, first + static_cast<std::ptrdiff_t>(spec.words_per_topic));
  }

  std::vector<Document> docs;
  for (std::size_t i = 0; i < spec.documents; ++i) {
    const std::size_t t = i % spec.topics;
    Document doc;
    doc.id = doc_id(i);
    doc.labels[kSyntheticField] = class_name(t);
    const std::size_t sentences = between(rng, spec.min_sentences, spec.max_sentences);
    for (std::size_t s = 0; s < sentences; ++s) {
      std::vector<std::string> sentence;
      for (std::size_t n = between(rng, spec.min_words, spec.max_words); n > 0; --n) {
        sentence.push_back(pick(corpus.vocabularies[t], rng));
      }
      if (!doc.body.empty()) doc.body += '\n';
      doc.body += join_sentence(sentence);
    }
    docs.push_back(std::move(doc));
  }
  corpus.dataset = assemble(std::move(docs), spec.topics);
  return corpus;
}

}  // namespace triage::bench
