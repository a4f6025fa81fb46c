// SPDX-License-Identifier: Apache-2.0
#include "triage/preprocess.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <boost/regex.hpp>

#include "triage/error.hpp"
#include "triage/hash.hpp"

namespace triage {

namespace {

// Apostrophe-bearing entries of the usual English lists are omitted: the
// tokenizer can never produce them.
constexpr std::string_view kStopwords[] = {
    "a",          "about",   "above",   "after",    "again",   "against", "ain",
    "all",        "am",      "an",      "and",      "any",     "are",     "aren",
    "as",         "at",      "be",      "because",  "been",    "before",  "being",
    "below",      "between", "both",    "but",      "by",      "can",     "couldn",
    "d",          "did",     "didn",    "do",       "does",    "doesn",   "doing",
    "don",        "down",    "during",  "each",     "few",     "for",     "from",
    "further",    "had",     "hadn",    "has",      "hasn",    "have",    "haven",
    "having",     "he",      "her",     "here",     "hers",    "herself", "him",
    "himself",    "his",     "how",     "i",        "if",      "in",      "into",
    "is",         "isn",     "it",      "its",      "itself",  "just",    "ll",
    "m",          "ma",      "me",      "mightn",   "more",    "most",    "mustn",
    "my",         "myself",  "needn",   "no",       "nor",     "not",     "now",
    "o",          "of",      "off",     "on",       "once",    "only",    "or",
    "other",      "our",     "ours",    "ourselves", "out",    "over",    "own",
    "re",         "s",       "same",    "shan",     "she",     "should",  "shouldn",
    "so",         "some",    "such",    "t",        "than",    "that",    "the",
    "their",      "theirs",  "them",    "themselves", "then",  "there",   "these",
    "they",       "this",    "those",   "through",  "to",      "too",     "under",
    "until",      "up",      "ve",      "very",     "was",     "wasn",    "we",
    "were",       "weren",   "what",    "when",     "where",   "which",   "while",
    "who",        "whom",    "why",     "will",     "with",    "won",     "wouldn",
    "y",          "you",     "your",    "yours",    "yourself", "yourselves",
};

constexpr char32_t kReplacement = 0xFFFD;

char32_t decode_utf8(std::string_view s, std::size_t& pos) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
  const unsigned char lead = byte(pos);
  if (lead < 0x80) {
    ++pos;
    return lead;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  if ((lead & 0xE0) == 0xC0) {
    len = 2;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4;
    cp = lead & 0x07;
  } else {
    ++pos;
    return kReplacement;
  }
  if (pos + len > s.size()) {
    ++pos;
    return kReplacement;
  }
  for (std::size_t i = 1; i < len; ++i) {
    const unsigned char c = byte(pos + i);
    if ((c & 0xC0) != 0x80) {
      ++pos;
      return kReplacement;
    }
    cp = (cp << 6) | (c & 0x3F);
  }
  pos += len;
  return cp;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Covers ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic capitals.
// Every target is outside the source ranges, so the map is idempotent.
char32_t to_lower(char32_t c) {
  if (c < 0x80) return (c >= 'A' && c <= 'Z') ? c + 32 : c;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  if (c >= 0x100 && c <= 0x137) return c | 1;
  if (c >= 0x139 && c <= 0x148) return (c & 1) ? c + 1 : c;
  if (c >= 0x14A && c <= 0x177) return c | 1;
  if (c == 0x178) return 0xFF;
  if (c >= 0x179 && c <= 0x17E) return (c & 1) ? c + 1 : c;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

// Letters and digits. Outside ASCII, the punctuation, symbol and space
// blocks separate; every other code point counts as a letter.
bool is_word_char(char32_t c) {
  if (c < 0x80) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
  }
  if (c <= 0xBF) return c == 0xAA || c == 0xB5 || c == 0xBA;
  if (c == 0xD7 || c == 0xF7) return false;
  if (c >= 0x2000 && c <= 0x2BFF) return false;
  if (c >= 0x3000 && c <= 0x303F) return false;
  if (c >= 0xFE30 && c <= 0xFE4F) return false;
  if (c >= 0xFF00 && c <= 0xFF0F) return false;
  if (c >= 0xFF1A && c <= 0xFF20) return false;
  if (c == 0xFEFF || c == kReplacement) return false;
  if (c >= 0x1F000 && c <= 0x1FAFF) return false;
  return true;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::vector<std::string> filter_stopwords(std::vector<std::string> tokens,
                                          const std::set<std::string>& stopwords) {
  std::erase_if(tokens, [&](const std::string& t) { return stopwords.contains(t); });
  return tokens;
}

std::string strip_garbage(std::string text, const std::vector<GarbageRule>& rules) {
  for (const auto& rule : rules) text = rule.apply(text);
  return text;
}

}  // namespace

struct GarbageRule::Compiled {
  boost::regex regex;
};

GarbageRule::GarbageRule(std::string name, std::string pattern)
    : name_(std::move(name)), pattern_(std::move(pattern)) {
  try {
    compiled_ = std::make_shared<const Compiled>(
        Compiled{boost::regex(pattern_, boost::regex::perl | boost::regex::icase)});
  } catch (const boost::regex_error& e) {
    throw Error("garbage rule \"" + name_ + "\" does not compile: " + e.what());
  }
}

std::string GarbageRule::apply(const std::string& text) const {
  return boost::regex_replace(text, compiled_->regex, " ");
}

std::set<std::string> default_stopwords() {
  return {std::begin(kStopwords), std::end(kStopwords)};
}

std::set<std::string> parse_stopwords(std::istream& in) {
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    auto begin = std::find_if_not(line.begin(), line.end(), is_space);
    auto end = std::find_if_not(line.rbegin(), std::string::reverse_iterator(begin), is_space).base();
    if (begin != end && *begin != '#') words.insert(to_lower_utf8(std::string_view(&*begin, static_cast<std::size_t>(end - begin))));
  }
  return words;
}

std::set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stopword list " + path.string());
  return parse_stopwords(in);
}

std::vector<GarbageRule> default_garbage_rules() {
  return {
      {"hex_address", R"(0x[0-9a-f]{4,})"},
      {"stack_frame", R"(^[ \t]*(?:#[0-9]+\b|at[ \t]+/?[\w$]+(?:[./:][\w$<>]+)+)[^\n]*)"},
      {"html_tag", R"(<[^>]+>)"},
      {"long_digits", R"([0-9]{8,})"},
  };
}

std::vector<GarbageRule> garbage_rules_from_json(const nlohmann::json& rules) {
  if (!rules.is_array()) throw Error("garbage rules must be a JSON array");
  std::vector<GarbageRule> out;
  for (const auto& rule : rules) {
    if (!rule.is_object() || !rule.contains("name") || !rule.contains("pattern")) {
      throw Error("garbage rule needs \"name\" and \"pattern\"");
    }
    out.emplace_back(rule.at("name").get<std::string>(), rule.at("pattern").get<std::string>());
  }
  return out;
}

std::vector<GarbageRule> load_garbage_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open garbage rules " + path.string());
  try {
    return garbage_rules_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed garbage rules " + path.string() + ": " + e.what());
  }
}

nlohmann::json garbage_rules_to_json(const std::vector<GarbageRule>& rules) {
  auto out = nlohmann::json::array();
  for (const auto& rule : rules) out.push_back({{"name", rule.name()}, {"pattern", rule.pattern()}});
  return out;
}

void PipelineConfig::validate() const {
  if (max_sentences < 1) throw Error("max_sentences must be at least 1");
  if (max_tokens_per_sentence < 1) throw Error("max_tokens_per_sentence must be at least 1");
}

PipelineConfig pipeline_from_json(const nlohmann::json& config) {
  PipelineConfig out;
  if (config.is_null()) return out;
  if (auto it = config.find("stopwords"); it != config.end()) {
    out.stopwords.clear();
    for (const auto& w : *it) out.stopwords.insert(to_lower_utf8(w.get<std::string>()));
  }
  if (auto it = config.find("stopwords_file"); it != config.end()) {
    out.stopwords = load_stopwords(it->get<std::string>());
  }
  if (auto it = config.find("garbage_rules"); it != config.end()) {
    out.garbage_rules = garbage_rules_from_json(*it);
  }
  if (auto it = config.find("garbage_rules_file"); it != config.end()) {
    out.garbage_rules = load_garbage_rules(it->get<std::string>());
  }
  out.max_sentences = config.value("max_sentences", out.max_sentences);
  out.max_tokens_per_sentence = config.value("max_tokens_per_sentence", out.max_tokens_per_sentence);
  out.validate();
  return out;
}

nlohmann::json pipeline_to_json(const PipelineConfig& config) {
  return {{"stopwords", config.stopwords},
          {"garbage_rules", garbage_rules_to_json(config.garbage_rules)},
          {"max_sentences", config.max_sentences},
          {"max_tokens_per_sentence", config.max_tokens_per_sentence}};
}

std::string to_lower_utf8(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t pos = 0; pos < text.size();) encode_utf8(to_lower(decode_utf8(text, pos)), out);
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    const bool terminal = c == '\n' || ((c == '.' || c == '!' || c == '?') &&
                                        (i + 1 == text.size() || is_space(text[i + 1])));
    if (terminal) {
      out.emplace_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  if (start < text.size()) out.emplace_back(text.substr(start));
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t begin = pos;
    const char32_t cp = decode_utf8(text, pos);
    if (is_word_char(cp)) {
      current.append(text.substr(begin, pos - begin));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

ProcessedDocument preprocess_document(const Document& doc, const PipelineConfig& config) {
  ProcessedDocument out;
  out.doc_id = doc.id;

  const auto title = to_lower_utf8(strip_garbage(doc.title, config.garbage_rules));
  if (auto tokens = filter_stopwords(tokenize(title), config.stopwords); !tokens.empty()) {
    out.sentences.push_back(std::move(tokens));
  }
  const auto body = to_lower_utf8(strip_garbage(doc.body, config.garbage_rules));
  for (const auto& sentence : split_sentences(body)) {
    if (out.sentences.size() == config.max_sentences) break;
    if (auto tokens = filter_stopwords(tokenize(sentence), config.stopwords); !tokens.empty()) {
      out.sentences.push_back(std::move(tokens));
    }
  }

  for (auto& sentence : out.sentences) {
    if (sentence.size() > config.max_tokens_per_sentence) sentence.resize(config.max_tokens_per_sentence);
  }
  if (out.sentences.empty()) out.sentences.push_back({std::string(kOovToken)});
  return out;
}

std::string flatten_text(const ProcessedDocument& doc) {
  std::string out;
  for (const auto& sentence : doc.sentences) {
    for (const auto& token : sentence) {
      if (token == kOovToken) continue;
      if (!out.empty() && out.back() != '\n') out += ' ';
      out += token;
    }
    if (!out.empty() && out.back() != '\n') out += '\n';
  }
  return out;
}

Vocabulary::Vocabulary() : Vocabulary({}, {}, 1) {}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens,
                       const std::vector<std::uint64_t>& counts, std::uint64_t min_frequency)
    : min_frequency_(min_frequency) {
  if (tokens.size() != counts.size()) throw Error("vocabulary tokens and counts differ in length");
  tokens_.reserve(tokens.size() + 2);
  counts_.reserve(tokens.size() + 2);
  tokens_.emplace_back(kPadToken);
  tokens_.emplace_back(kOovToken);
  counts_.assign(2, 0);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    tokens_.push_back(tokens[i]);
    counts_.push_back(counts[i]);
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw Error("duplicate vocabulary token \"" + tokens_[i] + "\"");
    }
  }
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kOov : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

std::string Vocabulary::hash() const {
  Fnv1a h;
  for (const auto& token : tokens_) h.update(token).update("\n");
  return h.hex();
}

void Vocabulary::write(std::ostream& out) const {
  out << "# min_frequency " << min_frequency_ << '\n';
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << counts_[i] << '\n';
}

Vocabulary Vocabulary::read(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::uint64_t min_frequency = 1;
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> counts;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("# min_frequency ")) {
      min_frequency = std::stoull(line.substr(16));
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw ParseError("expected token<TAB>count", line_no);
    std::uint64_t count = 0;
    try {
      count = std::stoull(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw ParseError("bad count", line_no);
    }
    tokens.push_back(line.substr(0, tab));
    counts.push_back(count);
  }
  if (tokens.size() < 2 || tokens[0] != kPadToken || tokens[1] != kOovToken) {
    throw ParseError("vocabulary must start with <pad> and <oov>", 0);
  }
  tokens.erase(tokens.begin(), tokens.begin() + 2);
  counts.erase(counts.begin(), counts.begin() + 2);
  return Vocabulary(tokens, counts, min_frequency);
}

Vocabulary build_vocabulary(std::span<const ProcessedDocument> docs, std::uint64_t min_frequency,
                            std::size_t max_size) {
  if (docs.empty()) throw Error("cannot build a vocabulary from no documents");
  if (max_size < 1) throw Error("vocabulary max_size must be at least 1");
  std::map<std::string, std::uint64_t> freq;
  for (const auto& doc : docs) {
    for (const auto& sentence : doc.sentences) {
      for (const auto& token : sentence) {
        if (token != kPadToken && token != kOovToken) ++freq[token];
      }
    }
  }
  std::vector<std::pair<std::string, std::uint64_t>> ranked;
  for (auto& [token, count] : freq) {
    if (count >= min_frequency) ranked.emplace_back(token, count);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_size) ranked.resize(max_size);
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> counts;
  for (auto& [token, count] : ranked) {
    tokens.push_back(token);
    counts.push_back(count);
  }
  return Vocabulary(tokens, counts, min_frequency);
}

EncodedDocument encode(const ProcessedDocument& doc, const Vocabulary& vocab) {
  EncodedDocument out;
  out.reserve(doc.sentences.size());
  for (const auto& sentence : doc.sentences) {
    auto& ids = out.emplace_back();
    ids.reserve(sentence.size());
    for (const auto& token : sentence) ids.push_back(vocab.id(token));
  }
  return out;
}

std::vector<Sentence> decode(const EncodedDocument& doc, const Vocabulary& vocab) {
  std::vector<Sentence> out;
  for (const auto& ids : doc) {
    auto& sentence = out.emplace_back();
    for (TokenId id : ids) sentence.push_back(vocab.token(id));
  }
  return out;
}

}  // namespace triage
