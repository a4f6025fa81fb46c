// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/corpus.hpp"

namespace triage {

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kOovToken = "<oov>";

/// A named deletion pattern. Matches are replaced by a single space before
/// lowercasing, so patterns are compiled case-insensitively, and `^`/`$`
/// anchor at line boundaries.
class GarbageRule {
 public:
  GarbageRule(std::string name, std::string pattern);

  const std::string& name() const noexcept { return name_; }
  const std::string& pattern() const noexcept { return pattern_; }
  std::string apply(const std::string& text) const;

 private:
  struct Compiled;
  std::string name_;
  std::string pattern_;
  std::shared_ptr<const Compiled> compiled_;
};

/// Version tag of the bundled stopword list.
inline constexpr std::string_view kStopwordListVersion = "en-1";

std::set<std::string> default_stopwords();
std::set<std::string> load_stopwords(const std::filesystem::path& path);
/// One word per line; blank lines and lines starting with '#' are skipped.
std::set<std::string> parse_stopwords(std::istream& in);

/// Hex addresses, stack-trace frame lines, HTML tags, long digit runs.
std::vector<GarbageRule> default_garbage_rules();
std::vector<GarbageRule> garbage_rules_from_json(const nlohmann::json& rules);
std::vector<GarbageRule> load_garbage_rules(const std::filesystem::path& path);
nlohmann::json garbage_rules_to_json(const std::vector<GarbageRule>& rules);

struct PipelineConfig {
  std::set<std::string> stopwords = default_stopwords();
  std::vector<GarbageRule> garbage_rules = default_garbage_rules();
  std::size_t max_sentences = 30;
  std::size_t max_tokens_per_sentence = 60;

  void validate() const;
};

/// Keys: "stopwords" (array) or "stopwords_file", "garbage_rules" (array of
/// {name, pattern}) or "garbage_rules_file", "max_sentences",
/// "max_tokens_per_sentence". Missing keys keep the defaults.
PipelineConfig pipeline_from_json(const nlohmann::json& config);
nlohmann::json pipeline_to_json(const PipelineConfig& config);

using Sentence = std::vector<std::string>;

struct ProcessedDocument {
  std::string doc_id;
  std::vector<Sentence> sentences;

  bool operator==(const ProcessedDocument&) const = default;
};

/// Title and body go through: garbage deletion, lowercasing, sentence
/// split (body only; the title is one sentence), tokenization, stopword
/// removal, truncation. A document left without tokens becomes [[<oov>]].
ProcessedDocument preprocess_document(const Document& doc, const PipelineConfig& config);

/// Sentences joined by newlines, tokens by spaces. The <oov> placeholder
/// flattens to the empty string.
std::string flatten_text(const ProcessedDocument& doc);

std::string to_lower_utf8(std::string_view text);
/// Splits on '.', '!' or '?' followed by whitespace or end of text, and on
/// every newline.
std::vector<std::string> split_sentences(std::string_view text);
/// Maximal runs of letters and digits; everything else separates.
std::vector<std::string> tokenize(std::string_view text);

using TokenId = std::int32_t;

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kOov = 1;

  /// Reserved tokens only.
  Vocabulary();
  /// `tokens` excludes the reserved entries; `counts` is parallel to it.
  Vocabulary(const std::vector<std::string>& tokens, const std::vector<std::uint64_t>& counts,
             std::uint64_t min_frequency);

  std::size_t size() const noexcept { return tokens_.size(); }
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::uint64_t frequency(TokenId id) const { return counts_.at(static_cast<std::size_t>(id)); }
  std::uint64_t min_frequency() const noexcept { return min_frequency_; }

  /// FNV-1a over the tokens in id order.
  std::string hash() const;

  /// One "token<TAB>count" line per id, reserved entries included.
  void write(std::ostream& out) const;
  static Vocabulary read(std::istream& in);

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, TokenId> index_;
  std::uint64_t min_frequency_ = 1;
};

/// Ranks tokens by (frequency desc, token asc), keeps the first `max_size`
/// with frequency >= min_frequency, and prepends <pad> and <oov>.
Vocabulary build_vocabulary(std::span<const ProcessedDocument> docs, std::uint64_t min_frequency,
                            std::size_t max_size);

using EncodedDocument = std::vector<std::vector<TokenId>>;

EncodedDocument encode(const ProcessedDocument& doc, const Vocabulary& vocab);
std::vector<Sentence> decode(const EncodedDocument& doc, const Vocabulary& vocab);

}  // namespace triage
