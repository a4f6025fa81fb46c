// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace triage {

using ClassId = std::int32_t;

/// A raw ticket. Labels may omit fields; such documents are left out of
/// tasks on that field.
struct Document {
  std::string id;
  std::string title;
  std::string body;
  std::map<std::string, std::string> labels;
};

/// Ordered class names with the inverse index.
class ClassSet {
 public:
  ClassSet() = default;
  /// Names must be unique.
  explicit ClassSet(std::vector<std::string> names);

  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::string& name(ClassId id) const { return names_.at(static_cast<std::size_t>(id)); }
  std::optional<ClassId> find(const std::string& name) const;
  /// Throws if the name is not a member.
  ClassId id(const std::string& name) const;

  bool operator==(const ClassSet& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, ClassId> index_;
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Document> documents, std::map<std::string, ClassSet> fields);

  const std::vector<Document>& documents() const noexcept { return documents_; }
  const std::map<std::string, ClassSet>& fields() const noexcept { return fields_; }
  const ClassSet& classes(const std::string& field) const;
  bool has_field(const std::string& field) const { return fields_.contains(field); }

  const Document& document(const std::string& id) const;
  std::size_t size() const noexcept { return documents_.size(); }

  /// Documents carrying a label for `field`, in load order.
  std::vector<const Document*> labeled(const std::string& field) const;

 private:
  std::vector<Document> documents_;
  std::map<std::string, ClassSet> fields_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

struct Split {
  std::string field;
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
  double test_fraction = 0.15;

  bool operator==(const Split&) const = default;
};

/// Parses JSON-lines records {"id","title","content","labels"}. An empty
/// schema keeps every label field observed in the file; otherwise labels
/// outside the schema are ignored.
Dataset parse_dataset(std::istream& in, const std::vector<std::string>& schema = {});
Dataset load_dataset(const std::filesystem::path& path,
                     const std::vector<std::string>& schema = {});

void write_dataset(std::ostream& out, const Dataset& dataset);

/// Parses one record object (as used by `predict`). Labels are optional.
Document document_from_json(const nlohmann::json& record);
nlohmann::json document_to_json(const Document& doc);

/// Seeded, unstratified split of the documents labeled for `field`.
/// The labeled ids are shuffled with Rng(seed) (Fisher-Yates); the first
/// round(test_fraction * n) become the test set.
Split make_split(const Dataset& dataset, const std::string& field,
                 double test_fraction, std::uint64_t seed);

nlohmann::json split_to_json(const Split& split);

}  // namespace triage
