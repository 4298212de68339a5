#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "surveyeval/decompose.hpp"
#include "surveyeval/judgekit.hpp"

namespace surveyeval {

enum class Role { human, generated };

std::string_view to_string(Role r);

struct ManifestEntry {
  std::string id;
  std::string title;
  std::string topic;  // may be empty before topic mining
  std::string topic_key;
  Role role = Role::human;
  std::optional<std::string> system_name;  // present iff generated
  std::string document_path;               // relative to the manifest
};

struct CorpusManifest {
  std::string corpus_id;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  const ManifestEntry* find(std::string_view id) const;
  const ManifestEntry* human_for(std::string_view topic_key) const;
  // Sorted, distinct system names.
  std::vector<std::string> systems() const;
};

struct SurveyPair {
  const ManifestEntry* generated = nullptr;
  const ManifestEntry* human = nullptr;
};

// Parses and validates. Throws MalformedManifest (with line or field path),
// DuplicateId or UnpairedGeneratedEntry.
CorpusManifest parse_manifest(std::string_view json_text, std::filesystem::path base_dir = {});
CorpusManifest load_manifest(const std::filesystem::path& path);
json manifest_to_json(const CorpusManifest& manifest);

// Generated entries paired with the human entry sharing their topic key, in
// manifest order.
std::vector<SurveyPair> pair_by_topic(const CorpusManifest& manifest);

struct SurveyRecord {
  ManifestEntry entry;
  OutlineTree outline;
  std::vector<OutlinePathDocument> outline_paths;
  std::vector<ContentSection> sections;
  std::vector<ReferenceEntry> references;
  std::vector<CitationSentence> citations;
  Diagnostics warnings;

  bool has_outline() const { return !outline.empty(); }
  bool has_content() const;
  bool has_references() const { return !references.empty(); }
};

// Full rule-based decomposition of one normalized markdown document. Errors
// are reported as DecompositionError tagged with the failing facet.
SurveyRecord decompose_document(const ManifestEntry& entry, std::string_view document);

SurveyRecord load_survey(const ManifestEntry& entry, const std::filesystem::path& base_dir);

// Decomposition file form of a record. Round-trips exactly.
json record_to_json(const SurveyRecord& record);
SurveyRecord record_from_json(const json& j);

// Concise topic label for a survey title. Labels are mined offline and
// written back to the manifest; evaluation never mines at run time.
std::string mine_topic(std::string_view title, JudgeClient& judge);

}  // namespace surveyeval
