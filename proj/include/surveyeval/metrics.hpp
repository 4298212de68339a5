#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "surveyeval/component.hpp"
#include "surveyeval/decompose.hpp"
#include "surveyeval/judgekit.hpp"

namespace surveyeval {

enum class Scale { five_point, percent };

std::string_view to_string(Scale s);
Scale scale_from_string(std::string_view s);
double scale_max(Scale s);

struct MetricScore {
  std::string metric_id;
  Scale scale = Scale::five_point;
  double raw = 0.0;

  // Validates the raw range for the scale.
  static MetricScore make(std::string metric_id, Scale scale, double raw);

  double normalized() const;
  bool operator==(const MetricScore&) const = default;
};

// percent -> raw / 20, five_point -> identity. Never rounds.
double normalize_score(double raw, Scale scale);

// Display cell: "4.00" for five-point, "4.68_{93.57}" for percent scores.
std::string display_cell(double raw, Scale scale);

namespace metric_id {
inline constexpr std::string_view outline_quality = "outline.quality";
inline constexpr std::string_view hierarchy = "outline.hierarchy";
inline constexpr std::string_view content_coverage = "content.coverage";
inline constexpr std::string_view content_structure = "content.structure";
inline constexpr std::string_view content_relevance = "content.relevance";
inline constexpr std::string_view content_language = "content.language";
inline constexpr std::string_view content_criticalness = "content.criticalness";
inline constexpr std::string_view faithfulness = "content.faithfulness";
inline constexpr std::string_view reference_quality = "reference.quality";
inline constexpr std::string_view supportiveness = "reference.supportiveness";
}  // namespace metric_id

struct MetricInfo {
  std::string_view id;
  Component component;
  Scale scale;
  std::string_view column;  // report column heading
};

// Report column order: outline L1, Hierarchy, content L1-L5, Faithfulness,
// reference L1, Supportiveness.
std::span<const MetricInfo> all_metrics();
const MetricInfo& metric_info(std::string_view id);

// ---------------------------------------------------------------------------
// Hierarchy

// (D_max - d + 1) / D_max; d = 0 is the virtual root.
double node_weight(int depth, int max_depth);

struct ParentRecord {
  std::vector<std::string> path;  // root-to-node titles; empty for the virtual root
  int depth = 0;
  double weight = 0.0;
  std::vector<std::string> children;
  std::vector<bool> verdicts;
  double local_score = 0.0;  // fraction of coherent children
  bool failed = false;
  std::string diagnostic;
};

struct HierarchyBreakdown {
  std::vector<ParentRecord> parents;
  int max_depth = 0;
  double score = 0.0;  // H in [0, 100]
};

// Weighted mean of local scores times 100, from the records' weights.
double hierarchy_from_records(std::span<const ParentRecord> parents);

using CoherenceSource =
    std::function<CoherenceVerdict(const std::vector<std::string>& path, const std::vector<std::string>& children)>;

// Every node with children, virtual root included, is a parent.
HierarchyBreakdown hierarchy_score(const OutlineTree& tree, const CoherenceSource& judge);
HierarchyBreakdown hierarchy_score(const OutlineTree& tree, std::string_view topic, JudgeClient& client);

// ---------------------------------------------------------------------------
// Proportions

struct SupportInstance {
  int section_index = 0;
  std::string sentence;
  int key = 0;
  bool supported = false;
};

struct FaithfulnessResult {
  std::optional<MetricScore> score;  // null when nothing is cited
  std::vector<SupportInstance> instances;
  std::size_t unique_cited = 0;
  std::size_t unique_supported = 0;
  Diagnostics warnings;
};

// Counted per (sentence, cited reference) instance.
std::optional<MetricScore> faithfulness_from_instances(std::span<const SupportInstance> instances);

FaithfulnessResult faithfulness_score(const std::vector<CitationSentence>& sentences,
                                      const std::vector<ReferenceEntry>& references, JudgeClient& client);

struct RelevanceRecord {
  int key = 0;
  bool relevant = false;
};

struct SupportivenessResult {
  std::optional<MetricScore> score;  // null for an empty bibliography
  std::vector<RelevanceRecord> records;
  Diagnostics warnings;
};

std::optional<MetricScore> supportiveness_from_records(std::span<const RelevanceRecord> records);

SupportivenessResult supportiveness_score(const std::vector<ReferenceEntry>& references, std::string_view topic,
                                          JudgeClient& client);

}  // namespace surveyeval
