#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "surveyeval/embedkit.hpp"
#include "surveyeval/metrics.hpp"

namespace surveyeval {

struct TopN {
  int outline = 5;
  int content = 5;
  int reference = 20;

  int operator[](Component c) const {
    return c == Component::outline ? outline : c == Component::content ? content : reference;
  }
};

struct UnitMatch {
  int generated_index = 0;
  int human_index = 0;
  double cosine = 0.0;  // unclamped
};

struct SimilarityFactor {
  Component component = Component::outline;
  double sigma = 0.0;
  int top_n_used = 0;
  std::vector<UnitMatch> per_unit_matches;  // generated order
};

// Clamp each best cosine to [0, 1], sort descending, mean of the first
// min(N, count).
double sigma_from_matches(std::span<const UnitMatch> matches, int top_n, int* used = nullptr);

SimilarityFactor similarity_factor(std::span<const EmbeddingUnit* const> generated,
                                   std::span<const EmbeddingUnit* const> human, Component component, int top_n);

SimilarityFactor similarity_factor(const VectorIndex& index, std::string_view generated_survey_id,
                                   std::string_view human_survey_id, Component component, int top_n);

enum class Configuration { vanilla, balanced, human_as_perfect };

inline constexpr Configuration kConfigurations[] = {Configuration::vanilla, Configuration::balanced,
                                                    Configuration::human_as_perfect};

std::string_view to_string(Configuration c);

struct FusedScore {
  Configuration config = Configuration::vanilla;
  std::string metric_id;
  std::optional<double> value;  // on the metric's own scale; null when not computable
  std::optional<double> sigma_used;
  std::optional<double> human_value;
};

// sigma * Q_max + (1 - sigma) * Q with Q_max = 5 or 100 by scale.
FusedScore fuse_human_as_perfect(const MetricScore& system_score, double sigma);

// sigma * Q_human + (1 - sigma) * Q.
FusedScore fuse_balanced(const MetricScore& system_score, const MetricScore& human_score, double sigma);

using ScoreMap = std::map<std::string, std::optional<MetricScore>, std::less<>>;
using SigmaMap = std::map<Component, std::optional<double>>;

// Three configurations for every metric, each fused with its facet's sigma.
// `human` may be null (a human survey evaluated on its own).
std::vector<FusedScore> evaluate_configurations(const ScoreMap& system, const ScoreMap* human,
                                                const SigmaMap& sigmas);

}  // namespace surveyeval
