#include "surveyeval/simweight.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace surveyeval {

namespace {

void check_sigma(double sigma) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) {
    throw Error(ErrorCode::PreconditionViolation, "sigma " + std::to_string(sigma) + " outside [0, 1]");
  }
}

// Exact at both ends, monotone in sigma, and fixed when the anchor equals q.
double blend(double q, double anchor, double sigma) {
  double v = std::lerp(q, anchor, sigma);
  return std::clamp(v, std::min(q, anchor), std::max(q, anchor));
}

}  // namespace

double sigma_from_matches(std::span<const UnitMatch> matches, int top_n, int* used) {
  if (matches.empty()) throw Error(ErrorCode::EmptySide, "no matches to average");
  if (top_n < 1) throw Error(ErrorCode::InvalidConfig, "top-N must be >= 1");
  std::vector<double> sims;
  sims.reserve(matches.size());
  for (const auto& m : matches) sims.push_back(std::clamp(m.cosine, 0.0, 1.0));
  std::sort(sims.begin(), sims.end(), std::greater<>());
  auto n = std::min<std::size_t>(static_cast<std::size_t>(top_n), sims.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += sims[i];
  if (used != nullptr) *used = static_cast<int>(n);
  return std::clamp(sum / static_cast<double>(n), 0.0, 1.0);
}

SimilarityFactor similarity_factor(std::span<const EmbeddingUnit* const> generated,
                                   std::span<const EmbeddingUnit* const> human, Component component, int top_n) {
  if (generated.empty() || human.empty()) {
    throw Error(ErrorCode::EmptySide, std::string(to_string(component)) + ": " +
                                          (generated.empty() ? "generated" : "human") + " side has no units");
  }
  SimilarityFactor f;
  f.component = component;
  for (const auto* unit : generated) {
    auto m = nearest_match(unit->vector, human);
    f.per_unit_matches.push_back(UnitMatch{unit->index, m.matched_index, m.similarity});
  }
  f.sigma = sigma_from_matches(f.per_unit_matches, top_n, &f.top_n_used);
  return f;
}

SimilarityFactor similarity_factor(const VectorIndex& index, std::string_view generated_survey_id,
                                   std::string_view human_survey_id, Component component, int top_n) {
  auto generated = index.units(generated_survey_id, component);
  auto human = index.units(human_survey_id, component);
  return similarity_factor(generated, human, component, top_n);
}

std::string_view to_string(Configuration c) {
  switch (c) {
    case Configuration::vanilla: return "vanilla";
    case Configuration::balanced: return "balanced";
    case Configuration::human_as_perfect: return "human_as_perfect";
  }
  return "unknown";
}

FusedScore fuse_human_as_perfect(const MetricScore& system_score, double sigma) {
  check_sigma(sigma);
  FusedScore f;
  f.config = Configuration::human_as_perfect;
  f.metric_id = system_score.metric_id;
  f.sigma_used = sigma;
  f.value = blend(system_score.raw, scale_max(system_score.scale), sigma);
  return f;
}

FusedScore fuse_balanced(const MetricScore& system_score, const MetricScore& human_score, double sigma) {
  check_sigma(sigma);
  if (system_score.scale != human_score.scale || system_score.metric_id != human_score.metric_id) {
    throw Error(ErrorCode::ScaleMismatch, system_score.metric_id + " vs " + human_score.metric_id);
  }
  FusedScore f;
  f.config = Configuration::balanced;
  f.metric_id = system_score.metric_id;
  f.sigma_used = sigma;
  f.human_value = human_score.raw;
  f.value = blend(system_score.raw, human_score.raw, sigma);
  return f;
}

std::vector<FusedScore> evaluate_configurations(const ScoreMap& system, const ScoreMap* human,
                                                const SigmaMap& sigmas) {
  std::vector<FusedScore> out;
  for (const auto& info : all_metrics()) {
    std::optional<MetricScore> score;
    if (auto it = system.find(info.id); it != system.end()) score = it->second;
    std::optional<MetricScore> human_score;
    if (human != nullptr) {
      if (auto it = human->find(info.id); it != human->end()) human_score = it->second;
    }
    std::optional<double> sigma;
    if (auto it = sigmas.find(info.component); it != sigmas.end()) sigma = it->second;

    FusedScore vanilla{Configuration::vanilla, std::string(info.id), std::nullopt, std::nullopt, std::nullopt};
    if (score) vanilla.value = score->raw;
    out.push_back(vanilla);

    FusedScore balanced{Configuration::balanced, std::string(info.id), std::nullopt, sigma, std::nullopt};
    if (score && human_score && sigma) balanced = fuse_balanced(*score, *human_score, *sigma);
    out.push_back(balanced);

    FusedScore hp{Configuration::human_as_perfect, std::string(info.id), std::nullopt, sigma, std::nullopt};
    if (score && sigma) hp = fuse_human_as_perfect(*score, *sigma);
    out.push_back(hp);
  }
  return out;
}

}  // namespace surveyeval
