#include "surveyeval/arena.hpp"

#include <cmath>
#include <set>

#include "surveyeval/text.hpp"

namespace surveyeval {

ArenaResult run_arena(const std::string& system_name, const std::vector<ArenaPair>& pairs, Component dimension,
                      const std::vector<ArenaJudge>& judges) {
  if (pairs.empty()) throw Error(ErrorCode::PreconditionViolation, "arena needs at least one pair");
  if (judges.empty()) throw Error(ErrorCode::PreconditionViolation, "arena needs at least one judge");

  ArenaResult result;
  result.system_name = system_name;
  result.dimension = dimension;
  for (const auto& judge : judges) {
    auto& tally = result.tallies[judge.judge_id];
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& pair = pairs[p];
      // Generated first, then human first.
      for (int swapped = 0; swapped < 2; ++swapped) {
        const auto& a = swapped ? pair.human : pair.generated;
        const auto& b = swapped ? pair.generated : pair.human;
        try {
          auto verdict = judge_pairwise(dimension, pair.topic, a, b, *judge.client);
          bool generated_won = (verdict.winner == Winner::A) != (swapped == 1);
          tally.wins += generated_won ? 1 : 0;
          tally.decisions += 1;
          if (verdict.fallback) {
            tally.fallbacks += 1;
            result.diagnostics.push_back(judge.judge_id + ": pair " + std::to_string(p + 1) +
                                         " tie resolved to position A");
          }
        } catch (const Error& e) {
          tally.failures += 1;
          result.diagnostics.push_back(judge.judge_id + ": pair " + std::to_string(p + 1) + ": " + e.what());
        }
      }
    }
    result.per_judge_win_rate[judge.judge_id] = tally.rate();
  }

  double sum = 0.0;
  for (const auto& [id, rate] : result.per_judge_win_rate) sum += rate;
  const auto n = static_cast<double>(result.per_judge_win_rate.size());
  result.mean = sum / n;
  double var = 0.0;
  for (const auto& [id, rate] : result.per_judge_win_rate) var += (rate - result.mean) * (rate - result.mean);
  result.std = std::sqrt(var / n);
  return result;
}

json arena_to_json(const ArenaResult& r) {
  json per_judge = json::object();
  int decisions = 0, failures = 0;
  for (const auto& [id, t] : r.tallies) {
    per_judge[id] = {{"win_rate", t.rate()},
                     {"wins", t.wins},
                     {"decisions", t.decisions},
                     {"failures", t.failures},
                     {"tie_fallbacks", t.fallbacks}};
    decisions += t.decisions;
    failures += t.failures;
  }
  return json{{"system", r.system_name},   {"dimension", to_string(r.dimension)},
              {"per_judge", per_judge},    {"mean", r.mean},
              {"std", r.std},              {"decisions", decisions},
              {"failures", failures},      {"diagnostics", r.diagnostics}};
}

std::string arena_markdown(const std::vector<ArenaResult>& results) {
  std::vector<std::string> systems;
  std::set<std::string> seen;
  for (const auto& r : results) {
    if (seen.insert(r.system_name).second) systems.push_back(r.system_name);
  }
  std::string out = "| System | Outline | Content | Reference |\n|---|---|---|---|\n";
  for (const auto& s : systems) {
    out += "| " + s + " |";
    for (auto c : kComponents) {
      std::string cell = " - ";
      for (const auto& r : results) {
        if (r.system_name == s && r.dimension == c) cell = " " + text::fixed2(r.mean) + "±" + text::fixed2(r.std) + " ";
      }
      out += cell + "|";
    }
    out += "\n";
  }
  return out;
}

}  // namespace surveyeval
