#pragma once

#include <map>
#include <string>
#include <vector>

#include "surveyeval/judgekit.hpp"

namespace surveyeval {

// One generated survey facet and its paired human counterpart, rendered as text.
struct ArenaPair {
  std::string topic;
  std::string generated;
  std::string human;
};

struct ArenaJudge {
  std::string judge_id;
  JudgeClient* client = nullptr;
};

struct JudgeTally {
  int wins = 0;       // generated preferred
  int decisions = 0;  // successful calls
  int failures = 0;   // excluded from the denominator
  int fallbacks = 0;  // persistent ties resolved to position A
  double rate() const { return decisions == 0 ? 0.0 : static_cast<double>(wins) / decisions; }
};

struct ArenaResult {
  std::string system_name;
  Component dimension = Component::outline;
  std::map<std::string, double> per_judge_win_rate;
  std::map<std::string, JudgeTally> tallies;
  double mean = 0.0;
  double std = 0.0;  // population std across judges
  std::vector<std::string> diagnostics;
};

// Two forced-choice calls per pair and judge with candidate order swapped.
ArenaResult run_arena(const std::string& system_name, const std::vector<ArenaPair>& pairs, Component dimension,
                      const std::vector<ArenaJudge>& judges);

json arena_to_json(const ArenaResult& r);

// Markdown table: one row per system, one column per dimension, "mean±std".
std::string arena_markdown(const std::vector<ArenaResult>& results);

}  // namespace surveyeval
