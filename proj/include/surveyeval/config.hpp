#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "surveyeval/simweight.hpp"

namespace surveyeval {

// Pipeline settings read from a `key = value` file. Lines starting with '#'
// are comments. Relative paths resolve against the config file's directory.
// Secrets never live here: API keys come from JUDGE_API_KEY and EMBED_API_KEY.
//
//   judge.provider        mock | http                 (mock)
//   judge.base_url        http endpoint prefix, e.g. https://host/v1
//   judge.model           model id                    (mock-judge)
//   embed.provider        mock | http                 (mock)
//   embed.base_url
//   embed.model                                       (mock-embed)
//   embed.dimension       expected dimension, 0 = take from the provider (64)
//   temperature           [0, 2]                      (0.5)
//   top_n.outline         >= 1                        (5)
//   top_n.content         >= 1                        (5)
//   top_n.reference       >= 1                        (20)
//   max_in_flight         concurrent surveys and provider calls (4)
//   max_reasks            re-asks on unparseable judge output (2)
//   context_budget_chars  truncation budget for long judge inputs (400000)
//   timeout_seconds       http timeout                (120)
//   seed                  seed for every mock provider (0)
//   out_dir               output directory            (out)
//   cache_path            judge cache                 (<out_dir>/judge_cache.jsonl)
//   index_path            vector index                (<out_dir>/index.v1.bin)
//   mock.script           mock judge script (JSON)    (built-in script)
//   templates_path        prompt template overrides (JSON)
//   arena.judges          comma-separated judge model ids (judge-a,judge-b,judge-c)
struct PipelineConfig {
  std::string judge_provider = "mock";
  std::string judge_base_url;
  std::string judge_model = "mock-judge";
  std::string embed_provider = "mock";
  std::string embed_base_url;
  std::string embed_model = "mock-embed";
  int embed_dimension = 64;
  double temperature = 0.5;
  TopN top_n;
  int max_in_flight = 4;
  int max_reasks = 2;
  std::size_t context_budget_chars = 400'000;
  int timeout_seconds = 120;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  std::filesystem::path cache_path;
  std::filesystem::path index_path;
  std::filesystem::path mock_script;
  std::filesystem::path templates_path;
  std::vector<std::string> arena_judges = {"judge-a", "judge-b", "judge-c"};

  // Throws InvalidConfig.
  void validate() const;

  std::filesystem::path cache_file() const;
  std::filesystem::path index_file() const;

  // Settings that can change results, one `key=value` per line. Output paths
  // and concurrency are left out; script and template files enter by content.
  std::string canonical() const;
  std::string digest() const;

  static PipelineConfig parse(std::string_view text, const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);
};

}  // namespace surveyeval
