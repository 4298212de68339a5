#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>

#include "surveyeval/embedkit.hpp"
#include "surveyeval/judgekit.hpp"

namespace surveyeval {

inline constexpr Eigen::Index kMockDimension = 64;

// Pseudo-random unit vector that is a pure function of (seed, text).
Vector mock_embed(std::string_view text, std::uint64_t seed, Eigen::Index dimension = kMockDimension);

// Unit vector whose cosine with `anchor` is exactly `target` (up to rounding):
// the salt's hash vector is orthogonalized against the anchor (Gram-Schmidt)
// and mixed back in.
Vector vector_with_cosine(const Vector& anchor, double target, std::string_view salt, std::uint64_t seed);

class MockEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit MockEmbeddingProvider(std::uint64_t seed, Eigen::Index dimension = kMockDimension)
      : seed_(seed), dimension_(dimension) {}

  std::string model_id() const override { return "mock-embed-" + std::to_string(dimension_); }
  std::vector<Vector> embed(std::span<const std::string> texts) override;

  void set_override(std::string text, Vector v) { fixed_[std::move(text)] = std::move(v); }
  // `text` will embed with cosine exactly `target` against `anchor_text`.
  void set_cosine_override(std::string text, std::string anchor_text, double target) {
    relative_[std::move(text)] = {std::move(anchor_text), target};
  }

  Vector embed_one(const std::string& text) const;

 private:
  std::uint64_t seed_;
  Eigen::Index dimension_;
  std::map<std::string, Vector> fixed_;
  std::map<std::string, std::pair<std::string, double>> relative_;
};

// Scripted judge behaviour.
//
// `defaults` maps a task kind to a verdict spec; `overrides` maps a payload
// digest to a spec that wins over the default. Specs:
//   booleans  true | false | [bools] | {"mode":"coin","p":0.7} | {"mode":"alternate"}
//   scores    3 | [5,4,5,5,4] | {"mode":"uniform","min":3,"max":5}
//   pairwise  "first" | "second" | "coin" | "tie"
//   labels    "echo" | "<fixed text>"
//   any kind  {"raw": "<text>"} or {"raw": ["<attempt 0>", "<attempt 1>", ...]}
struct MockScript {
  std::uint64_t seed = 0;
  json defaults = json::object();
  std::map<std::string, json> overrides;

  static MockScript standard(std::uint64_t seed = 0);
  static MockScript from_json(const json& j);
  json to_json() const;
};

std::string payload_digest(const json& payload);

std::string mock_judge_response(const JudgeRequest& request, const MockScript& script);

// Parsed verdict for a first-attempt ask of `task`.
Verdict mock_judge(const JudgeTask& task, const MockScript& script);

class MockJudgeProvider : public JudgeProvider {
 public:
  explicit MockJudgeProvider(MockScript script, std::string model_id = "mock-judge")
      : script_(std::move(script)), model_id_(std::move(model_id)) {}

  std::string model_id() const override { return model_id_; }
  std::string complete(const JudgeRequest& request) override { return mock_judge_response(request, script_); }

  const MockScript& script() const { return script_; }

 private:
  MockScript script_;
  std::string model_id_;
};

}  // namespace surveyeval
