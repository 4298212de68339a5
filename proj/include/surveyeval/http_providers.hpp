#pragma once

#include <chrono>
#include <string>

#include "surveyeval/embedkit.hpp"
#include "surveyeval/judgekit.hpp"

namespace surveyeval {

// Connection settings for an OpenAI-style endpoint. `base_url` includes any
// path prefix, e.g. "https://api.example.com/v1".
struct EndpointConfig {
  std::string base_url;
  std::string model;
  std::string api_key;  // read from the environment by the caller
  std::chrono::seconds timeout{120};
};

// POST {base_url}/chat/completions; the reply is choices[0].message.content.
class HttpJudgeProvider : public JudgeProvider {
 public:
  explicit HttpJudgeProvider(EndpointConfig config) : config_(std::move(config)) {}

  std::string model_id() const override { return config_.model; }
  std::string complete(const JudgeRequest& request) override;

 private:
  EndpointConfig config_;
};

// POST {base_url}/embeddings with {"model", "input": [...]}.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(EndpointConfig config) : config_(std::move(config)) {}

  std::string model_id() const override { return config_.model; }
  std::vector<Vector> embed(std::span<const std::string> texts) override;

 private:
  EndpointConfig config_;
};

}  // namespace surveyeval
