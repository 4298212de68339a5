#include "surveyeval/http_providers.hpp"

#include <httplib.h>

#include <algorithm>

namespace surveyeval {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidConfig, "endpoint URL needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

json post_json(const EndpointConfig& config, const std::string& route, const json& body) {
  auto url = split_url(config.base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(config.timeout);
  client.set_read_timeout(config.timeout);
  client.set_write_timeout(config.timeout);
  httplib::Headers headers;
  if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);

  auto res = client.Post(url.prefix + route, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::ProviderUnavailable, config.base_url + route + ": " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::ProviderUnavailable,
                config.base_url + route + ": HTTP " + std::to_string(res->status) + " " + res->body.substr(0, 200));
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderUnavailable, route + ": response is not JSON: " + e.what());
  }
}

}  // namespace

std::string HttpJudgeProvider::complete(const JudgeRequest& request) {
  json body{{"model", config_.model},
            {"temperature", request.temperature},
            {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})}};
  auto reply = post_json(config_, "/chat/completions", body);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderUnavailable, std::string("chat completion without content: ") + e.what());
  }
}

std::vector<Vector> HttpEmbeddingProvider::embed(std::span<const std::string> texts) {
  json input = json::array();
  for (const auto& t : texts) input.push_back(t);
  auto reply = post_json(config_, "/embeddings", json{{"model", config_.model}, {"input", input}});
  try {
    auto data = reply.at("data");
    std::vector<std::pair<std::size_t, Vector>> rows;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& item = data[i];
      auto values = item.at("embedding").get<std::vector<double>>();
      rows.emplace_back(item.value("index", i), Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Vector> out;
    for (auto& [i, v] : rows) out.push_back(std::move(v));
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderUnavailable, std::string("malformed embeddings response: ") + e.what());
  }
}

}  // namespace surveyeval
