#include <gtest/gtest.h>

#include <atomic>
#include <memory>
#include <thread>

#include "surveyeval/http_providers.hpp"
#include "surveyeval/mock.hpp"
#include "test_util.hpp"

#include <httplib.h>

using namespace surveyeval;
using surveyeval::testing::code_of;

namespace {

constexpr std::uint64_t kSeed = 11;

// Local OpenAI-style endpoint. Chat replies come from the scripted mock keyed
// by the prompt text; embeddings are mock vectors returned in reverse order
// with explicit indices.
class FakeEndpoint {
 public:
  FakeEndpoint() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth_ = req.get_header_value("Authorization");
      auto body = json::parse(req.body);
      if (fail_) {
        res.status = 503;
        res.set_content("overloaded", "text/plain");
        return;
      }
      auto prompt = body.at("messages").at(0).at("content").get<std::string>();
      json reply{{"choices", {{{"message", {{"role", "assistant"}, {"content", "```verdict\n4\n```\n"}}}}}}};
      if (prompt.find("BROKEN") != std::string::npos) reply = json{{"choices", json::array()}};
      res.set_content(reply.dump(), "application/json");
    });
    server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      if (fail_) {
        res.status = 500;
        return;
      }
      auto body = json::parse(req.body);
      json data = json::array();
      const auto& input = body.at("input");
      for (std::size_t i = input.size(); i-- > 0;) {
        auto v = mock_embed(input[i].get<std::string>(), kSeed);
        // Unnormalized on the wire; callers normalize.
        std::vector<double> raw(v.data(), v.data() + v.size());
        for (auto& x : raw) x *= 3.0;
        data.push_back({{"index", i}, {"embedding", raw}});
      }
      res.set_content(json{{"data", data}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  EndpointConfig endpoint(const std::string& model) const {
    return {"http://127.0.0.1:" + std::to_string(port_) + "/v1", model, "secret-token", std::chrono::seconds(5)};
  }
  void set_failing(bool f) { fail_ = f; }
  std::string last_auth() const { return last_auth_; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<bool> fail_{false};
  std::string last_auth_;
};

struct Providers {
  std::unique_ptr<FakeEndpoint> endpoint;
  std::unique_ptr<JudgeProvider> judge;
  std::unique_ptr<EmbeddingProvider> embed;
};

Providers mock_providers() {
  auto s = MockScript::standard(kSeed);
  return {nullptr, std::make_unique<MockJudgeProvider>(s), std::make_unique<MockEmbeddingProvider>(kSeed)};
}

Providers http_providers() {
  Providers p;
  p.endpoint = std::make_unique<FakeEndpoint>();
  p.judge = std::make_unique<HttpJudgeProvider>(p.endpoint->endpoint("judge-m"));
  p.embed = std::make_unique<HttpEmbeddingProvider>(p.endpoint->endpoint("embed-m"));
  return p;
}

class ProviderContract : public ::testing::TestWithParam<Providers (*)()> {};

}  // namespace

TEST_P(ProviderContract, JudgeVerdictIsParseable) {
  auto p = GetParam()();
  JudgeCache cache;
  JudgeClient client(p.judge->model_id(), p.judge.get(), cache);
  EXPECT_EQ(judge_outline_quality("topic", "- A\n- B", client), 4);
  EXPECT_EQ(client.provider_calls(), 1u);
  EXPECT_EQ(judge_outline_quality("topic", "- A\n- B", client), 4);
  EXPECT_EQ(client.provider_calls(), 1u);
}

TEST_P(ProviderContract, EmbeddingsKeepOrderAndNormalize) {
  auto p = GetParam()();
  std::vector<std::string> texts{"first text", "second text", "third text"};
  auto v = embed_texts(texts, *p.embed, kMockDimension);
  ASSERT_EQ(v.size(), 3u);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    EXPECT_NEAR(v[i].norm(), 1.0, 1e-12);
    EXPECT_NEAR(cosine(v[i], mock_embed(texts[i], kSeed)), 1.0, 1e-12);
  }
  auto again = embed_texts(texts, *p.embed);
  for (std::size_t i = 0; i < texts.size(); ++i) EXPECT_TRUE(again[i].isApprox(v[i], 1e-15));
}

TEST_P(ProviderContract, DimensionPinned) {
  auto p = GetParam()();
  std::vector<std::string> texts{"x"};
  EXPECT_EQ(code_of([&] { embed_texts(texts, *p.embed, 32); }), ErrorCode::DimensionMismatch);
}

INSTANTIATE_TEST_SUITE_P(Mock, ProviderContract, ::testing::Values(&mock_providers));
INSTANTIATE_TEST_SUITE_P(Http, ProviderContract, ::testing::Values(&http_providers));

TEST(HttpProviders, SendsBearerToken) {
  FakeEndpoint ep;
  HttpJudgeProvider judge(ep.endpoint("m"));
  JudgeCache cache;
  JudgeClient client("m", &judge, cache);
  judge_outline_quality("t", "- A", client);
  EXPECT_EQ(ep.last_auth(), "Bearer secret-token");
}

TEST(HttpProviders, ServerErrorsAreProviderUnavailable) {
  FakeEndpoint ep;
  ep.set_failing(true);
  HttpJudgeProvider judge(ep.endpoint("m"));
  HttpEmbeddingProvider embed(ep.endpoint("e"));
  JudgeCache cache;
  JudgeClient client("m", &judge, cache);
  EXPECT_EQ(code_of([&] { judge_outline_quality("t", "- A", client); }), ErrorCode::ProviderUnavailable);
  std::vector<std::string> texts{"x"};
  EXPECT_EQ(code_of([&] { embed.embed(texts); }), ErrorCode::ProviderUnavailable);
  EXPECT_EQ(cache.size(), 0u);
}

TEST(HttpProviders, MalformedReplyIsProviderUnavailable) {
  FakeEndpoint ep;
  HttpJudgeProvider judge(ep.endpoint("m"));
  JudgeCache cache;
  JudgeClient client("m", &judge, cache);
  EXPECT_EQ(code_of([&] { judge_outline_quality("t", "- BROKEN", client); }), ErrorCode::ProviderUnavailable);
}

TEST(HttpProviders, UnreachableEndpoint) {
  EndpointConfig cfg{"http://127.0.0.1:1/v1", "m", "", std::chrono::seconds(2)};
  HttpEmbeddingProvider embed(cfg);
  std::vector<std::string> texts{"x"};
  EXPECT_EQ(code_of([&] { embed.embed(texts); }), ErrorCode::ProviderUnavailable);
  EXPECT_EQ(code_of([] { HttpJudgeProvider(EndpointConfig{"no-scheme", "m", "", {}}).complete(
                             JudgeRequest{TaskKind::outline_quality, json::object(), "", "p", 0.5, 0}); }),
            ErrorCode::InvalidConfig);
}
