#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include "surveyeval/judgekit.hpp"
#include "surveyeval/mock.hpp"
#include "surveyeval/text.hpp"

using namespace surveyeval;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::PreconditionViolation;
}

std::string fenced(std::initializer_list<const char*> lines) {
  std::string s = "Here is my answer.\n```verdict\n";
  for (const char* l : lines) s += std::string(l) + "\n";
  return s + "```\n";
}

struct Harness {
  explicit Harness(MockScript script = MockScript::standard()) : provider(std::move(script)) {}
  JudgeCache cache;
  MockJudgeProvider provider;
  JudgeClient client{"mock-judge", &provider, cache};
};

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "surveyeval_tests";
  std::filesystem::create_directories(dir);
  auto p = dir / name;
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST(ParseVerdict, Booleans) {
  auto v = parse_verdict(TaskKind::children_coherence, fenced({"1. yes", "2. No", "3: true"}), 3);
  EXPECT_EQ(v.flags, (std::vector<bool>{true, false, true}));
  EXPECT_EQ(code_of([] { parse_verdict(TaskKind::children_coherence, fenced({"yes", "no"}), 3); }),
            ErrorCode::UnparseableVerdict);
  EXPECT_EQ(code_of([] { parse_verdict(TaskKind::citation_support, fenced({"maybe"}), 1); }),
            ErrorCode::UnparseableVerdict);
}

TEST(ParseVerdict, Scores) {
  auto v = parse_verdict(TaskKind::content_quality, fenced({"5", "4", "5", "5", "4"}));
  EXPECT_EQ(v.scores, (std::vector<int>{5, 4, 5, 5, 4}));
  EXPECT_EQ(code_of([] { parse_verdict(TaskKind::content_quality, fenced({"5", "4", "6", "5", "4"})); }),
            ErrorCode::UnparseableVerdict);
  EXPECT_EQ(code_of([] { parse_verdict(TaskKind::outline_quality, fenced({"0"})); }), ErrorCode::UnparseableVerdict);
  EXPECT_EQ(code_of([] { parse_verdict(TaskKind::outline_quality, fenced({"4.5"})); }),
            ErrorCode::UnparseableVerdict);
  EXPECT_EQ(parse_verdict(TaskKind::outline_quality, fenced({"Score: 4"})).scores, std::vector<int>{4});
}

TEST(ParseVerdict, NoFenceIsUnparseable) {
  EXPECT_EQ(code_of([] { parse_verdict(TaskKind::outline_quality, "I would say 4."); }),
            ErrorCode::UnparseableVerdict);
  EXPECT_EQ(code_of([] { parse_verdict(TaskKind::outline_quality, "```\n4\n"); }), ErrorCode::UnparseableVerdict);
}

TEST(ParseVerdict, PairwiseAndLabel) {
  EXPECT_EQ(parse_verdict(TaskKind::pairwise, fenced({"B"})).winner, Winner::B);
  EXPECT_TRUE(parse_verdict(TaskKind::pairwise, fenced({"tie"})).tie);
  EXPECT_EQ(parse_verdict(TaskKind::topic_label, fenced({"\"Graph Learning\""})).label, "Graph Learning");
}

TEST(ParseVerdict, MalformedFuzzNeverCrashes) {
  std::mt19937_64 rng(5);
  const std::string alphabet = "`\n ab123456789yesno.:-[]";
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    auto len = rng() % 40;
    for (std::size_t k = 0; k < len; ++k) s += alphabet[rng() % alphabet.size()];
    for (auto kind : {TaskKind::children_coherence, TaskKind::content_quality, TaskKind::pairwise}) {
      try {
        auto v = parse_verdict(kind, s, 2);
        for (int sc : v.scores) {
          EXPECT_GE(sc, 1);
          EXPECT_LE(sc, 5);
        }
        if (kind == TaskKind::children_coherence) {
          EXPECT_EQ(v.flags.size(), 2u);
        }
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnparseableVerdict);
      }
    }
  }
}

TEST(Templates, BuiltinRegistry) {
  const auto& r = TemplateRegistry::builtin();
  for (auto kind : {TaskKind::children_coherence, TaskKind::outline_quality, TaskKind::content_quality,
                    TaskKind::reference_quality, TaskKind::citation_support, TaskKind::reference_relevance,
                    TaskKind::pairwise, TaskKind::topic_label, TaskKind::criteria}) {
    auto id = std::string(to_string(kind)) + ".v1";
    EXPECT_TRUE(r.contains(id)) << id;
    EXPECT_EQ(r.default_for(kind).id, id);
  }
  auto copy = TemplateRegistry::from_json(r.to_json());
  EXPECT_EQ(copy.ids(), r.ids());
}

TEST(Templates, PutBecomesDefault) {
  TemplateRegistry r = TemplateRegistry::builtin();
  r.put(rubric_template(TaskKind::outline_quality, "- be strict", "outline_quality.v2"));
  EXPECT_EQ(r.default_for(TaskKind::outline_quality).id, "outline_quality.v2");
  EXPECT_NE(r.get("outline_quality.v2").text.find("- be strict"), std::string::npos);
}

TEST(Templates, RenderIsPureAndChecksFields) {
  const auto& t = TemplateRegistry::builtin().default_for(TaskKind::citation_support);
  json payload{{"sentence", "S"}, {"references", {"r1", "r2"}}};
  auto a = render_prompt(t, payload);
  EXPECT_EQ(a, render_prompt(t, payload));
  EXPECT_NE(a.find("1. r1"), std::string::npos);
  EXPECT_NE(a.find("2. r2"), std::string::npos);
  EXPECT_EQ(code_of([&] { render_prompt(t, json{{"sentence", "S"}}); }), ErrorCode::PreconditionViolation);
}

TEST(Truncation, HeadAndTailKept) {
  std::string s(1000, 'x');
  s.replace(0, 5, "HEAD:");
  s.replace(995, 5, ":TAIL");
  EXPECT_EQ(truncate_for_budget(s, 2000), s);
  auto t = truncate_for_budget(s, 100);
  EXPECT_EQ(t.substr(0, 5), "HEAD:");
  EXPECT_EQ(t.substr(t.size() - 5), ":TAIL");
  EXPECT_NE(t.find("elided"), std::string::npos);
  EXPECT_LT(t.size(), 200u);
}

TEST(Truncation, RespectsUtf8Boundaries) {
  std::string s;
  for (int i = 0; i < 300; ++i) s += "\xC3\xA9";  // é
  auto t = truncate_for_budget(s, 101);
  auto marker = t.find("\n[...");
  ASSERT_NE(marker, std::string::npos);
  EXPECT_EQ(marker % 2, 0u);
}

TEST(Coherence, MockCanned) {
  Harness h;
  auto v = judge_children_coherence("t", {"A"}, {"a", "b", "c"}, h.client);
  EXPECT_EQ(v.coherent, (std::vector<bool>{true, true, true}));
  EXPECT_FALSE(v.failed);

  auto s = MockScript::standard();
  s.defaults["children_coherence"] = json::array({true, false, true});
  Harness h2(s);
  EXPECT_EQ(judge_children_coherence("t", {"A"}, {"a", "b", "c"}, h2.client).coherent,
            (std::vector<bool>{true, false, true}));
}

TEST(Coherence, ReasksThenFailsWithAllFalse) {
  auto s = MockScript::standard();
  s.defaults["children_coherence"] = {{"raw", fenced({"yes", "yes"})}};
  Harness h(s);
  auto v = judge_children_coherence("t", {"A"}, {"a", "b", "c"}, h.client);
  EXPECT_TRUE(v.failed);
  EXPECT_EQ(v.coherent, (std::vector<bool>{false, false, false}));
  EXPECT_FALSE(v.diagnostic.empty());
  EXPECT_EQ(h.client.provider_calls(), 3u);  // first ask + two re-asks
}

TEST(Coherence, ReaskRecovers) {
  auto s = MockScript::standard();
  s.defaults["children_coherence"] = {{"raw", {"garbage", fenced({"yes", "no"})}}};
  Harness h(s);
  auto v = judge_children_coherence("t", {}, {"a", "b"}, h.client);
  EXPECT_FALSE(v.failed);
  EXPECT_EQ(v.coherent, (std::vector<bool>{true, false}));
}

TEST(Scores, CannedAndPreconditions) {
  auto s = MockScript::standard();
  Harness h(s);
  EXPECT_EQ(judge_content_quality("t", "body", h.client), (ContentScores{5, 4, 5, 5, 4}));
  EXPECT_EQ(judge_outline_quality("t", "- A", h.client), 4);
  EXPECT_EQ(judge_reference_quality("t", {"[1] x"}, h.client), 3);
  EXPECT_EQ(code_of([&] { judge_outline_quality("t", "", h.client); }), ErrorCode::PreconditionViolation);
  EXPECT_EQ(code_of([&] { judge_reference_quality("t", {}, h.client); }), ErrorCode::PreconditionViolation);
  EXPECT_EQ(code_of([&] { judge_content_quality("t", " ", h.client); }), ErrorCode::PreconditionViolation);

  s.defaults["content_quality"] = {{"raw", fenced({"5", "4", "6", "5", "4"})}};
  Harness bad(s);
  EXPECT_EQ(code_of([&] { judge_content_quality("t", "body", bad.client); }), ErrorCode::UnparseableVerdict);
}

TEST(Support, AlternatingBatch) {
  auto s = MockScript::standard();
  s.defaults["citation_support"] = {{"mode", "alternate"}};
  Harness h(s);
  std::vector<std::string> refs;
  for (int i = 0; i < 10; ++i) refs.push_back("ref " + std::to_string(i));
  auto v = judge_citation_support("claim", refs, h.client);
  ASSERT_EQ(v.size(), 10u);
  EXPECT_EQ(std::count(v.begin(), v.end(), true), 5);

  s.defaults["citation_support"] = false;
  Harness none(s);
  auto f = judge_citation_support("claim", {"a", "b"}, none.client);
  EXPECT_EQ(f, (std::vector<bool>{false, false}));
}

TEST(Relevance, SeventyPercentTable) {
  auto s = MockScript::standard();
  s.defaults["reference_relevance"] = false;
  for (int i = 0; i < 14; ++i) {
    s.overrides[payload_digest({{"topic", "t"}, {"reference", "ref " + std::to_string(i)}})] = true;
  }
  Harness h(s);
  int relevant = 0;
  for (int i = 0; i < 20; ++i) relevant += judge_reference_relevance("t", "ref " + std::to_string(i), h.client);
  EXPECT_EQ(relevant, 14);
}

TEST(Pairwise, FirstSecondTie) {
  auto s = MockScript::standard();
  Harness first(s);
  EXPECT_EQ(judge_pairwise(Component::outline, "t", "a", "b", first.client).winner, Winner::A);
  s.defaults["pairwise"] = "second";
  Harness second(s);
  EXPECT_EQ(judge_pairwise(Component::outline, "t", "a", "b", second.client).winner, Winner::B);
  s.defaults["pairwise"] = "tie";
  Harness tie(s);
  auto v = judge_pairwise(Component::content, "t", "a", "b", tie.client);
  EXPECT_EQ(v.winner, Winner::A);
  EXPECT_TRUE(v.fallback);
}

TEST(Cache, WarmReplayBypassesProvider) {
  auto path = temp_path("cache.jsonl");
  auto s = MockScript::standard(1);
  s.defaults["outline_quality"] = {{"mode", "uniform"}, {"min", 1}, {"max", 5}};
  std::vector<int> cold;
  {
    JudgeCache cache(path);
    MockJudgeProvider p(s);
    JudgeClient c("mock-judge", &p, cache);
    for (int i = 0; i < 10; ++i) cold.push_back(judge_outline_quality("t", "- " + std::to_string(i), c));
    EXPECT_EQ(c.provider_calls(), 10u);
    for (int i = 0; i < 10; ++i) judge_outline_quality("t", "- " + std::to_string(i), c);
    EXPECT_EQ(c.provider_calls(), 10u);
  }
  JudgeCache warm(path);
  EXPECT_EQ(warm.size(), 10u);
  JudgeOptions offline;
  offline.offline = true;
  JudgeClient c("mock-judge", nullptr, warm, offline);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(judge_outline_quality("t", "- " + std::to_string(i), c), cold[i]);
  EXPECT_EQ(code_of([&] { judge_outline_quality("t", "- new", c); }), ErrorCode::ProviderUnavailable);
}

TEST(Cache, RawResponseIsByteIdentical) {
  JudgeCache cache;
  auto s = MockScript::standard();
  s.defaults["outline_quality"] = {{"raw", "  odd spacing\n```\n4\n```\ntrailer  "}};
  MockJudgeProvider p(s);
  JudgeClient c("m", &p, cache);
  JudgeTask task{TaskKind::outline_quality, {{"topic", "t"}, {"outline", "o"}}};
  auto v = cached_call(task, c);
  auto prompt = render_prompt(TemplateRegistry::builtin().default_for(TaskKind::outline_quality), task.payload);
  auto hit = cache.lookup(request_digest("m", "outline_quality.v1", prompt));
  ASSERT_TRUE(hit.has_value());
  EXPECT_EQ(*hit, "  odd spacing\n```\n4\n```\ntrailer  ");
  EXPECT_EQ(v.raw_text, *hit);
}

TEST(Cache, SkipsTornLinesAndDigestIgnoresTimestamps) {
  auto path = temp_path("torn.jsonl");
  {
    JudgeCache cache(path);
    cache.store({"d1", "m", "t", "r1", 1});
    cache.store({"d2", "m", "t", "r2", 2});
    cache.store({"d1", "m", "t", "other", 3});  // first write wins
  }
  {
    std::ofstream out(path, std::ios::app);
    out << "{\"digest\": \"d3\", \"resp";
  }
  JudgeCache loaded(path);
  EXPECT_EQ(loaded.size(), 2u);
  EXPECT_EQ(loaded.skipped_lines(), 1u);
  EXPECT_EQ(loaded.lookup("d1"), std::optional<std::string>("r1"));

  JudgeCache other;
  other.store({"d2", "m", "t", "r2", 99});
  other.store({"d1", "m", "t", "r1", 42});
  EXPECT_EQ(other.content_digest(), loaded.content_digest());
}

TEST(Client, RejectsBadTemperature) {
  JudgeCache cache;
  JudgeOptions o;
  o.temperature = 2.5;
  EXPECT_EQ(code_of([&] { JudgeClient c("m", nullptr, cache, o); }), ErrorCode::InvalidConfig);
}
