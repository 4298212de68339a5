#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "surveyeval/corpus.hpp"
#include "surveyeval/mock.hpp"

using namespace surveyeval;

namespace {

json entry(std::string id, std::string key, std::optional<std::string> system, std::string path = "doc.md") {
  return json{{"id", id},
              {"title", "Title " + id},
              {"topic", ""},
              {"topic_key", key},
              {"role", system ? "generated" : "human"},
              {"system_name", system ? json(*system) : json(nullptr)},
              {"document_path", path}};
}

std::string manifest_text(json entries) { return json{{"corpus_id", "c"}, {"entries", entries}}.dump(); }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::PreconditionViolation;
}

}  // namespace

TEST(Manifest, MinimalPair) {
  auto m = parse_manifest(manifest_text({entry("h", "t1", std::nullopt), entry("g", "t1", "sys")}));
  EXPECT_EQ(m.entries.size(), 2u);
  auto pairs = pair_by_topic(m);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].generated->id, "g");
  EXPECT_EQ(pairs[0].human->id, "h");
}

TEST(Manifest, UnpairedGenerated) {
  EXPECT_EQ(code_of([] { parse_manifest(manifest_text({entry("h", "t1", std::nullopt), entry("g", "t2", "s")})); }),
            ErrorCode::UnpairedGeneratedEntry);
}

TEST(Manifest, DuplicateId) {
  EXPECT_EQ(code_of([] { parse_manifest(manifest_text({entry("h", "t1", std::nullopt), entry("h", "t2", std::nullopt)})); }),
            ErrorCode::DuplicateId);
}

TEST(Manifest, RoleInvariants) {
  auto bad = entry("g", "t1", "s");
  bad["system_name"] = nullptr;
  EXPECT_EQ(code_of([&] { parse_manifest(manifest_text({entry("h", "t1", std::nullopt), bad})); }),
            ErrorCode::MalformedManifest);
  auto human_with_system = entry("h", "t1", std::nullopt);
  human_with_system["system_name"] = "x";
  EXPECT_EQ(code_of([&] { parse_manifest(manifest_text({human_with_system})); }), ErrorCode::MalformedManifest);
}

TEST(Manifest, SyntaxErrorReportsLine) {
  try {
    parse_manifest("{\n  \"corpus_id\": \"c\",\n  \"entries\": [,]\n}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedManifest);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Manifest, FieldErrorNamesField) {
  auto e = entry("h", "t1", std::nullopt);
  e["role"] = "editor";
  try {
    parse_manifest(manifest_text({e}));
    FAIL();
  } catch (const Error& err) {
    EXPECT_NE(std::string(err.what()).find("entries[0].role"), std::string::npos) << err.what();
  }
}

TEST(Manifest, MissingFile) {
  EXPECT_EQ(code_of([] { load_manifest("/nonexistent/manifest.json"); }), ErrorCode::MissingFile);
}

TEST(Manifest, SyntheticEightyTopicsFiveSystems) {
  json entries = json::array();
  const int topics = 80;
  // System k covers every topic whose number is not divisible by k + 2.
  std::map<std::string, std::size_t> expected;
  for (int t = 0; t < topics; ++t) entries.push_back(entry("h" + std::to_string(t), "t" + std::to_string(t), std::nullopt));
  for (int k = 0; k < 5; ++k) {
    auto sys = "sys" + std::to_string(k);
    for (int t = 0; t < topics; ++t) {
      if (t % (k + 2) == 0) continue;
      entries.push_back(entry(sys + "-" + std::to_string(t), "t" + std::to_string(t), sys));
      expected[sys] += 1;
    }
  }
  auto m = parse_manifest(manifest_text(entries));
  std::map<std::string, std::size_t> got;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& p : pair_by_topic(m)) {
    got[*p.generated->system_name] += 1;
    EXPECT_EQ(p.generated->topic_key, p.human->topic_key);
    EXPECT_TRUE(seen.emplace(*p.generated->system_name, p.human->id).second) << "pairing is not injective";
  }
  EXPECT_EQ(got, expected);
  EXPECT_EQ(m.systems().size(), 5u);
}

TEST(Survey, MinimalDocumentCounts) {
  ManifestEntry e{"m", "Minimal", "RAG", "t", Role::human, std::nullopt, "minimal.md"};
  auto r = load_survey(e, SURVEYEVAL_TEST_DATA);
  EXPECT_EQ(r.outline.node_count(), 3u);
  EXPECT_EQ(r.sections.size(), 3u);
  EXPECT_EQ(r.references.size(), 2u);
  EXPECT_EQ(r.citations.size(), 3u);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Survey, EmptyFileIsOutlineError) {
  ManifestEntry e{"empty", "", "", "t", Role::human, std::nullopt, ""};
  try {
    decompose_document(e, "  \n\n");
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::DecompositionError);
    EXPECT_EQ(std::string(err.what()).find("DecompositionError: outline"), 0u) << err.what();
  }
}

TEST(Survey, NoReferencesSectionWarns) {
  ManifestEntry e{"x", "", "", "t", Role::human, std::nullopt, ""};
  auto r = decompose_document(e, "# A\ntext\n# B\nmore\n");
  EXPECT_TRUE(r.references.empty());
  EXPECT_FALSE(r.has_references());
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Survey, DuplicateReferenceKeyTaggedWithFacet) {
  ManifestEntry e{"x", "", "", "t", Role::human, std::nullopt, ""};
  try {
    decompose_document(e, "# A\ntext\n# References\n[1] a\n[1] b\n");
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::DecompositionError);
    EXPECT_NE(std::string(err.what()).find("references"), std::string::npos);
  }
}

TEST(Survey, DeterministicAndRoundTrips) {
  ManifestEntry e{"m", "Minimal", "RAG", "t", Role::human, std::nullopt, "minimal.md"};
  auto a = load_survey(e, SURVEYEVAL_TEST_DATA);
  auto b = load_survey(e, SURVEYEVAL_TEST_DATA);
  EXPECT_EQ(record_to_json(a).dump(), record_to_json(b).dump());
  auto back = record_from_json(record_to_json(a));
  EXPECT_EQ(record_to_json(back).dump(), record_to_json(a).dump());
  EXPECT_EQ(back.outline.root, a.outline.root);
}

TEST(TopicMining, MockPassthrough) {
  JudgeCache cache;
  auto script = MockScript::standard();
  std::string title = "Large Language Models Meet NL2Code: A Survey";
  script.overrides[payload_digest(json{{"title", title}})] =
      "Natural Language to Code Generation with Large Language Models";
  MockJudgeProvider provider(script);
  JudgeClient client("mock-judge", &provider, cache);
  EXPECT_EQ(mine_topic(title, client), "Natural Language to Code Generation with Large Language Models");

  MockScript fixed = MockScript::standard();
  fixed.defaults["topic_label"] = "X";
  MockJudgeProvider fixed_provider(fixed, "fixed");
  JudgeClient fixed_client("fixed", &fixed_provider, cache);
  EXPECT_EQ(mine_topic("anything", fixed_client), "X");

  EXPECT_EQ(mine_topic("Graph Neural Networks", client), "Graph Neural Networks");
}
