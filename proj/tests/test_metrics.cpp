#include <gtest/gtest.h>

#include <algorithm>

#include "surveyeval/metrics.hpp"
#include "surveyeval/mock.hpp"
#include "test_util.hpp"

using namespace surveyeval;
using surveyeval::testing::code_of;

namespace {

CoherenceSource scripted(std::map<std::vector<std::string>, std::vector<bool>> table) {
  return [table](const std::vector<std::string>& path, const std::vector<std::string>& children) {
    CoherenceVerdict v;
    auto it = table.find(path);
    v.coherent = it == table.end() ? std::vector<bool>(children.size(), true) : it->second;
    return v;
  };
}

}  // namespace

TEST(NodeWeight, Examples) {
  EXPECT_DOUBLE_EQ(node_weight(1, 1), 1.0);
  EXPECT_NEAR(node_weight(3, 3), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(node_weight(0, 3), 4.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(node_weight(2, 2), 0.5);
  EXPECT_EQ(code_of([] { node_weight(4, 3); }), ErrorCode::InvalidDepth);
  EXPECT_EQ(code_of([] { node_weight(-1, 3); }), ErrorCode::InvalidDepth);
  EXPECT_EQ(code_of([] { node_weight(0, 0); }), ErrorCode::InvalidDepth);
}

TEST(Hierarchy, FlatOutlineFourOfFive) {
  auto tree = parse_outline("# A\n# B\n# C\n# D\n# E\n");
  auto h = hierarchy_score(tree, scripted({{{}, {true, true, false, true, true}}}));
  ASSERT_EQ(h.parents.size(), 1u);
  EXPECT_DOUBLE_EQ(h.parents[0].weight, 2.0);
  EXPECT_NEAR(h.score, 80.0, 1e-9);
}

TEST(Hierarchy, SingleChainEighty) {
  auto tree = parse_outline("# A\n## A1\n## A2\n");
  auto h = hierarchy_score(tree, scripted({{{}, {true}}, {{"A"}, {false, true}}}));
  EXPECT_DOUBLE_EQ(h.parents[0].weight, 1.5);
  EXPECT_DOUBLE_EQ(h.parents[1].weight, 1.0);
  EXPECT_NEAR(h.score, 80.0, 1e-9);
}

TEST(Hierarchy, TwoLevelsHandComputed) {
  auto tree = parse_outline("# A\n## a1\n## a2\n# B\n## b1\n## b2\n");
  ASSERT_EQ(tree.max_depth, 2);
  auto h = hierarchy_score(tree, scripted({{{"A"}, {true, false}}, {{"B"}, {false, true}}}));
  ASSERT_EQ(h.parents.size(), 3u);
  EXPECT_DOUBLE_EQ(h.parents[0].weight, 1.5);
  EXPECT_DOUBLE_EQ(h.parents[1].weight, 1.0);
  // (1.5 * 1 + 1 * 0.5 + 1 * 0.5) / 3.5
  EXPECT_NEAR(h.score, 100.0 * 2.5 / 3.5, 1e-9);
  EXPECT_NEAR(hierarchy_from_records(h.parents), h.score, 1e-12);
}

TEST(Hierarchy, AllOrNothing) {
  auto tree = parse_outline("# A\n## a1\n### x\n### y\n## a2\n# B\n");
  EXPECT_NEAR(hierarchy_score(tree, scripted({})).score, 100.0, 1e-9);
  auto none = [](const std::vector<std::string>&, const std::vector<std::string>& children) {
    return CoherenceVerdict{std::vector<bool>(children.size(), false), false, ""};
  };
  EXPECT_NEAR(hierarchy_score(tree, none).score, 0.0, 1e-12);
}

TEST(Hierarchy, WrongVerdictCountCountsAsIncoherent) {
  auto tree = parse_outline("# A\n# B\n");
  auto h = hierarchy_score(tree, scripted({{{}, {true}}}));
  EXPECT_TRUE(h.parents[0].failed);
  EXPECT_NEAR(h.score, 0.0, 1e-12);
}

TEST(Hierarchy, NoParentsIsPrecondition) {
  OutlineTree empty;
  EXPECT_EQ(code_of([&] { hierarchy_score(empty, scripted({})); }), ErrorCode::PreconditionViolation);
}

TEST(Faithfulness, SevenOfTenInstances) {
  std::vector<SupportInstance> inst(10);
  for (int i = 0; i < 7; ++i) inst[i].supported = true;
  auto s = faithfulness_from_instances(inst);
  ASSERT_TRUE(s.has_value());
  EXPECT_NEAR(s->raw, 70.0, 1e-12);
  EXPECT_EQ(s->scale, Scale::percent);
  EXPECT_FALSE(faithfulness_from_instances({}).has_value());
}

TEST(Faithfulness, CountsInstancesNotUniqueReferences) {
  std::vector<ReferenceEntry> refs{{1, "r1", 1}, {2, "r2", 2}};
  std::vector<CitationSentence> sentences{{1, "s1 [1][2].", {1, 2}, {}}, {1, "s2 [1].", {1}, {}}};
  auto script = MockScript::standard();
  script.overrides[payload_digest({{"sentence", "s1 [1][2]."}, {"references", {"r1", "r2"}}})] =
      json::array({true, false});
  JudgeCache cache;
  MockJudgeProvider p(script);
  JudgeClient c("m", &p, cache);
  auto r = faithfulness_score(sentences, refs, c);
  ASSERT_EQ(r.instances.size(), 3u);
  EXPECT_NEAR(r.score->raw, 100.0 * 2.0 / 3.0, 1e-9);
  EXPECT_EQ(r.unique_cited, 2u);
  EXPECT_EQ(r.unique_supported, 1u);
}

TEST(Faithfulness, NoCitationsIsNull) {
  JudgeCache cache;
  MockJudgeProvider p(MockScript::standard());
  JudgeClient c("m", &p, cache);
  auto r = faithfulness_score({}, {{1, "r", 1}}, c);
  EXPECT_FALSE(r.score.has_value());
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Supportiveness, FourteenOfTwenty) {
  std::vector<RelevanceRecord> recs(20);
  for (int i = 0; i < 20; ++i) recs[i] = {i + 1, i < 14};
  EXPECT_NEAR(supportiveness_from_records(recs)->raw, 70.0, 1e-12);
  EXPECT_FALSE(supportiveness_from_records({}).has_value());

  JudgeCache cache;
  MockJudgeProvider p(MockScript::standard());
  JudgeClient c("m", &p, cache);
  auto r = supportiveness_score({}, "t", c);
  EXPECT_FALSE(r.score.has_value());
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Normalization, DisplayCells) {
  EXPECT_EQ(display_cell(93.57, Scale::percent), "4.68_{93.57}");
  EXPECT_EQ(display_cell(100.0, Scale::percent), "5.00_{100.00}");
  EXPECT_EQ(display_cell(0.0, Scale::percent), "0.00_{0.00}");
  EXPECT_EQ(display_cell(4.0, Scale::five_point), "4.00");
  EXPECT_DOUBLE_EQ(normalize_score(93.57, Scale::percent), 93.57 / 20.0);
  EXPECT_DOUBLE_EQ(normalize_score(3.5, Scale::five_point), 3.5);
}

TEST(MetricScore, RangeValidated) {
  EXPECT_NO_THROW(MetricScore::make("outline.quality", Scale::five_point, 1.0));
  EXPECT_THROW(MetricScore::make("outline.quality", Scale::five_point, 5.5), Error);
  EXPECT_THROW(MetricScore::make("content.faithfulness", Scale::percent, 100.5), Error);
}

TEST(Metrics, ColumnOrder) {
  std::vector<std::string> ids;
  for (const auto& m : all_metrics()) ids.emplace_back(m.id);
  EXPECT_EQ(ids, (std::vector<std::string>{"outline.quality", "outline.hierarchy", "content.coverage",
                                           "content.structure", "content.relevance", "content.language",
                                           "content.criticalness", "content.faithfulness", "reference.quality",
                                           "reference.supportiveness"}));
  EXPECT_EQ(metric_info("outline.hierarchy").scale, Scale::percent);
}
