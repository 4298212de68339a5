#include "surveyeval/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "surveyeval/text.hpp"

namespace surveyeval {

namespace {

constexpr MetricInfo kMetrics[] = {
    {metric_id::outline_quality, Component::outline, Scale::five_point, "Outline"},
    {metric_id::hierarchy, Component::outline, Scale::percent, "*Hierarchy"},
    {metric_id::content_coverage, Component::content, Scale::five_point, "Coverage"},
    {metric_id::content_structure, Component::content, Scale::five_point, "Structure"},
    {metric_id::content_relevance, Component::content, Scale::five_point, "Relevance"},
    {metric_id::content_language, Component::content, Scale::five_point, "Language"},
    {metric_id::content_criticalness, Component::content, Scale::five_point, "Criticalness"},
    {metric_id::faithfulness, Component::content, Scale::percent, "*Faithfulness"},
    {metric_id::reference_quality, Component::reference, Scale::five_point, "Reference"},
    {metric_id::supportiveness, Component::reference, Scale::percent, "*Supportiveness"},
};

void collect_parents(const OutlineNode& node, std::vector<std::string>& path,
                     std::vector<std::pair<std::vector<std::string>, const OutlineNode*>>& out) {
  if (!node.children.empty()) out.emplace_back(path, &node);
  for (const auto& child : node.children) {
    path.push_back(child.title);
    collect_parents(child, path, out);
    path.pop_back();
  }
}

}  // namespace

std::string_view to_string(Scale s) { return s == Scale::percent ? "percent" : "five_point"; }

Scale scale_from_string(std::string_view s) {
  if (s == "percent") return Scale::percent;
  if (s == "five_point") return Scale::five_point;
  throw Error(ErrorCode::InvalidConfig, "unknown scale '" + std::string(s) + "'");
}

double scale_max(Scale s) { return s == Scale::percent ? 100.0 : 5.0; }

MetricScore MetricScore::make(std::string metric_id, Scale scale, double raw) {
  if (!(raw >= 0.0 && raw <= scale_max(scale))) {
    throw Error(ErrorCode::PreconditionViolation,
                metric_id + ": raw value " + std::to_string(raw) + " outside the " + std::string(to_string(scale)) +
                    " range");
  }
  return MetricScore{std::move(metric_id), scale, raw};
}

double MetricScore::normalized() const { return normalize_score(raw, scale); }

double normalize_score(double raw, Scale scale) { return scale == Scale::percent ? raw / 20.0 : raw; }

std::string display_cell(double raw, Scale scale) {
  if (scale == Scale::five_point) return text::fixed2(raw);
  return text::fixed2(normalize_score(raw, scale)) + "_{" + text::fixed2(raw) + "}";
}

std::span<const MetricInfo> all_metrics() { return kMetrics; }

const MetricInfo& metric_info(std::string_view id) {
  for (const auto& m : kMetrics) {
    if (m.id == id) return m;
  }
  throw Error(ErrorCode::PreconditionViolation, "unknown metric '" + std::string(id) + "'");
}

double node_weight(int depth, int max_depth) {
  if (max_depth < 1 || depth < 0 || depth > max_depth) {
    throw Error(ErrorCode::InvalidDepth,
                "depth " + std::to_string(depth) + " with maximum depth " + std::to_string(max_depth));
  }
  return static_cast<double>(max_depth - depth + 1) / static_cast<double>(max_depth);
}

double hierarchy_from_records(std::span<const ParentRecord> parents) {
  if (parents.empty()) throw Error(ErrorCode::PreconditionViolation, "hierarchy needs at least one parent node");
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& p : parents) {
    weighted += p.local_score * p.weight;
    total += p.weight;
  }
  return 100.0 * weighted / total;
}

HierarchyBreakdown hierarchy_score(const OutlineTree& tree, const CoherenceSource& judge) {
  std::vector<std::pair<std::vector<std::string>, const OutlineNode*>> nodes;
  std::vector<std::string> path;
  collect_parents(tree.root, path, nodes);
  if (nodes.empty()) throw Error(ErrorCode::PreconditionViolation, "outline has no parent nodes");

  HierarchyBreakdown out;
  out.max_depth = tree.max_depth;
  for (auto& [node_path, node] : nodes) {
    ParentRecord rec;
    rec.path = node_path;
    rec.depth = node->depth;
    rec.weight = node_weight(node->depth, tree.max_depth);
    for (const auto& c : node->children) rec.children.push_back(c.title);
    auto verdict = judge(rec.path, rec.children);
    if (verdict.coherent.size() != rec.children.size()) {
      verdict.coherent.assign(rec.children.size(), false);
      verdict.failed = true;
      verdict.diagnostic = "verdict count does not match child count";
    }
    rec.verdicts = verdict.coherent;
    rec.failed = verdict.failed;
    rec.diagnostic = verdict.diagnostic;
    auto coherent = std::count(rec.verdicts.begin(), rec.verdicts.end(), true);
    rec.local_score = static_cast<double>(coherent) / static_cast<double>(rec.verdicts.size());
    out.parents.push_back(std::move(rec));
  }
  out.score = hierarchy_from_records(out.parents);
  return out;
}

HierarchyBreakdown hierarchy_score(const OutlineTree& tree, std::string_view topic, JudgeClient& client) {
  return hierarchy_score(tree, [&](const std::vector<std::string>& path, const std::vector<std::string>& children) {
    return judge_children_coherence(topic, path, children, client);
  });
}

std::optional<MetricScore> faithfulness_from_instances(std::span<const SupportInstance> instances) {
  if (instances.empty()) return std::nullopt;
  auto supported = std::count_if(instances.begin(), instances.end(), [](const auto& i) { return i.supported; });
  return MetricScore::make(std::string(metric_id::faithfulness), Scale::percent,
                           100.0 * static_cast<double>(supported) / static_cast<double>(instances.size()));
}

FaithfulnessResult faithfulness_score(const std::vector<CitationSentence>& sentences,
                                      const std::vector<ReferenceEntry>& references, JudgeClient& client) {
  std::map<int, const ReferenceEntry*> by_key;
  for (const auto& r : references) by_key[r.key] = &r;

  FaithfulnessResult out;
  for (const auto& s : sentences) {
    if (s.is_dangling()) {
      out.warnings.push_back("section " + std::to_string(s.section_index) + ": dangling citation keys ignored");
    }
    if (s.cited_keys.empty()) continue;
    std::vector<std::string> texts;
    for (int k : s.cited_keys) texts.push_back(by_key.at(k)->text);
    auto support = judge_citation_support(s.sentence, texts, client);
    for (std::size_t i = 0; i < s.cited_keys.size(); ++i) {
      out.instances.push_back(SupportInstance{s.section_index, s.sentence, s.cited_keys[i], support[i]});
    }
  }
  std::set<int> cited, supported;
  for (const auto& inst : out.instances) {
    cited.insert(inst.key);
    if (inst.supported) supported.insert(inst.key);
  }
  out.unique_cited = cited.size();
  out.unique_supported = supported.size();
  out.score = faithfulness_from_instances(out.instances);
  if (!out.score) out.warnings.push_back("no citation instances; metric is null");
  return out;
}

std::optional<MetricScore> supportiveness_from_records(std::span<const RelevanceRecord> records) {
  if (records.empty()) return std::nullopt;
  auto relevant = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.relevant; });
  return MetricScore::make(std::string(metric_id::supportiveness), Scale::percent,
                           100.0 * static_cast<double>(relevant) / static_cast<double>(records.size()));
}

SupportivenessResult supportiveness_score(const std::vector<ReferenceEntry>& references, std::string_view topic,
                                          JudgeClient& client) {
  SupportivenessResult out;
  for (const auto& r : references) {
    out.records.push_back(RelevanceRecord{r.key, judge_reference_relevance(topic, r.text, client)});
  }
  out.score = supportiveness_from_records(out.records);
  if (!out.score) out.warnings.push_back("empty bibliography; metric is null");
  return out;
}

}  // namespace surveyeval
