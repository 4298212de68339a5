// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "surveyeval/mock.hpp"
#include "surveyeval/pipeline.hpp"
#include "surveyeval/text.hpp"

using namespace surveyeval;
namespace fs = std::filesystem;

namespace {

// Tolerances and time budgets.
constexpr double kHierarchyTol = 1e-9;
constexpr double kSigmaTol = 1e-12;
constexpr double kCoinWinRateTol = 0.1;
constexpr double kBudget1 = 1.0;
constexpr double kBudget2 = 10.0;
constexpr double kBudget3 = 10.0;
constexpr double kBudget4 = 5.0;
constexpr double kBudget5 = 5.0;
constexpr double kBudget6 = 10.0;
constexpr double kBudget7 = 10.0;
constexpr double kBudget8 = 60.0;
constexpr double kBudget9 = 30.0;

const fs::path kToy = SURVEYEVAL_TOY_CORPUS;

// Collects violations; a criterion passes when none were recorded.
struct Check {
  std::vector<std::string> failures;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 20) failures.push_back(what);
    if (!ok && failures.size() == 20) failures.push_back("...");
  }
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "surveyeval_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PipelineConfig toy_config(const fs::path& out) {
  auto c = PipelineConfig::load(kToy / "toy.conf");
  c.out_dir = out;
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// 1. Display normalization of fixed raw/normalized pairs.

void normalization(Check& c) {
  const std::pair<double, std::string> pairs[] = {
      {93.57, "4.68"}, {69.75, "3.49"}, {97.50, "4.88"}, {81.28, "4.06"}, {44.59, "2.23"}};
  for (const auto& [raw, shown] : pairs) {
    auto cell = display_cell(raw, Scale::percent);
    auto expected = shown + "_{" + text::fixed2(raw) + "}";
    c.expect(cell == expected, num(raw) + " -> " + cell + ", expected " + expected);
    c.expect(normalize_score(raw, Scale::percent) == raw / 20.0, "normalization rounds before display");
  }
  c.detail = "5 pairs";
}

// ---------------------------------------------------------------------------
// 2. Hierarchy oracle and properties.

std::string random_outline(std::mt19937_64& rng) {
  std::string md;
  int prev = 0;
  int n = 2 + static_cast<int>(rng() % 14);
  for (int i = 0; i < n; ++i) {
    int depth = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::min(prev + 1, 3)));
    md += std::string(static_cast<std::size_t>(depth), '#') + " Node " + std::to_string(i) + "\n\n";
    prev = depth;
  }
  return md;
}

using VerdictTable = std::map<std::vector<std::string>, std::vector<bool>>;

CoherenceSource from_table(const VerdictTable& table) {
  return [&table](const std::vector<std::string>& path, const std::vector<std::string>&) {
    return CoherenceVerdict{table.at(path), false, ""};
  };
}

void hierarchy(Check& c) {
  // Root with one child A, A with children A1 and A2; A1 incoherent.
  auto tree = parse_outline("# A\n\n## A1\n\n## A2\n");
  VerdictTable table{{{}, {true}}, {{"A"}, {false, true}}};
  auto h = hierarchy_score(tree, from_table(table));
  c.expect(std::abs(h.score - 80.0) <= kHierarchyTol, "worked tree H = " + num(h.score));

  std::mt19937_64 rng(2024);
  int flips = 0;
  for (int t = 0; t < 200; ++t) {
    auto tr = parse_outline(random_outline(rng));
    VerdictTable vt;
    auto base = hierarchy_score(tr, [&](const std::vector<std::string>& path, const std::vector<std::string>& ch) {
      std::vector<bool> v;
      for (std::size_t i = 0; i < ch.size(); ++i) v.push_back(rng() % 2 == 0);
      vt[path] = v;
      return CoherenceVerdict{v, false, ""};
    });
    c.expect(base.score >= 0.0 && base.score <= 100.0, "tree " + std::to_string(t) + " H out of range");

    // Flip one false verdict to true.
    for (auto& [path, v] : vt) {
      auto it = std::find(v.begin(), v.end(), false);
      if (it == v.end()) continue;
      *it = true;
      auto flipped = hierarchy_score(tr, from_table(vt));
      c.expect(flipped.score >= base.score - 1e-12, "tree " + std::to_string(t) + " flip decreased H");
      *it = false;
      ++flips;
      break;
    }

    // Scaling every weight leaves H unchanged.
    for (double k : {0.25, 3.0, 1000.0}) {
      auto scaled = base.parents;
      for (auto& p : scaled) p.weight *= k;
      c.expect(std::abs(hierarchy_from_records(scaled) - base.score) <= kHierarchyTol,
               "tree " + std::to_string(t) + " not scale invariant");
    }
  }
  c.detail = "H=" + text::fixed2(h.score) + ", 200 trees, " + std::to_string(flips) + " flips";
}

// ---------------------------------------------------------------------------
// 3. Similarity factor against brute force.

double brute_sigma(const std::vector<std::vector<double>>& gen, const std::vector<std::vector<double>>& hum, int n) {
  std::vector<double> best;
  for (const auto& g : gen) {
    double top = -2.0;
    for (const auto& h : hum) {
      double dot = 0, gg = 0, hh = 0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        dot += g[i] * h[i];
        gg += g[i] * g[i];
        hh += h[i] * h[i];
      }
      top = std::max(top, dot / std::sqrt(gg * hh));
    }
    best.push_back(std::clamp(top, 0.0, 1.0));
  }
  std::sort(best.rbegin(), best.rend());
  auto k = std::min<std::size_t>(static_cast<std::size_t>(n), best.size());
  double sum = 0;
  for (std::size_t i = 0; i < k; ++i) sum += best[i];
  return sum / static_cast<double>(k);
}

void similarity(Check& c) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  int clamped = 0, short_sets = 0;
  for (int t = 0; t < 100; ++t) {
    int dim = 4 + static_cast<int>(rng() % 29);
    int ng = 1 + static_cast<int>(rng() % 12);
    int nh = 1 + static_cast<int>(rng() % 12);
    int top_n = 1 + static_cast<int>(rng() % 8);
    auto make = [&](int count, const std::string& id, std::vector<std::vector<double>>& raw) {
      std::vector<EmbeddingUnit> units;
      for (int i = 0; i < count; ++i) {
        std::vector<double> v(static_cast<std::size_t>(dim));
        for (auto& x : v) x = normal(rng);
        raw.push_back(v);
        Vector e = Eigen::Map<Vector>(v.data(), dim);
        units.push_back({id, Component::content, i + 1, "", normalized_or_throw(e)});
      }
      return units;
    };
    std::vector<std::vector<double>> rg, rh;
    auto g = make(ng, "g", rg);
    auto h = make(nh, "h", rh);
    std::vector<const EmbeddingUnit*> gp, hp;
    for (const auto& u : g) gp.push_back(&u);
    for (const auto& u : h) hp.push_back(&u);
    auto f = similarity_factor(gp, hp, Component::content, top_n);
    double expected = brute_sigma(rg, rh, top_n);
    c.expect(std::abs(f.sigma - expected) <= kSigmaTol,
             "set " + std::to_string(t) + ": " + num(f.sigma) + " vs " + num(expected));
    for (const auto& m : f.per_unit_matches) clamped += m.cosine < 0 ? 1 : 0;
    short_sets += ng < top_n ? 1 : 0;
  }
  c.expect(clamped > 0, "no negative best match exercised clamping");
  c.expect(short_sets > 0, "no set smaller than N");
  c.detail = "100 sets, " + std::to_string(clamped) + " clamped matches, " + std::to_string(short_sets) +
             " sets below N";
}

// ---------------------------------------------------------------------------
// 4 and 5. Fusion fixed points and self-evaluation on the toy corpus.

// Toy corpus plus a "self" system whose surveys are the human documents.
fs::path self_manifest(const fs::path& dir) {
  auto m = load_manifest(kToy / "manifest.json");
  json j = manifest_to_json(m);
  for (auto& e : j.at("entries")) e["document_path"] = (kToy / e.at("document_path").get<std::string>()).string();
  json extra = json::array();
  for (const auto& e : m.entries) {
    if (e.role != Role::human) continue;
    extra.push_back({{"id", "self-" + e.topic_key},
                     {"title", e.title},
                     {"topic", e.topic},
                     {"topic_key", e.topic_key},
                     {"role", "generated"},
                     {"system_name", "self"},
                     {"document_path", (kToy / e.document_path).string()}});
  }
  for (auto& e : extra) j["entries"].push_back(e);
  auto path = dir / "manifest.json";
  text::write_file(path, j.dump(2) + "\n");
  return path;
}

json run_self_corpus(const std::string& name) {
  auto dir = scratch(name);
  auto manifest = self_manifest(dir);
  auto config = toy_config(dir / "out");
  cmd_decompose(manifest, config.out_dir);
  cmd_embed(manifest, config);
  return cmd_evaluate(manifest, config).report;
}

const json& survey_of(const json& report, const std::string& id) {
  for (const auto& s : report.at("surveys"))
    if (s.at("id") == id) return s;
  throw Error(ErrorCode::PreconditionViolation, "no survey " + id);
}

void fusion_fixed_points(Check& c) {
  int checked = 0;
  for (const auto& info : all_metrics()) {
    double qmax = scale_max(info.scale);
    for (double frac : {0.0, 0.2, 0.5, 0.75, 1.0}) {
      double q = frac * qmax;
      if (info.scale == Scale::five_point && q < 1.0) continue;
      auto s = MetricScore::make(std::string(info.id), info.scale, q);
      c.expect(*fuse_human_as_perfect(s, 1.0).value == qmax, std::string(info.id) + " HP(1) != max");
      c.expect(*fuse_human_as_perfect(s, 0.0).value == s.raw, std::string(info.id) + " HP(0) != vanilla");
      ++checked;
    }
  }

  auto report = run_self_corpus("fixed_points");
  int metrics = 0;
  for (const auto& s : report.at("surveys")) {
    if (s.at("system") != "self") continue;
    const auto& human = survey_of(report, s.at("paired_human").get<std::string>());
    for (const auto& info : all_metrics()) {
      std::string id(info.id);
      const auto& hv = human.at("metrics").at(id);
      const auto& balanced = s.at("configurations").at("balanced").at(id);
      if (hv.is_null()) {
        c.expect(balanced.is_null(), s.at("id").get<std::string>() + " " + id + " should be null");
        continue;
      }
      c.expect(!balanced.is_null() && balanced.get<double>() == hv.at("raw").get<double>(),
               s.at("id").get<std::string>() + " " + id + ": balanced " + balanced.dump() + " vs human " +
                   hv.at("raw").dump());
      ++metrics;
    }
    // Balanced with the human against itself is the identity for any sigma.
    ScoreMap hm;
    for (const auto& info : all_metrics()) {
      const auto& hv = human.at("metrics").at(std::string(info.id));
      if (!hv.is_null()) hm[std::string(info.id)] = MetricScore::make(std::string(info.id), info.scale, hv.at("raw"));
    }
    for (double sigma : {0.0, 0.17, 0.5, 0.83, 1.0}) {
      SigmaMap sm{{Component::outline, sigma}, {Component::content, sigma}, {Component::reference, sigma}};
      for (const auto& f : evaluate_configurations(hm, &hm, sm)) {
        if (f.config != Configuration::balanced || !f.value) continue;
        c.expect(*f.value == hm.at(f.metric_id)->raw, f.metric_id + " balanced(self) moved at sigma " + num(sigma));
      }
    }
  }
  c.expect(metrics > 0, "no toy metrics compared");
  c.detail = std::to_string(checked) + " scalar cases, " + std::to_string(metrics) + " toy metrics";
}

void self_identity(Check& c) {
  auto report = run_self_corpus("self_identity");
  int n = 0;
  for (const auto& s : report.at("surveys")) {
    if (s.at("system") != "self") continue;
    for (auto comp : kComponents) {
      const auto& f = s.at("sigma").at(std::string(to_string(comp)));
      c.expect(!f.is_null() && f.at("sigma").get<double>() == 1.0,
               s.at("id").get<std::string>() + " sigma." + std::string(to_string(comp)) + " = " + f.dump());
      ++n;
    }
  }
  c.expect(n == 9, "expected 9 sigmas, got " + std::to_string(n));
  c.detail = std::to_string(n) + " sigmas exactly 1";
}

// ---------------------------------------------------------------------------
// 6. Proportion metrics against recounts.

void proportions(Check& c) {
  auto m = load_manifest(kToy / "manifest.json");
  std::vector<SurveyRecord> records;
  for (const auto& e : m.entries) records.push_back(load_survey(e, m.base_dir));

  std::mt19937_64 rng(6);
  std::size_t instances = 0, refs = 0;
  for (int run = 0; run < 50; ++run) {
    auto script = MockScript::standard(rng());
    double ps = static_cast<double>(rng() % 101) / 100.0;
    double pr = static_cast<double>(rng() % 101) / 100.0;
    script.defaults["citation_support"] = {{"mode", "coin"}, {"p", ps}};
    script.defaults["reference_relevance"] = {{"mode", "coin"}, {"p", pr}};
    JudgeCache cache;
    MockJudgeProvider provider(script);
    JudgeClient client("mock-judge", &provider, cache);
    const auto& r = records[static_cast<std::size_t>(run) % records.size()];
    auto topic = m.human_for(r.entry.topic_key)->topic;
    auto ev = evaluate_survey(r, topic, client);
    auto tag = "run " + std::to_string(run) + " " + r.entry.id;

    // Brute force: ask the script directly for every cited sentence and
    // bibliography entry, then count.
    std::map<int, std::string> by_key;
    for (const auto& ref : r.references) by_key[ref.key] = ref.text;
    std::size_t total = 0, supported = 0;
    for (const auto& s : r.citations) {
      if (s.cited_keys.empty()) continue;
      json texts = json::array();
      for (int k : s.cited_keys) texts.push_back(by_key.at(k));
      JudgeTask task{TaskKind::citation_support, {{"sentence", s.sentence}, {"references", texts}}, "", kDefaultTemperature};
      auto v = mock_judge(task, script);
      total += v.flags.size();
      supported += static_cast<std::size_t>(std::count(v.flags.begin(), v.flags.end(), true));
    }
    std::size_t relevant = 0;
    for (const auto& ref : r.references) {
      JudgeTask task{TaskKind::reference_relevance, {{"topic", topic}, {"reference", ref.text}}, "", kDefaultTemperature};
      relevant += mock_judge(task, script).flags.front();
    }
    instances += total;
    refs += r.references.size();

    const auto& f = ev.metrics.at(std::string(metric_id::faithfulness));
    if (total == 0) {
      c.expect(!f.has_value(), tag + " faithfulness should be null");
    } else {
      double expected = 100.0 * static_cast<double>(supported) / static_cast<double>(total);
      c.expect(f && f->raw == expected, tag + " faithfulness " + (f ? num(f->raw) : "null") + " vs " + num(expected));
    }
    const auto& sp = ev.metrics.at(std::string(metric_id::supportiveness));
    if (r.references.empty()) {
      c.expect(!sp.has_value(), tag + " supportiveness should be null");
    } else {
      double expected = 100.0 * static_cast<double>(relevant) / static_cast<double>(r.references.size());
      c.expect(sp && sp->raw == expected,
               tag + " supportiveness " + (sp ? num(sp->raw) : "null") + " vs " + num(expected));
    }

    // The log alone reproduces both values.
    auto again = metrics_from_log(ev.log);
    c.expect(again.at(std::string(metric_id::faithfulness)) == f, tag + " log recount differs (faithfulness)");
    c.expect(again.at(std::string(metric_id::supportiveness)) == sp, tag + " log recount differs (supportiveness)");
  }
  c.detail = "50 runs, " + std::to_string(instances) + " instances, " + std::to_string(refs) + " references";
}

// ---------------------------------------------------------------------------
// 7. Arena symmetry.

void arena_symmetry(Check& c) {
  std::vector<ArenaPair> pairs;
  for (int i = 0; i < 100; ++i) {
    pairs.push_back({"topic " + std::to_string(i % 7), "generated survey text " + std::to_string(i),
                     "human survey text " + std::to_string(i)});
  }
  auto run = [&](const json& spec, std::uint64_t seed) {
    auto script = MockScript::standard(seed);
    script.defaults["pairwise"] = spec;
    JudgeCache cache;
    MockJudgeProvider provider(script);
    JudgeClient client("j", &provider, cache);
    return run_arena("sys", pairs, Component::content, {{"j", &client}});
  };
  for (const char* spec : {"first", "second"}) {
    auto r = run(spec, 0);
    c.expect(r.mean == 0.5, std::string(spec) + "-position judge win rate " + num(r.mean));
  }
  auto coin = run("coin", 17);
  c.expect(std::abs(coin.mean - 0.5) <= kCoinWinRateTol, "coin judge win rate " + num(coin.mean));
  c.detail = "coin win rate " + text::fixed2(coin.mean);
}

// ---------------------------------------------------------------------------
// 8. End-to-end determinism.

std::map<std::string, std::string> run_pipeline(const fs::path& dir, VerifyResult& verify) {
  auto config = toy_config(dir / "out");
  auto manifest = kToy / "manifest.json";
  cmd_decompose(manifest, config.out_dir);
  cmd_embed(manifest, config);
  auto outcome = cmd_evaluate(manifest, config, EvaluateOptions{false, true});
  verify = *outcome.verification;
  cmd_arena(manifest, config, false);

  std::map<std::string, std::string> files;
  for (const auto& p : fs::recursive_directory_iterator(config.out_dir)) {
    if (!p.is_regular_file()) continue;
    auto rel = fs::relative(p.path(), config.out_dir).string();
    if (rel == "judge_cache.jsonl") continue;  // timestamps; covered by cache_digest in the report
    files[rel] = text::read_file(p.path());
  }
  return files;
}

void determinism(Check& c) {
  VerifyResult v1, v2;
  auto a = run_pipeline(scratch("run_a"), v1);
  auto b = run_pipeline(scratch("run_b"), v2);
  c.expect(a.count("report.json") == 1 && a.count("report.md") == 1, "reports missing");
  c.expect(a.size() == b.size(), "different file sets");
  for (const auto& [name, bytes] : a) {
    auto it = b.find(name);
    c.expect(it != b.end() && it->second == bytes, name + " differs between runs");
  }
  c.expect(v1.mismatches.empty() && v2.mismatches.empty(),
           "verify mismatches: " + std::to_string(v1.mismatches.size() + v2.mismatches.size()));
  c.expect(v1.checked > 0, "verify checked nothing");
  c.detail = std::to_string(a.size()) + " files identical, verify " + std::to_string(v1.checked) +
             " values, " + std::to_string(v1.mismatches.size()) + " mismatches";
}

// ---------------------------------------------------------------------------
// 9. Decomposition audit.

std::string fuzz_document(std::mt19937_64& rng, int doc) {
  static const char* words[] = {"retrieval", "graph", "model", "agents", "benchmark", "e.g. tables", "et al. showed",
                                "i.e. scores", "data", "training", "Fig. 2", "v1.5", "results"};
  const int refs = static_cast<int>(rng() % 9);
  auto sentence = [&]() {
    std::string s = "Sentence";
    int n = 3 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) s += std::string(" ") + words[rng() % std::size(words)];
    switch (rng() % 5) {
      case 0: s += " [" + std::to_string(1 + rng() % 12) + "]"; break;
      case 1: s += " [" + std::to_string(1 + rng() % 6) + ", " + std::to_string(1 + rng() % 12) + "]"; break;
      case 2: s += " [" + std::to_string(1 + rng() % 3) + "-" + std::to_string(4 + rng() % 3) + "]"; break;
      default: break;
    }
    const char* ends[] = {".", "?", "!", "."};
    return s + ends[rng() % 4];
  };
  std::string md;
  int prev = 0;
  int headings = 1 + static_cast<int>(rng() % 12);
  for (int h = 0; h < headings; ++h) {
    int depth = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::min(prev + 1, 4)));
    md += std::string(static_cast<std::size_t>(depth), '#') + " Heading " + std::to_string(doc) + "." +
          std::to_string(h) + "\n\n";
    prev = std::min(depth, 3);
    int paragraphs = static_cast<int>(rng() % 3);
    for (int p = 0; p < paragraphs; ++p) {
      int n = 1 + static_cast<int>(rng() % 5);
      for (int s = 0; s < n; ++s) md += sentence() + (rng() % 3 == 0 ? "\n" : " ");
      md += "\n\n";
    }
  }
  if (refs > 0) {
    md += "# References\n\n";
    for (int k = 1; k <= refs; ++k) md += "[" + std::to_string(k) + "] Author " + std::to_string(k) + ". Title.\n";
  }
  return md;
}

void collect_leaves(const OutlineNode& n, std::vector<std::string>& path,
                    std::multiset<std::vector<std::string>>& leaves) {
  for (const auto& child : n.children) {
    path.push_back(child.title);
    if (child.is_leaf()) leaves.insert(path);
    collect_leaves(child, path, leaves);
    path.pop_back();
  }
}

std::string strip_space(std::string_view s) {
  std::string out;
  for (char ch : s) {
    if (!std::isspace(static_cast<unsigned char>(ch))) out += ch;
  }
  return out;
}

void audit_document(Check& c, const std::string& name, const std::string& doc, std::size_t& leaves_seen,
                    std::size_t& citations_seen, std::size_t& sentences_seen) {
  auto tree = parse_outline(doc);
  auto docs = split_outline_paths(tree);

  std::multiset<std::vector<std::string>> leaves;
  std::vector<std::string> path;
  collect_leaves(tree.root, path, leaves);
  std::multiset<std::vector<std::string>> covered;
  for (const auto& d : docs) {
    for (const auto& leaf : d.leaf_titles) {
      auto p = d.parent_path;
      p.push_back(leaf);
      covered.insert(p);
    }
  }
  c.expect(covered == leaves, name + ": leaf coverage (" + std::to_string(covered.size()) + " covered, " +
                                  std::to_string(leaves.size()) + " leaves)");
  for (const auto& l : leaves) c.expect(leaves.count(l) == 1, name + ": duplicate leaf path");
  leaves_seen += leaves.size();

  auto sections = parse_sections(doc, tree);
  auto refs = parse_references(doc);
  std::set<int> keys;
  for (const auto& r : refs) keys.insert(r.key);

  std::size_t marked = 0;
  for (const auto& s : sections) {
    auto sentences = segment_sentences(s.body);
    std::string joined;
    for (const auto& x : sentences) {
      c.expect(!text::trim(x).empty(), name + ": empty sentence");
      joined += x;
      marked += citation_markers(x).empty() ? 0 : 1;
    }
    c.expect(strip_space(joined) == strip_space(s.body), name + ": segmentation drops text in section " +
                                                             std::to_string(s.index));
    sentences_seen += sentences.size();
  }

  auto citations = extract_citation_sentences(sections, refs);
  c.expect(citations.size() == marked, name + ": " + std::to_string(citations.size()) + " citation sentences, " +
                                           std::to_string(marked) + " marked sentences");
  for (const auto& cs : citations) {
    std::set<int> markers;
    for (int k : citation_markers(cs.sentence)) markers.insert(k);
    std::set<int> resolved(cs.cited_keys.begin(), cs.cited_keys.end());
    std::set<int> dangling(cs.dangling_keys.begin(), cs.dangling_keys.end());
    for (int k : resolved) c.expect(keys.count(k) == 1, name + ": cited key " + std::to_string(k) + " unresolved");
    for (int k : dangling) c.expect(keys.count(k) == 0, name + ": dangling key " + std::to_string(k) + " exists");
    std::set<int> all = resolved;
    all.insert(dangling.begin(), dangling.end());
    c.expect(all == markers, name + ": keys do not partition the markers of '" + cs.sentence + "'");
    citations_seen += markers.size();
  }
}

void decomposition_audit(Check& c) {
  std::size_t leaves = 0, citations = 0, sentences = 0;
  auto m = load_manifest(kToy / "manifest.json");
  for (const auto& e : m.entries) {
    audit_document(c, e.id, text::read_file(m.base_dir / e.document_path), leaves, citations, sentences);
  }
  std::mt19937_64 rng(909);
  for (int i = 0; i < 20; ++i) {
    audit_document(c, "fuzz-" + std::to_string(i), fuzz_document(rng, i), leaves, citations, sentences);
  }
  c.detail = std::to_string(m.entries.size()) + " toy + 20 fuzzed docs, " + std::to_string(leaves) + " leaves, " +
             std::to_string(sentences) + " sentences, " + std::to_string(citations) + " citation keys";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<void(Check&)> run;
  };
  const Criterion criteria[] = {
      {1, "display normalization", kBudget1, normalization},
      {2, "hierarchy oracle and properties", kBudget2, hierarchy},
      {3, "similarity factor vs brute force", kBudget3, similarity},
      {4, "fusion fixed points", kBudget4, fusion_fixed_points},
      {5, "self-evaluation identity", kBudget5, self_identity},
      {6, "proportion oracles", kBudget6, proportions},
      {7, "arena symmetry", kBudget7, arena_symmetry},
      {8, "end-to-end determinism", kBudget8, determinism},
      {9, "decomposition audit", kBudget9, decomposition_audit},
  };

  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    auto start = std::chrono::steady_clock::now();
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > cr.budget_s) {
      check.failures.push_back("took " + text::fixed2(secs) + " s, budget " + text::fixed2(cr.budget_s) + " s");
    }
    bool ok = check.failures.empty();
    failed += ok ? 0 : 1;
    std::printf("%s %d %s (%.3f s) %s\n", ok ? "PASS" : "FAIL", cr.id, cr.name, secs, check.detail.c_str());
    for (const auto& f : check.failures) std::printf("    %s\n", f.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
