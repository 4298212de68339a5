#include <gtest/gtest.h>

#include "surveyeval/digest.hpp"
#include "surveyeval/pipeline.hpp"
#include "surveyeval/text.hpp"
#include "test_util.hpp"

using namespace surveyeval;
using surveyeval::testing::code_of;
using surveyeval::testing::fresh_dir;
using surveyeval::testing::read_file;
using surveyeval::testing::write_file;
namespace fs = std::filesystem;

namespace {

const char* kGenerated = R"(# Retrieval

Retrievers find passages for the generator [1].

# Generation

Generators condition on retrieved passages [2]. Some systems train both parts.

# References

[1] P. Lewis et al. Retrieval-augmented generation. 2020.
[2] K. Guu et al. REALM. 2020.
)";

json entry(const std::string& id, const std::string& role, const std::string& path,
           std::optional<std::string> system = std::nullopt) {
  return {{"id", id},           {"title", "Survey " + id}, {"topic", "Retrieval-Augmented Generation"},
          {"topic_key", "rag"}, {"role", role},            {"system_name", system ? json(*system) : json(nullptr)},
          {"document_path", path}};
}

struct Workspace {
  fs::path dir;
  fs::path manifest;
  PipelineConfig config;

  explicit Workspace(const std::string& name, const std::string& generated_doc = "g.md") {
    dir = fresh_dir(name);
    write_file(dir / "h.md", read_file(fs::path(SURVEYEVAL_TEST_DATA) / "minimal.md"));
    write_file(dir / "g.md", kGenerated);
    write_file(dir / "manifest.json",
               json{{"corpus_id", name},
                    {"entries", {entry("h", "human", "h.md"), entry("g", "generated", generated_doc, "sys")}}}
                   .dump(2));
    manifest = dir / "manifest.json";
    config.out_dir = dir / "out";
    config.seed = 3;
  }

  void run_all() {
    cmd_decompose(manifest, config.out_dir);
    cmd_embed(manifest, config);
    cmd_evaluate(manifest, config);
  }
};

const json& survey(const json& report, const std::string& id) {
  for (const auto& s : report.at("surveys"))
    if (s.at("id") == id) return s;
  throw std::runtime_error("no survey " + id);
}

}  // namespace

TEST(Config, ParseAndDefaults) {
  auto c = PipelineConfig::parse("# comment\nseed = 9\ntop_n.reference = 10\nout_dir = results\n"
                                 "arena.judges = x, y\n",
                                 "/base");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.top_n.reference, 10);
  EXPECT_EQ(c.top_n.outline, 5);
  EXPECT_EQ(c.out_dir, fs::path("/base/results"));
  EXPECT_EQ(c.arena_judges, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(c.cache_file(), fs::path("/base/results/judge_cache.jsonl"));
}

TEST(Config, Rejections) {
  EXPECT_EQ(code_of([] { PipelineConfig::parse("colour = red\n"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { PipelineConfig::parse("judge.api_key = abc\n"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { PipelineConfig::parse("temperature = 3\n").validate(); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { PipelineConfig::parse("top_n.content = 0\n").validate(); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { PipelineConfig::parse("seed\n"); }), ErrorCode::InvalidConfig);
}

TEST(Config, DigestTracksResultSettingsOnly) {
  auto a = PipelineConfig::parse("seed = 1\nout_dir = a\nmax_in_flight = 2\n");
  auto b = PipelineConfig::parse("seed = 1\nout_dir = b\nmax_in_flight = 8\n");
  auto c = PipelineConfig::parse("seed = 2\n");
  EXPECT_EQ(a.digest(), b.digest());
  EXPECT_NE(a.digest(), c.digest());
}

TEST(Pipeline, IngestSummary) {
  Workspace w("ingest");
  auto s = cmd_ingest(w.manifest);
  EXPECT_EQ(s.surveys, 2u);
  EXPECT_EQ(s.pairs, 1u);
  EXPECT_EQ(s.text().substr(0, 20), "2 surveys, 1 pair (1");
}

TEST(Pipeline, DecomposeIsByteStable) {
  Workspace w("decompose");
  auto files = cmd_decompose(w.manifest, w.config.out_dir);
  ASSERT_EQ(files.size(), 2u);
  auto first = read_file(files[0]);
  cmd_decompose(w.manifest, w.config.out_dir);
  EXPECT_EQ(read_file(files[0]), first);
  auto record = record_from_json(json::parse(first));
  EXPECT_EQ(record.references.size(), 2u);
  EXPECT_EQ(record.citations.size(), 3u);
}

TEST(Pipeline, EmbedUnitCounts) {
  Workspace w("embed");
  cmd_decompose(w.manifest, w.config.out_dir);
  auto s = cmd_embed(w.manifest, w.config);
  // Human: outline paths "Overview > Dense Retrieval" and "Outlook", three
  // section bodies, two references. Generated: one outline path, two bodies,
  // two references.
  EXPECT_EQ(s.per_component[Component::outline], 2u + 1u);
  EXPECT_EQ(s.per_component[Component::content], 3u + 2u);
  EXPECT_EQ(s.per_component[Component::reference], 2u + 2u);
  EXPECT_EQ(s.units, 12u);
  auto index = load_index(w.config.index_file());
  EXPECT_EQ(index.size(), 12u);
  EXPECT_EQ(sha256_hex(read_file(w.config.index_file())), s.index_digest);
}

TEST(Pipeline, OrderErrors) {
  Workspace w("order");
  EXPECT_EQ(code_of([&] { cmd_embed(w.manifest, w.config); }), ErrorCode::PipelineOrder);
  cmd_decompose(w.manifest, w.config.out_dir);
  EXPECT_EQ(code_of([&] { cmd_evaluate(w.manifest, w.config); }), ErrorCode::PipelineOrder);
  EXPECT_EQ(code_of([&] { cmd_report(w.config.out_dir / "report.json", ReportFormat::json); }),
            ErrorCode::MissingFile);
}

TEST(Pipeline, OfflineMissIsProviderUnavailable) {
  Workspace w("offline");
  cmd_decompose(w.manifest, w.config.out_dir);
  cmd_embed(w.manifest, w.config);
  EXPECT_EQ(code_of([&] { cmd_evaluate(w.manifest, w.config, {true, false}); }), ErrorCode::ProviderUnavailable);
  cmd_evaluate(w.manifest, w.config);
  auto report = read_file(w.config.out_dir / "report.json");
  cmd_evaluate(w.manifest, w.config, {true, false});
  EXPECT_EQ(read_file(w.config.out_dir / "report.json"), report);
}

TEST(Pipeline, SelfPairBalancedEqualsVanilla) {
  Workspace w("selfpair", "h.md");
  w.run_all();
  auto report = json::parse(read_file(w.config.out_dir / "report.json"));
  const auto& g = survey(report, "g");
  for (const auto& [facet, s] : g.at("sigma").items()) EXPECT_EQ(s.at("sigma").get<double>(), 1.0) << facet;
  const auto& cfg = g.at("configurations");
  for (const auto& [id, v] : cfg.at("vanilla").items()) {
    EXPECT_EQ(cfg.at("balanced").at(id), v) << id;
    if (v.is_null()) continue;
    double qmax = metric_info(id).scale == Scale::percent ? 100.0 : 5.0;
    EXPECT_EQ(cfg.at("human_as_perfect").at(id).get<double>(), qmax) << id;
  }
  EXPECT_EQ(g.at("metrics"), survey(report, "h").at("metrics"));
}

TEST(Pipeline, MissingFacetGivesNulls) {
  Workspace w("nofacet");
  write_file(w.dir / "g.md", "# Only Section\n\nNo citations and no bibliography here.\n");
  w.run_all();
  auto report = json::parse(read_file(w.config.out_dir / "report.json"));
  const auto& g = survey(report, "g");
  EXPECT_FALSE(g.at("facets").at("reference").get<bool>());
  EXPECT_TRUE(g.at("metrics").at("reference.quality").is_null());
  EXPECT_TRUE(g.at("metrics").at("reference.supportiveness").is_null());
  EXPECT_TRUE(g.at("metrics").at("content.faithfulness").is_null());
  EXPECT_TRUE(g.at("sigma").at("reference").is_null());
  EXPECT_TRUE(g.at("configurations").at("balanced").at("reference.quality").is_null());
  EXPECT_FALSE(g.at("warnings").empty());
  EXPECT_FALSE(g.at("avg").at("vanilla").is_null());
}

TEST(Pipeline, ReportRendering) {
  Workspace w("report");
  w.run_all();
  auto path = w.config.out_dir / "report.json";
  EXPECT_EQ(cmd_report(path, ReportFormat::json), read_file(path));
  auto md = cmd_report(path, ReportFormat::markdown);
  EXPECT_EQ(md, read_file(w.config.out_dir / "report.md"));
  EXPECT_NE(md.find("## Systems"), std::string::npos);
  EXPECT_NE(md.find("| Human | vanilla | 1 |"), std::string::npos);
  EXPECT_NE(md.find("| sys | human_as_perfect | 1 |"), std::string::npos);

  auto report = json::parse(read_file(path));
  double h = survey(report, "h").at("metrics").at("outline.hierarchy").at("raw").get<double>();
  EXPECT_NE(md.find(display_cell(h, Scale::percent)), std::string::npos);
}

TEST(Pipeline, VerifyDetectsTampering) {
  Workspace w("verify");
  w.run_all();
  auto clean = verify_outputs(w.manifest, w.config);
  EXPECT_GT(clean.checked, 50u);
  EXPECT_TRUE(clean.mismatches.empty());

  auto path = w.config.out_dir / "report.json";
  auto report = json::parse(read_file(path));
  auto& g = report.at("surveys").at(1);
  g["configurations"]["vanilla"]["outline.quality"] = 1.0;
  g["sigma"]["content"]["sigma"] = 0.123;
  write_file(path, report.dump(2));
  auto dirty = verify_outputs(w.manifest, w.config);
  EXPECT_GE(dirty.mismatches.size(), 2u);
}

TEST(Pipeline, ArenaWritesResults) {
  Workspace w("arena");
  cmd_decompose(w.manifest, w.config.out_dir);
  auto outcome = cmd_arena(w.manifest, w.config, false);
  EXPECT_EQ(outcome.results.size(), 3u);
  for (const auto& r : outcome.results) EXPECT_DOUBLE_EQ(r.mean, 0.5);  // builtin judges always pick A
  EXPECT_TRUE(fs::exists(w.config.out_dir / "arena.json"));
  EXPECT_TRUE(fs::exists(w.config.out_dir / "arena.md"));
}
