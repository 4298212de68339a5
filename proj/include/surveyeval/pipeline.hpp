#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "surveyeval/arena.hpp"
#include "surveyeval/config.hpp"
#include "surveyeval/corpus.hpp"
#include "surveyeval/metrics.hpp"
#include "surveyeval/mock.hpp"
#include "surveyeval/simweight.hpp"

namespace surveyeval {

// Output layout under the pipeline's out directory.
namespace layout {
std::filesystem::path decomposition_file(const std::filesystem::path& out, std::string_view survey_id);
std::filesystem::path verdict_file(const std::filesystem::path& out, std::string_view survey_id);
std::filesystem::path report_json(const std::filesystem::path& out);
std::filesystem::path report_markdown(const std::filesystem::path& out);
std::filesystem::path arena_json(const std::filesystem::path& out);
std::filesystem::path arena_markdown(const std::filesystem::path& out);
std::filesystem::path templates_json(const std::filesystem::path& out);
}  // namespace layout

// Providers, cache and templates for one pipeline run. The primary judge is
// `judge.model`; arena judges share the same cache.
class JudgeRuntime {
 public:
  JudgeRuntime(const PipelineConfig& config, bool offline);
  ~JudgeRuntime();

  JudgeClient& primary() { return *clients_.at(primary_id_); }
  JudgeClient& judge(const std::string& model_id);
  JudgeCache& cache() { return *cache_; }
  TemplateRegistry& templates() { return templates_; }

 private:
  std::string primary_id_;
  TemplateRegistry templates_;
  std::unique_ptr<JudgeCache> cache_;
  std::vector<std::unique_ptr<JudgeProvider>> providers_;
  std::map<std::string, std::unique_ptr<JudgeClient>> clients_;
};

MockScript load_mock_script(const PipelineConfig& config);
std::unique_ptr<EmbeddingProvider> make_embedding_provider(const PipelineConfig& config);

// Text of one facet as shown to judges: the outline listing, the section
// text with headings, or the bibliography lines. Empty when the facet is absent.
std::string facet_text(const SurveyRecord& record, Component component);

// Embedding units of a survey, one per outline-path document, non-empty
// section and reference.
struct UnitText {
  Component component;
  int index;
  std::string text;
};
std::vector<UnitText> embedding_units(const SurveyRecord& record);

// ---------------------------------------------------------------------------
// Per-survey evaluation

struct SurveyEvaluation {
  ScoreMap metrics;  // every metric id present; null when not computable
  json log;          // verdict log, enough to recompute `metrics`
  Diagnostics warnings;
};

SurveyEvaluation evaluate_survey(const SurveyRecord& record, const std::string& topic, JudgeClient& client);

// Recount of every metric from a verdict log.
ScoreMap metrics_from_log(const json& log);

struct SurveyResult {
  ManifestEntry entry;
  std::string topic;
  bool facets[3] = {false, false, false};
  ScoreMap metrics;
  std::map<Component, std::optional<SimilarityFactor>> sigma;  // generated surveys only
  Diagnostics warnings;
};

// Similarity factors of a generated survey against its paired human survey.
std::map<Component, std::optional<SimilarityFactor>> survey_sigmas(const VectorIndex& index,
                                                                   std::string_view generated_id,
                                                                   std::string_view human_id, const TopN& top_n,
                                                                   Diagnostics* warnings);

struct ReportHeader {
  std::string corpus_id;
  std::string config_digest;
  std::string cache_digest;
  std::string index_digest;
  json settings;
};

json assemble_report(const ReportHeader& header, const std::vector<SurveyResult>& results);
std::string render_report_markdown(const json& report);

// ---------------------------------------------------------------------------
// Subcommands

struct IngestSummary {
  std::size_t surveys = 0;
  std::size_t humans = 0;
  std::size_t generated = 0;
  std::size_t pairs = 0;
  std::map<std::string, std::size_t> pairs_per_system;

  std::string text() const;
};

IngestSummary cmd_ingest(const std::filesystem::path& manifest_path);

// Fills empty topic labels (human entries from their titles, generated
// entries from their human pair) and rewrites the manifest file.
std::size_t cmd_mine_topics(const std::filesystem::path& manifest_path, const PipelineConfig& config, bool offline);

std::vector<std::filesystem::path> cmd_decompose(const std::filesystem::path& manifest_path,
                                                 const std::filesystem::path& out_dir);

struct EmbedSummary {
  std::size_t units = 0;
  std::map<Component, std::size_t> per_component;
  std::string index_digest;
};

EmbedSummary cmd_embed(const std::filesystem::path& manifest_path, const PipelineConfig& config);

struct EvaluateOptions {
  bool offline = false;
  bool verify = false;
};

struct VerifyResult {
  std::size_t checked = 0;
  std::vector<std::string> mismatches;
};

struct EvaluateOutcome {
  json report;
  std::optional<VerifyResult> verification;
};

EvaluateOutcome cmd_evaluate(const std::filesystem::path& manifest_path, const PipelineConfig& config,
                             const EvaluateOptions& options = {});

// Recomputes every stored metric, sigma and fused value of report.json from
// the verdict logs and the vector index.
VerifyResult verify_outputs(const std::filesystem::path& manifest_path, const PipelineConfig& config);

struct ArenaOutcome {
  std::vector<ArenaResult> results;
  json report;
};

ArenaOutcome cmd_arena(const std::filesystem::path& manifest_path, const PipelineConfig& config, bool offline);

enum class ReportFormat { json, markdown };

std::string cmd_report(const std::filesystem::path& report_path, ReportFormat format);

// Asks the judge for revised rubric criteria for the outline, content and
// reference quality tasks and writes the extended template set to
// <out>/templates.json. Returns the new template ids.
std::vector<std::string> cmd_criteria_generate(const PipelineConfig& config, bool offline);

}  // namespace surveyeval
