// Command-line front end for the survey evaluation pipeline.
//
//   surveyeval ingest    --manifest M [--mine-topics --config C]
//   surveyeval decompose --manifest M [--config C] [--out D]
//   surveyeval embed     --manifest M [--config C] [--out D]
//   surveyeval evaluate  --manifest M [--config C] [--out D] [--offline] [--verify]
//   surveyeval arena     --manifest M [--config C] [--out D] [--offline]
//   surveyeval report    [--config C] [--out D] [--format json|markdown] [--verify --manifest M]
//   surveyeval criteria  list|generate [--config C] [--out D] [--offline]

#include <iostream>

#include <CLI11.hpp>

#include "surveyeval/pipeline.hpp"

namespace fs = std::filesystem;
using namespace surveyeval;

namespace {

struct Options {
  std::string config;
  std::string manifest;
  std::string out;
  bool offline = false;
  bool verify = false;
  bool mine_topics = false;
  std::string format = "markdown";
  std::string report;
};

PipelineConfig load_config(const Options& o) {
  PipelineConfig c = o.config.empty() ? PipelineConfig{} : PipelineConfig::load(o.config);
  if (!o.out.empty()) c.out_dir = o.out;
  c.validate();
  return c;
}

void add_common(CLI::App* cmd, Options& o, bool needs_manifest) {
  auto* m = cmd->add_option("--manifest", o.manifest, "corpus manifest (JSON)");
  if (needs_manifest) m->required();
  cmd->add_option("--config", o.config, "pipeline config (key = value)");
  cmd->add_option("--out", o.out, "output directory (overrides out_dir)");
}

int print_verification(const VerifyResult& v) {
  std::cout << "verify: " << v.checked << " values checked, " << v.mismatches.size() << " mismatches\n";
  for (const auto& m : v.mismatches) std::cout << "  " << m << "\n";
  if (!v.mismatches.empty()) {
    throw Error(ErrorCode::VerificationMismatch, std::to_string(v.mismatches.size()) + " recomputed values differ");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Similarity-weighted evaluation of generated surveys against human-written references"};
  app.require_subcommand(1);
  Options o;

  auto* ingest = app.add_subcommand("ingest", "validate a manifest and summarise its pairs");
  add_common(ingest, o, true);
  ingest->add_flag("--mine-topics", o.mine_topics, "label empty topics from titles and rewrite the manifest");
  ingest->add_flag("--offline", o.offline, "use cached judge responses only");

  auto* decompose = app.add_subcommand("decompose", "split every survey into outline, content and references");
  add_common(decompose, o, true);

  auto* embed = app.add_subcommand("embed", "embed decomposed units into the vector index");
  add_common(embed, o, true);

  auto* evaluate = app.add_subcommand("evaluate", "score every survey and write report.json / report.md");
  add_common(evaluate, o, true);
  evaluate->add_flag("--offline", o.offline, "use cached judge responses only");
  evaluate->add_flag("--verify", o.verify, "recompute the written report from verdict logs and the index");

  auto* arena = app.add_subcommand("arena", "pairwise comparison of generated and human surveys");
  add_common(arena, o, true);
  arena->add_flag("--offline", o.offline, "use cached judge responses only");

  auto* report = app.add_subcommand("report", "render a stored report");
  add_common(report, o, false);
  report->add_option("--report", o.report, "report.json path (default <out>/report.json)");
  report->add_option("--format", o.format, "json or markdown")->check(CLI::IsMember({"json", "markdown"}));
  report->add_flag("--verify", o.verify, "audit the stored report (needs --manifest)");

  auto* criteria = app.add_subcommand("criteria", "list or regenerate rubric templates");
  add_common(criteria, o, false);
  criteria->add_flag("--offline", o.offline, "use cached judge responses only");
  std::string criteria_action;
  criteria->add_option("action", criteria_action, "list | generate")
      ->required()
      ->check(CLI::IsMember({"list", "generate"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (ingest->parsed()) {
      if (o.mine_topics) {
        auto n = cmd_mine_topics(o.manifest, load_config(o), o.offline);
        std::cout << "mined " << n << " topic labels\n";
      }
      std::cout << cmd_ingest(o.manifest).text() << "\n";
    } else if (decompose->parsed()) {
      auto files = cmd_decompose(o.manifest, load_config(o).out_dir);
      std::cout << "decomposed " << files.size() << " surveys\n";
    } else if (embed->parsed()) {
      auto s = cmd_embed(o.manifest, load_config(o));
      std::cout << "embedded " << s.units << " units (outline " << s.per_component[Component::outline]
                << ", content " << s.per_component[Component::content] << ", reference "
                << s.per_component[Component::reference] << ")\nindex digest " << s.index_digest << "\n";
    } else if (evaluate->parsed()) {
      auto config = load_config(o);
      auto outcome = cmd_evaluate(o.manifest, config, EvaluateOptions{o.offline, o.verify});
      std::cout << "wrote " << layout::report_json(config.out_dir).string() << " and "
                << layout::report_markdown(config.out_dir).string() << "\n";
      if (outcome.verification) return print_verification(*outcome.verification);
    } else if (arena->parsed()) {
      auto config = load_config(o);
      auto outcome = cmd_arena(o.manifest, config, o.offline);
      std::cout << arena_markdown(outcome.results);
    } else if (report->parsed()) {
      auto config = load_config(o);
      fs::path path = o.report.empty() ? layout::report_json(config.out_dir) : fs::path(o.report);
      if (o.verify) {
        if (o.manifest.empty()) throw Error(ErrorCode::InvalidConfig, "--verify needs --manifest");
        return print_verification(verify_outputs(o.manifest, config));
      }
      std::cout << cmd_report(path, o.format == "json" ? ReportFormat::json : ReportFormat::markdown);
    } else if (criteria->parsed()) {
      auto config = load_config(o);
      if (criteria_action == "list") {
        JudgeRuntime runtime(config, true);
        for (const auto& id : runtime.templates().ids()) std::cout << id << "\n";
      } else {
        for (const auto& id : cmd_criteria_generate(config, o.offline)) std::cout << id << "\n";
        std::cout << "wrote " << layout::templates_json(config.out_dir).string()
                  << "; set templates_path to use it\n";
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
