#include "surveyeval/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "surveyeval/digest.hpp"
#include "surveyeval/http_providers.hpp"
#include "surveyeval/mock.hpp"
#include "surveyeval/text.hpp"

namespace surveyeval {

namespace fs = std::filesystem;

namespace {

std::string file_stem_for(std::string_view id) {
  std::string out;
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
              c == '.';
    out += ok ? c : '_';
  }
  if (out.empty() || out.front() == '.') out.insert(out.begin(), '_');
  return out;
}

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v == nullptr ? "" : v;
}

void write_json(const fs::path& path, const json& j) { text::write_file(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path, std::string_view missing_hint) {
  if (!fs::exists(path)) throw Error(ErrorCode::PipelineOrder, path.string() + " not found; " + std::string(missing_hint));
  try {
    return json::parse(text::read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::PipelineOrder, path.string() + " is not valid JSON: " + e.what());
  }
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
// stops further work and is rethrown.
template <typename F>
void parallel_for(std::size_t n, int workers, F&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto work = [&] {
    for (;;) {
      auto i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
    }
  };
  auto count = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(workers, 1)));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<SurveyRecord> load_decompositions(const CorpusManifest& manifest, const fs::path& out) {
  std::vector<SurveyRecord> records;
  for (const auto& e : manifest.entries) {
    auto path = layout::decomposition_file(out, e.id);
    auto j = read_json(path, "run `surveyeval decompose` first");
    auto r = record_from_json(j);
    if (r.entry.id != e.id) throw Error(ErrorCode::PipelineOrder, path.string() + " belongs to '" + r.entry.id + "'");
    r.entry = e;  // topic labels may have been mined after decomposition
    records.push_back(std::move(r));
  }
  return records;
}

VectorIndex load_checked_index(const std::vector<SurveyRecord>& records, const PipelineConfig& config) {
  auto path = config.index_file();
  if (!fs::exists(path)) {
    throw Error(ErrorCode::PipelineOrder, "no vector index at " + path.string() + "; run `surveyeval embed` first");
  }
  auto index = load_index(path);
  for (const auto& r : records) {
    auto units = embedding_units(r);
    for (const auto& u : units) {
      const auto* stored = index.find(UnitKey{r.entry.id, u.component, u.index});
      if (stored == nullptr || stored->text != u.text) {
        throw Error(ErrorCode::PipelineOrder, "vector index is stale for survey '" + r.entry.id +
                                                  "'; rerun `surveyeval embed`");
      }
    }
    std::size_t stored_count = 0;
    for (auto c : kComponents) stored_count += index.units(r.entry.id, c).size();
    if (stored_count != units.size()) {
      throw Error(ErrorCode::PipelineOrder, "vector index is stale for survey '" + r.entry.id +
                                                "'; rerun `surveyeval embed`");
    }
  }
  return index;
}

std::string topic_for(const CorpusManifest& manifest, const ManifestEntry& e, Diagnostics* warnings) {
  if (!text::trim(e.topic).empty()) return e.topic;
  if (e.role == Role::generated) {
    const auto* human = manifest.human_for(e.topic_key);
    if (human != nullptr && !text::trim(human->topic).empty()) return human->topic;
  }
  note(warnings, "topic: no topic label in the manifest; using the title");
  return e.title;
}

json settings_json(const PipelineConfig& c) {
  return json{{"judge_model", c.judge_model},
              {"embed_model", c.embed_model},
              {"temperature", c.temperature},
              {"top_n", {{"outline", c.top_n.outline}, {"content", c.top_n.content}, {"reference", c.top_n.reference}}},
              {"max_reasks", c.max_reasks},
              {"seed", c.seed}};
}

// ---------------------------------------------------------------------------
// Verdict log pieces

json hierarchy_json(const HierarchyBreakdown& h) {
  json parents = json::array();
  for (const auto& p : h.parents) {
    parents.push_back({{"path", p.path},
                       {"depth", p.depth},
                       {"weight", p.weight},
                       {"children", p.children},
                       {"verdicts", p.verdicts},
                       {"failed", p.failed},
                       {"diagnostic", p.diagnostic}});
  }
  return json{{"max_depth", h.max_depth}, {"score", h.score}, {"parents", parents}};
}

MetricScore make_metric(std::string_view id, double raw) {
  return MetricScore::make(std::string(id), metric_info(id).scale, raw);
}

bool recoverable(const Error& e) {
  return e.code() == ErrorCode::UnparseableVerdict || e.code() == ErrorCode::PreconditionViolation;
}

json score_json(const std::optional<MetricScore>& s) {
  if (!s) return nullptr;
  return json{{"scale", to_string(s->scale)}, {"raw", s->raw}, {"normalized", s->normalized()}};
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

json sigma_json(const std::optional<SimilarityFactor>& f) {
  if (!f) return nullptr;
  json matches = json::array();
  for (const auto& m : f->per_unit_matches) {
    matches.push_back({{"generated", m.generated_index}, {"human", m.human_index}, {"cosine", m.cosine}});
  }
  return json{{"sigma", f->sigma}, {"top_n_used", f->top_n_used}, {"matches", matches}};
}

void diff_json(const json& stored, const json& recomputed, const std::string& path, VerifyResult& out) {
  if (stored.is_number() && recomputed.is_number()) {
    ++out.checked;
    double a = stored.get<double>();
    double b = recomputed.get<double>();
    if (std::abs(a - b) > 1e-9 * std::max(1.0, std::abs(b))) {
      out.mismatches.push_back(path + ": stored " + stored.dump() + ", recomputed " + recomputed.dump());
    }
    return;
  }
  if (stored.type() != recomputed.type()) {
    ++out.checked;
    out.mismatches.push_back(path + ": stored " + stored.dump() + ", recomputed " + recomputed.dump());
    return;
  }
  if (stored.is_object()) {
    for (const auto& [k, v] : stored.items()) {
      if (!recomputed.contains(k)) {
        out.mismatches.push_back(path + "." + k + ": not recomputed");
        continue;
      }
      diff_json(v, recomputed.at(k), path + "." + k, out);
    }
    for (const auto& [k, v] : recomputed.items()) {
      if (!stored.contains(k)) out.mismatches.push_back(path + "." + k + ": missing from the stored report");
    }
    return;
  }
  if (stored.is_array()) {
    if (stored.size() != recomputed.size()) {
      out.mismatches.push_back(path + ": stored " + std::to_string(stored.size()) + " items, recomputed " +
                               std::to_string(recomputed.size()));
      return;
    }
    for (std::size_t i = 0; i < stored.size(); ++i) {
      diff_json(stored[i], recomputed[i], path + "[" + std::to_string(i) + "]", out);
    }
    return;
  }
  ++out.checked;
  if (stored != recomputed) {
    out.mismatches.push_back(path + ": stored " + stored.dump() + ", recomputed " + recomputed.dump());
  }
}

SurveyResult base_result(const SurveyRecord& r, std::string topic) {
  SurveyResult s;
  s.entry = r.entry;
  s.topic = std::move(topic);
  s.facets[0] = r.has_outline();
  s.facets[1] = r.has_content();
  s.facets[2] = r.has_references();
  s.warnings = r.warnings;
  return s;
}

std::string md_cell(const json& v, std::string_view metric) {
  if (v.is_null()) return "-";
  return display_cell(v.get<double>(), metric_info(metric).scale);
}

std::string md_avg(const json& v) { return v.is_null() ? "-" : text::fixed2(v.get<double>()); }

}  // namespace

// ---------------------------------------------------------------------------
// Layout

namespace layout {
fs::path decomposition_file(const fs::path& out, std::string_view id) {
  return out / "decomposed" / (file_stem_for(id) + ".json");
}
fs::path verdict_file(const fs::path& out, std::string_view id) {
  return out / "verdicts" / (file_stem_for(id) + ".json");
}
fs::path report_json(const fs::path& out) { return out / "report.json"; }
fs::path report_markdown(const fs::path& out) { return out / "report.md"; }
fs::path arena_json(const fs::path& out) { return out / "arena.json"; }
fs::path arena_markdown(const fs::path& out) { return out / "arena.md"; }
fs::path templates_json(const fs::path& out) { return out / "templates.json"; }
}  // namespace layout

// ---------------------------------------------------------------------------
// Providers

MockScript load_mock_script(const PipelineConfig& config) {
  MockScript script = MockScript::standard(config.seed);
  if (!config.mock_script.empty()) {
    if (!fs::exists(config.mock_script)) throw Error(ErrorCode::MissingFile, config.mock_script.string());
    try {
      script = MockScript::from_json(json::parse(text::read_file(config.mock_script)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, "mock.script: " + std::string(e.what()));
    }
  }
  script.seed = config.seed;
  return script;
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const PipelineConfig& config) {
  if (config.embed_provider == "mock") {
    return std::make_unique<MockEmbeddingProvider>(config.seed, config.embed_dimension);
  }
  EndpointConfig ep{config.embed_base_url, config.embed_model, env_or_empty("EMBED_API_KEY"),
                    std::chrono::seconds(config.timeout_seconds)};
  return std::make_unique<HttpEmbeddingProvider>(std::move(ep));
}

JudgeRuntime::JudgeRuntime(const PipelineConfig& config, bool offline) : primary_id_(config.judge_model) {
  if (!config.templates_path.empty()) {
    if (!fs::exists(config.templates_path)) throw Error(ErrorCode::MissingFile, config.templates_path.string());
    try {
      templates_ = TemplateRegistry::from_json(json::parse(text::read_file(config.templates_path)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, "templates_path: " + std::string(e.what()));
    }
  } else {
    templates_ = TemplateRegistry::builtin();
  }
  auto cache_file = config.cache_file();
  if (cache_file.has_parent_path()) fs::create_directories(cache_file.parent_path());
  cache_ = std::make_unique<JudgeCache>(cache_file);

  JudgeOptions options;
  options.temperature = config.temperature;
  options.offline = offline;
  options.context_budget_chars = config.context_budget_chars;
  options.max_reasks = config.max_reasks;

  std::optional<MockScript> script;
  if (config.judge_provider == "mock") script = load_mock_script(config);

  std::vector<std::string> ids{config.judge_model};
  for (const auto& id : config.arena_judges) {
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  for (const auto& id : ids) {
    JudgeProvider* provider = nullptr;
    if (!offline) {
      if (script) {
        MockScript s = *script;
        // Arena judges draw from their own streams of the one config seed.
        if (id != config.judge_model) s.seed = seeded_hash64(id, config.seed);
        providers_.push_back(std::make_unique<MockJudgeProvider>(std::move(s), id));
      } else {
        EndpointConfig ep{config.judge_base_url, id, env_or_empty("JUDGE_API_KEY"),
                          std::chrono::seconds(config.timeout_seconds)};
        providers_.push_back(std::make_unique<HttpJudgeProvider>(std::move(ep)));
      }
      provider = providers_.back().get();
    }
    clients_.emplace(id, std::make_unique<JudgeClient>(id, provider, *cache_, options, &templates_,
                                                       config.max_in_flight));
  }
}

JudgeRuntime::~JudgeRuntime() = default;

JudgeClient& JudgeRuntime::judge(const std::string& model_id) {
  auto it = clients_.find(model_id);
  if (it == clients_.end()) throw Error(ErrorCode::InvalidConfig, "unknown judge '" + model_id + "'");
  return *it->second;
}

// ---------------------------------------------------------------------------
// Facet text and embedding units

std::string facet_text(const SurveyRecord& r, Component c) {
  switch (c) {
    case Component::outline:
      return r.has_outline() ? render_outline_listing(r.outline) : "";
    case Component::content: {
      if (!r.has_content()) return "";
      std::string out;
      for (const auto& s : r.sections) {
        if (!out.empty()) out += "\n\n";
        out += std::string(s.heading_path.size(), '#') + " " + (s.heading_path.empty() ? "" : s.heading_path.back());
        if (!s.body.empty()) out += "\n\n" + s.body;
      }
      return out;
    }
    case Component::reference: {
      std::string out;
      for (const auto& ref : r.references) out += "[" + std::to_string(ref.key) + "] " + ref.text + "\n";
      return out;
    }
  }
  return "";
}

std::vector<UnitText> embedding_units(const SurveyRecord& r) {
  std::vector<UnitText> units;
  for (const auto& p : r.outline_paths) units.push_back({Component::outline, p.index, p.rendered_text});
  for (const auto& s : r.sections) {
    if (!s.body.empty()) units.push_back({Component::content, s.index, s.body});
  }
  for (const auto& ref : r.references) {
    if (!text::trim(ref.text).empty()) units.push_back({Component::reference, ref.index, ref.text});
  }
  return units;
}

// ---------------------------------------------------------------------------
// Per-survey evaluation

SurveyEvaluation evaluate_survey(const SurveyRecord& r, const std::string& topic, JudgeClient& client) {
  SurveyEvaluation ev;
  for (const auto& info : all_metrics()) ev.metrics[std::string(info.id)] = std::nullopt;
  json log{{"schema", "surveyeval.verdicts.v1"},
           {"survey_id", r.entry.id},
           {"topic", topic},
           {"judge_model", client.model_id()},
           {"outline_quality", nullptr},
           {"hierarchy", nullptr},
           {"content_quality", nullptr},
           {"faithfulness", nullptr},
           {"reference_quality", nullptr},
           {"supportiveness", nullptr}};

  auto guarded = [&ev](std::string_view what, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (!recoverable(e)) throw;
      ev.warnings.push_back(std::string(what) + ": " + e.what());
    }
  };

  if (r.has_outline()) {
    guarded(metric_id::outline_quality, [&] {
      int s = judge_outline_quality(topic, render_outline_listing(r.outline), client);
      log["outline_quality"] = {{"score", s}};
      ev.metrics[std::string(metric_id::outline_quality)] = make_metric(metric_id::outline_quality, s);
    });
    guarded(metric_id::hierarchy, [&] {
      auto h = hierarchy_score(r.outline, topic, client);
      for (const auto& p : h.parents) {
        if (p.failed) ev.warnings.push_back("outline.hierarchy: " + p.diagnostic);
      }
      log["hierarchy"] = hierarchy_json(h);
      ev.metrics[std::string(metric_id::hierarchy)] = make_metric(metric_id::hierarchy, h.score);
    });
  } else {
    ev.warnings.push_back("outline: facet missing; outline metrics are null");
  }

  if (r.has_content()) {
    guarded("content.quality", [&] {
      auto scores = judge_content_quality(topic, facet_text(r, Component::content), client);
      log["content_quality"] = {{"scores", scores}};
      const std::string_view ids[] = {metric_id::content_coverage, metric_id::content_structure,
                                      metric_id::content_relevance, metric_id::content_language,
                                      metric_id::content_criticalness};
      for (std::size_t i = 0; i < scores.size(); ++i) ev.metrics[std::string(ids[i])] = make_metric(ids[i], scores[i]);
    });
    guarded(metric_id::faithfulness, [&] {
      auto f = faithfulness_score(r.citations, r.references, client);
      json instances = json::array();
      for (const auto& i : f.instances) {
        instances.push_back({{"section_index", i.section_index},
                             {"sentence", i.sentence},
                             {"key", i.key},
                             {"supported", i.supported}});
      }
      log["faithfulness"] = {{"instances", instances},
                             {"unique_cited", f.unique_cited},
                             {"unique_supported", f.unique_supported}};
      for (const auto& w : f.warnings) ev.warnings.push_back("content.faithfulness: " + w);
      ev.metrics[std::string(metric_id::faithfulness)] = f.score;
    });
  } else {
    ev.warnings.push_back("content: facet missing; content metrics are null");
  }

  if (r.has_references()) {
    guarded(metric_id::reference_quality, [&] {
      std::vector<std::string> refs;
      for (const auto& ref : r.references) refs.push_back("[" + std::to_string(ref.key) + "] " + ref.text);
      int s = judge_reference_quality(topic, refs, client);
      log["reference_quality"] = {{"score", s}};
      ev.metrics[std::string(metric_id::reference_quality)] = make_metric(metric_id::reference_quality, s);
    });
    guarded(metric_id::supportiveness, [&] {
      auto s = supportiveness_score(r.references, topic, client);
      json records = json::array();
      for (const auto& rec : s.records) records.push_back({{"key", rec.key}, {"relevant", rec.relevant}});
      log["supportiveness"] = {{"records", records}};
      for (const auto& w : s.warnings) ev.warnings.push_back("reference.supportiveness: " + w);
      ev.metrics[std::string(metric_id::supportiveness)] = s.score;
    });
  } else {
    ev.warnings.push_back("reference: facet missing; reference metrics are null");
  }

  log["warnings"] = ev.warnings;
  ev.log = std::move(log);
  return ev;
}

ScoreMap metrics_from_log(const json& log) {
  ScoreMap m;
  for (const auto& info : all_metrics()) m[std::string(info.id)] = std::nullopt;
  try {
    if (const auto& j = log.at("outline_quality"); !j.is_null()) {
      m[std::string(metric_id::outline_quality)] = make_metric(metric_id::outline_quality, j.at("score").get<int>());
    }
    if (const auto& j = log.at("hierarchy"); !j.is_null()) {
      int max_depth = j.at("max_depth").get<int>();
      std::vector<ParentRecord> parents;
      for (const auto& p : j.at("parents")) {
        ParentRecord rec;
        rec.depth = p.at("depth").get<int>();
        rec.weight = node_weight(rec.depth, max_depth);
        rec.verdicts = p.at("verdicts").get<std::vector<bool>>();
        auto coherent = std::count(rec.verdicts.begin(), rec.verdicts.end(), true);
        rec.local_score = rec.verdicts.empty() ? 0.0
                                               : static_cast<double>(coherent) / static_cast<double>(rec.verdicts.size());
        parents.push_back(std::move(rec));
      }
      m[std::string(metric_id::hierarchy)] = make_metric(metric_id::hierarchy, hierarchy_from_records(parents));
    }
    if (const auto& j = log.at("content_quality"); !j.is_null()) {
      auto scores = j.at("scores").get<std::vector<int>>();
      const std::string_view ids[] = {metric_id::content_coverage, metric_id::content_structure,
                                      metric_id::content_relevance, metric_id::content_language,
                                      metric_id::content_criticalness};
      if (scores.size() != 5) throw Error(ErrorCode::VerificationMismatch, "content_quality needs 5 scores");
      for (std::size_t i = 0; i < 5; ++i) m[std::string(ids[i])] = make_metric(ids[i], scores[i]);
    }
    if (const auto& j = log.at("faithfulness"); !j.is_null()) {
      std::vector<SupportInstance> instances;
      for (const auto& i : j.at("instances")) {
        instances.push_back(SupportInstance{i.at("section_index").get<int>(), i.at("sentence").get<std::string>(),
                                            i.at("key").get<int>(), i.at("supported").get<bool>()});
      }
      m[std::string(metric_id::faithfulness)] = faithfulness_from_instances(instances);
    }
    if (const auto& j = log.at("reference_quality"); !j.is_null()) {
      m[std::string(metric_id::reference_quality)] =
          make_metric(metric_id::reference_quality, j.at("score").get<int>());
    }
    if (const auto& j = log.at("supportiveness"); !j.is_null()) {
      std::vector<RelevanceRecord> records;
      for (const auto& r : j.at("records")) {
        records.push_back(RelevanceRecord{r.at("key").get<int>(), r.at("relevant").get<bool>()});
      }
      m[std::string(metric_id::supportiveness)] = supportiveness_from_records(records);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::VerificationMismatch, std::string("malformed verdict log: ") + e.what());
  }
  return m;
}

std::map<Component, std::optional<SimilarityFactor>> survey_sigmas(const VectorIndex& index,
                                                                   std::string_view generated_id,
                                                                   std::string_view human_id, const TopN& top_n,
                                                                   Diagnostics* warnings) {
  std::map<Component, std::optional<SimilarityFactor>> out;
  for (auto c : kComponents) {
    try {
      out[c] = similarity_factor(index, generated_id, human_id, c, top_n[c]);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptySide) throw;
      out[c] = std::nullopt;
      note(warnings, "sigma." + std::string(to_string(c)) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report

json assemble_report(const ReportHeader& header, const std::vector<SurveyResult>& results) {
  struct Group {
    std::string name;
    bool human = false;
    std::size_t surveys = 0;
    std::size_t facets[3] = {0, 0, 0};
    std::map<Configuration, std::map<std::string, std::vector<double>>> values;
    std::map<Component, std::vector<double>> sigmas;
  };
  Group human_group;
  human_group.name = "Human";
  human_group.human = true;
  std::map<std::string, Group> systems;

  json surveys = json::array();
  for (const auto& r : results) {
    const SurveyResult* human = nullptr;
    if (r.entry.role == Role::generated) {
      for (const auto& other : results) {
        if (other.entry.role == Role::human && other.entry.topic_key == r.entry.topic_key) human = &other;
      }
      if (human == nullptr) {
        throw Error(ErrorCode::UnpairedGeneratedEntry, "no human result for '" + r.entry.id + "'");
      }
    }
    SigmaMap sigmas;
    json sigma = nullptr;
    if (human != nullptr) {
      sigma = json::object();
      for (auto c : kComponents) {
        auto it = r.sigma.find(c);
        std::optional<SimilarityFactor> f = it == r.sigma.end() ? std::nullopt : it->second;
        sigmas[c] = f ? std::optional<double>(f->sigma) : std::nullopt;
        sigma[std::string(to_string(c))] = sigma_json(f);
      }
    }

    auto fused = evaluate_configurations(r.metrics, human ? &human->metrics : nullptr, sigmas);
    json configs = json::object();
    json avg = json::object();
    std::map<Configuration, std::vector<double>> normalized;
    for (const auto& f : fused) {
      auto cfg = std::string(to_string(f.config));
      configs[cfg][f.metric_id] = optional_number(f.value);
      if (f.value) normalized[f.config].push_back(normalize_score(*f.value, metric_info(f.metric_id).scale));
    }
    for (auto c : kConfigurations) avg[std::string(to_string(c))] = optional_number(mean_of(normalized[c]));

    json metrics = json::object();
    for (const auto& info : all_metrics()) {
      auto it = r.metrics.find(info.id);
      metrics[std::string(info.id)] = it == r.metrics.end() ? json(nullptr) : score_json(it->second);
    }

    surveys.push_back({{"id", r.entry.id},
                       {"role", to_string(r.entry.role)},
                       {"system", r.entry.system_name ? json(*r.entry.system_name) : json(nullptr)},
                       {"title", r.entry.title},
                       {"topic", r.topic},
                       {"topic_key", r.entry.topic_key},
                       {"paired_human", human ? json(human->entry.id) : json(nullptr)},
                       {"facets", {{"outline", r.facets[0]}, {"content", r.facets[1]}, {"reference", r.facets[2]}}},
                       {"metrics", metrics},
                       {"sigma", sigma},
                       {"configurations", configs},
                       {"avg", avg},
                       {"warnings", r.warnings}});

    Group& g = human ? systems[*r.entry.system_name] : human_group;
    if (human) g.name = *r.entry.system_name;
    g.surveys += 1;
    for (int k = 0; k < 3; ++k) g.facets[k] += r.facets[k] ? 1 : 0;
    for (const auto& f : fused) {
      if (f.value) g.values[f.config][f.metric_id].push_back(*f.value);
    }
    for (const auto& [c, s] : sigmas) {
      if (s) g.sigmas[c].push_back(*s);
    }
  }

  auto group_json = [](const Group& g) {
    json configs = json::object();
    for (auto cfg : kConfigurations) {
      if (g.human && cfg != Configuration::vanilla) continue;
      json metrics = json::object();
      std::vector<double> normalized;
      for (const auto& info : all_metrics()) {
        const auto& vals = g.values.contains(cfg) && g.values.at(cfg).contains(std::string(info.id))
                               ? g.values.at(cfg).at(std::string(info.id))
                               : std::vector<double>{};
        auto mean = mean_of(vals);
        metrics[std::string(info.id)] = {{"mean", optional_number(mean)}, {"count", vals.size()}};
        if (mean) normalized.push_back(normalize_score(*mean, info.scale));
      }
      configs[std::string(to_string(cfg))] = {{"metrics", metrics}, {"avg", optional_number(mean_of(normalized))}};
    }
    json sigma = nullptr;
    if (!g.human) {
      sigma = json::object();
      for (auto c : kComponents) {
        const auto& vals = g.sigmas.contains(c) ? g.sigmas.at(c) : std::vector<double>{};
        sigma[std::string(to_string(c))] = {{"mean", optional_number(mean_of(vals))}, {"count", vals.size()}};
      }
    }
    return json{{"system", g.name},
                {"role", g.human ? "human" : "generated"},
                {"surveys", g.surveys},
                {"facets", {{"outline", g.facets[0]}, {"content", g.facets[1]}, {"reference", g.facets[2]}}},
                {"sigma", sigma},
                {"configurations", configs}};
  };

  json groups = json::array();
  if (human_group.surveys > 0) groups.push_back(group_json(human_group));
  for (const auto& [name, g] : systems) groups.push_back(group_json(g));

  json metric_list = json::array();
  for (const auto& info : all_metrics()) {
    metric_list.push_back({{"id", info.id},
                           {"component", to_string(info.component)},
                           {"scale", to_string(info.scale)},
                           {"column", info.column}});
  }

  return json{{"schema", "surveyeval.report.v1"},
              {"corpus_id", header.corpus_id},
              {"config_digest", header.config_digest},
              {"cache_digest", header.cache_digest},
              {"index_digest", header.index_digest},
              {"settings", header.settings},
              {"avg_definition",
               "artifact-defined: unweighted mean of the non-null metrics, each normalized to the five-point scale"},
              {"metrics", metric_list},
              {"surveys", surveys},
              {"systems", groups}};
}

std::string render_report_markdown(const json& report) {
  try {
    std::string out = "# Evaluation report: " + report.at("corpus_id").get<std::string>() + "\n\n";
    out += "- config digest: `" + report.at("config_digest").get<std::string>() + "`\n";
    out += "- cache digest: `" + report.at("cache_digest").get<std::string>() + "`\n";
    out += "- index digest: `" + report.at("index_digest").get<std::string>() + "`\n";
    out += "- Avg.: " + report.at("avg_definition").get<std::string>() + "\n";
    out += "- Percent metrics are shown as `normalized_{raw}`.\n\n";

    std::vector<std::string> ids;
    std::string head = "| System | Config | n | Avg. |";
    std::string rule = "|---|---|---|---|";
    for (const auto& m : report.at("metrics")) {
      ids.push_back(m.at("id").get<std::string>());
      head += " " + m.at("column").get<std::string>() + " |";
      rule += "---|";
    }

    out += "## Systems\n\n" + head + "\n" + rule + "\n";
    for (const auto& g : report.at("systems")) {
      for (auto cfg : kConfigurations) {
        auto key = std::string(to_string(cfg));
        if (!g.at("configurations").contains(key)) continue;
        const auto& block = g.at("configurations").at(key);
        out += "| " + g.at("system").get<std::string>() + " | " + key + " | " + g.at("surveys").dump() + " | " +
               md_avg(block.at("avg")) + " |";
        for (const auto& id : ids) out += " " + md_cell(block.at("metrics").at(id).at("mean"), id) + " |";
        out += "\n";
      }
    }

    out += "\n## Similarity factors\n\n| System | Outline | Content | Reference |\n|---|---|---|---|\n";
    for (const auto& g : report.at("systems")) {
      if (g.at("sigma").is_null()) continue;
      out += "| " + g.at("system").get<std::string>() + " |";
      for (auto c : kComponents) {
        const auto& s = g.at("sigma").at(std::string(to_string(c)));
        out += " " + md_avg(s.at("mean")) + " (n=" + s.at("count").dump() + ") |";
      }
      out += "\n";
    }

    out += "\n## Surveys\n\n| Survey | System | Config | Avg. |";
    for (const auto& m : report.at("metrics")) out += " " + m.at("column").get<std::string>() + " |";
    out += "\n" + rule + "\n";
    for (const auto& s : report.at("surveys")) {
      auto system = s.at("system").is_null() ? std::string("Human") : s.at("system").get<std::string>();
      for (auto cfg : kConfigurations) {
        auto key = std::string(to_string(cfg));
        if (s.at("role") == "human" && cfg != Configuration::vanilla) continue;
        const auto& block = s.at("configurations").at(key);
        out += "| " + s.at("id").get<std::string>() + " | " + system + " | " + key + " | " +
               md_avg(s.at("avg").at(key)) + " |";
        for (const auto& id : ids) out += " " + md_cell(block.at(id), id) + " |";
        out += "\n";
      }
    }

    std::string warnings;
    for (const auto& s : report.at("surveys")) {
      for (const auto& w : s.at("warnings")) warnings += "- " + s.at("id").get<std::string>() + ": " + w.get<std::string>() + "\n";
    }
    if (!warnings.empty()) out += "\n## Warnings\n\n" + warnings;
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::PreconditionViolation, std::string("malformed report: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Subcommands

std::string IngestSummary::text() const {
  std::string s = std::to_string(surveys) + " surveys, " + std::to_string(pairs) + (pairs == 1 ? " pair" : " pairs");
  s += " (" + std::to_string(humans) + " human, " + std::to_string(generated) + " generated)";
  for (const auto& [name, n] : pairs_per_system) s += "\n  " + name + ": " + std::to_string(n) + " pairs";
  return s;
}

IngestSummary cmd_ingest(const fs::path& manifest_path) {
  auto m = load_manifest(manifest_path);
  IngestSummary s;
  s.surveys = m.entries.size();
  for (const auto& e : m.entries) (e.role == Role::human ? s.humans : s.generated) += 1;
  for (const auto& p : pair_by_topic(m)) {
    s.pairs += 1;
    s.pairs_per_system[*p.generated->system_name] += 1;
  }
  return s;
}

std::size_t cmd_mine_topics(const fs::path& manifest_path, const PipelineConfig& config, bool offline) {
  auto m = load_manifest(manifest_path);
  JudgeRuntime runtime(config, offline);
  std::size_t mined = 0;
  for (auto& e : m.entries) {
    if (e.role != Role::human || !text::trim(e.topic).empty()) continue;
    e.topic = mine_topic(e.title, runtime.primary());
    ++mined;
  }
  for (auto& e : m.entries) {
    if (e.role != Role::generated || !text::trim(e.topic).empty()) continue;
    e.topic = m.human_for(e.topic_key)->topic;
    ++mined;
  }
  write_json(manifest_path, manifest_to_json(m));
  return mined;
}

std::vector<fs::path> cmd_decompose(const fs::path& manifest_path, const fs::path& out_dir) {
  auto m = load_manifest(manifest_path);
  std::vector<fs::path> written;
  for (const auto& e : m.entries) {
    auto record = load_survey(e, m.base_dir);
    auto path = layout::decomposition_file(out_dir, e.id);
    write_json(path, record_to_json(record));
    written.push_back(path);
  }
  return written;
}

EmbedSummary cmd_embed(const fs::path& manifest_path, const PipelineConfig& config) {
  auto m = load_manifest(manifest_path);
  auto records = load_decompositions(m, config.out_dir);
  auto provider = make_embedding_provider(config);
  std::optional<Eigen::Index> dimension;
  if (config.embed_dimension > 0) dimension = config.embed_dimension;

  constexpr std::size_t kBatch = 64;
  std::vector<EmbeddingUnit> all;
  for (const auto& r : records) {
    auto units = embedding_units(r);
    for (std::size_t start = 0; start < units.size(); start += kBatch) {
      auto end = std::min(units.size(), start + kBatch);
      std::vector<std::string> texts;
      for (std::size_t i = start; i < end; ++i) texts.push_back(units[i].text);
      auto vectors = embed_texts(texts, *provider, dimension);
      if (!dimension && !vectors.empty()) dimension = vectors.front().size();
      for (std::size_t i = start; i < end; ++i) {
        all.push_back(EmbeddingUnit{r.entry.id, units[i].component, units[i].index, units[i].text,
                                    std::move(vectors[i - start])});
      }
    }
  }
  VectorIndex index(dimension.value_or(0));
  EmbedSummary s;
  for (auto& u : all) {
    s.per_component[u.component] += 1;
    index.add(std::move(u));
  }
  s.units = index.size();
  auto bytes = serialize_index(index);
  auto path = config.index_file();
  text::write_file(path, bytes);
  s.index_digest = sha256_hex(bytes);
  return s;
}

EvaluateOutcome cmd_evaluate(const fs::path& manifest_path, const PipelineConfig& config,
                             const EvaluateOptions& options) {
  auto m = load_manifest(manifest_path);
  auto records = load_decompositions(m, config.out_dir);
  auto index = load_checked_index(records, config);
  JudgeRuntime runtime(config, options.offline);

  std::vector<SurveyResult> results(records.size());
  std::vector<json> logs(records.size());
  parallel_for(records.size(), config.max_in_flight, [&](std::size_t i) {
    const auto& r = records[i];
    Diagnostics topic_warnings;
    auto topic = topic_for(m, r.entry, &topic_warnings);
    auto ev = evaluate_survey(r, topic, runtime.primary());
    auto res = base_result(r, topic);
    res.warnings.insert(res.warnings.end(), topic_warnings.begin(), topic_warnings.end());
    res.warnings.insert(res.warnings.end(), ev.warnings.begin(), ev.warnings.end());
    res.metrics = std::move(ev.metrics);
    if (r.entry.role == Role::generated) {
      res.sigma = survey_sigmas(index, r.entry.id, m.human_for(r.entry.topic_key)->id, config.top_n, &res.warnings);
    }
    ev.log["topic_warnings"] = topic_warnings;
    logs[i] = std::move(ev.log);
    results[i] = std::move(res);
  });

  for (std::size_t i = 0; i < records.size(); ++i) {
    write_json(layout::verdict_file(config.out_dir, records[i].entry.id), logs[i]);
  }
  ReportHeader header{m.corpus_id, config.digest(), runtime.cache().content_digest(),
                      sha256_hex(serialize_index(index)), settings_json(config)};
  EvaluateOutcome outcome;
  outcome.report = assemble_report(header, results);
  write_json(layout::report_json(config.out_dir), outcome.report);
  text::write_file(layout::report_markdown(config.out_dir), render_report_markdown(outcome.report));
  if (options.verify) outcome.verification = verify_outputs(manifest_path, config);
  return outcome;
}

VerifyResult verify_outputs(const fs::path& manifest_path, const PipelineConfig& config) {
  auto m = load_manifest(manifest_path);
  auto records = load_decompositions(m, config.out_dir);
  auto index = load_checked_index(records, config);
  auto stored = read_json(layout::report_json(config.out_dir), "run `surveyeval evaluate` first");

  VerifyResult out;
  std::vector<SurveyResult> results;
  for (const auto& r : records) {
    auto log = read_json(layout::verdict_file(config.out_dir, r.entry.id), "run `surveyeval evaluate` first");
    auto res = base_result(r, log.at("topic").get<std::string>());
    for (const auto& w : log.at("topic_warnings")) res.warnings.push_back(w.get<std::string>());
    for (const auto& w : log.at("warnings")) res.warnings.push_back(w.get<std::string>());
    res.metrics = metrics_from_log(log);
    if (r.entry.role == Role::generated) {
      res.sigma = survey_sigmas(index, r.entry.id, m.human_for(r.entry.topic_key)->id, config.top_n, &res.warnings);
    }
    results.push_back(std::move(res));
  }

  ReportHeader header{m.corpus_id, config.digest(), stored.value("cache_digest", ""),
                      sha256_hex(serialize_index(index)), settings_json(config)};
  auto recomputed = assemble_report(header, results);
  diff_json(stored.value("surveys", json::array()), recomputed.at("surveys"), "surveys", out);
  diff_json(stored.value("systems", json::array()), recomputed.at("systems"), "systems", out);
  diff_json(stored.value("index_digest", json("")), recomputed.at("index_digest"), "index_digest", out);

  // Each stored sigma must also follow from its own stored match list.
  for (const auto& s : stored.value("surveys", json::array())) {
    if (!s.contains("sigma") || s.at("sigma").is_null()) continue;
    for (const auto& [facet, f] : s.at("sigma").items()) {
      if (f.is_null()) continue;
      std::vector<UnitMatch> matches;
      for (const auto& mm : f.at("matches")) {
        matches.push_back(UnitMatch{mm.at("generated").get<int>(), mm.at("human").get<int>(),
                                    mm.at("cosine").get<double>()});
      }
      int top_n = config.top_n[component_from_string(facet)];
      diff_json(f.at("sigma"), json(sigma_from_matches(matches, top_n)),
                "surveys." + s.at("id").get<std::string>() + ".sigma." + facet + "(from matches)", out);
    }
  }
  return out;
}

ArenaOutcome cmd_arena(const fs::path& manifest_path, const PipelineConfig& config, bool offline) {
  auto m = load_manifest(manifest_path);
  auto records = load_decompositions(m, config.out_dir);
  std::map<std::string, const SurveyRecord*> by_id;
  for (const auto& r : records) by_id[r.entry.id] = &r;

  JudgeRuntime runtime(config, offline);
  std::vector<ArenaJudge> judges;
  for (const auto& id : config.arena_judges) judges.push_back(ArenaJudge{id, &runtime.judge(id)});

  ArenaOutcome outcome;
  json results = json::array();
  json diagnostics = json::array();
  auto pairs = pair_by_topic(m);
  for (const auto& system : m.systems()) {
    for (auto c : kComponents) {
      std::vector<ArenaPair> arena_pairs;
      for (const auto& p : pairs) {
        if (*p.generated->system_name != system) continue;
        const auto& gen = *by_id.at(p.generated->id);
        const auto& hum = *by_id.at(p.human->id);
        auto a = facet_text(gen, c);
        auto b = facet_text(hum, c);
        if (text::trim(a).empty() || text::trim(b).empty()) {
          diagnostics.push_back(system + "/" + std::string(to_string(c)) + ": skipped '" + gen.entry.id +
                                "', facet missing");
          continue;
        }
        Diagnostics ignored;
        arena_pairs.push_back(ArenaPair{topic_for(m, gen.entry, &ignored), std::move(a), std::move(b)});
      }
      if (arena_pairs.empty()) {
        diagnostics.push_back(system + "/" + std::string(to_string(c)) + ": no comparable pairs");
        continue;
      }
      auto result = run_arena(system, arena_pairs, c, judges);
      results.push_back(arena_to_json(result));
      outcome.results.push_back(std::move(result));
    }
  }
  outcome.report = json{{"schema", "surveyeval.arena.v1"},
                        {"corpus_id", m.corpus_id},
                        {"config_digest", config.digest()},
                        {"judges", config.arena_judges},
                        {"results", results},
                        {"diagnostics", diagnostics}};
  write_json(layout::arena_json(config.out_dir), outcome.report);
  text::write_file(layout::arena_markdown(config.out_dir), arena_markdown(outcome.results));
  return outcome;
}

std::string cmd_report(const fs::path& report_path, ReportFormat format) {
  if (!fs::exists(report_path)) throw Error(ErrorCode::MissingFile, report_path.string());
  json report;
  try {
    report = json::parse(text::read_file(report_path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::PreconditionViolation, "malformed report: " + std::string(e.what()));
  }
  return format == ReportFormat::json ? report.dump(2) + "\n" : render_report_markdown(report);
}

std::vector<std::string> cmd_criteria_generate(const PipelineConfig& config, bool offline) {
  JudgeRuntime runtime(config, offline);
  auto& registry = runtime.templates();
  std::vector<std::string> created;
  for (auto kind : {TaskKind::outline_quality, TaskKind::content_quality, TaskKind::reference_quality}) {
    auto prefix = std::string(to_string(kind)) + ".v";
    int version = 1;
    for (const auto& id : registry.ids()) {
      if (id.rfind(prefix, 0) == 0) version = std::max(version, std::atoi(id.c_str() + prefix.size()));
    }
    JudgeTask task{TaskKind::criteria, {{"target", to_string(kind)}, {"current", default_criteria(kind)}}, "",
                   config.temperature};
    auto verdict = ask(task, runtime.primary());
    auto id = prefix + std::to_string(version + 1);
    registry.put(rubric_template(kind, verdict.label, id));
    created.push_back(id);
  }
  write_json(layout::templates_json(config.out_dir), registry.to_json());
  return created;
}

}  // namespace surveyeval
