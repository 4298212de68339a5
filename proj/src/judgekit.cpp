#include "surveyeval/judgekit.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>
#include <fstream>

#include "surveyeval/digest.hpp"
#include "surveyeval/text.hpp"

namespace surveyeval {

namespace {

constexpr std::string_view kAnswerFormat =
    "Reply with your answer inside a fenced block tagged `verdict`, one token per line, and nothing "
    "else inside the block:\n```verdict\n...\n```";

struct BuiltinTemplate {
  TaskKind kind;
  const char* text;
};

// Version 1 rubrics. Changing any text here requires a new template id.
const BuiltinTemplate kBuiltins[] = {
    {TaskKind::children_coherence,
     "You are reviewing the outline of an academic survey on \"{{topic}}\".\n"
     "Parent section: {{parent}}\n"
     "Child sections:\n{{children}}\n\n"
     "For each child section, in order, decide whether it logically belongs under and follows from the "
     "parent section. Answer `yes` or `no` for each child, one per line.\n"},
    {TaskKind::outline_quality,
     "You are an expert reviewer assessing the outline of an academic survey on \"{{topic}}\".\n"
     "Criteria:\n{{criteria}}\n\nOutline:\n{{outline}}\n\n"
     "Give one overall integer score from 1 (poor) to 5 (excellent).\n"},
    {TaskKind::content_quality,
     "You are an expert reviewer assessing the body text of an academic survey on \"{{topic}}\".\n"
     "Criteria:\n{{criteria}}\n\nSurvey text:\n{{content}}\n\n"
     "Give five integer scores from 1 to 5, one per line, in this order: coverage, structure, relevance, "
     "language, criticalness.\n"},
    {TaskKind::reference_quality,
     "You are an expert reviewer assessing the bibliography of an academic survey on \"{{topic}}\".\n"
     "Criteria:\n{{criteria}}\n\nReferences:\n{{references}}\n\n"
     "Give one overall integer score from 1 (poor) to 5 (excellent).\n"},
    {TaskKind::citation_support,
     "Statement from a survey:\n\"{{sentence}}\"\n\nCited references:\n{{references}}\n\n"
     "For each cited reference, in order, decide whether it supports the statement. Answer `yes` or `no` "
     "for each reference, one per line.\n"},
    {TaskKind::reference_relevance,
     "Survey topic: \"{{topic}}\"\nReference: {{reference}}\n\n"
     "Is this reference relevant to the survey topic? Answer `yes` or `no`.\n"},
    {TaskKind::pairwise,
     "Two candidate survey {{dimension}}s on the topic \"{{topic}}\" follow.\n\n"
     "Candidate A:\n{{candidate_a}}\n\nCandidate B:\n{{candidate_b}}\n\n"
     "Which candidate has the better {{dimension}}? You must choose. Answer `A` or `B`.\n"},
    {TaskKind::topic_label,
     "Survey title: \"{{title}}\"\n\n"
     "Write a concise topic label (a short noun phrase) describing the research area this survey covers. "
     "Put the label on a single line.\n"},
    {TaskKind::criteria,
     "You maintain the grading rubric for the {{target}} task of a survey evaluation benchmark.\n"
     "Current criteria:\n{{current}}\n\n"
     "Write improved grading criteria as a short list, one criterion per line.\n"},
};

}  // namespace

std::string default_criteria(TaskKind kind) {
  switch (kind) {
    case TaskKind::outline_quality:
      return "- Sections cover the main sub-areas of the topic.\n"
             "- Headings are specific, parallel and non-overlapping.\n"
             "- Nesting depth and ordering reflect a logical progression.";
    case TaskKind::content_quality:
      return "- Coverage: breadth and depth with which the central sub-topics are treated.\n"
             "- Structure: logical flow and organization of the material.\n"
             "- Relevance: how closely the text stays on the survey topic.\n"
             "- Language: clarity, precision and academic register of the writing.\n"
             "- Criticalness: comparison, critique and insight beyond summary.";
    case TaskKind::reference_quality:
      return "- References are pertinent to the topic.\n"
             "- References span venues, years and research groups.\n"
             "- The bibliography is sufficient to back the survey's claims.";
    default:
      return "";
  }
}

PromptTemplate rubric_template(TaskKind kind, std::string_view criteria, std::string id) {
  for (const auto& b : kBuiltins) {
    if (b.kind != kind) continue;
    std::string body = b.text;
    if (auto p = body.find("{{criteria}}"); p != std::string::npos) body.replace(p, 12, criteria);
    body += "\n";
    body += kAnswerFormat;
    return PromptTemplate{std::move(id), kind, std::move(body)};
  }
  throw Error(ErrorCode::PreconditionViolation, "no builtin template for " + std::string(to_string(kind)));
}

namespace {

bool is_cont_byte(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }

std::string strip_token(std::string_view tok) {
  tok = text::trim(tok);
  // "1." / "1)" / "-" list prefixes
  std::size_t i = 0;
  while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) ++i;
  if (i > 0 && i < tok.size() && (tok[i] == '.' || tok[i] == ')') && i + 1 < tok.size() && tok[i + 1] == ' ') {
    tok = text::trim(tok.substr(i + 1));
  } else if (tok.starts_with("- ") || tok.starts_with("* ")) {
    tok = text::trim(tok.substr(2));
  }
  auto colon = tok.rfind(':');
  if (colon != std::string_view::npos) tok = text::trim(tok.substr(colon + 1));
  while (!tok.empty() && (tok.back() == '.' || tok.back() == ',')) tok.remove_suffix(1);
  return text::to_lower(tok);
}

std::optional<bool> parse_bool(const std::string& tok) {
  static const char* kTrue[] = {"yes", "y", "true", "supported", "supports", "coherent", "relevant"};
  static const char* kFalse[] = {"no", "n", "false", "unsupported", "not supported", "incoherent", "irrelevant",
                                 "not relevant"};
  for (auto* t : kTrue) if (tok == t) return true;
  for (auto* t : kFalse) if (tok == t) return false;
  return std::nullopt;
}

std::optional<int> parse_score(const std::string& tok) {
  if (tok.size() != 1 || tok[0] < '0' || tok[0] > '9') return std::nullopt;
  return tok[0] - '0';
}

[[noreturn]] void unparseable(TaskKind kind, const std::string& why) {
  throw Error(ErrorCode::UnparseableVerdict, std::string(to_string(kind)) + ": " + why);
}

json string_list(const std::vector<std::string>& items) {
  json arr = json::array();
  for (const auto& s : items) arr.push_back(s);
  return arr;
}

}  // namespace

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::children_coherence: return "children_coherence";
    case TaskKind::outline_quality: return "outline_quality";
    case TaskKind::content_quality: return "content_quality";
    case TaskKind::reference_quality: return "reference_quality";
    case TaskKind::citation_support: return "citation_support";
    case TaskKind::reference_relevance: return "reference_relevance";
    case TaskKind::pairwise: return "pairwise";
    case TaskKind::topic_label: return "topic_label";
    case TaskKind::criteria: return "criteria";
  }
  return "unknown";
}

TaskKind task_kind_from_string(std::string_view s) {
  for (const auto& b : kBuiltins) {
    if (to_string(b.kind) == s) return b.kind;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown task kind '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

const TemplateRegistry& TemplateRegistry::builtin() {
  static const TemplateRegistry registry = [] {
    TemplateRegistry r;
    for (const auto& b : kBuiltins) {
      r.put(rubric_template(b.kind, default_criteria(b.kind), std::string(to_string(b.kind)) + ".v1"));
    }
    return r;
  }();
  return registry;
}

const PromptTemplate& TemplateRegistry::get(std::string_view id) const {
  auto it = templates_.find(std::string(id));
  if (it == templates_.end()) {
    throw Error(ErrorCode::PreconditionViolation, "unknown prompt template '" + std::string(id) + "'");
  }
  return it->second;
}

const PromptTemplate& TemplateRegistry::default_for(TaskKind kind) const {
  auto it = defaults_.find(kind);
  if (it == defaults_.end()) {
    throw Error(ErrorCode::PreconditionViolation, "no template for task " + std::string(to_string(kind)));
  }
  return get(it->second);
}

std::vector<std::string> TemplateRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, t] : templates_) out.push_back(id);
  return out;
}

void TemplateRegistry::put(PromptTemplate t) {
  defaults_[t.kind] = t.id;
  auto id = t.id;
  templates_[id] = std::move(t);
}

json TemplateRegistry::to_json() const {
  json arr = json::array();
  for (const auto& [kind, id] : defaults_) {
    const auto& t = get(id);
    arr.push_back({{"id", t.id}, {"kind", to_string(t.kind)}, {"text", t.text}});
  }
  return json{{"templates", arr}};
}

TemplateRegistry TemplateRegistry::from_json(const json& j) {
  TemplateRegistry r = builtin();
  try {
    for (const auto& t : j.at("templates")) {
      r.put(PromptTemplate{t.at("id").get<std::string>(), task_kind_from_string(t.at("kind").get<std::string>()),
                           t.at("text").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("template file: ") + e.what());
  }
  return r;
}

std::string render_prompt(const PromptTemplate& tmpl, const json& payload) {
  std::string out;
  std::string_view src = tmpl.text;
  std::size_t pos = 0;
  while (true) {
    auto open = src.find("{{", pos);
    if (open == std::string_view::npos) break;
    auto close = src.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(src.substr(pos, open - pos));
    std::string field(src.substr(open + 2, close - open - 2));
    if (!payload.is_object() || !payload.contains(field)) {
      throw Error(ErrorCode::PreconditionViolation, "template " + tmpl.id + " needs payload field '" + field + "'");
    }
    const auto& value = payload.at(field);
    if (value.is_string()) {
      out.append(value.get<std::string>());
    } else if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        out.append(std::to_string(i + 1)).append(". ");
        out.append(value[i].is_string() ? value[i].get<std::string>() : value[i].dump());
        if (i + 1 < value.size()) out.push_back('\n');
      }
    } else {
      out.append(value.dump());
    }
    pos = close + 2;
  }
  out.append(src.substr(pos));
  return out;
}

// ---------------------------------------------------------------------------

std::optional<std::vector<std::string>> fenced_tokens(std::string_view raw) {
  auto lines = text::split_lines(raw);
  std::optional<std::vector<std::string>> last;
  std::optional<std::vector<std::string>> current;
  for (auto line : lines) {
    auto t = text::trim(line);
    if (t.starts_with("```")) {
      if (current) {
        last = std::move(current);
        current.reset();
      } else {
        current.emplace();
      }
      continue;
    }
    if (current && !t.empty()) current->emplace_back(t);
  }
  return last;
}

Verdict parse_verdict(TaskKind kind, std::string_view raw, std::size_t expected_items) {
  Verdict v;
  v.kind = kind;
  v.raw_text = std::string(raw);
  auto block = fenced_tokens(raw);
  if (!block) unparseable(kind, "no fenced verdict block");
  const auto& lines = *block;
  std::vector<std::string> tokens;
  for (const auto& l : lines) tokens.push_back(strip_token(l));

  switch (kind) {
    case TaskKind::children_coherence:
    case TaskKind::citation_support:
    case TaskKind::reference_relevance: {
      if (kind == TaskKind::reference_relevance) expected_items = 1;
      if (tokens.size() != expected_items) {
        unparseable(kind, "expected " + std::to_string(expected_items) + " answers, got " +
                              std::to_string(tokens.size()));
      }
      for (const auto& tok : tokens) {
        auto b = parse_bool(tok);
        if (!b) unparseable(kind, "not a yes/no answer: '" + tok + "'");
        v.flags.push_back(*b);
      }
      break;
    }
    case TaskKind::outline_quality:
    case TaskKind::reference_quality:
    case TaskKind::content_quality: {
      std::size_t want = kind == TaskKind::content_quality ? 5 : 1;
      if (tokens.size() != want) {
        unparseable(kind, "expected " + std::to_string(want) + " scores, got " + std::to_string(tokens.size()));
      }
      for (const auto& tok : tokens) {
        auto s = parse_score(tok);
        if (!s || *s < 1 || *s > 5) unparseable(kind, "score out of range 1-5: '" + tok + "'");
        v.scores.push_back(*s);
      }
      break;
    }
    case TaskKind::pairwise: {
      if (tokens.size() != 1) unparseable(kind, "expected a single choice");
      const auto& tok = tokens.front();
      if (tok == "a") v.winner = Winner::A;
      else if (tok == "b") v.winner = Winner::B;
      else if (tok == "tie" || tok == "equal" || tok == "both") v.tie = true;
      else unparseable(kind, "not a choice: '" + tok + "'");
      break;
    }
    case TaskKind::topic_label:
    case TaskKind::criteria: {
      std::vector<std::string> kept(lines.begin(), lines.end());
      if (kept.empty()) unparseable(kind, "empty answer");
      v.label = kind == TaskKind::topic_label ? text::join(kept, " ") : text::join(kept, "\n");
      if (kind == TaskKind::topic_label) {
        auto& l = v.label;
        while (!l.empty() && (l.front() == '"' || l.front() == '\'')) l.erase(l.begin());
        while (!l.empty() && (l.back() == '"' || l.back() == '\'')) l.pop_back();
        if (text::trim(l).empty()) unparseable(kind, "empty label");
      }
      break;
    }
  }
  return v;
}

// ---------------------------------------------------------------------------

std::string request_digest(std::string_view model_id, std::string_view template_id, std::string_view prompt) {
  Sha256 h;
  h.update(model_id).update(std::string_view("\0", 1)).update(template_id).update(std::string_view("\0", 1));
  h.update(prompt);
  return h.finish_hex();
}

JudgeCache::JudgeCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(*path_);
  if (!in) return;  // created on first store
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      CacheEntry e{j.at("digest").get<std::string>(), j.at("model_id").get<std::string>(),
                   j.at("template_id").get<std::string>(), j.at("response").get<std::string>(),
                   j.value("timestamp", std::int64_t{0})};
      auto key = e.digest;
      entries_.try_emplace(std::move(key), std::move(e));
    } catch (const json::exception&) {
      ++skipped_lines_;  // torn tail write
    }
  }
}

std::optional<std::string> JudgeCache::lookup(const std::string& digest) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(digest);
  if (it == entries_.end()) return std::nullopt;
  return it->second.response;
}

void JudgeCache::store(CacheEntry entry) {
  std::unique_lock lock(mutex_);
  if (entries_.contains(entry.digest)) return;
  if (path_) {
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
    std::ofstream out(*path_, std::ios::app);
    if (!out) throw Error(ErrorCode::MissingFile, "cannot append to cache " + path_->string());
    json j{{"digest", entry.digest},
           {"model_id", entry.model_id},
           {"template_id", entry.template_id},
           {"response", entry.response},
           {"timestamp", entry.timestamp}};
    out << j.dump() << '\n';
  }
  auto key = entry.digest;
  entries_.emplace(std::move(key), std::move(entry));
}

std::size_t JudgeCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::string JudgeCache::content_digest() const {
  std::shared_lock lock(mutex_);
  Sha256 h;
  for (const auto& [digest, e] : entries_) {
    h.update(digest).update(std::string_view("\0", 1)).update(e.response).update(std::string_view("\n", 1));
  }
  return h.finish_hex();
}

// ---------------------------------------------------------------------------

JudgeClient::JudgeClient(std::string model_id, JudgeProvider* provider, JudgeCache& cache, JudgeOptions options,
                         const TemplateRegistry* templates, std::ptrdiff_t max_in_flight)
    : model_id_(std::move(model_id)),
      provider_(provider),
      cache_(cache),
      options_(options),
      templates_(templates),
      in_flight_(std::make_unique<std::counting_semaphore<>>(std::max<std::ptrdiff_t>(1, max_in_flight))) {
  if (options_.temperature < 0.0 || options_.temperature > 2.0) {
    throw Error(ErrorCode::InvalidConfig, "temperature must lie in [0, 2]");
  }
}

std::string JudgeClient::complete(const JudgeTask& task, const std::string& prompt, int attempt) {
  const auto& tmpl = task.template_id.empty() ? templates_->default_for(task.kind) : templates_->get(task.template_id);
  auto digest = request_digest(model_id_, tmpl.id, prompt);
  if (auto hit = cache_.lookup(digest)) return *hit;
  if (provider_ == nullptr || options_.offline) {
    throw Error(ErrorCode::ProviderUnavailable, "cache miss in offline mode (" + std::string(to_string(task.kind)) +
                                                    ", digest " + digest.substr(0, 12) + ")");
  }
  JudgeRequest request{task.kind, task.payload, tmpl.id, prompt, task.temperature, attempt};
  std::string response;
  in_flight_->acquire();
  try {
    response = provider_->complete(request);
  } catch (...) {
    in_flight_->release();
    throw;
  }
  in_flight_->release();
  ++provider_calls_;
  cache_.store(CacheEntry{digest, model_id_, tmpl.id, response, static_cast<std::int64_t>(std::time(nullptr))});
  return response;
}

Verdict cached_call(const JudgeTask& task, JudgeClient& client, std::size_t expected_items, int attempt) {
  if (task.temperature < 0.0 || task.temperature > 2.0) {
    throw Error(ErrorCode::InvalidConfig, "temperature must lie in [0, 2]");
  }
  const auto& tmpl = task.template_id.empty() ? client.templates().default_for(task.kind)
                                              : client.templates().get(task.template_id);
  if (tmpl.kind != task.kind) {
    throw Error(ErrorCode::PreconditionViolation, "template " + tmpl.id + " does not match task kind");
  }
  auto prompt = render_prompt(tmpl, task.payload);
  if (attempt > 0) {
    prompt += "\n\nRe-ask " + std::to_string(attempt) +
              ": your previous reply could not be read. Use exactly the fenced `verdict` block format.";
  }
  auto raw = client.complete(task, prompt, attempt);
  return parse_verdict(task.kind, raw, expected_items);
}

Verdict ask(const JudgeTask& task, JudgeClient& client, std::size_t expected_items) {
  for (int attempt = 0;; ++attempt) {
    try {
      return cached_call(task, client, expected_items, attempt);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnparseableVerdict || attempt >= client.options().max_reasks) throw;
    }
  }
}

std::string truncate_for_budget(std::string_view content, std::size_t budget_chars) {
  if (content.size() <= budget_chars) return std::string(content);
  std::size_t head = budget_chars * 6 / 10;
  std::size_t tail = budget_chars * 2 / 10;
  while (head > 0 && is_cont_byte(content[head])) --head;
  std::size_t tail_start = content.size() - tail;
  while (tail_start < content.size() && is_cont_byte(content[tail_start])) ++tail_start;
  std::string out(content.substr(0, head));
  out += "\n[... " + std::to_string(tail_start - head) + " characters elided ...]\n";
  out.append(content.substr(tail_start));
  return out;
}

// ---------------------------------------------------------------------------

namespace {
JudgeTask make_task(TaskKind kind, json payload, const JudgeClient& client) {
  JudgeTask t;
  t.kind = kind;
  t.payload = std::move(payload);
  t.temperature = client.options().temperature;
  return t;
}
}  // namespace

CoherenceVerdict judge_children_coherence(std::string_view topic, const std::vector<std::string>& parent_path,
                                          const std::vector<std::string>& children, JudgeClient& client) {
  if (children.empty()) throw Error(ErrorCode::PreconditionViolation, "children must be non-empty");
  std::string parent = parent_path.empty() ? "(survey root) " + std::string(topic) : text::join(parent_path, " > ");
  auto task = make_task(TaskKind::children_coherence,
                        {{"topic", topic}, {"parent", parent}, {"children", string_list(children)}}, client);
  CoherenceVerdict out;
  try {
    out.coherent = ask(task, client, children.size()).flags;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UnparseableVerdict) throw;
    out.coherent.assign(children.size(), false);
    out.failed = true;
    out.diagnostic = e.what();
  }
  return out;
}

ContentScores judge_content_quality(std::string_view topic, std::string_view content, JudgeClient& client) {
  if (text::trim(content).empty()) throw Error(ErrorCode::PreconditionViolation, "content must be non-empty");
  auto task = make_task(
      TaskKind::content_quality,
      {{"topic", topic}, {"content", truncate_for_budget(content, client.options().context_budget_chars)}}, client);
  auto v = ask(task, client);
  ContentScores s{};
  std::copy(v.scores.begin(), v.scores.end(), s.begin());
  return s;
}

int judge_outline_quality(std::string_view topic, std::string_view rendered_outline, JudgeClient& client) {
  if (text::trim(rendered_outline).empty()) throw Error(ErrorCode::PreconditionViolation, "outline must be non-empty");
  auto task = make_task(TaskKind::outline_quality, {{"topic", topic}, {"outline", rendered_outline}}, client);
  return ask(task, client).scores.front();
}

int judge_reference_quality(std::string_view topic, const std::vector<std::string>& references,
                            JudgeClient& client) {
  if (references.empty()) throw Error(ErrorCode::PreconditionViolation, "reference list must be non-empty");
  auto task =
      make_task(TaskKind::reference_quality, {{"topic", topic}, {"references", string_list(references)}}, client);
  return ask(task, client).scores.front();
}

std::vector<bool> judge_citation_support(std::string_view sentence, const std::vector<std::string>& cited_references,
                                         JudgeClient& client) {
  if (cited_references.empty()) throw Error(ErrorCode::PreconditionViolation, "no cited references");
  auto task = make_task(TaskKind::citation_support,
                        {{"sentence", sentence}, {"references", string_list(cited_references)}}, client);
  return ask(task, client, cited_references.size()).flags;
}

bool judge_reference_relevance(std::string_view topic, std::string_view reference_text, JudgeClient& client) {
  auto task = make_task(TaskKind::reference_relevance, {{"topic", topic}, {"reference", reference_text}}, client);
  return ask(task, client).flags.front();
}

PairwiseVerdict judge_pairwise(Component dimension, std::string_view topic, std::string_view candidate_a,
                               std::string_view candidate_b, JudgeClient& client) {
  auto budget = client.options().context_budget_chars / 2;
  auto task = make_task(TaskKind::pairwise,
                        {{"dimension", to_string(dimension)},
                         {"topic", topic},
                         {"candidate_a", truncate_for_budget(candidate_a, budget)},
                         {"candidate_b", truncate_for_budget(candidate_b, budget)}},
                        client);
  auto v = ask(task, client);
  if (v.tie) {
    // One re-ask on a tie, continuing the attempt numbering past parse re-asks.
    try {
      v = cached_call(task, client, 1, client.options().max_reasks + 1);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnparseableVerdict) throw;
      v.tie = true;
    }
  }
  if (v.tie || !v.winner) return PairwiseVerdict{Winner::A, true};
  return PairwiseVerdict{*v.winner, false};
}

std::string judge_topic_label(std::string_view title, JudgeClient& client) {
  if (text::trim(title).empty()) throw Error(ErrorCode::PreconditionViolation, "title must be non-empty");
  auto task = make_task(TaskKind::topic_label, {{"title", title}}, client);
  return ask(task, client).label;
}

}  // namespace surveyeval
