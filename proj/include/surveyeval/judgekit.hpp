#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "surveyeval/component.hpp"
#include "surveyeval/error.hpp"

namespace surveyeval {

using json = nlohmann::json;

enum class TaskKind {
  children_coherence,
  outline_quality,
  content_quality,
  reference_quality,
  citation_support,
  reference_relevance,
  pairwise,
  topic_label,
  criteria,
};

std::string_view to_string(TaskKind kind);
TaskKind task_kind_from_string(std::string_view s);

inline constexpr double kDefaultTemperature = 0.5;

struct JudgeTask {
  TaskKind kind = TaskKind::outline_quality;
  json payload;
  std::string template_id;  // empty selects the kind's default template
  double temperature = kDefaultTemperature;
};

// What a provider sees for one call.
struct JudgeRequest {
  TaskKind kind;
  const json& payload;
  std::string template_id;
  std::string prompt;
  double temperature;
  int attempt;  // 0 for the first ask, then 1..n for re-asks
};

class JudgeProvider {
 public:
  virtual ~JudgeProvider() = default;
  virtual std::string model_id() const = 0;
  // Raw completion text. Throws Error(ProviderUnavailable).
  virtual std::string complete(const JudgeRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Prompt templates

struct PromptTemplate {
  std::string id;  // "<kind>.v<version>"
  TaskKind kind;
  std::string text;  // with {{field}} placeholders
};

class TemplateRegistry {
 public:
  static const TemplateRegistry& builtin();

  const PromptTemplate& get(std::string_view id) const;
  const PromptTemplate& default_for(TaskKind kind) const;
  bool contains(std::string_view id) const { return templates_.contains(std::string(id)); }
  std::vector<std::string> ids() const;

  // Adds or replaces a template and makes it the default for its kind.
  void put(PromptTemplate t);

  json to_json() const;
  static TemplateRegistry from_json(const json& j);

 private:
  std::map<std::string, PromptTemplate> templates_;
  std::map<TaskKind, std::string> defaults_;
};

// Rubric criteria shipped with the v1 templates (outline, content and
// reference quality); empty for other kinds.
std::string default_criteria(TaskKind kind);

// The builtin prompt for `kind` with `criteria` in its rubric slot.
PromptTemplate rubric_template(TaskKind kind, std::string_view criteria, std::string id);

// Substitutes {{field}} placeholders from the payload. Strings are inserted
// verbatim, string arrays as a numbered list.
std::string render_prompt(const PromptTemplate& tmpl, const json& payload);

// ---------------------------------------------------------------------------
// Verdicts

enum class Winner { A, B };

struct Verdict {
  TaskKind kind = TaskKind::outline_quality;
  std::vector<bool> flags;  // children_coherence, citation_support, reference_relevance
  std::vector<int> scores;  // outline/reference quality (1), content quality (5)
  std::optional<Winner> winner;
  bool tie = false;
  std::string label;  // topic_label, criteria
  std::string raw_text;
};

// Tokens of the last fenced block, one per line; "label: value" and list
// numbering prefixes are stripped. Empty when no fenced block exists.
std::optional<std::vector<std::string>> fenced_tokens(std::string_view raw);

// Throws Error(UnparseableVerdict). `expected_items` is the number of judged
// items for boolean verdicts.
Verdict parse_verdict(TaskKind kind, std::string_view raw, std::size_t expected_items = 1);

// ---------------------------------------------------------------------------
// Cache

struct CacheEntry {
  std::string digest;
  std::string model_id;
  std::string template_id;
  std::string response;
  std::int64_t timestamp = 0;
};

std::string request_digest(std::string_view model_id, std::string_view template_id, std::string_view prompt);

// Append-only JSON-lines response cache. Safe for concurrent readers and
// serialized appends.
class JudgeCache {
 public:
  JudgeCache() = default;  // memory only
  explicit JudgeCache(std::filesystem::path path);

  std::optional<std::string> lookup(const std::string& digest) const;
  // First write for a digest wins; later stores of the same digest are ignored.
  void store(CacheEntry entry);

  std::size_t size() const;
  std::size_t skipped_lines() const { return skipped_lines_; }
  // Digest over (digest, response) pairs; independent of timestamps and order.
  std::string content_digest() const;

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, CacheEntry> entries_;
  std::size_t skipped_lines_ = 0;
};

// ---------------------------------------------------------------------------
// Client

struct JudgeOptions {
  double temperature = kDefaultTemperature;
  bool offline = false;  // cache-only
  std::size_t context_budget_chars = 400'000;
  int max_reasks = 2;
};

class JudgeClient {
 public:
  // `provider` may be null, which behaves as offline.
  JudgeClient(std::string model_id, JudgeProvider* provider, JudgeCache& cache, JudgeOptions options = {},
              const TemplateRegistry* templates = &TemplateRegistry::builtin(), std::ptrdiff_t max_in_flight = 4);

  const std::string& model_id() const { return model_id_; }
  const JudgeOptions& options() const { return options_; }
  const TemplateRegistry& templates() const { return *templates_; }
  JudgeCache& cache() { return cache_; }

  // Cached raw completion for one rendered attempt.
  std::string complete(const JudgeTask& task, const std::string& prompt, int attempt);

  std::uint64_t provider_calls() const { return provider_calls_; }

 private:
  std::string model_id_;
  JudgeProvider* provider_;
  JudgeCache& cache_;
  JudgeOptions options_;
  const TemplateRegistry* templates_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
  std::atomic<std::uint64_t> provider_calls_{0};
};

// One cached ask, parsed. Cache hit bypasses the provider; a miss stores the
// raw response before parsing.
Verdict cached_call(const JudgeTask& task, JudgeClient& client, std::size_t expected_items = 1, int attempt = 0);

// cached_call with up to `options.max_reasks` re-asks on unparseable output.
Verdict ask(const JudgeTask& task, JudgeClient& client, std::size_t expected_items = 1);

// Head 60% / tail 20% of the budget with an elision marker in between.
std::string truncate_for_budget(std::string_view content, std::size_t budget_chars);

// ---------------------------------------------------------------------------
// Judged quantities

struct CoherenceVerdict {
  std::vector<bool> coherent;
  bool failed = false;
  std::string diagnostic;
};

CoherenceVerdict judge_children_coherence(std::string_view topic, const std::vector<std::string>& parent_path,
                                          const std::vector<std::string>& children, JudgeClient& client);

using ContentScores = std::array<int, 5>;  // Coverage, Structure, Relevance, Language, Criticalness
inline constexpr std::array<std::string_view, 5> kContentDimensions = {"coverage", "structure", "relevance",
                                                                       "language", "criticalness"};

ContentScores judge_content_quality(std::string_view topic, std::string_view content, JudgeClient& client);
int judge_outline_quality(std::string_view topic, std::string_view rendered_outline, JudgeClient& client);
int judge_reference_quality(std::string_view topic, const std::vector<std::string>& references,
                            JudgeClient& client);
std::vector<bool> judge_citation_support(std::string_view sentence, const std::vector<std::string>& cited_references,
                                         JudgeClient& client);
bool judge_reference_relevance(std::string_view topic, std::string_view reference_text, JudgeClient& client);

struct PairwiseVerdict {
  Winner winner = Winner::A;
  bool fallback = false;  // tie persisted after re-ask; resolved to A
};

PairwiseVerdict judge_pairwise(Component dimension, std::string_view topic, std::string_view candidate_a,
                               std::string_view candidate_b, JudgeClient& client);

std::string judge_topic_label(std::string_view title, JudgeClient& client);

}  // namespace surveyeval
