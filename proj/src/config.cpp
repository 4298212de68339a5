#include "surveyeval/config.hpp"

#include <charconv>

#include "surveyeval/digest.hpp"
#include "surveyeval/text.hpp"

namespace surveyeval {

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); }

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    invalid(std::string(key) + ": not a number: '" + std::string(value) + "'");
  }
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    std::string s(value);
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    invalid(std::string(key) + ": not a number: '" + std::string(value) + "'");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, std::string_view value) {
  std::filesystem::path p{std::string(value)};
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

std::string file_digest(const std::filesystem::path& p) {
  if (p.empty()) return "";
  return sha256_hex(text::read_file(p));
}

}  // namespace

void PipelineConfig::validate() const {
  if (judge_provider != "mock" && judge_provider != "http") invalid("judge.provider must be mock or http");
  if (embed_provider != "mock" && embed_provider != "http") invalid("embed.provider must be mock or http");
  if (judge_provider == "http" && judge_base_url.empty()) invalid("judge.base_url is required for http");
  if (embed_provider == "http" && embed_base_url.empty()) invalid("embed.base_url is required for http");
  if (embed_provider == "mock" && embed_dimension < 1) invalid("embed.dimension must be >= 1 for the mock provider");
  if (embed_dimension < 0) invalid("embed.dimension must be >= 0");
  if (!(temperature >= 0.0 && temperature <= 2.0)) invalid("temperature must lie in [0, 2]");
  if (top_n.outline < 1 || top_n.content < 1 || top_n.reference < 1) invalid("top_n values must be >= 1");
  if (max_in_flight < 1) invalid("max_in_flight must be >= 1");
  if (max_reasks < 0) invalid("max_reasks must be >= 0");
  if (context_budget_chars < 1000) invalid("context_budget_chars must be >= 1000");
  if (timeout_seconds < 1) invalid("timeout_seconds must be >= 1");
  if (arena_judges.empty()) invalid("arena.judges must name at least one judge");
}

std::filesystem::path PipelineConfig::cache_file() const {
  return cache_path.empty() ? out_dir / "judge_cache.jsonl" : cache_path;
}

std::filesystem::path PipelineConfig::index_file() const {
  return index_path.empty() ? out_dir / "index.v1.bin" : index_path;
}

std::string PipelineConfig::canonical() const {
  std::string s;
  auto kv = [&s](std::string_view k, const std::string& v) {
    s += k;
    s += '=';
    s += v;
    s += '\n';
  };
  kv("judge.provider", judge_provider);
  kv("judge.base_url", judge_base_url);
  kv("judge.model", judge_model);
  kv("embed.provider", embed_provider);
  kv("embed.base_url", embed_base_url);
  kv("embed.model", embed_model);
  kv("embed.dimension", std::to_string(embed_dimension));
  kv("temperature", json(temperature).dump());
  kv("top_n.outline", std::to_string(top_n.outline));
  kv("top_n.content", std::to_string(top_n.content));
  kv("top_n.reference", std::to_string(top_n.reference));
  kv("max_reasks", std::to_string(max_reasks));
  kv("context_budget_chars", std::to_string(context_budget_chars));
  kv("seed", std::to_string(seed));
  kv("mock.script", file_digest(mock_script));
  kv("templates", file_digest(templates_path));
  kv("arena.judges", text::join(arena_judges, ","));
  return s;
}

std::string PipelineConfig::digest() const { return sha256_hex(canonical()); }

PipelineConfig PipelineConfig::parse(std::string_view contents, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  int line_no = 0;
  for (auto raw : text::split_lines(contents)) {
    ++line_no;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) invalid("line " + std::to_string(line_no) + ": expected key = value");
    auto key = std::string(text::trim(line.substr(0, eq)));
    auto value = text::trim(line.substr(eq + 1));
    auto at = "line " + std::to_string(line_no) + ": " + key;

    if (key == "judge.provider") c.judge_provider = value;
    else if (key == "judge.base_url") c.judge_base_url = value;
    else if (key == "judge.model") c.judge_model = value;
    else if (key == "embed.provider") c.embed_provider = value;
    else if (key == "embed.base_url") c.embed_base_url = value;
    else if (key == "embed.model") c.embed_model = value;
    else if (key == "embed.dimension") c.embed_dimension = parse_number<int>(at, value);
    else if (key == "temperature") c.temperature = parse_double(at, value);
    else if (key == "top_n.outline") c.top_n.outline = parse_number<int>(at, value);
    else if (key == "top_n.content") c.top_n.content = parse_number<int>(at, value);
    else if (key == "top_n.reference") c.top_n.reference = parse_number<int>(at, value);
    else if (key == "max_in_flight") c.max_in_flight = parse_number<int>(at, value);
    else if (key == "max_reasks") c.max_reasks = parse_number<int>(at, value);
    else if (key == "context_budget_chars") c.context_budget_chars = parse_number<std::size_t>(at, value);
    else if (key == "timeout_seconds") c.timeout_seconds = parse_number<int>(at, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(at, value);
    else if (key == "out_dir") c.out_dir = resolve(base_dir, value);
    else if (key == "cache_path") c.cache_path = resolve(base_dir, value);
    else if (key == "index_path") c.index_path = resolve(base_dir, value);
    else if (key == "mock.script") c.mock_script = resolve(base_dir, value);
    else if (key == "templates_path") c.templates_path = resolve(base_dir, value);
    else if (key == "arena.judges") {
      c.arena_judges.clear();
      std::string_view rest = value;
      while (!rest.empty()) {
        auto comma = rest.find(',');
        auto id = text::trim(rest.substr(0, comma));
        if (!id.empty()) c.arena_judges.emplace_back(id);
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      }
    } else if (key.find("api_key") != std::string::npos) {
      invalid(at + ": API keys are read from JUDGE_API_KEY / EMBED_API_KEY, not the config file");
    } else {
      invalid(at + ": unknown key");
    }
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  return parse(text::read_file(path), path.parent_path());
}

}  // namespace surveyeval
