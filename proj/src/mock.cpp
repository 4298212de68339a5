#include "surveyeval/mock.hpp"

#include <cmath>

#include "surveyeval/digest.hpp"

namespace surveyeval {

namespace {

double unit_interval(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

double coin(std::uint64_t seed, std::string_view digest, std::size_t item) {
  return unit_interval(seeded_hash64(std::string(digest) + "#" + std::to_string(item), seed));
}

std::string fence(const std::vector<std::string>& lines) {
  std::string out = "```verdict\n";
  for (const auto& l : lines) out += l + "\n";
  out += "```\n";
  return out;
}

std::size_t item_count(const JudgeRequest& r) {
  switch (r.kind) {
    case TaskKind::children_coherence: return r.payload.at("children").size();
    case TaskKind::citation_support: return r.payload.at("references").size();
    default: return 1;
  }
}

std::vector<std::string> booleans(const json& spec, std::size_t n, std::uint64_t seed, std::string_view digest) {
  std::vector<std::string> out;
  auto yn = [](bool b) { return std::string(b ? "yes" : "no"); };
  if (spec.is_boolean()) {
    out.assign(n, yn(spec.get<bool>()));
  } else if (spec.is_array()) {
    for (const auto& b : spec) out.push_back(yn(b.get<bool>()));
  } else if (spec.is_object() && spec.value("mode", "") == "coin") {
    double p = spec.value("p", 0.5);
    for (std::size_t i = 0; i < n; ++i) out.push_back(yn(coin(seed, digest, i) < p));
  } else if (spec.is_object() && spec.value("mode", "") == "alternate") {
    for (std::size_t i = 0; i < n; ++i) out.push_back(yn(i % 2 == 0));
  } else {
    throw Error(ErrorCode::InvalidConfig, "bad boolean mock spec: " + spec.dump());
  }
  return out;
}

std::vector<std::string> scores(const json& spec, std::size_t n, std::uint64_t seed, std::string_view digest) {
  std::vector<std::string> out;
  if (spec.is_number_integer()) {
    out.assign(n, std::to_string(spec.get<int>()));
  } else if (spec.is_array()) {
    for (const auto& s : spec) out.push_back(std::to_string(s.get<int>()));
  } else if (spec.is_object() && spec.value("mode", "") == "uniform") {
    int lo = spec.value("min", 1), hi = spec.value("max", 5);
    for (std::size_t i = 0; i < n; ++i) {
      auto span = static_cast<double>(hi - lo + 1);
      out.push_back(std::to_string(lo + static_cast<int>(coin(seed, digest, i) * span)));
    }
  } else {
    throw Error(ErrorCode::InvalidConfig, "bad score mock spec: " + spec.dump());
  }
  return out;
}

}  // namespace

Vector mock_embed(std::string_view text, std::uint64_t seed, Eigen::Index dimension) {
  const std::uint64_t base = seeded_hash64(text, seed);
  Vector v(dimension);
  for (Eigen::Index i = 0; i < dimension; ++i) {
    v[i] = 2.0 * unit_interval(mix64(base + static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ULL)) - 1.0;
  }
  return normalized_or_throw(v);
}

Vector vector_with_cosine(const Vector& anchor, double target, std::string_view salt, std::uint64_t seed) {
  if (target < -1.0 || target > 1.0) throw Error(ErrorCode::PreconditionViolation, "target cosine outside [-1, 1]");
  Vector a = normalized_or_throw(anchor);
  Vector u = mock_embed(salt, seed, a.size());
  u -= u.dot(a) * a;
  u = normalized_or_throw(u);
  return target * a + std::sqrt(1.0 - target * target) * u;
}

Vector MockEmbeddingProvider::embed_one(const std::string& text) const {
  if (auto it = fixed_.find(text); it != fixed_.end()) return it->second;
  if (auto it = relative_.find(text); it != relative_.end()) {
    return vector_with_cosine(embed_one(it->second.first), it->second.second, text, seed_);
  }
  return mock_embed(text, seed_, dimension_);
}

std::vector<Vector> MockEmbeddingProvider::embed(std::span<const std::string> texts) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

MockScript MockScript::standard(std::uint64_t seed) {
  MockScript s;
  s.seed = seed;
  s.defaults = {
      {"children_coherence", true},
      {"outline_quality", 4},
      {"content_quality", json::array({5, 4, 5, 5, 4})},
      {"reference_quality", 3},
      {"citation_support", true},
      {"reference_relevance", true},
      {"pairwise", "first"},
      {"topic_label", "echo"},
      {"criteria", "- Judge the answer on its merits."},
  };
  return s;
}

MockScript MockScript::from_json(const json& j) {
  auto s = standard(j.value("seed", std::uint64_t{0}));
  try {
    if (j.contains("defaults")) {
      for (const auto& [k, v] : j.at("defaults").items()) {
        task_kind_from_string(k);
        s.defaults[k] = v;
      }
    }
    if (j.contains("overrides")) {
      for (const auto& [k, v] : j.at("overrides").items()) s.overrides[k] = v;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("mock script: ") + e.what());
  }
  return s;
}

json MockScript::to_json() const {
  json o = json::object();
  for (const auto& [k, v] : overrides) o[k] = v;
  return json{{"seed", seed}, {"defaults", defaults}, {"overrides", o}};
}

std::string payload_digest(const json& payload) { return sha256_hex(payload.dump()); }

std::string mock_judge_response(const JudgeRequest& request, const MockScript& script) {
  auto digest = payload_digest(request.payload);
  const json* spec = nullptr;
  if (auto it = script.overrides.find(digest); it != script.overrides.end()) {
    spec = &it->second;
  } else {
    auto key = std::string(to_string(request.kind));
    if (!script.defaults.contains(key)) {
      throw Error(ErrorCode::ProviderUnavailable, "mock script has no default for " + key);
    }
    spec = &script.defaults.at(key);
  }

  if (spec->is_object() && spec->contains("raw")) {
    const auto& raw = spec->at("raw");
    if (raw.is_string()) return raw.get<std::string>();
    if (raw.empty()) return "";
    auto i = std::min<std::size_t>(static_cast<std::size_t>(request.attempt), raw.size() - 1);
    return raw.at(i).get<std::string>();
  }

  switch (request.kind) {
    case TaskKind::children_coherence:
    case TaskKind::citation_support:
    case TaskKind::reference_relevance:
      return fence(booleans(*spec, item_count(request), script.seed, digest));
    case TaskKind::outline_quality:
    case TaskKind::reference_quality:
      return fence(scores(*spec, 1, script.seed, digest));
    case TaskKind::content_quality:
      return fence(scores(*spec, 5, script.seed, digest));
    case TaskKind::pairwise: {
      auto mode = spec->get<std::string>();
      if (mode == "first" || mode == "A") return fence({"A"});
      if (mode == "second" || mode == "B") return fence({"B"});
      if (mode == "tie") return fence({"tie"});
      if (mode == "coin") return fence({coin(script.seed, digest, 0) < 0.5 ? "A" : "B"});
      throw Error(ErrorCode::InvalidConfig, "bad pairwise mock spec: " + mode);
    }
    case TaskKind::topic_label: {
      auto mode = spec->get<std::string>();
      return fence({mode == "echo" ? request.payload.at("title").get<std::string>() : mode});
    }
    case TaskKind::criteria:
      return fence({spec->get<std::string>()});
  }
  return "";
}

Verdict mock_judge(const JudgeTask& task, const MockScript& script) {
  JudgeRequest request{task.kind, task.payload, task.template_id, "", task.temperature, 0};
  std::size_t n = 1;
  if (task.kind == TaskKind::children_coherence) n = task.payload.at("children").size();
  if (task.kind == TaskKind::citation_support) n = task.payload.at("references").size();
  return parse_verdict(task.kind, mock_judge_response(request, script), n);
}

}  // namespace surveyeval
