#include "surveyeval/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "surveyeval/text.hpp"

namespace surveyeval {

namespace {

[[noreturn]] void malformed(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::MalformedManifest, where + ": " + what);
}

std::string required_string(const json& obj, const std::string& field, const std::string& where, bool non_empty) {
  if (!obj.contains(field)) malformed(where + "." + field, "missing");
  const auto& v = obj.at(field);
  if (!v.is_string()) malformed(where + "." + field, "must be a string");
  auto s = v.get<std::string>();
  if (non_empty && text::trim(s).empty()) malformed(where + "." + field, "must be non-empty");
  return s;
}

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

std::string_view to_string(Role r) { return r == Role::human ? "human" : "generated"; }

const ManifestEntry* CorpusManifest::find(std::string_view id) const {
  for (const auto& e : entries) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

const ManifestEntry* CorpusManifest::human_for(std::string_view topic_key) const {
  for (const auto& e : entries) {
    if (e.role == Role::human && e.topic_key == topic_key) return &e;
  }
  return nullptr;
}

std::vector<std::string> CorpusManifest::systems() const {
  std::set<std::string> names;
  for (const auto& e : entries) {
    if (e.system_name) names.insert(*e.system_name);
  }
  return {names.begin(), names.end()};
}

CorpusManifest parse_manifest(std::string_view json_text, std::filesystem::path base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    malformed("line " + std::to_string(line_of(json_text, e.byte == 0 ? 0 : e.byte - 1)), e.what());
  }
  if (!root.is_object()) malformed("manifest", "top level must be an object");

  CorpusManifest m;
  m.base_dir = std::move(base_dir);
  m.corpus_id = required_string(root, "corpus_id", "manifest", true);
  if (!root.contains("entries") || !root.at("entries").is_array()) malformed("manifest.entries", "must be an array");

  std::set<std::string> ids;
  std::map<std::string, std::string> human_by_key;
  const auto& entries = root.at("entries");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& j = entries[i];
    auto where = "entries[" + std::to_string(i) + "]";
    if (!j.is_object()) malformed(where, "must be an object");
    ManifestEntry e;
    e.id = required_string(j, "id", where, true);
    e.title = required_string(j, "title", where, false);
    e.topic = j.contains("topic") && !j.at("topic").is_null() ? required_string(j, "topic", where, false) : "";
    e.topic_key = required_string(j, "topic_key", where, true);
    auto role = required_string(j, "role", where, true);
    if (role == "human") e.role = Role::human;
    else if (role == "generated") e.role = Role::generated;
    else malformed(where + ".role", "must be \"human\" or \"generated\", got \"" + role + "\"");
    if (j.contains("system_name") && !j.at("system_name").is_null()) {
      e.system_name = required_string(j, "system_name", where, true);
    }
    e.document_path = required_string(j, "document_path", where, true);

    if (e.role == Role::generated && !e.system_name) malformed(where + ".system_name", "required for generated entries");
    if (e.role == Role::human && e.system_name) malformed(where + ".system_name", "must be absent for human entries");
    if (!ids.insert(e.id).second) throw Error(ErrorCode::DuplicateId, "entry id '" + e.id + "' repeated");
    if (e.role == Role::human) {
      auto [it, inserted] = human_by_key.emplace(e.topic_key, e.id);
      if (!inserted) {
        malformed(where + ".topic_key", "'" + e.topic_key + "' already used by human entry '" + it->second + "'");
      }
    }
    m.entries.push_back(std::move(e));
  }

  std::set<std::pair<std::string, std::string>> system_keys;
  for (const auto& e : m.entries) {
    if (e.role != Role::generated) continue;
    if (!human_by_key.contains(e.topic_key)) {
      throw Error(ErrorCode::UnpairedGeneratedEntry,
                  "generated entry '" + e.id + "' has topic_key '" + e.topic_key + "' with no human entry");
    }
    if (!system_keys.emplace(*e.system_name, e.topic_key).second) {
      malformed("entry '" + e.id + "'", "system '" + *e.system_name + "' has two entries for topic_key '" +
                                            e.topic_key + "'");
    }
  }
  return m;
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  return parse_manifest(text::read_file(path), path.parent_path());
}

json manifest_to_json(const CorpusManifest& manifest) {
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    json j{{"id", e.id},
           {"title", e.title},
           {"topic", e.topic},
           {"topic_key", e.topic_key},
           {"role", to_string(e.role)},
           {"document_path", e.document_path}};
    j["system_name"] = e.system_name ? json(*e.system_name) : json(nullptr);
    entries.push_back(std::move(j));
  }
  return json{{"corpus_id", manifest.corpus_id}, {"entries", entries}};
}

std::vector<SurveyPair> pair_by_topic(const CorpusManifest& manifest) {
  std::vector<SurveyPair> pairs;
  for (const auto& e : manifest.entries) {
    if (e.role != Role::generated) continue;
    const auto* human = manifest.human_for(e.topic_key);
    if (human == nullptr) {
      throw Error(ErrorCode::UnpairedGeneratedEntry, "generated entry '" + e.id + "' has no human pair");
    }
    pairs.push_back(SurveyPair{&e, human});
  }
  return pairs;
}

bool SurveyRecord::has_content() const {
  return std::any_of(sections.begin(), sections.end(), [](const auto& s) { return !s.body.empty(); });
}

SurveyRecord decompose_document(const ManifestEntry& entry, std::string_view document) {
  SurveyRecord r;
  r.entry = entry;
  if (text::trim(document).empty()) {
    throw Error(ErrorCode::DecompositionError, "outline: document '" + entry.id + "' is empty");
  }
  try {
    r.outline = parse_outline(document);
  } catch (const Error& e) {
    throw Error(ErrorCode::DecompositionError, "outline: " + entry.id + ": " + e.what());
  }
  r.warnings.insert(r.warnings.end(), r.outline.warnings.begin(), r.outline.warnings.end());
  r.outline_paths = split_outline_paths(r.outline);
  try {
    r.sections = parse_sections(document, r.outline);
  } catch (const Error& e) {
    throw Error(ErrorCode::DecompositionError, "content: " + entry.id + ": " + e.what());
  }
  try {
    r.references = parse_references(document, &r.warnings);
  } catch (const Error& e) {
    throw Error(ErrorCode::DecompositionError, "references: " + entry.id + ": " + e.what());
  }
  r.citations = extract_citation_sentences(r.sections, r.references);
  if (!r.has_content()) r.warnings.push_back("content: every section body is empty");
  for (const auto& c : r.citations) {
    if (c.is_dangling()) {
      std::string keys;
      for (int k : c.dangling_keys) keys += (keys.empty() ? "" : ",") + std::to_string(k);
      r.warnings.push_back("citations: section " + std::to_string(c.section_index) + " cites unknown key(s) " + keys);
    }
  }
  return r;
}

SurveyRecord load_survey(const ManifestEntry& entry, const std::filesystem::path& base_dir) {
  auto path = base_dir / entry.document_path;
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  return decompose_document(entry, text::read_file(path));
}

namespace {

json node_to_json(const OutlineNode& n) {
  json children = json::array();
  for (const auto& c : n.children) children.push_back(node_to_json(c));
  return json{{"title", n.title},
              {"depth", n.depth},
              {"ordinal", n.ordinal},
              {"implicit", n.implicit},
              {"children", children}};
}

OutlineNode node_from_json(const json& j) {
  OutlineNode n;
  n.title = j.at("title").get<std::string>();
  n.depth = j.at("depth").get<int>();
  n.ordinal = j.at("ordinal").get<int>();
  n.implicit = j.at("implicit").get<bool>();
  for (const auto& c : j.at("children")) n.children.push_back(node_from_json(c));
  return n;
}

ManifestEntry entry_from_json(const json& j) {
  ManifestEntry e;
  e.id = j.at("id").get<std::string>();
  e.title = j.at("title").get<std::string>();
  e.topic = j.at("topic").get<std::string>();
  e.topic_key = j.at("topic_key").get<std::string>();
  e.role = j.at("role").get<std::string>() == "human" ? Role::human : Role::generated;
  if (!j.at("system_name").is_null()) e.system_name = j.at("system_name").get<std::string>();
  e.document_path = j.at("document_path").get<std::string>();
  return e;
}

}  // namespace

json record_to_json(const SurveyRecord& r) {
  json entry{{"id", r.entry.id},
             {"title", r.entry.title},
             {"topic", r.entry.topic},
             {"topic_key", r.entry.topic_key},
             {"role", to_string(r.entry.role)},
             {"system_name", r.entry.system_name ? json(*r.entry.system_name) : json(nullptr)},
             {"document_path", r.entry.document_path}};
  json paths = json::array();
  for (const auto& p : r.outline_paths) {
    paths.push_back({{"index", p.index},
                     {"parent_path", p.parent_path},
                     {"leaf_titles", p.leaf_titles},
                     {"rendered_text", p.rendered_text}});
  }
  json sections = json::array();
  for (const auto& s : r.sections) {
    sections.push_back(
        {{"index", s.index}, {"heading_path", s.heading_path}, {"body", s.body}, {"container", s.container}});
  }
  json refs = json::array();
  for (const auto& ref : r.references) refs.push_back({{"index", ref.index}, {"key", ref.key}, {"text", ref.text}});
  json cites = json::array();
  for (const auto& c : r.citations) {
    cites.push_back({{"section_index", c.section_index},
                     {"sentence", c.sentence},
                     {"cited_keys", c.cited_keys},
                     {"dangling_keys", c.dangling_keys}});
  }
  return json{{"schema", "surveyeval.decomposition.v1"},
              {"entry", entry},
              {"facets", {{"outline", r.has_outline()}, {"content", r.has_content()}, {"reference", r.has_references()}}},
              {"outline", {{"max_depth", r.outline.max_depth}, {"warnings", r.outline.warnings}, {"root", node_to_json(r.outline.root)}}},
              {"outline_paths", paths},
              {"sections", sections},
              {"references", refs},
              {"citations", cites},
              {"warnings", r.warnings}};
}

SurveyRecord record_from_json(const json& j) {
  try {
    if (j.at("schema") != "surveyeval.decomposition.v1") {
      throw Error(ErrorCode::PipelineOrder, "unknown decomposition schema");
    }
    SurveyRecord r;
    r.entry = entry_from_json(j.at("entry"));
    const auto& o = j.at("outline");
    r.outline.max_depth = o.at("max_depth").get<int>();
    r.outline.warnings = o.at("warnings").get<std::vector<std::string>>();
    r.outline.root = node_from_json(o.at("root"));
    for (const auto& p : j.at("outline_paths")) {
      OutlinePathDocument d;
      d.index = p.at("index").get<int>();
      d.parent_path = p.at("parent_path").get<std::vector<std::string>>();
      d.leaf_titles = p.at("leaf_titles").get<std::vector<std::string>>();
      d.rendered_text = p.at("rendered_text").get<std::string>();
      r.outline_paths.push_back(std::move(d));
    }
    for (const auto& s : j.at("sections")) {
      ContentSection c;
      c.index = s.at("index").get<int>();
      c.heading_path = s.at("heading_path").get<std::vector<std::string>>();
      c.body = s.at("body").get<std::string>();
      c.container = s.at("container").get<bool>();
      r.sections.push_back(std::move(c));
    }
    for (const auto& ref : j.at("references")) {
      r.references.push_back(
          ReferenceEntry{ref.at("key").get<int>(), ref.at("text").get<std::string>(), ref.at("index").get<int>()});
    }
    for (const auto& c : j.at("citations")) {
      CitationSentence cs;
      cs.section_index = c.at("section_index").get<int>();
      cs.sentence = c.at("sentence").get<std::string>();
      cs.cited_keys = c.at("cited_keys").get<std::vector<int>>();
      cs.dangling_keys = c.at("dangling_keys").get<std::vector<int>>();
      r.citations.push_back(std::move(cs));
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::PipelineOrder, std::string("corrupt decomposition file: ") + e.what());
  }
}

std::string mine_topic(std::string_view title, JudgeClient& judge) { return judge_topic_label(title, judge); }

}  // namespace surveyeval
