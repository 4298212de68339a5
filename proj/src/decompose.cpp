#include "surveyeval/decompose.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>

#include "surveyeval/text.hpp"

namespace surveyeval {

namespace {

struct HeadingLine {
  std::size_t line = 0;
  int raw_level = 0;
  int level = 0;  // clipped
  std::string title;
  bool references = false;  // the bibliography heading itself or nested under it
};

struct Scan {
  std::vector<std::string_view> lines;
  std::vector<HeadingLine> headings;
};

bool is_fence(std::string_view line) {
  auto t = text::trim(line);
  return t.starts_with("```") || t.starts_with("~~~");
}

std::optional<HeadingLine> parse_heading(std::string_view line) {
  std::size_t indent = 0;
  while (indent < line.size() && indent < 4 && line[indent] == ' ') ++indent;
  if (indent > 3) return std::nullopt;
  auto rest = line.substr(indent);
  int level = 0;
  while (level < static_cast<int>(rest.size()) && rest[level] == '#') ++level;
  if (level == 0 || level > 6) return std::nullopt;
  rest.remove_prefix(level);
  if (!rest.empty() && rest.front() != ' ' && rest.front() != '\t') return std::nullopt;
  auto title = text::trim(rest);
  // Optional closing sequence: trailing #'s preceded by a space.
  auto last = title.find_last_not_of('#');
  if (last == std::string_view::npos) {
    title = {};
  } else if (last + 1 < title.size() && (title[last] == ' ' || title[last] == '\t')) {
    title = text::trim(title.substr(0, last));
  }
  HeadingLine h;
  h.raw_level = level;
  h.level = std::min(level, kMaxOutlineDepth);
  h.title = title.empty() ? std::string(kUntitled) : std::string(title);
  return h;
}

Scan scan_document(std::string_view document) {
  Scan scan;
  scan.lines = text::split_lines(document);
  bool in_fence = false;
  int references_level = 0;  // 0 = not inside a bibliography block
  for (std::size_t i = 0; i < scan.lines.size(); ++i) {
    auto line = scan.lines[i];
    if (is_fence(line)) {
      in_fence = !in_fence;
      continue;
    }
    if (in_fence) continue;
    auto h = parse_heading(line);
    if (!h) continue;
    h->line = i;
    if (references_level > 0 && h->raw_level <= references_level) references_level = 0;
    if (references_level == 0 && is_references_heading(h->title)) references_level = h->raw_level;
    h->references = references_level > 0;
    scan.headings.push_back(std::move(*h));
  }
  return scan;
}

void count_nodes(const OutlineNode& node, std::size_t& nodes, std::size_t& leaves) {
  for (const auto& child : node.children) {
    ++nodes;
    if (child.is_leaf()) ++leaves;
    count_nodes(child, nodes, leaves);
  }
}

int deepest(const OutlineNode& node) {
  int d = node.depth;
  for (const auto& child : node.children) d = std::max(d, deepest(child));
  return d;
}

void render_into(const OutlineNode& node, std::string& out) {
  for (const auto& child : node.children) {
    if (!child.implicit) {
      out.append(static_cast<std::size_t>(child.depth), '#');
      out.push_back(' ');
      out.append(child.title);
      out.push_back('\n');
    }
    render_into(child, out);
  }
}

void listing_into(const OutlineNode& node, std::string& out) {
  for (const auto& child : node.children) {
    out.append(static_cast<std::size_t>(2 * (child.depth - 1)), ' ');
    out.append("- ");
    out.append(child.title);
    out.push_back('\n');
    listing_into(child, out);
  }
}

struct LeafGroup {
  std::vector<std::string> parent_path;
  std::vector<std::string> leaves;
};

void collect_leaf_groups(const OutlineNode& node, std::vector<std::string>& path,
                         std::map<const OutlineNode*, std::size_t>& slot, std::vector<LeafGroup>& groups) {
  for (const auto& child : node.children) {
    if (child.is_leaf()) {
      auto [it, inserted] = slot.try_emplace(&node, groups.size());
      if (inserted) groups.push_back(LeafGroup{path, {}});
      groups[it->second].leaves.push_back(child.title);
    } else {
      path.push_back(child.title);
      collect_leaf_groups(child, path, slot, groups);
      path.pop_back();
    }
  }
}

void explicit_paths(const OutlineNode& node, std::vector<std::string>& path,
                    std::vector<std::vector<std::string>>& out) {
  for (const auto& child : node.children) {
    path.push_back(child.title);
    if (!child.implicit) out.push_back(path);
    explicit_paths(child, path, out);
    path.pop_back();
  }
}

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::optional<int> parse_small_int(std::string_view s) {
  s = text::trim(s);
  if (s.empty() || s.size() > 6) return std::nullopt;
  int v = 0;
  for (char c : s) {
    if (!is_digit(c)) return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

struct NumberedLine {
  int key;
  std::string_view text;
};

std::optional<NumberedLine> parse_reference_line(std::string_view line) {
  auto t = text::trim(line);
  if (t.starts_with('[')) {
    auto close = t.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    auto key = parse_small_int(t.substr(1, close - 1));
    if (!key) return std::nullopt;
    return NumberedLine{*key, text::trim(t.substr(close + 1))};
  }
  std::size_t n = 0;
  while (n < t.size() && is_digit(t[n])) ++n;
  if (n == 0 || n >= t.size() || t[n] != '.') return std::nullopt;
  if (n + 1 < t.size() && t[n + 1] != ' ' && t[n + 1] != '\t') return std::nullopt;
  auto key = parse_small_int(t.substr(0, n));
  if (!key) return std::nullopt;
  return NumberedLine{*key, text::trim(t.substr(n + 1))};
}

const std::set<std::string, std::less<>>& abbreviations() {
  static const std::set<std::string, std::less<>> kGuard = {
      "al.", "fig.", "figs.", "eq.", "eqs.", "e.g.", "i.e.", "cf.", "vs.", "sec.", "no.", "ref.", "refs.", "approx.",
  };
  return kGuard;
}

bool guarded_period(std::string_view body, std::size_t period) {
  std::size_t start = period;
  while (start > 0 && !std::isspace(static_cast<unsigned char>(body[start - 1]))) --start;
  auto token = body.substr(start, period - start + 1);
  while (!token.empty() && (token.front() == '(' || token.front() == '"' || token.front() == '\'')) {
    token.remove_prefix(1);
  }
  if (abbreviations().contains(text::to_lower(token))) return true;
  // Single-letter initials such as "J. Smith".
  return token.size() == 2 && std::isupper(static_cast<unsigned char>(token[0])) != 0;
}

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

}  // namespace

bool is_references_heading(std::string_view title) {
  auto t = text::to_lower(text::trim(title));
  return t == "references" || t == "bibliography";
}

std::size_t OutlineTree::leaf_count() const {
  std::size_t nodes = 0, leaves = 0;
  count_nodes(root, nodes, leaves);
  return leaves;
}

std::size_t OutlineTree::node_count() const {
  std::size_t nodes = 0, leaves = 0;
  count_nodes(root, nodes, leaves);
  return nodes;
}

OutlineTree parse_outline(std::string_view document) {
  auto scan = scan_document(document);
  OutlineTree tree;
  tree.root.depth = 0;
  tree.root.ordinal = 0;

  // stack[d] is the most recent node at depth d.
  std::vector<OutlineNode*> stack{&tree.root};
  auto add_child = [](OutlineNode& parent, std::string title, bool implicit) -> OutlineNode& {
    OutlineNode node;
    node.title = std::move(title);
    node.depth = parent.depth + 1;
    node.implicit = implicit;
    parent.children.push_back(std::move(node));
    auto& added = parent.children.back();
    added.ordinal = static_cast<int>(parent.children.size());
    return added;
  };

  for (const auto& h : scan.headings) {
    if (h.references) continue;
    if (h.raw_level != h.level) {
      tree.warnings.push_back("heading '" + h.title + "' at level " + std::to_string(h.raw_level) +
                              " clipped to " + std::to_string(kMaxOutlineDepth));
    }
    auto level = static_cast<std::size_t>(h.level);
    if (stack.size() > level) stack.resize(level);
    while (stack.size() < level) {
      tree.warnings.push_back("skipped heading level before '" + h.title + "' repaired with implicit node");
      stack.push_back(&add_child(*stack.back(), std::string(kUntitled), true));
    }
    stack.push_back(&add_child(*stack.back(), h.title, false));
  }

  if (tree.empty()) throw Error(ErrorCode::NoHeadings, "document has no outline headings");
  tree.max_depth = deepest(tree.root);
  return tree;
}

std::string render_outline(const OutlineTree& tree) {
  std::string out;
  render_into(tree.root, out);
  return out;
}

std::string render_outline_listing(const OutlineTree& tree) {
  std::string out;
  listing_into(tree.root, out);
  return out;
}

std::vector<OutlinePathDocument> split_outline_paths(const OutlineTree& tree) {
  std::vector<std::string> path;
  std::map<const OutlineNode*, std::size_t> slot;
  std::vector<LeafGroup> groups;
  collect_leaf_groups(tree.root, path, slot, groups);

  std::vector<OutlinePathDocument> docs;
  docs.reserve(groups.size());
  for (auto& g : groups) {
    OutlinePathDocument doc;
    doc.rendered_text = text::join(g.parent_path, " > ");
    if (!doc.rendered_text.empty()) doc.rendered_text += " > ";
    doc.rendered_text += text::join(g.leaves, "; ");
    doc.parent_path = std::move(g.parent_path);
    doc.leaf_titles = std::move(g.leaves);
    doc.index = static_cast<int>(docs.size()) + 1;
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<ContentSection> parse_sections(std::string_view document, const OutlineTree& tree) {
  auto scan = scan_document(document);
  std::vector<std::vector<std::string>> paths;
  std::vector<std::string> path;
  explicit_paths(tree.root, path, paths);

  std::vector<const HeadingLine*> outline_headings;
  for (const auto& h : scan.headings) {
    if (!h.references) outline_headings.push_back(&h);
  }
  if (outline_headings.size() != paths.size()) {
    throw Error(ErrorCode::PreconditionViolation, "outline tree was not parsed from this document");
  }

  std::vector<ContentSection> sections;
  sections.reserve(paths.size());
  for (std::size_t k = 0; k < outline_headings.size(); ++k) {
    const auto* h = outline_headings[k];
    // Body runs to the next heading of any level (including the bibliography).
    std::size_t end = scan.lines.size();
    for (const auto& other : scan.headings) {
      if (other.line > h->line) {
        end = other.line;
        break;
      }
    }
    std::string body;
    for (std::size_t i = h->line + 1; i < end; ++i) {
      body.append(scan.lines[i]);
      body.push_back('\n');
    }
    ContentSection section;
    section.heading_path = paths[k];
    section.body = std::string(text::trim(body));
    section.index = static_cast<int>(k) + 1;
    section.container = section.body.empty();
    sections.push_back(std::move(section));
  }
  return sections;
}

std::vector<ReferenceEntry> parse_references(std::string_view document, Diagnostics* diag) {
  auto scan = scan_document(document);
  std::vector<ReferenceEntry> entries;

  const HeadingLine* start = nullptr;
  for (const auto& h : scan.headings) {
    if (h.references && is_references_heading(h.title)) {
      start = &h;
      break;
    }
  }
  if (start == nullptr) {
    note(diag, "references: no References/Bibliography section");
    return entries;
  }

  std::size_t end = scan.lines.size();
  std::set<std::size_t> nested_heading_lines;
  for (const auto& h : scan.headings) {
    if (h.line <= start->line) continue;
    if (!h.references) {
      end = h.line;
      break;
    }
    nested_heading_lines.insert(h.line);
  }

  std::set<int> keys;
  bool in_fence = false;
  for (std::size_t i = start->line + 1; i < end; ++i) {
    auto line = scan.lines[i];
    if (is_fence(line)) {
      in_fence = !in_fence;
      continue;
    }
    if (in_fence || nested_heading_lines.contains(i)) continue;
    auto t = text::trim(line);
    if (t.empty()) continue;
    if (auto numbered = parse_reference_line(t)) {
      if (numbered->key < 1) {
        throw Error(ErrorCode::DecompositionError, "reference key must be >= 1 (line " + std::to_string(i + 1) + ")");
      }
      if (!keys.insert(numbered->key).second) {
        throw Error(ErrorCode::DuplicateReferenceKey, "reference [" + std::to_string(numbered->key) + "] repeated");
      }
      ReferenceEntry entry;
      entry.key = numbered->key;
      entry.text = std::string(numbered->text);
      entry.index = static_cast<int>(entries.size()) + 1;
      entries.push_back(std::move(entry));
    } else if (!entries.empty()) {
      auto& prev = entries.back().text;
      if (!prev.empty()) prev.push_back(' ');
      prev.append(t);
    } else {
      note(diag, "references: unnumbered line before first entry ignored (line " + std::to_string(i + 1) + ")");
    }
  }
  if (entries.empty()) note(diag, "references: section present but no entries found");
  return entries;
}

std::vector<std::string> segment_sentences(std::string_view body) {
  std::vector<std::string> sentences;
  std::size_t start = 0;
  auto skip_space = [&](std::size_t i) {
    while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
    return i;
  };
  start = skip_space(0);
  for (std::size_t i = start; i < body.size(); ++i) {
    char c = body[i];
    if (c != '.' && c != '?' && c != '!') continue;
    std::size_t end = i + 1;
    while (end < body.size() && is_closer(body[end])) ++end;
    if (end < body.size() && !std::isspace(static_cast<unsigned char>(body[end]))) continue;
    if (c == '.' && guarded_period(body, i)) continue;
    auto sentence = text::trim(body.substr(start, end - start));
    if (!sentence.empty()) sentences.emplace_back(sentence);
    start = skip_space(end);
    i = start == 0 ? 0 : start - 1;
  }
  if (start < body.size()) {
    auto tail = text::trim(body.substr(start));
    if (!tail.empty()) sentences.emplace_back(tail);
  }
  return sentences;
}

std::vector<int> citation_markers(std::string_view sentence) {
  constexpr int kMaxRange = 500;
  std::vector<int> keys;
  std::size_t pos = 0;
  while ((pos = sentence.find('[', pos)) != std::string_view::npos) {
    auto close = sentence.find(']', pos + 1);
    if (close == std::string_view::npos) break;
    std::string inner(sentence.substr(pos + 1, close - pos - 1));
    // Normalize en dash ranges.
    for (std::size_t p; (p = inner.find("\xE2\x80\x93")) != std::string::npos;) inner.replace(p, 3, "-");

    std::vector<int> found;
    bool valid = !text::trim(inner).empty();
    std::size_t item_start = 0;
    while (valid && item_start <= inner.size()) {
      auto comma = inner.find(',', item_start);
      auto item = std::string_view(inner).substr(item_start, comma == std::string::npos ? std::string::npos
                                                                                         : comma - item_start);
      auto dash = item.find('-');
      if (dash == std::string_view::npos) {
        auto k = parse_small_int(item);
        if (!k) valid = false;
        else found.push_back(*k);
      } else {
        auto lo = parse_small_int(item.substr(0, dash));
        auto hi = parse_small_int(item.substr(dash + 1));
        if (!lo || !hi || *hi < *lo || *hi - *lo > kMaxRange) {
          valid = false;
        } else {
          for (int k = *lo; k <= *hi; ++k) found.push_back(k);
        }
      }
      if (comma == std::string::npos) break;
      item_start = comma + 1;
    }
    if (valid) keys.insert(keys.end(), found.begin(), found.end());
    pos = close + 1;
  }
  return keys;
}

std::vector<CitationSentence> extract_citation_sentences(const std::vector<ContentSection>& sections,
                                                         const std::vector<ReferenceEntry>& references) {
  std::set<int> known;
  for (const auto& r : references) known.insert(r.key);

  std::vector<CitationSentence> out;
  for (const auto& section : sections) {
    for (auto& sentence : segment_sentences(section.body)) {
      auto markers = citation_markers(sentence);
      if (markers.empty()) continue;
      CitationSentence cs;
      cs.section_index = section.index;
      cs.sentence = text::normalize_whitespace(sentence);
      for (int k : markers) {
        auto& bucket = known.contains(k) ? cs.cited_keys : cs.dangling_keys;
        if (std::find(bucket.begin(), bucket.end(), k) == bucket.end()) bucket.push_back(k);
      }
      out.push_back(std::move(cs));
    }
  }
  return out;
}

}  // namespace surveyeval
