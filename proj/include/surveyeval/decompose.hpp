#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "surveyeval/error.hpp"

namespace surveyeval {

inline constexpr int kMaxOutlineDepth = 3;
inline constexpr std::string_view kUntitled = "(untitled)";

struct OutlineNode {
  std::string title;
  int depth = 0;    // virtual root = 0, top-level section = 1
  int ordinal = 0;  // 1-based position among siblings
  bool implicit = false;  // inserted to repair a skipped heading level
  std::vector<OutlineNode> children;

  bool is_leaf() const { return children.empty(); }
  bool operator==(const OutlineNode&) const = default;
};

struct OutlineTree {
  OutlineNode root;
  int max_depth = 0;
  std::vector<std::string> warnings;

  bool empty() const { return root.children.empty(); }
  std::size_t leaf_count() const;
  std::size_t node_count() const;  // excludes the virtual root
};

struct ContentSection {
  std::vector<std::string> heading_path;
  std::string body;
  int index = 0;  // 1-based, document order
  bool container = false;  // empty body
};

struct ReferenceEntry {
  int key = 0;
  std::string text;
  int index = 0;  // 1-based position in the bibliography
};

struct CitationSentence {
  int section_index = 0;
  std::string sentence;
  std::vector<int> cited_keys;  // resolved, deduplicated, textual order
  std::vector<int> dangling_keys;

  bool is_dangling() const { return !dangling_keys.empty(); }
};

struct OutlinePathDocument {
  std::vector<std::string> parent_path;
  std::vector<std::string> leaf_titles;
  std::string rendered_text;
  int index = 0;  // 1-based
};

// True when a heading title names the bibliography section.
bool is_references_heading(std::string_view title);

// ATX headings map to depths; levels deeper than 3 are clipped, skipped levels
// are repaired with an implicit "(untitled)" node. The bibliography heading
// and everything under it is not part of the outline.
OutlineTree parse_outline(std::string_view document);

// Renders the tree back to normalized heading lines.
std::string render_outline(const OutlineTree& tree);

// Indented title listing used in judge prompts.
std::string render_outline_listing(const OutlineTree& tree);

// One document per parent that has leaf children, ordered by first leaf.
// Rendered as "A > B > leaf1; leaf2" (parent path joined with " > ", leaves
// joined with "; ").
std::vector<OutlinePathDocument> split_outline_paths(const OutlineTree& tree);

std::vector<ContentSection> parse_sections(std::string_view document, const OutlineTree& tree);

// Entries of the "References"/"Bibliography" section: `[n] text` or `n. text`
// lines, unnumbered lines continue the previous entry.
std::vector<ReferenceEntry> parse_references(std::string_view document, Diagnostics* diag = nullptr);

// Sentence segmentation on `.`, `?`, `!` followed by whitespace, guarding
// common abbreviations.
std::vector<std::string> segment_sentences(std::string_view body);

// Citation markers `[n]`, `[n,m]`, `[n-m]` in textual order (ranges expanded).
std::vector<int> citation_markers(std::string_view sentence);

std::vector<CitationSentence> extract_citation_sentences(const std::vector<ContentSection>& sections,
                                                         const std::vector<ReferenceEntry>& references);

}  // namespace surveyeval
