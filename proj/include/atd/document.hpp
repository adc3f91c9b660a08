#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "atd/glob.hpp"
#include "atd/unicode.hpp"

namespace atd {

struct DocumentMetadata {
  std::optional<std::string> source_url;
  std::optional<std::string> sender;

  friend bool operator==(const DocumentMetadata&, const DocumentMetadata&) = default;
};

/// Ordered text blocks (an email body, a post, an HTML text node) plus where
/// they came from. Blocks are UTF-8; offsets into them count code points.
struct Document {
  std::vector<std::string> blocks;
  DocumentMetadata metadata;

  friend bool operator==(const Document&, const Document&) = default;
};

/// Empty selector lists match everything.
struct TargetScope {
  std::vector<std::string> url_patterns;
  std::vector<std::string> senders;

  friend bool operator==(const TargetScope&, const TargetScope&) = default;
};

inline bool scope_matches(const TargetScope& scope, const DocumentMetadata& metadata) {
  if (!scope.url_patterns.empty()) {
    if (!metadata.source_url) return false;
    const auto url = unicode::decode(*metadata.source_url);
    const bool any = std::any_of(scope.url_patterns.begin(), scope.url_patterns.end(),
                                 [&](const std::string& p) { return glob_match(unicode::decode(p), url); });
    if (!any) return false;
  }
  if (!scope.senders.empty()) {
    if (!metadata.sender) return false;
    const auto sender = unicode::match_key(*metadata.sender);
    const bool any = std::any_of(scope.senders.begin(), scope.senders.end(),
                                 [&](const std::string& s) { return unicode::match_key(s) == sender; });
    if (!any) return false;
  }
  return true;
}

struct Span {
  std::size_t start = 0;
  std::size_t length = 0;

  std::size_t end() const noexcept { return start + length; }
  friend bool operator==(const Span&, const Span&) = default;
};

/// A located edit proposed by one rule. cost_chars counts code points
/// inserted plus deleted.
struct EditCandidate {
  std::size_t block_index = 0;
  Span span;
  std::string replacement;
  std::string rule_id;
  double delta_valence = 0.0;
  std::size_t cost_chars = 0;

  friend bool operator==(const EditCandidate&, const EditCandidate&) = default;
};

class EditError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Two spans in the same block conflict when they share any character, when
/// an insertion point falls strictly inside the other span, or when both are
/// insertions at the same offset (their relative order would be undefined).
inline bool spans_conflict(const Span& a, const Span& b) noexcept {
  if (a.length == 0 && b.length == 0) return a.start == b.start;
  if (a.length == 0) return a.start > b.start && a.start < b.end();
  if (b.length == 0) return b.start > a.start && b.start < a.end();
  return a.start < b.end() && b.start < a.end();
}

namespace detail {

struct LocatedReplacement {
  Span span;
  const std::string* replacement;
};

// Sorts by descending start; at equal starts the longer span goes first so an
// insertion at the same offset ends up in front of the replaced text.
inline void apply_right_to_left(std::u32string& text, std::vector<LocatedReplacement>& edits) {
  std::sort(edits.begin(), edits.end(), [](const auto& x, const auto& y) {
    if (x.span.start != y.span.start) return x.span.start > y.span.start;
    return x.span.length > y.span.length;
  });
  for (const auto& e : edits) text.replace(e.span.start, e.span.length, unicode::decode(*e.replacement));
}

}  // namespace detail

/// Applies non-conflicting edits; bytes outside edited spans are untouched.
inline Document apply_edits(const Document& doc, const std::vector<EditCandidate>& edits) {
  std::vector<std::vector<detail::LocatedReplacement>> per_block(doc.blocks.size());
  for (const auto& e : edits) {
    if (e.block_index >= doc.blocks.size()) {
      throw EditError("edit for block " + std::to_string(e.block_index) + " but document has " +
                      std::to_string(doc.blocks.size()) + " blocks");
    }
    per_block[e.block_index].push_back({e.span, &e.replacement});
  }
  Document out = doc;
  for (std::size_t b = 0; b < per_block.size(); ++b) {
    auto& block_edits = per_block[b];
    if (block_edits.empty()) continue;
    std::u32string text = unicode::decode(doc.blocks[b]);
    for (std::size_t i = 0; i < block_edits.size(); ++i) {
      const Span& s = block_edits[i].span;
      if (s.end() > text.size()) {
        throw EditError("span [" + std::to_string(s.start) + ", " + std::to_string(s.end()) +
                        ") out of range in block " + std::to_string(b));
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (spans_conflict(s, block_edits[j].span)) {
          throw EditError("overlapping edits in block " + std::to_string(b) + " at offset " +
                          std::to_string(s.start));
        }
      }
    }
    detail::apply_right_to_left(text, block_edits);
    out.blocks[b] = unicode::encode(text);
  }
  return out;
}

/// Whitespace layout of a plain-text file split into paragraph blocks, so the
/// transformed blocks can be joined back with the original separators.
struct TextLayout {
  std::string leading;
  std::vector<std::string> separators;  // between consecutive blocks
  std::string trailing;
};

namespace detail {

inline bool is_blank_line(std::string_view line) {
  return line.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace detail

/// Paragraphs are runs of non-blank lines; blank lines separate them.
inline Document split_paragraphs(std::string_view text, TextLayout& layout) {
  layout = {};
  Document doc;
  std::string pending;  // whitespace not yet assigned to a block
  std::string current;
  bool in_block = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    const std::size_t next = eol == std::string_view::npos ? text.size() : eol + 1;
    const std::string_view line = text.substr(pos, next - pos);
    pos = next;
    if (detail::is_blank_line(line)) {
      if (in_block) {
        doc.blocks.push_back(std::move(current));
        current.clear();
        in_block = false;
      }
      pending += line;
      continue;
    }
    if (!in_block) {
      if (doc.blocks.empty()) {
        layout.leading = std::move(pending);
      } else {
        layout.separators.push_back(std::move(pending));
      }
      pending.clear();
      in_block = true;
    } else {
      current += pending;  // newline of the previous line
      pending.clear();
    }
    std::string_view content = line;
    if (!content.empty() && content.back() == '\n') {
      content.remove_suffix(1);
      pending = "\n";
      if (!content.empty() && content.back() == '\r') {
        content.remove_suffix(1);
        pending = "\r\n";
      }
    }
    current += content;
  }
  if (in_block) doc.blocks.push_back(std::move(current));
  if (doc.blocks.empty()) {
    layout.leading = std::move(pending);
  } else {
    layout.trailing = std::move(pending);
  }
  return doc;
}

/// Inverse of split_paragraphs. A block emptied by a transformation is
/// dropped together with the separator that followed it (or preceded it, for
/// the last block).
inline std::string join_paragraphs(const std::vector<std::string>& blocks, const TextLayout& layout) {
  std::string out = layout.leading;
  if (blocks.size() != layout.separators.size() + 1) {
    // Layout does not describe these blocks; fall back to blank-line joins.
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (i) out += "\n\n";
      out += blocks[i];
    }
    return out + layout.trailing;
  }
  bool wrote_any = false;
  std::string pending_separator;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].empty()) continue;
    if (wrote_any) out += pending_separator;
    out += blocks[i];
    wrote_any = true;
    pending_separator = i < layout.separators.size() ? layout.separators[i] : std::string();
  }
  return out + layout.trailing;
}

}  // namespace atd
