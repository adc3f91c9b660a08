#pragma once

// Tolerant HTML tokenizer with byte-faithful serialization. Every token keeps
// its exact source bytes; rewriting replaces bytes inside eligible text nodes
// only, so tags, attributes, comments and raw-text element content come out
// exactly as they went in.

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atd/engine.hpp"
#include "atd/planner.hpp"
#include "atd/unicode.hpp"

namespace atd {

enum class HtmlTokenKind { text, start_tag, end_tag, comment, doctype, raw_text, bogus };

struct HtmlToken {
  HtmlTokenKind kind = HtmlTokenKind::text;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string name;  // lower-cased tag name for start/end tags

  std::string_view bytes(std::string_view html) const { return html.substr(begin, end - begin); }
};

namespace detail {

inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }
inline bool ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

inline bool is_raw_text_element(std::string_view name) {
  static constexpr std::string_view raw[] = {"script", "style", "textarea", "title", "xmp",
                                             "iframe", "noembed", "noframes", "plaintext"};
  return std::find(std::begin(raw), std::end(raw), name) != std::end(raw);
}

inline std::size_t find_ci(std::string_view hay, std::string_view needle, std::size_t from) {
  for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < needle.size() && ok; ++j) ok = ascii_lower(hay[i + j]) == needle[j];
    if (ok) return i;
  }
  return std::string_view::npos;
}

// End of a start tag beginning at pos ('<'), honoring quoted attribute values.
inline std::size_t scan_tag_end(std::string_view html, std::size_t pos) {
  char last_significant = 0;
  for (std::size_t i = pos + 1; i < html.size(); ++i) {
    const char c = html[i];
    if (c == '>') return i + 1;
    if ((c == '"' || c == '\'') && last_significant == '=') {
      const std::size_t close = html.find(c, i + 1);
      if (close == std::string_view::npos) return std::string_view::npos;
      i = close;
      last_significant = c;
      continue;
    }
    if (!ascii_space(c)) last_significant = c;
  }
  return std::string_view::npos;
}

}  // namespace detail

inline std::vector<HtmlToken> tokenize_html(std::string_view html) {
  using detail::ascii_alpha;
  std::vector<HtmlToken> tokens;
  std::size_t text_start = 0;
  std::size_t i = 0;
  const auto flush_text = [&](std::size_t upto) {
    if (upto > text_start) tokens.push_back({HtmlTokenKind::text, text_start, upto, {}});
  };
  const auto emit = [&](HtmlTokenKind kind, std::size_t begin, std::size_t end, std::string name = {}) {
    flush_text(begin);
    tokens.push_back({kind, begin, end, std::move(name)});
    text_start = end;
    i = end;
  };

  while (i < html.size()) {
    if (html[i] != '<' || i + 1 >= html.size()) {
      ++i;
      continue;
    }
    const char next = html[i + 1];
    if (html.substr(i, 4) == "<!--") {
      const std::size_t close = html.find("-->", i + 4);
      emit(HtmlTokenKind::comment, i, close == std::string_view::npos ? html.size() : close + 3);
    } else if (next == '!' || next == '?') {
      const std::size_t close = html.find('>', i + 2);
      const bool doctype = detail::find_ci(html.substr(i, 9), "<!doctype", 0) == 0;
      emit(doctype ? HtmlTokenKind::doctype : HtmlTokenKind::bogus, i,
           close == std::string_view::npos ? html.size() : close + 1);
    } else if (next == '/' && i + 2 < html.size() && ascii_alpha(html[i + 2])) {
      std::size_t n = i + 2;
      std::string name;
      while (n < html.size() && !detail::ascii_space(html[n]) && html[n] != '>' && html[n] != '/') {
        name.push_back(detail::ascii_lower(html[n++]));
      }
      const std::size_t close = html.find('>', n);
      if (close == std::string_view::npos) {
        emit(HtmlTokenKind::bogus, i, html.size());
      } else {
        emit(HtmlTokenKind::end_tag, i, close + 1, std::move(name));
      }
    } else if (ascii_alpha(next)) {
      std::size_t n = i + 1;
      std::string name;
      while (n < html.size() && !detail::ascii_space(html[n]) && html[n] != '>' && html[n] != '/') {
        name.push_back(detail::ascii_lower(html[n++]));
      }
      const std::size_t close = detail::scan_tag_end(html, i);
      if (close == std::string_view::npos) {
        emit(HtmlTokenKind::bogus, i, html.size());
        break;
      }
      const bool self_closing = close >= 2 && html[close - 2] == '/';
      emit(HtmlTokenKind::start_tag, i, close, name);
      if (!self_closing && detail::is_raw_text_element(name)) {
        const std::string closing = "</" + name;
        std::size_t search = close;
        std::size_t end_at = std::string_view::npos;
        while ((end_at = detail::find_ci(html, closing, search)) != std::string_view::npos) {
          const std::size_t after = end_at + closing.size();
          if (after >= html.size() || detail::ascii_space(html[after]) || html[after] == '>' || html[after] == '/') break;
          search = end_at + 1;
        }
        const std::size_t raw_end = end_at == std::string_view::npos ? html.size() : end_at;
        if (raw_end > close) emit(HtmlTokenKind::raw_text, close, raw_end);
        text_start = i = raw_end;
      }
    } else if (next == '/') {
      const std::size_t close = html.find('>', i + 2);
      emit(HtmlTokenKind::bogus, i, close == std::string_view::npos ? html.size() : close + 1);
    } else {
      ++i;
    }
  }
  flush_text(html.size());
  return tokens;
}

/// Decoded text of one HTML text node with a map from each decoded code
/// point back to its byte offset in the raw node (entities are atomic).
struct DecodedText {
  std::u32string text;
  std::vector<std::size_t> raw_offsets;  // size text.size() + 1
};

namespace detail {

inline std::optional<char32_t> named_entity(std::string_view name) {
  static constexpr std::pair<std::string_view, char32_t> table[] = {
      {"amp", U'&'},         {"lt", U'<'},          {"gt", U'>'},          {"quot", U'"'},
      {"apos", U'\''},       {"nbsp", U'\u00A0'},   {"rsquo", U'\u2019'},  {"lsquo", U'\u2018'},
      {"rdquo", U'\u201D'},  {"ldquo", U'\u201C'},  {"hellip", U'\u2026'}, {"mdash", U'\u2014'},
      {"ndash", U'\u2013'},  {"copy", U'\u00A9'},   {"reg", U'\u00AE'},    {"trade", U'\u2122'}};
  for (const auto& [n, cp] : table) {
    if (n == name) return cp;
  }
  return std::nullopt;
}

// Decodes the entity at raw[pos] == '&'; returns code point and byte length.
inline std::optional<std::pair<char32_t, std::size_t>> decode_entity(std::string_view raw, std::size_t pos) {
  const std::size_t semi = raw.find(';', pos + 1);
  if (semi == std::string_view::npos || semi - pos > 32) return std::nullopt;
  const std::string_view body = raw.substr(pos + 1, semi - pos - 1);
  if (body.empty()) return std::nullopt;
  if (body[0] == '#') {
    const bool hex = body.size() > 1 && (body[1] == 'x' || body[1] == 'X');
    const std::string_view digits = body.substr(hex ? 2 : 1);
    if (digits.empty()) return std::nullopt;
    std::uint32_t value = 0;
    for (char c : digits) {
      std::uint32_t d;
      if (c >= '0' && c <= '9') {
        d = static_cast<std::uint32_t>(c - '0');
      } else if (hex && ascii_lower(c) >= 'a' && ascii_lower(c) <= 'f') {
        d = static_cast<std::uint32_t>(ascii_lower(c) - 'a' + 10);
      } else {
        return std::nullopt;
      }
      value = value * (hex ? 16 : 10) + d;
      if (value > 0x10FFFF) return std::nullopt;
    }
    if (value == 0 || (value >= 0xD800 && value <= 0xDFFF)) return std::nullopt;
    return std::pair{static_cast<char32_t>(value), semi - pos + 1};
  }
  if (const auto cp = named_entity(body)) return std::pair{*cp, semi - pos + 1};
  return std::nullopt;
}

}  // namespace detail

inline DecodedText decode_html_text(std::string_view raw) {
  DecodedText out;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    out.raw_offsets.push_back(pos);
    if (raw[pos] == '&') {
      if (const auto entity = detail::decode_entity(raw, pos)) {
        out.text.push_back(entity->first);
        pos += entity->second;
        continue;
      }
    }
    std::size_t next = pos;
    const std::int32_t cp = unicode::detail::decode_one(raw, next);
    if (cp < 0) throw Utf8Error(pos, "invalid UTF-8 in HTML text");
    out.text.push_back(static_cast<char32_t>(cp));
    pos = next;
  }
  out.raw_offsets.push_back(raw.size());
  return out;
}

inline std::string escape_html_text(std::u32string_view text) {
  std::string out;
  for (char32_t c : text) {
    switch (c) {
      case U'&': out += "&amp;"; break;
      case U'<': out += "&lt;"; break;
      case U'>': out += "&gt;"; break;
      default: unicode::append(out, c);
    }
  }
  return out;
}

/// Applies code-point edits to a raw text node, leaving every byte outside
/// the edited ranges (including untouched entities) as it was.
inline std::string apply_edits_to_raw(std::string_view raw, const DecodedText& decoded, std::vector<TextEdit> edits) {
  std::sort(edits.begin(), edits.end(), [](const TextEdit& a, const TextEdit& b) {
    if (a.span.start != b.span.start) return a.span.start > b.span.start;
    return a.span.length > b.span.length;
  });
  std::string out(raw);
  for (const auto& e : edits) {
    const std::size_t from = decoded.raw_offsets[e.span.start];
    const std::size_t to = decoded.raw_offsets[e.span.end()];
    out.replace(from, to - from, escape_html_text(e.replacement));
  }
  return out;
}

struct HtmlRewriteResult {
  std::string html;
  std::size_t edits_applied = 0;
  std::vector<std::string> warnings;
};

/// Rewrites eligible text nodes: text outside <head>, outside raw-text
/// elements (script, style, textarea, title, ...), and not whitespace-only.
/// With a budget the edits are planned jointly across all nodes; without one
/// every rule is applied in order. Any failure returns the input unchanged.
inline HtmlRewriteResult rewrite_html(std::string_view html, const CompiledRuleset& ruleset, const Lexicon& lexicon,
                                      const std::optional<Budget>& budget, const DocumentMetadata& metadata = {}) {
  HtmlRewriteResult result{std::string(html), 0, {}};
  if (!unicode::is_valid_utf8(html)) {
    result.warnings.push_back("body is not valid UTF-8; passed through");
    return result;
  }
  if (!scope_matches(ruleset.scope(), metadata)) return result;

  try {
    const auto tokens = tokenize_html(html);
    struct Node {
      std::size_t token;
      std::string raw;
      DecodedText decoded;
    };
    std::vector<Node> nodes;
    bool in_head = false;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const auto& tok = tokens[t];
      if (tok.kind == HtmlTokenKind::start_tag) {
        if (tok.name == "head") in_head = true;
        if (tok.name == "body") in_head = false;
      } else if (tok.kind == HtmlTokenKind::end_tag && tok.name == "head") {
        in_head = false;
      } else if (tok.kind == HtmlTokenKind::text && !in_head) {
        const std::string_view raw = tok.bytes(html);
        if (raw.find_first_not_of(" \t\r\n\f") == std::string_view::npos) continue;
        nodes.push_back({t, std::string(raw), decode_html_text(raw)});
      }
    }
    if (nodes.empty()) return result;

    const auto apply_to_node = [&](Node& node, std::vector<TextEdit> edits) {
      if (edits.empty()) return;
      result.edits_applied += edits.size();
      node.raw = apply_edits_to_raw(node.raw, node.decoded, std::move(edits));
      node.decoded = decode_html_text(node.raw);
    };

    if (budget) {
      Document doc;
      doc.metadata = metadata;
      for (const auto& node : nodes) doc.blocks.push_back(unicode::encode(node.decoded.text));
      const auto plan = plan_edits(find_matches(ruleset, doc, lexicon), *budget);
      std::vector<std::vector<TextEdit>> per_node(nodes.size());
      for (const auto& e : plan.selected) per_node[e.block_index].push_back({e.span, unicode::decode(e.replacement)});
      for (std::size_t n = 0; n < nodes.size(); ++n) apply_to_node(nodes[n], std::move(per_node[n]));
    } else {
      for (const auto& rule : ruleset.rules()) {
        for (auto& node : nodes) apply_to_node(node, rule_edits(rule, node.decoded.text));
      }
    }
    if (result.edits_applied == 0) return result;

    std::string out;
    out.reserve(html.size() + 256);
    std::size_t n = 0;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (n < nodes.size() && nodes[n].token == t) {
        out += nodes[n++].raw;
      } else {
        out += tokens[t].bytes(html);
      }
    }
    result.html = std::move(out);
  } catch (const std::exception& e) {
    result.html = std::string(html);
    result.edits_applied = 0;
    result.warnings.push_back(std::string("rewrite failed; passed through: ") + e.what());
  }
  return result;
}

}  // namespace atd
