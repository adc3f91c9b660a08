#pragma once

// Text-level transformations. Each rule kind is expressed first as a list of
// located edits over a decoded block; the string-returning helpers apply those
// edits. The planner consumes the same edit lists, so a rule behaves the same
// whether it is applied wholesale or one candidate at a time.

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "atd/document.hpp"
#include "atd/lexicon.hpp"
#include "atd/unicode.hpp"

namespace atd {

struct TextEdit {
  Span span;
  std::u32string replacement;
};

/// Applies edits produced by a single rule (non-conflicting by construction).
inline std::u32string apply_text_edits(std::u32string text, std::vector<TextEdit> edits) {
  std::sort(edits.begin(), edits.end(), [](const TextEdit& a, const TextEdit& b) {
    if (a.span.start != b.span.start) return a.span.start > b.span.start;
    return a.span.length > b.span.length;
  });
  for (const auto& e : edits) text.replace(e.span.start, e.span.length, e.replacement);
  return text;
}

namespace detail {

inline bool boundary_before(std::u32string_view text, std::size_t pos) {
  return pos == 0 || !unicode::is_word_char(text[pos - 1]);
}

inline bool boundary_after(std::u32string_view text, std::size_t pos) {
  return pos >= text.size() || !unicode::is_word_char(text[pos]);
}

// Matches 'd, 'll, 'm, 've (either apostrophe form) at pos in folded text.
inline std::size_t contraction_length(std::u32string_view key, std::size_t pos) {
  if (pos >= key.size() || key[pos] != U'\'') return 0;
  for (std::u32string_view suffix : {U"ll", U"ve", U"d", U"m"}) {
    if (key.substr(pos + 1, suffix.size()) == suffix) return suffix.size() + 1;
  }
  return 0;
}

inline std::u32string nearest_preceding_word(std::u32string_view text, std::size_t pos) {
  std::size_t end = pos;
  while (end > 0 && !unicode::is_letter(text[end - 1])) --end;
  std::size_t start = end;
  while (start > 0 && (unicode::is_letter(text[start - 1]) || unicode::is_apostrophe(text[start - 1]))) {
    --start;
  }
  while (start < end && unicode::is_apostrophe(text[start])) ++start;
  return unicode::match_key(text.substr(start, end - start));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sorry insertion

struct IStatement {
  Span span;           // the "I" plus any contraction, e.g. "I'm"
  bool at_start = false;
};

/// At text start: "I" followed by spaces or a contraction. Mid-text: only
/// whitespace + "I" + contraction; a plain " I " in mid-text does not match.
inline std::vector<IStatement> detect_i_statements(std::u32string_view text) {
  std::vector<IStatement> found;
  const std::u32string key = unicode::match_key(text);
  const std::size_t n = key.size();

  if (n >= 2 && key[0] == U'i') {
    if (const std::size_t c = detail::contraction_length(key, 1); c && detail::boundary_after(key, 1 + c)) {
      found.push_back({{0, 1 + c}, true});
    } else if (key[1] == U' ') {
      std::size_t after = 1;
      while (after < n && key[after] == U' ') ++after;
      if (after < n && unicode::is_word_char(key[after])) found.push_back({{0, 1}, true});
    }
  }
  const std::size_t from = found.empty() ? 1 : found.front().span.end();
  for (std::size_t i = std::max<std::size_t>(from, 1); i < n; ++i) {
    if (key[i] != U'i' || !unicode::is_space(text[i - 1])) continue;
    const std::size_t c = detail::contraction_length(key, i + 1);
    if (c && detail::boundary_after(key, i + 1 + c)) {
      found.push_back({{i, 1 + c}, false});
      i += c;
    }
  }
  return found;
}

inline std::vector<Span> detect_i_statements(std::string_view text) {
  std::vector<Span> spans;
  for (const auto& s : detect_i_statements(unicode::decode(text))) spans.push_back(s.span);
  return spans;
}

inline std::vector<TextEdit> sorry_edits(std::u32string_view text) {
  std::vector<TextEdit> edits;
  for (const auto& statement : detect_i_statements(text)) {
    if (detail::nearest_preceding_word(text, statement.span.start) == U"sorry") continue;
    edits.push_back({{statement.span.start, 0}, statement.at_start ? U"Sorry, " : U"sorry, "});
  }
  return edits;
}

inline std::string insert_sorry(std::string_view text) {
  const auto decoded = unicode::decode(text);
  return unicode::encode(apply_text_edits(decoded, sorry_edits(decoded)));
}

// ---------------------------------------------------------------------------
// Phrase matching shared by swap, deletion, filtering and metric nouns

/// Whole-word, case-insensitive, longest-match phrase lookup.
class PhraseMatcher {
public:
  PhraseMatcher() = default;

  explicit PhraseMatcher(const std::vector<std::string>& phrases) {
    for (std::size_t i = 0; i < phrases.size(); ++i) add(unicode::decode(phrases[i]), i);
  }

  void add(std::u32string_view phrase, std::size_t id) {
    if (phrase.empty()) throw std::invalid_argument("empty term");
    auto key = unicode::match_key(phrase);
    auto& bucket = by_first_[key.front()];
    bucket.push_back({std::move(key), id});
    std::stable_sort(bucket.begin(), bucket.end(),
                     [](const Entry& a, const Entry& b) { return a.key.size() > b.key.size(); });
  }

  bool empty() const noexcept { return by_first_.empty(); }

  struct Match {
    std::size_t id = 0;
    std::size_t length = 0;
  };

  /// Longest phrase matching at pos in a match_key()'d text.
  std::optional<Match> match_at(std::u32string_view key, std::size_t pos) const {
    const auto it = by_first_.find(key[pos]);
    if (it == by_first_.end()) return std::nullopt;
    for (const auto& entry : it->second) {
      const std::size_t len = entry.key.size();
      if (key.substr(pos, len) != entry.key) continue;
      if (unicode::is_word_char(entry.key.front()) && !detail::boundary_before(key, pos)) continue;
      if (unicode::is_word_char(entry.key.back()) && !detail::boundary_after(key, pos + len)) continue;
      return Match{entry.id, len};
    }
    return std::nullopt;
  }

  /// Non-overlapping left-to-right matches.
  std::vector<std::pair<Span, std::size_t>> find_all(std::u32string_view key) const {
    std::vector<std::pair<Span, std::size_t>> out;
    for (std::size_t i = 0; i < key.size();) {
      if (auto m = match_at(key, i)) {
        out.push_back({{i, m->length}, m->id});
        i += m->length;
      } else {
        ++i;
      }
    }
    return out;
  }

private:
  struct Entry {
    std::u32string key;
    std::size_t id;
  };
  std::map<char32_t, std::vector<Entry>> by_first_;
};

// ---------------------------------------------------------------------------
// Dictionary swap

using TermPair = std::pair<std::string, std::string>;

namespace detail {

inline std::u32string preserve_case(std::u32string_view source, std::u32string_view replacement) {
  std::size_t letters = 0;
  bool any_lower = false;
  for (char32_t c : source) {
    if (unicode::is_letter(c)) {
      ++letters;
      any_lower = any_lower || unicode::is_lower(c);
    }
  }
  std::u32string out(replacement);
  if (letters >= 2 && !any_lower) return unicode::to_upper(out);
  const auto first = std::find_if(source.begin(), source.end(), unicode::is_letter);
  if (first != source.end() && unicode::is_upper(*first)) {
    const auto target = std::find_if(out.begin(), out.end(), unicode::is_letter);
    if (target != out.end()) *target = unicode::to_upper(*target);
  }
  return out;
}

}  // namespace detail

/// Compiled swap pairs. A symmetric set is closed under reversal. "her"
/// mapped to "his"/"him" is resolved per occurrence: "his" when the next
/// token starts with a letter (possessive), "him" otherwise.
class SwapTable {
public:
  SwapTable() = default;

  SwapTable(const std::vector<TermPair>& pairs, bool symmetric) {
    if (pairs.empty()) throw std::invalid_argument("swap needs at least one pair");
    std::vector<std::pair<std::u32string, std::u32string>> all;
    for (const auto& [l, r] : pairs) {
      if (l.empty() || r.empty()) throw std::invalid_argument("swap pair sides must be non-empty");
      all.emplace_back(unicode::decode(l), unicode::decode(r));
      if (symmetric) all.emplace_back(unicode::decode(r), unicode::decode(l));
    }
    for (auto& [left, right] : all) {
      const auto key = unicode::match_key(left);
      auto it = std::find_if(targets_.begin(), targets_.end(), [&](const Target& t) { return t.key == key; });
      if (it == targets_.end()) {
        targets_.push_back({key, {right}});
        matcher_.add(left, targets_.size() - 1);
        continue;
      }
      const auto exists = std::find_if(it->rights.begin(), it->rights.end(), [&](const std::u32string& x) {
        return unicode::match_key(x) == unicode::match_key(right);
      });
      if (exists != it->rights.end()) continue;
      it->rights.push_back(right);
      if (!is_her_split(*it)) {
        throw std::invalid_argument("conflicting swap targets for '" + unicode::encode(left) + "'");
      }
    }
  }

  std::vector<TextEdit> edits(std::u32string_view text) const {
    std::vector<TextEdit> out;
    const auto key = unicode::match_key(text);
    for (const auto& [span, id] : matcher_.find_all(key)) {
      const std::u32string_view source = text.substr(span.start, span.length);
      auto replacement = detail::preserve_case(source, choose(targets_[id], text, span.end()));
      if (replacement == source) continue;
      out.push_back({span, std::move(replacement)});
    }
    return out;
  }

private:
  struct Target {
    std::u32string key;
    std::vector<std::u32string> rights;
  };

  static bool is_her_split(const Target& t) {
    if (t.key != U"her") return false;
    return std::all_of(t.rights.begin(), t.rights.end(), [](const std::u32string& r) {
      const auto k = unicode::match_key(r);
      return k == U"his" || k == U"him";
    });
  }

  static std::u32string choose(const Target& t, std::u32string_view text, std::size_t end) {
    if (t.key != U"her" || !is_her_split(t)) return t.rights.front();
    std::size_t next = end;
    while (next < text.size() && unicode::is_space(text[next])) ++next;
    const bool possessive = next > end && next < text.size() && unicode::is_letter(text[next]);
    return possessive ? U"his" : U"him";
  }

  std::vector<Target> targets_;
  PhraseMatcher matcher_;
};

inline std::string swap_terms(std::string_view text, const std::vector<TermPair>& pairs, bool symmetric = false) {
  const SwapTable table(pairs, symmetric);
  const auto decoded = unicode::decode(text);
  return unicode::encode(apply_text_edits(decoded, table.edits(decoded)));
}

// ---------------------------------------------------------------------------
// Politeness rewrites of directives

enum class PolitenessMode { supportive, downgrader, aggravating };

struct PolitenessPhrases {
  std::string preamble = "I understand that you are extremely busy these days";
  std::string threat = "Unless you want to lose points";

  friend bool operator==(const PolitenessPhrases&, const PolitenessPhrases&) = default;
};

inline std::vector<std::string> default_imperative_verbs() {
  return {"approve", "ask",    "book",  "bring",  "call",     "check",  "complete", "confirm",
          "do",      "email",  "file",  "finish", "fix",      "forward", "give",    "prepare",
          "read",    "reply",  "review", "schedule", "send",  "sign",   "submit",   "take",
          "tell",    "update", "write"};
}

namespace detail {

inline std::u32string_view trim(std::u32string_view s) {
  while (!s.empty() && unicode::is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && unicode::is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline bool is_terminator(char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }

}  // namespace detail

/// Recognizes "[please] <verb> ..." and "can/could/will/would you ...?" and
/// returns the directive body with its first letter lower-cased.
inline std::optional<std::string> detect_directive(std::string_view sentence,
                                                   const std::vector<std::string>& imperative_verbs) {
  const std::u32string decoded = unicode::decode(sentence);
  std::u32string_view s = detail::trim(decoded);
  const bool question = !s.empty() && s.back() == U'?';
  while (!s.empty() && detail::is_terminator(s.back())) s.remove_suffix(1);
  s = detail::trim(s);
  if (s.empty()) return std::nullopt;
  const std::u32string key = unicode::match_key(s);

  std::optional<std::size_t> body_start;
  for (std::u32string_view modal : {U"can you ", U"could you ", U"will you ", U"would you "}) {
    if (question && std::u32string_view(key).substr(0, modal.size()) == modal) {
      body_start = modal.size();
      break;
    }
  }
  if (!body_start) {
    std::size_t pos = 0;
    if (std::u32string_view(key).substr(0, 6) == U"please" && detail::boundary_after(key, 6)) {
      pos = 6;
      while (pos < key.size() && (unicode::is_space(key[pos]) || key[pos] == U',')) ++pos;
    }
    const auto tokens = tokenize(std::u32string_view(key).substr(pos));
    if (tokens.empty() || tokens.front().start != 0) return std::nullopt;
    const auto verb = unicode::encode(std::u32string_view(key).substr(pos, tokens.front().end));
    if (std::none_of(imperative_verbs.begin(), imperative_verbs.end(),
                     [&](const std::string& v) { return unicode::match_key(v) == verb; })) {
      return std::nullopt;
    }
    body_start = pos;
  }
  std::u32string body(detail::trim(s.substr(*body_start)));
  if (body.empty()) return std::nullopt;
  body[0] = unicode::to_lower(body[0]);
  return unicode::encode(body);
}

inline std::string rewrite_directive(std::string_view body, PolitenessMode mode,
                                     const PolitenessPhrases& phrases = {}) {
  if (body.empty()) throw std::invalid_argument("directive body must be non-empty");
  switch (mode) {
    case PolitenessMode::supportive:
      return phrases.preamble + ", but can you " + std::string(body) + "?";
    case PolitenessMode::downgrader:
      return "Would it be ok for you to possibly " + std::string(body) + "?";
    case PolitenessMode::aggravating:
      return phrases.threat + ", can you " + std::string(body) + "?";
  }
  return std::string(body);
}

/// Sentences end at a run of terminators followed by whitespace or the end of
/// the block. Spans exclude surrounding whitespace.
inline std::vector<Span> split_sentences(std::u32string_view text) {
  std::vector<Span> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && unicode::is_space(text[i])) ++i;
    if (i >= n) break;
    const std::size_t start = i;
    std::size_t end = n;
    for (std::size_t j = i; j < n; ++j) {
      if (!detail::is_terminator(text[j])) continue;
      std::size_t k = j;
      while (k < n && detail::is_terminator(text[k])) ++k;
      if (k == n || unicode::is_space(text[k])) {
        end = k;
        break;
      }
      j = k - 1;
    }
    std::size_t trimmed = end;
    while (trimmed > start && unicode::is_space(text[trimmed - 1])) --trimmed;
    out.push_back({start, trimmed - start});
    i = end;
  }
  return out;
}

inline std::vector<TextEdit> directive_edits(std::u32string_view text, PolitenessMode mode,
                                             const PolitenessPhrases& phrases,
                                             const std::vector<std::string>& verbs) {
  std::vector<TextEdit> out;
  for (const auto& span : split_sentences(text)) {
    const auto sentence = unicode::encode(text.substr(span.start, span.length));
    const auto body = detect_directive(sentence, verbs);
    if (!body) continue;
    auto rewritten = unicode::decode(rewrite_directive(*body, mode, phrases));
    if (rewritten == text.substr(span.start, span.length)) continue;
    out.push_back({span, std::move(rewritten)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Term deletion, metric stripping, block filtering

/// Each deleted term takes one adjacent whitespace character with it (the one
/// after it, or the one before when it ends the text).
inline std::vector<TextEdit> delete_term_edits(std::u32string_view text, const PhraseMatcher& terms) {
  std::vector<TextEdit> out;
  std::size_t last_end = 0;
  for (auto [span, id] : terms.find_all(unicode::match_key(text))) {
    if (span.end() < text.size() && unicode::is_space(text[span.end()])) {
      ++span.length;
    } else if (span.start > last_end && unicode::is_space(text[span.start - 1])) {
      --span.start;
      ++span.length;
    }
    last_end = span.end();
    out.push_back({span, U""});
  }
  return out;
}

inline std::string delete_terms(std::string_view text, const std::vector<std::string>& terms) {
  const auto decoded = unicode::decode(text);
  return unicode::encode(apply_text_edits(decoded, delete_term_edits(decoded, PhraseMatcher(terms))));
}

namespace detail {

// Integer with optional thousands groups, optional decimals before a k/M
// suffix. Returns the length of the number at pos, or 0.
inline std::size_t metric_number_length(std::u32string_view t, std::size_t pos) {
  const auto digit = [&](std::size_t i) { return i < t.size() && t[i] >= U'0' && t[i] <= U'9'; };
  if (!digit(pos) || (pos > 0 && (unicode::is_word_char(t[pos - 1]) || t[pos - 1] == U'.' || t[pos - 1] == U','))) {
    return 0;
  }
  const auto suffix = [&](std::size_t i) { return i < t.size() && (t[i] == U'k' || t[i] == U'K' || t[i] == U'M'); };
  std::size_t i = pos;
  while (digit(i)) ++i;
  while (i < t.size() && t[i] == U',' && digit(i + 1) && digit(i + 2) && digit(i + 3) && !digit(i + 4)) {
    i += 4;
  }
  if (i < t.size() && t[i] == U'.' && digit(i + 1)) {
    std::size_t j = i + 1;
    while (digit(j)) ++j;
    if (suffix(j)) return j + 1 - pos;
  }
  if (suffix(i)) ++i;
  return i - pos;
}

}  // namespace detail

/// Removes a count and the single space after it when the next word is a
/// metric noun: "12 likes" -> "likes".
inline std::vector<TextEdit> strip_metric_edits(std::u32string_view text, const PhraseMatcher& nouns) {
  std::vector<TextEdit> out;
  const auto key = unicode::match_key(text);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const std::size_t len = detail::metric_number_length(text, i);
    if (len == 0) continue;
    const std::size_t space = i + len;
    if (space + 1 < text.size() && unicode::is_space(text[space])) {
      if (auto m = nouns.match_at(key, space + 1)) {
        out.push_back({{i, len + 1}, U""});
        i = space + m->length;
        continue;
      }
    }
    i += len - 1;
  }
  return out;
}

inline std::string strip_metrics(std::string_view text, const std::vector<std::string>& metric_nouns) {
  if (metric_nouns.empty()) return std::string(text);
  const auto decoded = unicode::decode(text);
  return unicode::encode(apply_text_edits(decoded, strip_metric_edits(decoded, PhraseMatcher(metric_nouns))));
}

inline bool contains_term(std::u32string_view text, const PhraseMatcher& terms) {
  if (terms.empty()) return false;
  const auto key = unicode::match_key(text);
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (terms.match_at(key, i)) return true;
  }
  return false;
}

/// Drops every block mentioning any of the terms; survivors keep their order.
inline Document filter_blocks(const Document& doc, const std::vector<std::string>& terms) {
  if (terms.empty()) return doc;
  const PhraseMatcher matcher(terms);
  Document out;
  out.metadata = doc.metadata;
  for (const auto& block : doc.blocks) {
    if (!contains_term(unicode::decode(block), matcher)) out.blocks.push_back(block);
  }
  return out;
}

}  // namespace atd
