#pragma once

// Integrity checking between a trusted source snapshot and the text a reader
// was actually shown: canonicalize both, compare digests, locate word-level
// edits, and attribute each edit to a rule when replaying that rule on the
// source reproduces it.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "atd/engine.hpp"
#include "atd/ruleset.hpp"
#include "atd/unicode.hpp"

namespace atd {

inline std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0x0F]);
  }
  return out;
}

struct CanonicalText {
  std::string text;
  std::string digest;

  friend bool operator==(const CanonicalText&, const CanonicalText&) = default;
};

/// NFC, whitespace runs collapsed to one space, trimmed; SHA-256 of the result.
inline CanonicalText canonicalize(std::string_view text) {
  const std::u32string normalized = unicode::decode(unicode::nfc(text));
  std::u32string collapsed;
  collapsed.reserve(normalized.size());
  bool pending_space = false;
  for (char32_t c : normalized) {
    if (unicode::is_space(c)) {
      pending_space = !collapsed.empty();
      continue;
    }
    if (pending_space) collapsed.push_back(U' ');
    pending_space = false;
    collapsed.push_back(c);
  }
  CanonicalText out;
  out.text = unicode::encode(collapsed);
  out.digest = sha256_hex(out.text);
  return out;
}

inline std::vector<std::string> split_words(std::string_view canonical) {
  std::vector<std::string> words;
  std::size_t pos = 0;
  while (pos < canonical.size()) {
    std::size_t sp = canonical.find(' ', pos);
    if (sp == std::string_view::npos) sp = canonical.size();
    if (sp > pos) words.emplace_back(canonical.substr(pos, sp - pos));
    pos = sp + 1;
  }
  return words;
}

enum class EditType { insert, remove, replace };

inline std::string_view to_string(EditType t) {
  switch (t) {
    case EditType::insert: return "insert";
    case EditType::remove: return "delete";
    case EditType::replace: return "replace";
  }
  return "unknown";
}

struct WordRange {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const WordRange&, const WordRange&) = default;
};

struct Edit {
  EditType type = EditType::insert;
  WordRange source_span;
  WordRange rendered_span;
  std::string source_text;
  std::string rendered_text;

  friend bool operator==(const Edit&, const Edit&) = default;
};

enum class DiffOp { equal, remove, insert };

/// Shortest edit script between two word sequences (Myers' greedy algorithm
/// after trimming the common prefix and suffix). Each op consumes one word
/// from the matching side.
inline std::vector<DiffOp> diff_words(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t prefix = 0;
  while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) ++prefix;
  std::size_t suffix = 0;
  while (suffix < a.size() - prefix && suffix < b.size() - prefix &&
         a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) {
    ++suffix;
  }
  const long n = static_cast<long>(a.size() - prefix - suffix);
  const long m = static_cast<long>(b.size() - prefix - suffix);
  const auto A = [&](long i) -> const std::string& { return a[prefix + static_cast<std::size_t>(i)]; };
  const auto B = [&](long j) -> const std::string& { return b[prefix + static_cast<std::size_t>(j)]; };

  std::vector<DiffOp> middle;
  if (n == 0 || m == 0) {
    middle.assign(static_cast<std::size_t>(n), DiffOp::remove);
    middle.insert(middle.end(), static_cast<std::size_t>(m), DiffOp::insert);
  } else {
    const long max = n + m;
    const long offset = max;
    std::vector<long> v(static_cast<std::size_t>(2 * max + 2), 0);
    std::vector<std::vector<long>> trace;
    long found_d = -1;
    for (long d = 0; d <= max && found_d < 0; ++d) {
      trace.push_back(v);
      for (long k = -d; k <= d; k += 2) {
        long x;
        if (k == -d || (k != d && v[offset + k - 1] < v[offset + k + 1])) {
          x = v[offset + k + 1];
        } else {
          x = v[offset + k - 1] + 1;
        }
        long y = x - k;
        while (x < n && y < m && A(x) == B(y)) ++x, ++y;
        v[offset + k] = x;
        if (x >= n && y >= m) {
          found_d = d;
          break;
        }
      }
    }
    // Backtrack through the saved frontiers.
    long x = n;
    long y = m;
    std::vector<DiffOp> reversed;
    for (long d = found_d; d > 0; --d) {
      const auto& pv = trace[static_cast<std::size_t>(d)];
      const long k = x - y;
      long prev_k;
      if (k == -d || (k != d && pv[offset + k - 1] < pv[offset + k + 1])) {
        prev_k = k + 1;
      } else {
        prev_k = k - 1;
      }
      const long prev_x = pv[offset + prev_k];
      const long prev_y = prev_x - prev_k;
      while (x > prev_x && y > prev_y) {
        reversed.push_back(DiffOp::equal);
        --x, --y;
      }
      reversed.push_back(x == prev_x ? DiffOp::insert : DiffOp::remove);
      x = prev_x;
      y = prev_y;
    }
    while (x > 0 && y > 0) {
      reversed.push_back(DiffOp::equal);
      --x, --y;
    }
    middle.assign(reversed.rbegin(), reversed.rend());
  }
  std::vector<DiffOp> ops(prefix, DiffOp::equal);
  ops.insert(ops.end(), middle.begin(), middle.end());
  ops.insert(ops.end(), suffix, DiffOp::equal);
  return ops;
}

namespace detail {

inline std::string join_words(const std::vector<std::string>& words, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) {
    if (i > from) out.push_back(' ');
    out += words[i];
  }
  return out;
}

}  // namespace detail

/// Groups an edit script into edits: each maximal run of non-equal ops
/// between two unchanged words becomes one insert, delete, or replace.
inline std::vector<Edit> edits_from_ops(const std::vector<DiffOp>& ops, const std::vector<std::string>& source,
                                        const std::vector<std::string>& rendered) {
  std::vector<Edit> edits;
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;
  while (k < ops.size()) {
    if (ops[k] == DiffOp::equal) {
      ++i, ++j, ++k;
      continue;
    }
    const std::size_t si = i;
    const std::size_t sj = j;
    while (k < ops.size() && ops[k] != DiffOp::equal) {
      if (ops[k] == DiffOp::remove) {
        ++i;
      } else {
        ++j;
      }
      ++k;
    }
    Edit e;
    e.type = si == i ? EditType::insert : (sj == j ? EditType::remove : EditType::replace);
    e.source_span = {si, i};
    e.rendered_span = {sj, j};
    e.source_text = detail::join_words(source, si, i);
    e.rendered_text = detail::join_words(rendered, sj, j);
    edits.push_back(std::move(e));
  }
  return edits;
}

inline std::vector<Edit> diff_texts(const CanonicalText& source, const CanonicalText& rendered) {
  if (source.text == rendered.text) return {};
  const auto a = split_words(source.text);
  const auto b = split_words(rendered.text);
  return edits_from_ops(diff_words(a, b), a, b);
}

/// Rebuilds the rendered word sequence from the source and an edit list.
inline std::vector<std::string> apply_word_edits(const std::vector<std::string>& source, const std::vector<Edit>& edits) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (const auto& e : edits) {
    if (e.source_span.start < pos || e.source_span.end > source.size()) {
      throw std::invalid_argument("edits out of order or out of range");
    }
    out.insert(out.end(), source.begin() + static_cast<std::ptrdiff_t>(pos),
               source.begin() + static_cast<std::ptrdiff_t>(e.source_span.start));
    const auto inserted = split_words(e.rendered_text);
    out.insert(out.end(), inserted.begin(), inserted.end());
    pos = e.source_span.end;
  }
  out.insert(out.end(), source.begin() + static_cast<std::ptrdiff_t>(pos), source.end());
  return out;
}

struct Classification {
  RuleKind kind = RuleKind::insert_sorry;
  std::string rule_id;
  friend bool operator==(const Classification&, const Classification&) = default;
};

/// Per edit: the rule it is attributed to, or std::nullopt for "unknown".
using Classifications = std::vector<std::optional<Classification>>;

namespace detail {

inline std::string canonical_join(const Document& doc) {
  std::string joined;
  for (std::size_t i = 0; i < doc.blocks.size(); ++i) {
    if (i) joined += "\n\n";
    joined += doc.blocks[i];
  }
  return canonicalize(joined).text;
}

inline bool same_site(const Edit& a, const Edit& b) {
  return a.type == b.type && a.source_span == b.source_span && a.source_text == b.source_text &&
         a.rendered_text == b.rendered_text;
}

inline bool is_i_statement_word(std::string_view word) {
  const auto key = unicode::match_key(unicode::decode(word));
  if (key.empty() || key[0] != U'i') return false;
  std::size_t end = 1;
  if (const std::size_t c = contraction_length(key, 1)) end += c;
  return boundary_after(key, end);
}

}  // namespace detail

/// Attribution by single-rule replay. First, each rule is replayed over the
/// whole source and its own edit set is compared against the observed edits.
/// Edits not explained that way are replayed locally (the edit plus one word
/// of context on each side). A "Sorry,"/"sorry," insertion in front of an
/// I-statement is attributed to the first insert_sorry rule.
inline Classifications classify_edits(const std::vector<Edit>& edits, const Document& source,
                                      const CompiledRuleset& ruleset) {
  Classifications out(edits.size());
  if (edits.empty()) return out;
  const std::string source_canonical = detail::canonical_join(source);
  const auto source_words = split_words(source_canonical);
  CanonicalText source_text{source_canonical, {}};

  for (const auto& rule : ruleset.rules()) {
    const Document replayed = apply_rule(rule, source);
    const CanonicalText replay_text{detail::canonical_join(replayed), {}};
    const auto replay_edits = diff_texts(source_text, replay_text);
    for (std::size_t i = 0; i < edits.size(); ++i) {
      if (out[i]) continue;
      for (const auto& r : replay_edits) {
        if (detail::same_site(edits[i], r)) {
          out[i] = Classification{rule.rule.kind(), rule.rule.id};
          break;
        }
      }
    }
  }

  for (std::size_t i = 0; i < edits.size(); ++i) {
    if (out[i]) continue;
    const Edit& e = edits[i];
    if (e.source_span.end > source_words.size()) continue;
    const std::size_t from = e.source_span.start > 0 ? e.source_span.start - 1 : 0;
    const std::size_t to = std::min(source_words.size(), e.source_span.end + 1);
    const std::string window = detail::join_words(source_words, from, to);
    std::string expected = detail::join_words(source_words, from, e.source_span.start);
    if (!e.rendered_text.empty()) expected += (expected.empty() ? "" : " ") + e.rendered_text;
    const std::string tail = detail::join_words(source_words, e.source_span.end, to);
    if (!tail.empty()) expected += (expected.empty() ? "" : " ") + tail;

    for (const auto& rule : ruleset.rules()) {
      if (rule.rule.kind() == RuleKind::filter_block) continue;
      const Document local = apply_rule(rule, Document{{window}, {}});
      if (detail::canonical_join(local) == canonicalize(expected).text) {
        out[i] = Classification{rule.rule.kind(), rule.rule.id};
        break;
      }
    }
    if (out[i]) continue;
    if (e.type == EditType::insert && (e.rendered_text == "Sorry," || e.rendered_text == "sorry,") &&
        e.source_span.start < source_words.size() && detail::is_i_statement_word(source_words[e.source_span.start])) {
      for (const auto& rule : ruleset.rules()) {
        if (rule.rule.kind() == RuleKind::insert_sorry) {
          out[i] = Classification{rule.rule.kind(), rule.rule.id};
          break;
        }
      }
    }
  }
  return out;
}

struct IntegrityReport {
  std::string source_digest;
  std::string rendered_digest;
  std::vector<Edit> edits;
  std::optional<Classifications> classifications;  // present when a ruleset was supplied
};

/// Compares a trusted source against rendered text. Paragraph structure of
/// the source (blank-line separated blocks) is used when replaying rules.
inline IntegrityReport detect(std::string_view source, std::string_view rendered,
                              const CompiledRuleset* ruleset = nullptr) {
  const auto canon_source = canonicalize(source);
  const auto canon_rendered = canonicalize(rendered);
  IntegrityReport report;
  report.source_digest = canon_source.digest;
  report.rendered_digest = canon_rendered.digest;
  report.edits = diff_texts(canon_source, canon_rendered);
  if (ruleset) {
    TextLayout layout;
    report.classifications = classify_edits(report.edits, split_paragraphs(source, layout), *ruleset);
  }
  return report;
}

inline nlohmann::ordered_json report_to_json(const IntegrityReport& report) {
  nlohmann::ordered_json doc;
  doc["source_digest"] = report.source_digest;
  doc["rendered_digest"] = report.rendered_digest;
  doc["edits"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < report.edits.size(); ++i) {
    const Edit& e = report.edits[i];
    nlohmann::ordered_json item;
    item["type"] = to_string(e.type);
    item["source_span"] = {e.source_span.start, e.source_span.end};
    item["rendered_span"] = {e.rendered_span.start, e.rendered_span.end};
    item["source_text"] = e.source_text;
    item["rendered_text"] = e.rendered_text;
    if (!report.classifications) {
      item["classified_as"] = nullptr;
      item["rule_id"] = nullptr;
    } else if (const auto& c = (*report.classifications)[i]) {
      item["classified_as"] = to_string(c->kind);
      item["rule_id"] = c->rule_id;
    } else {
      item["classified_as"] = "unknown";
      item["rule_id"] = nullptr;
    }
    doc["edits"].push_back(std::move(item));
  }
  return doc;
}

}  // namespace atd
