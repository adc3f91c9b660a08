#pragma once

#include <cmath>
#include <charconv>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "atd/unicode.hpp"

namespace atd {

struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;
};

/// Word tokens: maximal runs of letters, with apostrophes kept only between
/// two letters ("don't" is one token, "'quoted'" yields "quoted").
inline std::vector<TokenSpan> tokenize(std::u32string_view text) {
  std::vector<TokenSpan> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (!unicode::is_letter(text[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < n) {
      if (unicode::is_letter(text[i])) {
        ++i;
      } else if (unicode::is_apostrophe(text[i]) && i + 1 < n && unicode::is_letter(text[i + 1])) {
        i += 2;
      } else {
        break;
      }
    }
    tokens.push_back({start, i});
  }
  return tokens;
}

class LexiconError : public std::runtime_error {
public:
  LexiconError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

struct LexiconEntry {
  std::string term;  // case-folded
  double score = 0.0;
};

struct ValenceScore {
  double raw = 0.0;
  double normalized = 0.0;
  std::size_t matched_terms = 0;
  std::size_t token_count = 0;

  friend bool operator==(const ValenceScore&, const ValenceScore&) = default;
};

class Lexicon {
public:
  Lexicon() = default;

  /// Entries are keyed by their folded form; duplicates throw.
  explicit Lexicon(std::span<const LexiconEntry> entries, double negativity_weight = 1.0) {
    set_negativity_weight(negativity_weight);
    for (const auto& entry : entries) add(entry.term, entry.score);
  }

  void add(std::string_view term, double score) {
    if (!(std::abs(score) <= 1.0)) throw std::invalid_argument("score outside [-1, 1]");
    const std::u32string decoded = unicode::decode(term);
    const auto tokens = tokenize(decoded);
    if (tokens.size() != 1 || tokens[0].start != 0 || tokens[0].end != decoded.size()) {
      throw std::invalid_argument("term must be a single word");
    }
    std::u32string key = unicode::match_key(decoded);
    if (!entries_.emplace(std::move(key), score).second) {
      throw std::invalid_argument("duplicate term '" + std::string(term) + "'");
    }
  }

  void set_negativity_weight(double weight) {
    if (!(weight >= 1.0) || !std::isfinite(weight)) {
      throw std::invalid_argument("negativity_weight must be >= 1.0");
    }
    negativity_weight_ = weight;
  }

  double negativity_weight() const noexcept { return negativity_weight_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// Score of a folded term, or nullptr when the lexicon is silent.
  const double* find(std::u32string_view folded) const {
    const auto it = entries_.find(std::u32string(folded));
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::vector<LexiconEntry> entries() const {
    std::vector<LexiconEntry> out;
    out.reserve(entries_.size());
    for (const auto& [term, score] : entries_) out.push_back({unicode::encode(term), score});
    return out;
  }

  double weighted(double score) const noexcept {
    return score < 0 ? score * negativity_weight_ : score;
  }

  ValenceScore score(std::u32string_view text) const {
    ValenceScore result;
    for (const auto& token : tokenize(text)) {
      ++result.token_count;
      const auto key = unicode::match_key(text.substr(token.start, token.end - token.start));
      if (const double* s = find(key)) {
        result.raw += weighted(*s);
        ++result.matched_terms;
      }
    }
    if (result.token_count > 0) {
      result.normalized = result.raw / static_cast<double>(result.token_count);
    }
    return result;
  }

  friend bool operator==(const Lexicon&, const Lexicon&) = default;

private:
  std::map<std::u32string, double> entries_;
  double negativity_weight_ = 1.0;
};

inline ValenceScore score_text(const Lexicon& lexicon, std::string_view text) {
  return lexicon.score(unicode::decode(text));
}

/// Parses `term<TAB>score` lines. `#` lines and blank lines are skipped;
/// LF and CRLF endings are both accepted.
inline Lexicon load_lexicon(std::string_view bytes, double negativity_weight = 1.0) {
  Lexicon lexicon;
  lexicon.set_negativity_weight(negativity_weight);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    ++line_no;
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) eol = bytes.size();
    std::string_view line = bytes.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (!unicode::is_valid_utf8(line)) throw LexiconError(line_no, "invalid UTF-8");
    if (line.empty() || line.front() == '#') continue;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
      throw LexiconError(line_no, "expected exactly two tab-separated fields");
    }
    const std::string_view term = line.substr(0, tab);
    std::string_view score_field = line.substr(tab + 1);
    if (term.empty()) throw LexiconError(line_no, "empty term");
    if (!score_field.empty() && score_field.front() == '+') score_field.remove_prefix(1);

    double score = 0.0;
    const auto [end, ec] =
        std::from_chars(score_field.data(), score_field.data() + score_field.size(), score,
                        std::chars_format::fixed);
    if (ec != std::errc() || end != score_field.data() + score_field.size() || score_field.empty()) {
      throw LexiconError(line_no, "score is not a decimal number: '" + std::string(score_field) + "'");
    }
    if (!(std::abs(score) <= 1.0)) {
      throw LexiconError(line_no, "score outside [-1, 1]: " + std::string(score_field));
    }
    try {
      lexicon.add(term, score);
    } catch (const std::invalid_argument& e) {
      throw LexiconError(line_no, e.what());
    }
  }
  return lexicon;
}

}  // namespace atd
