#pragma once

// The rule model and its JSON form. The JSON field names are shared with the
// browser-extension interpreter, so they are a compatibility contract:
//
//   {"version":1,
//    "scope":{"url_patterns":[...],"senders":[...]},
//    "rules":[{"id":..., "kind":..., "intent":..., <kind params>}]}

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "atd/document.hpp"
#include "atd/transforms.hpp"

namespace atd {

enum class RuleKind { insert_sorry, swap, politeness, delete_term, filter_block, strip_metric };

inline std::string_view to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::insert_sorry: return "insert_sorry";
    case RuleKind::swap: return "swap";
    case RuleKind::politeness: return "politeness";
    case RuleKind::delete_term: return "delete_term";
    case RuleKind::filter_block: return "filter_block";
    case RuleKind::strip_metric: return "strip_metric";
  }
  return "unknown";
}

inline std::string_view to_string(PolitenessMode mode) {
  switch (mode) {
    case PolitenessMode::supportive: return "supportive";
    case PolitenessMode::downgrader: return "downgrader";
    case PolitenessMode::aggravating: return "aggravating";
  }
  return "unknown";
}

struct InsertSorryParams {
  friend bool operator==(const InsertSorryParams&, const InsertSorryParams&) = default;
};

struct SwapParams {
  std::vector<TermPair> pairs;
  bool symmetric = false;
  friend bool operator==(const SwapParams&, const SwapParams&) = default;
};

struct PolitenessParams {
  PolitenessMode mode = PolitenessMode::supportive;
  PolitenessPhrases phrases;
  std::vector<std::string> verbs = default_imperative_verbs();
  friend bool operator==(const PolitenessParams&, const PolitenessParams&) = default;
};

struct DeleteTermParams {
  std::vector<std::string> terms;
  friend bool operator==(const DeleteTermParams&, const DeleteTermParams&) = default;
};

struct FilterBlockParams {
  std::vector<std::string> terms;
  friend bool operator==(const FilterBlockParams&, const FilterBlockParams&) = default;
};

struct StripMetricParams {
  std::vector<std::string> nouns;
  friend bool operator==(const StripMetricParams&, const StripMetricParams&) = default;
};

// Alternative order follows RuleKind.
using RuleParams = std::variant<InsertSorryParams, SwapParams, PolitenessParams, DeleteTermParams,
                                FilterBlockParams, StripMetricParams>;

struct Rule {
  std::string id;
  double intent = 0.0;  // fallback valence delta when the lexicon is silent
  RuleParams params;

  RuleKind kind() const noexcept { return static_cast<RuleKind>(params.index()); }
  friend bool operator==(const Rule&, const Rule&) = default;
};

class RulesetError : public std::runtime_error {
public:
  RulesetError(std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

/// A validated rule with its matchers built.
struct CompiledRule {
  Rule rule;
  SwapTable swap;
  PhraseMatcher terms;
};

class CompiledRuleset {
public:
  static constexpr int kSupportedVersion = 1;

  CompiledRuleset() = default;

  /// Throws RulesetError (with a JSON-style path) on invalid rules.
  CompiledRuleset(TargetScope scope, std::vector<Rule> rules, int version = kSupportedVersion)
      : version_(version), scope_(std::move(scope)) {
    if (version_ != kSupportedVersion) {
      throw RulesetError("version", "unsupported version " + std::to_string(version_));
    }
    for (std::size_t i = 0; i < scope_.url_patterns.size(); ++i) {
      if (scope_.url_patterns[i].empty()) {
        throw RulesetError("scope.url_patterns[" + std::to_string(i) + "]", "empty pattern");
      }
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const std::string path = "rules[" + std::to_string(i) + "]";
      if (rules[i].id.empty()) throw RulesetError(path + ".id", "empty id");
      if (!seen.insert(rules[i].id).second) {
        throw RulesetError(path + ".id", "duplicate id '" + rules[i].id + "'");
      }
      compiled_.push_back(compile(std::move(rules[i]), path));
    }
  }

  int version() const noexcept { return version_; }
  const TargetScope& scope() const noexcept { return scope_; }
  const std::vector<CompiledRule>& rules() const noexcept { return compiled_; }

  const CompiledRule* find(std::string_view id) const {
    for (const auto& r : compiled_) {
      if (r.rule.id == id) return &r;
    }
    return nullptr;
  }

  friend bool operator==(const CompiledRuleset& a, const CompiledRuleset& b) {
    if (a.version_ != b.version_ || a.scope_ != b.scope_ || a.compiled_.size() != b.compiled_.size()) {
      return false;
    }
    for (std::size_t i = 0; i < a.compiled_.size(); ++i) {
      if (!(a.compiled_[i].rule == b.compiled_[i].rule)) return false;
    }
    return true;
  }

private:
  static CompiledRule compile(Rule rule, const std::string& path) {
    if (!std::isfinite(rule.intent) || std::abs(rule.intent) > 1.0) {
      throw RulesetError(path + ".intent", "intent must lie in [-1, 1]");
    }
    CompiledRule out{std::move(rule), {}, {}};
    const auto check_terms = [&](const std::vector<std::string>& terms, const char* field, bool allow_empty) {
      if (!allow_empty && terms.empty()) throw RulesetError(path + "." + field, "must not be empty");
      for (std::size_t i = 0; i < terms.size(); ++i) {
        if (terms[i].empty()) {
          throw RulesetError(path + "." + field + "[" + std::to_string(i) + "]", "empty term");
        }
      }
      return PhraseMatcher(terms);
    };
    std::visit(
        [&](auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, SwapParams>) {
            for (std::size_t i = 0; i < p.pairs.size(); ++i) {
              if (p.pairs[i].first.empty() || p.pairs[i].second.empty()) {
                throw RulesetError(path + ".pairs[" + std::to_string(i) + "]", "pair sides must be non-empty");
              }
            }
            try {
              out.swap = SwapTable(p.pairs, p.symmetric);
            } catch (const std::invalid_argument& e) {
              throw RulesetError(path + ".pairs", e.what());
            }
          } else if constexpr (std::is_same_v<T, PolitenessParams>) {
            if (p.phrases.threat.empty()) throw RulesetError(path + ".threat", "must not be empty");
            if (p.phrases.preamble.empty()) throw RulesetError(path + ".preamble", "must not be empty");
            check_terms(p.verbs, "verbs", false);
          } else if constexpr (std::is_same_v<T, DeleteTermParams> || std::is_same_v<T, FilterBlockParams>) {
            out.terms = check_terms(p.terms, "terms", true);
          } else if constexpr (std::is_same_v<T, StripMetricParams>) {
            out.terms = check_terms(p.nouns, "nouns", true);
          }
        },
        out.rule.params);
    return out;
  }

  int version_ = kSupportedVersion;
  TargetScope scope_;
  std::vector<CompiledRule> compiled_;
};

namespace detail {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline const json& require(const json& obj, const char* key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw RulesetError(path + "." + key, "missing required field");
  return *it;
}

inline std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw RulesetError(path, "expected a string");
  return v.get<std::string>();
}

inline std::vector<std::string> as_string_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw RulesetError(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_string(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                                const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw RulesetError(path.empty() ? key : path + "." + key, "unknown field");
    }
  }
}

inline Rule parse_rule(const json& r, const std::string& path) {
  if (!r.is_object()) throw RulesetError(path, "expected an object");
  Rule rule;
  rule.id = as_string(require(r, "id", path), path + ".id");
  const std::string kind = as_string(require(r, "kind", path), path + ".kind");
  if (const auto it = r.find("intent"); it != r.end()) {
    if (!it->is_number()) throw RulesetError(path + ".intent", "expected a number");
    rule.intent = it->get<double>();
  }
  if (kind == "insert_sorry") {
    reject_unknown_keys(r, {"id", "kind", "intent"}, path);
    rule.params = InsertSorryParams{};
  } else if (kind == "swap") {
    reject_unknown_keys(r, {"id", "kind", "intent", "pairs", "symmetric"}, path);
    SwapParams p;
    const json& pairs = require(r, "pairs", path);
    if (!pairs.is_array() || pairs.empty()) throw RulesetError(path + ".pairs", "expected a non-empty array of pairs");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const std::string pp = path + ".pairs[" + std::to_string(i) + "]";
      if (!pairs[i].is_array() || pairs[i].size() != 2) throw RulesetError(pp, "expected [left, right]");
      p.pairs.emplace_back(as_string(pairs[i][0], pp + "[0]"), as_string(pairs[i][1], pp + "[1]"));
    }
    if (const auto it = r.find("symmetric"); it != r.end()) {
      if (!it->is_boolean()) throw RulesetError(path + ".symmetric", "expected a boolean");
      p.symmetric = it->get<bool>();
    }
    rule.params = std::move(p);
  } else if (kind == "politeness") {
    reject_unknown_keys(r, {"id", "kind", "intent", "mode", "threat", "preamble", "verbs"}, path);
    PolitenessParams p;
    const std::string mode = as_string(require(r, "mode", path), path + ".mode");
    if (mode == "supportive") {
      p.mode = PolitenessMode::supportive;
    } else if (mode == "downgrader") {
      p.mode = PolitenessMode::downgrader;
    } else if (mode == "aggravating") {
      p.mode = PolitenessMode::aggravating;
    } else {
      throw RulesetError(path + ".mode", "unknown mode '" + mode + "'");
    }
    if (const auto it = r.find("threat"); it != r.end()) p.phrases.threat = as_string(*it, path + ".threat");
    if (const auto it = r.find("preamble"); it != r.end()) p.phrases.preamble = as_string(*it, path + ".preamble");
    if (const auto it = r.find("verbs"); it != r.end()) p.verbs = as_string_list(*it, path + ".verbs");
    rule.params = std::move(p);
  } else if (kind == "delete_term" || kind == "filter_block") {
    reject_unknown_keys(r, {"id", "kind", "intent", "terms"}, path);
    auto terms = as_string_list(require(r, "terms", path), path + ".terms");
    if (kind == "delete_term") {
      rule.params = DeleteTermParams{std::move(terms)};
    } else {
      rule.params = FilterBlockParams{std::move(terms)};
    }
  } else if (kind == "strip_metric") {
    reject_unknown_keys(r, {"id", "kind", "intent", "nouns"}, path);
    rule.params = StripMetricParams{as_string_list(require(r, "nouns", path), path + ".nouns")};
  } else {
    throw RulesetError(path + ".kind", "unknown kind '" + kind + "'");
  }
  return rule;
}

inline std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace detail

inline CompiledRuleset ruleset_from_json(const nlohmann::json& doc) {
  using detail::require;
  if (!doc.is_object()) throw RulesetError("", "ruleset must be a JSON object");
  detail::reject_unknown_keys(doc, {"version", "scope", "rules"}, "");
  const auto& version = require(doc, "version", "");
  if (!version.is_number_integer()) throw RulesetError("version", "expected an integer");
  if (version.get<long long>() != CompiledRuleset::kSupportedVersion) {
    throw RulesetError("version", "unsupported version " + version.dump());
  }
  TargetScope scope;
  if (const auto it = doc.find("scope"); it != doc.end()) {
    if (!it->is_object()) throw RulesetError("scope", "expected an object");
    detail::reject_unknown_keys(*it, {"url_patterns", "senders"}, "scope");
    if (const auto u = it->find("url_patterns"); u != it->end()) {
      scope.url_patterns = detail::as_string_list(*u, "scope.url_patterns");
    }
    if (const auto s = it->find("senders"); s != it->end()) {
      scope.senders = detail::as_string_list(*s, "scope.senders");
    }
  }
  const auto& rules = require(doc, "rules", "");
  if (!rules.is_array()) throw RulesetError("rules", "expected an array");
  std::vector<Rule> parsed;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    parsed.push_back(detail::parse_rule(rules[i], "rules[" + std::to_string(i) + "]"));
  }
  return CompiledRuleset(std::move(scope), std::move(parsed), static_cast<int>(version.get<long long>()));
}

inline CompiledRuleset parse_ruleset(std::string_view bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw RulesetError("line " + std::to_string(detail::line_of_offset(bytes, e.byte == 0 ? 0 : e.byte - 1)),
                       "malformed JSON");
  }
  return ruleset_from_json(doc);
}

inline nlohmann::ordered_json ruleset_to_json(const CompiledRuleset& ruleset) {
  using detail::ordered_json;
  ordered_json doc;
  doc["version"] = ruleset.version();
  doc["scope"]["url_patterns"] = ruleset.scope().url_patterns;
  doc["scope"]["senders"] = ruleset.scope().senders;
  doc["rules"] = ordered_json::array();
  for (const auto& compiled : ruleset.rules()) {
    const Rule& rule = compiled.rule;
    ordered_json r;
    r["id"] = rule.id;
    r["kind"] = to_string(rule.kind());
    r["intent"] = rule.intent;
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, SwapParams>) {
            r["pairs"] = ordered_json::array();
            for (const auto& [left, right] : p.pairs) r["pairs"].push_back({left, right});
            r["symmetric"] = p.symmetric;
          } else if constexpr (std::is_same_v<T, PolitenessParams>) {
            r["mode"] = to_string(p.mode);
            r["threat"] = p.phrases.threat;
            r["preamble"] = p.phrases.preamble;
            r["verbs"] = p.verbs;
          } else if constexpr (std::is_same_v<T, DeleteTermParams> || std::is_same_v<T, FilterBlockParams>) {
            r["terms"] = p.terms;
          } else if constexpr (std::is_same_v<T, StripMetricParams>) {
            r["nouns"] = p.nouns;
          }
        },
        rule.params);
    doc["rules"].push_back(std::move(r));
  }
  return doc;
}

/// Canonical form: fixed key order, every default spelled out, 2-space indent.
inline std::string serialize_ruleset(const CompiledRuleset& ruleset) {
  return ruleset_to_json(ruleset).dump(2) + "\n";
}

}  // namespace atd
