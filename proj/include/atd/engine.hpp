#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "atd/document.hpp"
#include "atd/lexicon.hpp"
#include "atd/ruleset.hpp"
#include "atd/transforms.hpp"

namespace atd {

/// Edits one rule proposes for one decoded block.
inline std::vector<TextEdit> rule_edits(const CompiledRule& compiled, std::u32string_view block) {
  return std::visit(
      [&](const auto& p) -> std::vector<TextEdit> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, InsertSorryParams>) {
          return sorry_edits(block);
        } else if constexpr (std::is_same_v<T, SwapParams>) {
          return compiled.swap.edits(block);
        } else if constexpr (std::is_same_v<T, PolitenessParams>) {
          return directive_edits(block, p.mode, p.phrases, p.verbs);
        } else if constexpr (std::is_same_v<T, DeleteTermParams>) {
          return delete_term_edits(block, compiled.terms);
        } else if constexpr (std::is_same_v<T, FilterBlockParams>) {
          if (block.empty() || !contains_term(block, compiled.terms)) return {};
          return {TextEdit{{0, block.size()}, U""}};
        } else {
          return strip_metric_edits(block, compiled.terms);
        }
      },
      compiled.rule.params);
}

enum class FilteredBlocks { remove, keep_empty };

/// Applies one rule to every block. Block filtering removes whole blocks
/// unless keep_empty is requested (used when block positions must survive,
/// e.g. HTML text nodes or paragraph layouts).
inline Document apply_rule(const CompiledRule& compiled, const Document& doc,
                           FilteredBlocks filtered = FilteredBlocks::remove, std::size_t* edit_count = nullptr) {
  Document out;
  out.metadata = doc.metadata;
  const bool is_filter = compiled.rule.kind() == RuleKind::filter_block;
  for (const auto& block : doc.blocks) {
    const auto decoded = unicode::decode(block);
    auto edits = rule_edits(compiled, decoded);
    if (edit_count) *edit_count += edits.size();
    if (is_filter && !edits.empty() && filtered == FilteredBlocks::remove) continue;
    out.blocks.push_back(edits.empty() ? block : unicode::encode(apply_text_edits(decoded, std::move(edits))));
  }
  return out;
}

/// Every rule in declaration order, each applied to the previous output.
/// Out-of-scope documents come back unchanged.
inline Document apply_ruleset(const CompiledRuleset& ruleset, const Document& doc,
                              FilteredBlocks filtered = FilteredBlocks::remove, std::size_t* edit_count = nullptr) {
  if (!scope_matches(ruleset.scope(), doc.metadata)) return doc;
  Document current = doc;
  for (const auto& rule : ruleset.rules()) current = apply_rule(rule, current, filtered, edit_count);
  return current;
}

/// Candidate edits from every rule against the untouched document. Each
/// candidate's delta is the lexicon raw-score change its single edit causes,
/// or the rule's intent when that change is zero.
inline std::vector<EditCandidate> find_matches(const CompiledRuleset& ruleset, const Document& doc,
                                               const Lexicon& lexicon) {
  struct Keyed {
    EditCandidate candidate;
    std::size_t rule_index;
  };
  std::vector<Keyed> keyed;
  for (std::size_t b = 0; b < doc.blocks.size(); ++b) {
    const std::u32string block = unicode::decode(doc.blocks[b]);
    const double before = lexicon.score(block).raw;
    for (std::size_t r = 0; r < ruleset.rules().size(); ++r) {
      const CompiledRule& rule = ruleset.rules()[r];
      for (auto& edit : rule_edits(rule, block)) {
        const std::u32string_view original = std::u32string_view(block).substr(edit.span.start, edit.span.length);
        if (original == edit.replacement) continue;
        std::u32string after = block;
        after.replace(edit.span.start, edit.span.length, edit.replacement);
        const double diff = lexicon.score(after).raw - before;
        EditCandidate c;
        c.block_index = b;
        c.span = edit.span;
        c.cost_chars = edit.replacement.size() + edit.span.length;
        c.replacement = unicode::encode(edit.replacement);
        c.rule_id = rule.rule.id;
        c.delta_valence = diff != 0.0 ? diff : rule.rule.intent;
        keyed.push_back({std::move(c), r});
      }
    }
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& x, const Keyed& y) {
    if (x.candidate.block_index != y.candidate.block_index) return x.candidate.block_index < y.candidate.block_index;
    if (x.candidate.span.start != y.candidate.span.start) return x.candidate.span.start < y.candidate.span.start;
    return x.rule_index < y.rule_index;
  });
  std::vector<EditCandidate> out;
  out.reserve(keyed.size());
  for (auto& k : keyed) out.push_back(std::move(k.candidate));
  return out;
}

}  // namespace atd
