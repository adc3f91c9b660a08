#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "atd/engine.hpp"
#include "atd/planner.hpp"

namespace atd {

struct PipelineResult {
  Document document;
  std::size_t edits_applied = 0;
  std::optional<TransformPlan> plan;  // set when a budget was given
};

/// Without a budget every rule is applied in declaration order. With one,
/// candidates from the untouched document are planned and the plan applied.
/// Block positions are kept either way (filtered blocks become empty).
inline PipelineResult transform_document(const CompiledRuleset& ruleset, const Lexicon& lexicon, const Document& doc,
                                         const std::optional<Budget>& budget) {
  PipelineResult result{doc, 0, std::nullopt};
  if (!scope_matches(ruleset.scope(), doc.metadata)) {
    if (budget) result.plan = TransformPlan{};
    return result;
  }
  if (!budget) {
    result.document = apply_ruleset(ruleset, doc, FilteredBlocks::keep_empty, &result.edits_applied);
    return result;
  }
  result.plan = plan_edits(find_matches(ruleset, doc, lexicon), *budget);
  result.document = apply_plan(doc, *result.plan);
  result.edits_applied = result.plan->selected.size();
  return result;
}

struct TextTransformResult {
  std::string text;
  std::size_t edits_applied = 0;
  std::optional<TransformPlan> plan;
};

/// Plain text: blank-line separated paragraphs are the blocks, and the
/// original separators are restored around the transformed blocks.
inline TextTransformResult transform_text(const CompiledRuleset& ruleset, const Lexicon& lexicon, std::string_view text,
                                          const std::optional<Budget>& budget, const DocumentMetadata& metadata = {}) {
  TextLayout layout;
  Document doc = split_paragraphs(text, layout);
  doc.metadata = metadata;
  auto result = transform_document(ruleset, lexicon, doc, budget);
  if (result.edits_applied == 0) return {std::string(text), 0, std::move(result.plan)};
  return {join_paragraphs(result.document.blocks, layout), result.edits_applied, std::move(result.plan)};
}

}  // namespace atd
