#include <gtest/gtest.h>

#include "atd/engine.hpp"
#include "atd/pipeline.hpp"

using namespace atd;

namespace {

CompiledRuleset ruleset(std::string_view rules, std::string_view scope = "{}") {
  return parse_ruleset(std::string(R"({"version":1,"scope":)") + std::string(scope) + R"(,"rules":)" +
                       std::string(rules) + "}");
}

}  // namespace

TEST(FindMatches, SorryCandidateDeltaFromLexicon) {
  const auto rs = ruleset(R"([{"id":"s","kind":"insert_sorry","intent":-0.1}])");
  const auto lex = load_lexicon("sorry\t-0.5\n");
  const auto c = find_matches(rs, Document{{"I agree"}, {}}, lex);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_DOUBLE_EQ(c[0].delta_valence, -0.5);
  EXPECT_EQ(c[0].cost_chars, 7u);
  EXPECT_EQ(c[0].span, (Span{0, 0}));
  EXPECT_EQ(c[0].replacement, "Sorry, ");
  EXPECT_EQ(c[0].rule_id, "s");
}

TEST(FindMatches, IntentFallbackWhenLexiconSilent) {
  const auto rs = ruleset(R"([{"id":"s","kind":"insert_sorry","intent":-0.1}])");
  const auto c = find_matches(rs, Document{{"I agree"}, {}}, Lexicon{});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_DOUBLE_EQ(c[0].delta_valence, -0.1);
}

TEST(FindMatches, EmptyDocumentAndAbsentTerm) {
  const auto rs = ruleset(R"([{"id":"w","kind":"swap","pairs":[["Elon Musk","Grimes's Boyfriend"]]}])");
  EXPECT_TRUE(find_matches(rs, Document{}, Lexicon{}).empty());
  EXPECT_TRUE(find_matches(rs, Document{{"No billionaires here"}, {}}, Lexicon{}).empty());
}

TEST(FindMatches, OrderedByBlockStartThenRuleOrder) {
  const auto rs = ruleset(R"([{"id":"d","kind":"delete_term","terms":["great"]},
                              {"id":"s","kind":"insert_sorry"},
                              {"id":"w","kind":"swap","pairs":[["I","We"]]}])");
  const auto c = find_matches(rs, Document{{"x", "I'm great"}, {}}, Lexicon{});
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].rule_id, "s");
  EXPECT_EQ(c[1].rule_id, "w");
  EXPECT_EQ(c[2].rule_id, "d");
  for (const auto& e : c) EXPECT_EQ(e.block_index, 1u);
}

TEST(FindMatches, CostIsInsertedPlusDeleted) {
  const auto rs = ruleset(R"([{"id":"w","kind":"swap","pairs":[["Elon Musk","Grimes's Boyfriend"]]}])");
  const auto c = find_matches(rs, Document{{"Elon Musk plans"}, {}}, Lexicon{});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].cost_chars, 9u + 18u);
}

TEST(FindMatches, FilterBlockProposesWholeBlockDeletion) {
  const auto rs = ruleset(R"([{"id":"f","kind":"filter_block","intent":-0.2,"terms":["politics"]}])");
  const auto c = find_matches(rs, Document{{"cats", "Politics today"}, {}}, Lexicon{});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].block_index, 1u);
  EXPECT_EQ(c[0].span, (Span{0, 14}));
  EXPECT_EQ(c[0].replacement, "");
}

TEST(ApplyRuleset, SequentialAndFilterRemovesBlocks) {
  const auto rs = ruleset(R"([{"id":"s","kind":"insert_sorry"},
                              {"id":"f","kind":"filter_block","terms":["politics"]}])");
  const auto out = apply_ruleset(rs, Document{{"I'm in", "A politics post", "cat pictures"}, {}});
  EXPECT_EQ(out.blocks, (std::vector<std::string>{"Sorry, I'm in", "cat pictures"}));
}

TEST(ApplyRuleset, OutOfScopeUnchanged) {
  const auto rs = ruleset(R"([{"id":"s","kind":"insert_sorry"}])", R"({"senders":["alice@example.com"]})");
  const Document doc{{"I'm in"}, {std::nullopt, "bob@example.com"}};
  EXPECT_EQ(apply_ruleset(rs, doc), doc);
  const Document alice{{"I'm in"}, {std::nullopt, "Alice@Example.com"}};
  EXPECT_EQ(apply_ruleset(rs, alice).blocks[0], "Sorry, I'm in");
}

TEST(TransformText, PreservesParagraphLayout) {
  const auto rs = ruleset(R"([{"id":"s","kind":"insert_sorry"}])");
  const auto out = transform_text(rs, Lexicon{}, "Hi,\n\nI'm done.\r\n\r\nBye\n", std::nullopt);
  EXPECT_EQ(out.text, "Hi,\n\nSorry, I'm done.\r\n\r\nBye\n");
  EXPECT_EQ(out.edits_applied, 1u);
}

TEST(TransformText, NoMatchIsByteIdentical) {
  const auto rs = ruleset(R"([{"id":"s","kind":"insert_sorry"}])");
  const std::string text = "\n\n  we agree \n\n\n";
  EXPECT_EQ(transform_text(rs, Lexicon{}, text, std::nullopt).text, text);
  EXPECT_EQ(transform_text(rs, Lexicon{}, text, Budget{100, Direction::negative}).text, text);
}

TEST(TransformText, BudgetedFilterDropsParagraph) {
  const auto rs = ruleset(R"([{"id":"f","kind":"filter_block","intent":-0.2,"terms":["politics"]}])");
  const auto out = transform_text(rs, Lexicon{}, "cats\n\npolitics\n\ndogs\n", Budget{100, Direction::negative});
  EXPECT_EQ(out.text, "cats\n\ndogs\n");
}

TEST(TransformText, PoliteDirectiveInEmail) {
  const auto rs = ruleset(R"([{"id":"p","kind":"politeness","mode":"supportive"}])");
  EXPECT_EQ(transform_text(rs, Lexicon{}, "Complete the budget report.", std::nullopt).text,
            "I understand that you are extremely busy these days, but can you complete the budget report?");
}
