#include <gtest/gtest.h>

#include <sstream>

#include "spanqa/corpus.hpp"
#include "spanqa/errors.hpp"
#include "test_support.hpp"

namespace spanqa {
namespace {

using testing::estill_sentence;
using testing::fixture_path;

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no spanqa::Error thrown";
  return Errc::Io;
}

TEST(ParseBracketedTree, TwoLeafNounPhrase) {
  ParseTree t = parse_bracketed_tree("(NP (NNP Hampton) (NNP County))");
  EXPECT_EQ(t.label(), "NP");
  EXPECT_EQ(t.span(), (TokenSpan{0, 2}));
  ASSERT_EQ(t.children().size(), 2u);
  EXPECT_TRUE(t.children()[0].is_leaf());
  EXPECT_EQ(t.children()[1].token(), "County");
  EXPECT_EQ(t.children()[1].span(), (TokenSpan{1, 2}));
  EXPECT_EQ(t.leaves(), (std::vector<std::string>{"Hampton", "County"}));
}

TEST(ParseBracketedTree, EstillHasVerbPhraseFourToThirteen) {
  const AnnotatedSentence s = estill_sentence();
  EXPECT_EQ(s.tree.label(), "S");
  EXPECT_EQ(s.tree.span(), (TokenSpan{0, 14}));
  ASSERT_EQ(s.tokens.size(), 14u);
  const ParseTree& vp = s.tree.children()[1];
  EXPECT_EQ(vp.label(), "VP");
  EXPECT_EQ(vp.span(), (TokenSpan{4, 13}));
}

TEST(ParseBracketedTree, Errors) {
  EXPECT_EQ(code_of([] { parse_bracketed_tree("(S (NP"); }), Errc::UnbalancedBrackets);
  EXPECT_EQ(code_of([] { parse_bracketed_tree("(S (NP (NN a)))) "); }), Errc::UnbalancedBrackets);
  EXPECT_EQ(code_of([] { parse_bracketed_tree("(S (NP) (VP (VB go)))"); }), Errc::EmptyConstituent);
  EXPECT_EQ(code_of([] { parse_bracketed_tree(""); }), Errc::EmptyConstituent);
}

TEST(ParseBracketedTree, DropsUnlabeledWrapperAndStripsFunctionTags) {
  ParseTree t = parse_bracketed_tree("( (S (NP-SBJ-1 (PRP It)) (VP (VBZ works))) )");
  EXPECT_EQ(t.label(), "S");
  EXPECT_EQ(t.children()[0].label(), "NP-SBJ-1");
  EXPECT_EQ(t.children()[0].bare_label(), "NP");
  EXPECT_EQ(ParseTree::leaf("-NONE-", "*").bare_label(), "-NONE-");
  EXPECT_EQ(ParseTree::node("NP=2", {ParseTree::leaf("NN", "x")}).bare_label(), "NP");
}

TEST(ParseBracketedTree, RoundTripOnRandomTrees) {
  Rng rng = named_stream(1, "roundtrip");
  for (int i = 0; i < 300; ++i) {
    ParseTree t = testing::random_tree(rng);
    const std::string text = serialize_tree(t);
    ParseTree back = parse_bracketed_tree(text);
    ASSERT_EQ(back, t) << text;
    ASSERT_EQ(serialize_tree(back), text);
  }
}

TEST(ConstituentsContaining, EstillChain) {
  const AnnotatedSentence s = estill_sentence();
  auto chain = constituents_containing(s.tree, {11, 13});
  std::vector<std::pair<std::string, TokenSpan>> got;
  for (const ParseTree* n : chain) got.emplace_back(n->label(), n->span());
  const std::vector<std::pair<std::string, TokenSpan>> want{
      {"NP", {11, 13}}, {"NP", {7, 13}}, {"PP", {6, 13}}, {"VP", {4, 13}}, {"S", {0, 14}}};
  EXPECT_EQ(got, want);
}

TEST(ConstituentsContaining, SingleLeafGivesParentChain) {
  ParseTree t = parse_bracketed_tree("(S (NP (NN x)))");
  auto chain = constituents_containing(t, {0, 1});
  ASSERT_EQ(chain.size(), 3u);
  EXPECT_EQ(chain[0]->label(), "NN");
  EXPECT_EQ(chain[1]->label(), "NP");
  EXPECT_EQ(chain[2]->label(), "S");
}

TEST(ConstituentsContaining, CrossingSpanGivesRootOnly) {
  ParseTree t = parse_bracketed_tree("(S (NP (DT a) (NN b)) (VP (VB c) (NN d)))");
  auto chain = constituents_containing(t, {1, 3});
  ASSERT_EQ(chain.size(), 1u);
  EXPECT_EQ(chain[0], &t);
}

TEST(ConstituentsContaining, OutOfBounds) {
  ParseTree t = parse_bracketed_tree("(S (NN a) (NN b))");
  EXPECT_EQ(code_of([&] { constituents_containing(t, {1, 3}); }), Errc::SpanOutOfBounds);
  EXPECT_EQ(code_of([&] { constituents_containing(t, {1, 1}); }), Errc::SpanOutOfBounds);
}

TEST(ConstituentsContaining, ChainIsNestedForRandomTrees) {
  Rng rng = named_stream(2, "chain");
  for (int i = 0; i < 300; ++i) {
    ParseTree t = testing::random_tree(rng);
    const std::size_t n = t.span().end;
    const NerSpan ne = testing::random_entity(rng, n);
    auto chain = constituents_containing(t, ne.span());
    ASSERT_FALSE(chain.empty());
    EXPECT_EQ(chain.back(), &t);
    for (std::size_t k = 0; k < chain.size(); ++k) {
      EXPECT_TRUE(chain[k]->span().contains(ne.span()));
      if (k > 0) EXPECT_TRUE(chain[k]->span().contains(chain[k - 1]->span()));
    }
  }
}

TEST(ValidateSentence, EstillIsValid) {
  const ValidationReport r = validate_sentence(estill_sentence());
  EXPECT_TRUE(r.is_valid());
  EXPECT_EQ(r.sentence_id, "estill");
}

TEST(ValidateSentence, ReportsEveryProblem) {
  AnnotatedSentence s = estill_sentence();
  s.ner_spans.push_back({13, 15, "GPE"});
  s.ner_spans.push_back({12, 13, "GPE"});
  s.ner_spans.push_back({5, 5, "GPE"});
  ValidationReport r = validate_sentence(s);
  std::vector<std::string> codes;
  for (const auto& i : r.issues) codes.push_back(i.code);
  EXPECT_NE(std::find(codes.begin(), codes.end(), kNerOutOfBounds), codes.end());
  EXPECT_NE(std::find(codes.begin(), codes.end(), kNerOverlap), codes.end());
  EXPECT_NE(std::find(codes.begin(), codes.end(), kNerEmpty), codes.end());
  EXPECT_FALSE(r.is_valid());

  AnnotatedSentence m = estill_sentence();
  m.tokens[2] = "at";
  r = validate_sentence(m);
  ASSERT_EQ(r.issues.size(), 1u);
  EXPECT_EQ(r.issues[0].code, kTreeTokenMismatch);
}

TEST(ValidateSentence, CrossingEntityIsOnlyAWarning) {
  AnnotatedSentence s = estill_sentence();
  s.ner_spans = {{3, 5, "GPE"}};
  ValidationReport r = validate_sentence(s);
  EXPECT_TRUE(r.is_valid());
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.warnings[0].code, kNerCrossesConstituents);
}

TEST(CorpusRecord, RoundTrip) {
  AnnotatedSentence s = estill_sentence();
  s.doc = "doc-7";
  AnnotatedSentence back = parse_corpus_record(corpus_record_json(s));
  EXPECT_EQ(back.id, s.id);
  EXPECT_EQ(back.doc, s.doc);
  EXPECT_EQ(back.tokens, s.tokens);
  EXPECT_EQ(back.ner_spans, s.ner_spans);
  EXPECT_EQ(back.tree, s.tree);
}

TEST(CorpusRecord, MalformedRecords) {
  EXPECT_EQ(code_of([] { parse_corpus_record("{not json"); }), Errc::MalformedRecord);
  EXPECT_EQ(code_of([] { parse_corpus_record(R"({"id":"x","tokens":["a"],"ner":[]})"); }), Errc::MalformedRecord);
  EXPECT_EQ(code_of([] { parse_corpus_record(R"j({"id":"x","tokens":["a"],"ner":[{"start":-1,"end":1,"label":"X"}],"tree":"(S (N a))"})j"); }),
            Errc::MalformedRecord);
}

TEST(LoadCorpus, SkipsMalformedLineAndKeepsOrder) {
  std::ifstream in(fixture_path("three_lines_one_bad.jsonl"));
  LoadedCorpus c = load_corpus(in);
  ASSERT_EQ(c.sentences.size(), 2u);
  EXPECT_EQ(c.sentences[0].id, "a");
  EXPECT_EQ(c.sentences[1].id, "c");
  ASSERT_EQ(c.skipped.size(), 1u);
  EXPECT_EQ(c.skipped[0].line_no, 2u);
}

TEST(LoadCorpus, EmptyInput) {
  std::istringstream in("");
  LoadedCorpus c = load_corpus(in);
  EXPECT_TRUE(c.sentences.empty());
  EXPECT_TRUE(c.skipped.empty());
}

TEST(LoadCorpus, SkipsInvalidSentences) {
  AnnotatedSentence s = estill_sentence();
  s.ner_spans = {{12, 20, "GPE"}};
  std::istringstream in(corpus_record_json(estill_sentence()) + "\n\n" + corpus_record_json(s) + "\n");
  CorpusReader reader(in);
  std::size_t yielded = 0;
  while (auto next = reader.next()) {
    EXPECT_TRUE(validate_sentence(*next).is_valid());
    ++yielded;
  }
  EXPECT_EQ(yielded, 1u);
  ASSERT_EQ(reader.skipped().size(), 1u);
  EXPECT_EQ(reader.skipped()[0].line_no, 3u);
}

TEST(LoadCorpus, MiniCorpusIsFullyValid) {
  std::ifstream in(fixture_path("mini_corpus.jsonl"));
  LoadedCorpus c = load_corpus(in);
  EXPECT_EQ(c.sentences.size(), 50u);
  EXPECT_TRUE(c.skipped.empty());
  std::size_t entities = 0;
  for (const auto& s : c.sentences) {
    EXPECT_TRUE(validate_sentence(s).is_valid()) << s.id;
    entities += s.ner_spans.size();
  }
  EXPECT_EQ(entities, 63u);
}

TEST(LoadCorpus, HashDependsOnContent) {
  auto hash_of = [](const std::string& text) {
    std::istringstream in(text);
    return load_corpus(in).content_hash;
  };
  const std::string line = corpus_record_json(estill_sentence()) + "\n";
  EXPECT_EQ(hash_of(line), hash_of(line));
  EXPECT_NE(hash_of(line), hash_of(line + line));
}

}  // namespace
}  // namespace spanqa
