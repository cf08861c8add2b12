#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spanqa {

// Half-open token interval [start, end).
struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start; }
  bool contains(const TokenSpan& other) const noexcept {
    return start <= other.start && other.end <= end;
  }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct NerSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string label;

  TokenSpan span() const noexcept { return {start, end}; }
  friend bool operator==(const NerSpan&, const NerSpan&) = default;
};

// A constituency tree node. Preterminals are the leaves: they carry the
// part-of-speech label and exactly one token.
class ParseTree {
 public:
  ParseTree() = default;
  static ParseTree leaf(std::string label, std::string token);
  static ParseTree node(std::string label, std::vector<ParseTree> children);

  const std::string& label() const noexcept { return label_; }
  // Label with functional suffixes removed: "NP-SBJ-1" -> "NP", "NP=2" -> "NP".
  // Labels that start with '-' (-NONE-, -LRB-) are returned unchanged.
  std::string bare_label() const;

  bool is_leaf() const noexcept { return children_.empty(); }
  const std::string& token() const noexcept { return token_; }
  const std::vector<ParseTree>& children() const noexcept { return children_; }
  TokenSpan span() const noexcept { return span_; }

  std::vector<std::string> leaves() const;
  std::size_t node_count() const noexcept;
  std::size_t depth() const noexcept;

  friend bool operator==(const ParseTree&, const ParseTree&) = default;

 private:
  // Shift spans so this subtree starts at `offset`; returns the end.
  std::size_t assign_spans(std::size_t offset);

  std::string label_;
  std::string token_;
  std::vector<ParseTree> children_;
  TokenSpan span_;

  friend ParseTree parse_bracketed_tree(std::string_view text);
};

// Parses a Penn-Treebank-style bracketing, e.g. "(NP (NNP Hampton) (NNP County))".
// An extra unlabeled outer bracket "( (S ...) )" is accepted and dropped.
// Throws Error{UnbalancedBrackets} or Error{EmptyConstituent}.
ParseTree parse_bracketed_tree(std::string_view text);

// Single-line bracketing that parse_bracketed_tree reads back to an equal tree.
std::string serialize_tree(const ParseTree& tree);

// All nodes whose span is a (non-strict) superset of `span`, innermost first.
// Throws Error{SpanOutOfBounds} if `span` is empty or outside the root span.
std::vector<const ParseTree*> constituents_containing(const ParseTree& tree, TokenSpan span);

struct AnnotatedSentence {
  std::string id;
  // Passage the sentence belongs to; empty means the sentence is its own passage.
  std::string doc;
  std::vector<std::string> tokens;
  std::vector<NerSpan> ner_spans;
  ParseTree tree;
};

std::string join_tokens(const std::vector<std::string>& tokens, TokenSpan span);
std::string join_tokens(const std::vector<std::string>& tokens);

struct ValidationIssue {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::string sentence_id;
  std::vector<ValidationIssue> issues;
  // Non-fatal observations (e.g. an entity crossing constituent boundaries).
  std::vector<ValidationIssue> warnings;

  bool is_valid() const noexcept { return issues.empty(); }
};

// Issue codes.
inline constexpr std::string_view kNerOutOfBounds = "NER_OUT_OF_BOUNDS";
inline constexpr std::string_view kNerEmpty = "NER_EMPTY_SPAN";
inline constexpr std::string_view kNerOverlap = "NER_OVERLAP";
inline constexpr std::string_view kTreeTokenMismatch = "TREE_TOKEN_MISMATCH";
inline constexpr std::string_view kNoTokens = "NO_TOKENS";
inline constexpr std::string_view kBadToken = "BAD_TOKEN";
inline constexpr std::string_view kNerCrossesConstituents = "NER_CROSSES_CONSTITUENTS";

ValidationReport validate_sentence(const AnnotatedSentence& sentence);

// One JSON Lines record of the corpus format. Throws Error{MalformedRecord}.
AnnotatedSentence parse_corpus_record(std::string_view line);
std::string corpus_record_json(const AnnotatedSentence& sentence);

struct SkippedRecord {
  std::size_t line_no = 0;  // 1-based
  std::string reason;
};

// Streams sentences from a corpus in file order. Malformed or invalid records
// are skipped and listed in skipped(); blank lines are ignored.
class CorpusReader {
 public:
  explicit CorpusReader(std::istream& in) : in_(&in) {}

  // Next valid sentence, or nullopt at end of stream. Throws Error{Io} if the
  // stream fails for a reason other than end-of-file.
  std::optional<AnnotatedSentence> next();

  const std::vector<SkippedRecord>& skipped() const noexcept { return skipped_; }
  std::size_t lines_read() const noexcept { return line_no_; }
  // FNV-1a over the bytes consumed so far (lines joined with '\n').
  std::uint64_t content_hash() const noexcept { return hash_; }

 private:
  std::istream* in_;
  std::size_t line_no_ = 0;
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
  std::vector<SkippedRecord> skipped_;
};

struct LoadedCorpus {
  std::vector<AnnotatedSentence> sentences;
  std::vector<SkippedRecord> skipped;
  std::uint64_t content_hash = 0;
};

LoadedCorpus load_corpus(std::istream& in);

}  // namespace spanqa
