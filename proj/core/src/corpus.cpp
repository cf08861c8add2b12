#include "spanqa/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <nlohmann/json.hpp>

#include "spanqa/errors.hpp"
#include "spanqa/random.hpp"

namespace spanqa {

using nlohmann::json;

ParseTree ParseTree::leaf(std::string label, std::string token) {
  ParseTree t;
  t.label_ = std::move(label);
  t.token_ = std::move(token);
  t.span_ = {0, 1};
  return t;
}

ParseTree ParseTree::node(std::string label, std::vector<ParseTree> children) {
  if (children.empty()) {
    throw Error(Errc::EmptyConstituent, "constituent '" + label + "' has no children");
  }
  ParseTree t;
  t.label_ = std::move(label);
  t.children_ = std::move(children);
  t.assign_spans(0);
  return t;
}

std::size_t ParseTree::assign_spans(std::size_t offset) {
  if (is_leaf()) {
    span_ = {offset, offset + 1};
    return offset + 1;
  }
  std::size_t end = offset;
  for (auto& child : children_) end = child.assign_spans(end);
  span_ = {offset, end};
  return end;
}

std::string ParseTree::bare_label() const {
  if (label_.empty() || label_.front() == '-') return label_;
  auto cut = label_.find_first_of("-=");
  return cut == std::string::npos ? label_ : label_.substr(0, cut);
}

std::vector<std::string> ParseTree::leaves() const {
  std::vector<std::string> out;
  out.reserve(span_.length());
  auto walk = [&out](const ParseTree& t, auto&& self) -> void {
    if (t.is_leaf()) {
      out.push_back(t.token_);
      return;
    }
    for (const auto& c : t.children_) self(c, self);
  };
  walk(*this, walk);
  return out;
}

std::size_t ParseTree::node_count() const noexcept {
  std::size_t n = 1;
  for (const auto& c : children_) n += c.node_count();
  return n;
}

std::size_t ParseTree::depth() const noexcept {
  std::size_t d = 0;
  for (const auto& c : children_) d = std::max(d, c.depth());
  return d + 1;
}

namespace {

class BracketLexer {
 public:
  explicit BracketLexer(std::string_view text) : text_(text) {}

  enum class Kind { Open, Close, Atom, End };

  Kind peek() {
    skip_space();
    if (pos_ >= text_.size()) return Kind::End;
    if (text_[pos_] == '(') return Kind::Open;
    if (text_[pos_] == ')') return Kind::Close;
    return Kind::Atom;
  }

  void consume() { ++pos_; }

  std::string atom() {
    skip_space();
    std::size_t begin = pos_;
    while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    return std::string(text_.substr(begin, pos_ - begin));
  }

  std::size_t position() const noexcept { return pos_; }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

// Parses one bracketed constituent; the opening bracket is the next token.
// Returns nullopt-like empty label tree for an unlabeled wrapper.
ParseTree parse_node(BracketLexer& lex) {
  using Kind = BracketLexer::Kind;
  if (lex.peek() != Kind::Open) {
    throw Error(Errc::MalformedRecord, "expected '(' at offset " + std::to_string(lex.position()));
  }
  lex.consume();

  std::string label;
  if (lex.peek() == Kind::Atom) label = lex.atom();

  std::vector<ParseTree> children;
  std::optional<std::string> token;
  for (;;) {
    switch (lex.peek()) {
      case Kind::End:
        throw Error(Errc::UnbalancedBrackets, "input ended inside '" + label + "'");
      case Kind::Close:
        lex.consume();
        if (token) return ParseTree::leaf(std::move(label), std::move(*token));
        if (children.empty()) {
          throw Error(Errc::EmptyConstituent, "constituent '" + label + "' has no children");
        }
        if (label.empty() && children.size() == 1) return std::move(children.front());
        return ParseTree::node(std::move(label), std::move(children));
      case Kind::Open:
        if (token) {
          throw Error(Errc::MalformedRecord, "'" + label + "' mixes a token with subtrees");
        }
        children.push_back(parse_node(lex));
        break;
      case Kind::Atom:
        if (token || !children.empty()) {
          throw Error(Errc::MalformedRecord, "'" + label + "' has more than one token or mixes tokens with subtrees");
        }
        token = lex.atom();
        break;
    }
  }
}

}  // namespace

ParseTree parse_bracketed_tree(std::string_view text) {
  BracketLexer lex(text);
  using Kind = BracketLexer::Kind;
  if (lex.peek() == Kind::End) throw Error(Errc::EmptyConstituent, "empty bracketing");
  if (lex.peek() == Kind::Close) throw Error(Errc::UnbalancedBrackets, "unexpected ')' at offset 0");
  ParseTree tree = parse_node(lex);
  switch (lex.peek()) {
    case Kind::End:
      break;
    case Kind::Close:
      throw Error(Errc::UnbalancedBrackets, "unmatched ')' at offset " + std::to_string(lex.position()));
    default:
      throw Error(Errc::MalformedRecord, "trailing input at offset " + std::to_string(lex.position()));
  }
  if (tree.label().empty() && !tree.is_leaf()) {
    throw Error(Errc::MalformedRecord, "root constituent has no label");
  }
  return tree;
}

std::string serialize_tree(const ParseTree& tree) {
  std::string out;
  auto walk = [&out](const ParseTree& t, auto&& self) -> void {
    out += '(';
    out += t.label();
    if (t.is_leaf()) {
      out += ' ';
      out += t.token();
    } else {
      for (const auto& c : t.children()) {
        out += ' ';
        self(c, self);
      }
    }
    out += ')';
  };
  walk(tree, walk);
  return out;
}

std::vector<const ParseTree*> constituents_containing(const ParseTree& tree, TokenSpan span) {
  if (span.start >= span.end || !tree.span().contains(span)) {
    throw Error(Errc::SpanOutOfBounds, "span [" + std::to_string(span.start) + "," +
                                           std::to_string(span.end) + ") outside tree span [0," +
                                           std::to_string(tree.span().end) + ")");
  }
  // Containing nodes form a single root-to-node path: at most one child can
  // contain a non-empty span.
  std::vector<const ParseTree*> path;
  const ParseTree* cur = &tree;
  while (cur) {
    path.push_back(cur);
    const ParseTree* next = nullptr;
    for (const auto& c : cur->children()) {
      if (c.span().contains(span)) {
        next = &c;
        break;
      }
    }
    cur = next;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::string join_tokens(const std::vector<std::string>& tokens, TokenSpan span) {
  std::string out;
  for (std::size_t i = span.start; i < span.end && i < tokens.size(); ++i) {
    if (i > span.start) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  return join_tokens(tokens, {0, tokens.size()});
}

namespace {

// True if `span` is exactly the yield of some node, or a union of consecutive
// children of a single node.
bool aligns_with_constituents(const ParseTree& tree, TokenSpan span) {
  auto chain = constituents_containing(tree, span);
  const ParseTree* inner = chain.front();
  if (inner->span() == span) return true;
  bool inside = false;
  for (const auto& c : inner->children()) {
    if (c.span().start == span.start) inside = true;
    if (inside && c.span().end == span.end) return true;
    if (inside && c.span().end > span.end) return false;
  }
  return false;
}

}  // namespace

ValidationReport validate_sentence(const AnnotatedSentence& s) {
  ValidationReport report;
  report.sentence_id = s.id;
  auto issue = [&report](std::string_view code, std::string message) {
    report.issues.push_back({std::string(code), std::move(message)});
  };

  if (s.tokens.empty()) issue(kNoTokens, "sentence has no tokens");
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    const auto& tok = s.tokens[i];
    bool has_space = std::any_of(tok.begin(), tok.end(),
                                 [](unsigned char c) { return std::isspace(c) != 0; });
    if (tok.empty() || has_space) {
      issue(kBadToken, "token " + std::to_string(i) + " is empty or contains whitespace");
    }
  }

  const auto leaves = s.tree.leaves();
  bool tree_ok = leaves == s.tokens;
  if (!tree_ok) {
    issue(kTreeTokenMismatch, "tree yields " + std::to_string(leaves.size()) +
                                  " leaves that differ from the " + std::to_string(s.tokens.size()) +
                                  " tokens");
  }

  std::vector<NerSpan> in_bounds;
  for (const auto& ne : s.ner_spans) {
    const std::string where = "[" + std::to_string(ne.start) + "," + std::to_string(ne.end) + ")";
    if (ne.start >= ne.end) {
      issue(kNerEmpty, "entity " + where + " is empty");
    } else if (ne.end > s.tokens.size()) {
      issue(kNerOutOfBounds, "entity " + where + " exceeds " + std::to_string(s.tokens.size()) +
                                 " tokens");
    } else {
      in_bounds.push_back(ne);
    }
  }
  std::sort(in_bounds.begin(), in_bounds.end(),
            [](const NerSpan& a, const NerSpan& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < in_bounds.size(); ++i) {
    if (in_bounds[i].start < in_bounds[i - 1].end) {
      issue(kNerOverlap, "entities starting at " + std::to_string(in_bounds[i - 1].start) + " and " +
                             std::to_string(in_bounds[i].start) + " overlap");
    }
  }

  if (tree_ok) {
    for (const auto& ne : in_bounds) {
      if (!aligns_with_constituents(s.tree, ne.span())) {
        report.warnings.push_back(
            {std::string(kNerCrossesConstituents),
             "entity [" + std::to_string(ne.start) + "," + std::to_string(ne.end) +
                 ") does not align with constituent boundaries"});
      }
    }
  }
  return report;
}

AnnotatedSentence parse_corpus_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, std::string("invalid JSON: ") + e.what());
  }
  try {
    if (!j.is_object()) throw Error(Errc::MalformedRecord, "record is not an object");
    for (const char* key : {"id", "tokens", "ner", "tree"}) {
      if (!j.contains(key)) throw Error(Errc::MalformedRecord, std::string("missing key '") + key + "'");
    }
    AnnotatedSentence s;
    s.id = j.at("id").get<std::string>();
    if (j.contains("doc")) s.doc = j.at("doc").get<std::string>();
    s.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (const auto& ne : j.at("ner")) {
      auto start = ne.at("start").get<long long>();
      auto end = ne.at("end").get<long long>();
      if (start < 0 || end < 0) throw Error(Errc::MalformedRecord, "negative entity offset");
      s.ner_spans.push_back({static_cast<std::size_t>(start), static_cast<std::size_t>(end),
                             ne.at("label").get<std::string>()});
    }
    s.tree = parse_bracketed_tree(j.at("tree").get<std::string>());
    return s;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, std::string("bad field: ") + e.what());
  }
}

std::string corpus_record_json(const AnnotatedSentence& s) {
  json ner = json::array();
  for (const auto& ne : s.ner_spans) {
    ner.push_back({{"start", ne.start}, {"end", ne.end}, {"label", ne.label}});
  }
  json j = {{"id", s.id}, {"tokens", s.tokens}, {"ner", ner}, {"tree", serialize_tree(s.tree)}};
  if (!s.doc.empty()) j["doc"] = s.doc;
  return j.dump();
}

std::optional<AnnotatedSentence> CorpusReader::next() {
  std::string line;
  while (std::getline(*in_, line)) {
    if (line_no_ > 0) hash_ = fnv1a64("\n", hash_);
    hash_ = fnv1a64(line, hash_);
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      AnnotatedSentence s = parse_corpus_record(line);
      auto report = validate_sentence(s);
      if (!report.is_valid()) {
        std::string reason;
        for (const auto& i : report.issues) {
          if (!reason.empty()) reason += "; ";
          reason += i.code + ": " + i.message;
        }
        skipped_.push_back({line_no_, reason});
        continue;
      }
      return s;
    } catch (const Error& e) {
      skipped_.push_back({line_no_, e.what()});
    }
  }
  if (in_->bad()) throw Error(Errc::Io, "read failure after line " + std::to_string(line_no_));
  return std::nullopt;
}

LoadedCorpus load_corpus(std::istream& in) {
  CorpusReader reader(in);
  LoadedCorpus out;
  while (auto s = reader.next()) out.sentences.push_back(std::move(*s));
  out.skipped = reader.skipped();
  out.content_hash = reader.content_hash();
  return out;
}

}  // namespace spanqa
