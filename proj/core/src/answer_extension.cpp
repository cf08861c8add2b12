#include "spanqa/answer_extension.hpp"

#include <algorithm>

#include "spanqa/errors.hpp"

namespace spanqa {

std::string_view to_string(AnswerType type) noexcept {
  switch (type) {
    case AnswerType::NE: return "NE";
    case AnswerType::NP: return "NP";
    case AnswerType::ADJP: return "ADJP";
    case AnswerType::VP: return "VP";
    case AnswerType::S: return "S";
  }
  return "NE";
}

std::optional<AnswerType> answer_type_from_string(std::string_view name) noexcept {
  for (auto t : kAllAnswerTypes) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

void ExtensionConfig::validate() const {
  if (!(omega_percent > 0.0 && omega_percent <= 100.0)) {
    throw Error(Errc::InvalidConfig, "omega must be in (0, 100], got " + std::to_string(omega_percent));
  }
  if (candidate_labels.empty()) throw Error(Errc::InvalidConfig, "candidate label set is empty");
}

std::optional<AnswerType> classify_label(std::string_view bare_label,
                                         const std::set<std::string>& candidate_labels) {
  if (candidate_labels.find(std::string(bare_label)) == candidate_labels.end()) return std::nullopt;
  if (bare_label == "NP") return AnswerType::NP;
  if (bare_label == "ADJP") return AnswerType::ADJP;
  if (bare_label == "VP") return AnswerType::VP;
  if (bare_label == "S" || bare_label == "SBAR") return AnswerType::S;
  return std::nullopt;
}

bool within_threshold(std::size_t length, std::size_t sentence_length, double omega_percent) noexcept {
  // length / sentence_length * 100 <= omega, without the division.
  return static_cast<double>(length) * 100.0 <= omega_percent * static_cast<double>(sentence_length);
}

ExtendedAnswer entity_answer(const NerSpan& ne) {
  return {ne.span(), AnswerType::NE, ne.label, ne};
}

ExtendedAnswer extend_answer(const AnnotatedSentence& sentence, const NerSpan& ne,
                             const ExtensionConfig& cfg) {
  if (std::find(sentence.ner_spans.begin(), sentence.ner_spans.end(), ne) == sentence.ner_spans.end()) {
    throw Error(Errc::NeNotInSentence, "entity [" + std::to_string(ne.start) + "," +
                                           std::to_string(ne.end) + ") is not annotated on sentence " +
                                           sentence.id);
  }
  ExtendedAnswer answer = entity_answer(ne);
  const std::size_t n = sentence.tokens.size();
  for (const ParseTree* node : constituents_containing(sentence.tree, ne.span())) {
    if (!within_threshold(node->span().length(), n, cfg.omega_percent)) break;
    if (node->span() == ne.span()) continue;
    if (auto type = classify_label(node->bare_label(), cfg.candidate_labels)) {
      answer.span = node->span();
      answer.answer_type = *type;
    }
  }
  return answer;
}

std::vector<ExtendedAnswer> extract_all_answers(const AnnotatedSentence& sentence,
                                                const ExtensionConfig& cfg) {
  std::vector<ExtendedAnswer> out;
  out.reserve(sentence.ner_spans.size());
  for (const auto& ne : sentence.ner_spans) out.push_back(extend_answer(sentence, ne, cfg));
  return out;
}

}  // namespace spanqa
