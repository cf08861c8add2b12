#include "spanqa/question_generation.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <sstream>

#include "spanqa/errors.hpp"
#include "spanqa/random.hpp"

namespace spanqa {

std::string_view to_string(MaskCategory category) noexcept {
  switch (category) {
    case MaskCategory::PERSON_NORP_ORG: return "PERSON_NORP_ORG";
    case MaskCategory::PLACE: return "PLACE";
    case MaskCategory::THING: return "THING";
    case MaskCategory::TEMPORAL: return "TEMPORAL";
    case MaskCategory::NUMERIC: return "NUMERIC";
  }
  return "THING";
}

std::string mask_token(MaskCategory category) {
  return "[" + std::string(to_string(category)) + "]";
}

MaskCategory high_level_mask(std::string_view label) noexcept {
  static constexpr std::array<std::pair<std::string_view, MaskCategory>, 13> table{{
      {"PERSON", MaskCategory::PERSON_NORP_ORG},
      {"NORP", MaskCategory::PERSON_NORP_ORG},
      {"ORG", MaskCategory::PERSON_NORP_ORG},
      {"GPE", MaskCategory::PLACE},
      {"LOC", MaskCategory::PLACE},
      {"FAC", MaskCategory::PLACE},
      {"DATE", MaskCategory::TEMPORAL},
      {"TIME", MaskCategory::TEMPORAL},
      {"MONEY", MaskCategory::NUMERIC},
      {"CARDINAL", MaskCategory::NUMERIC},
      {"ORDINAL", MaskCategory::NUMERIC},
      {"QUANTITY", MaskCategory::NUMERIC},
      {"PERCENT", MaskCategory::NUMERIC},
  }};
  for (const auto& [name, category] : table) {
    if (name == label) return category;
  }
  return MaskCategory::THING;
}

std::string wh_word_for(MaskCategory category, std::string_view pseudo_ner_label) {
  switch (category) {
    case MaskCategory::PERSON_NORP_ORG: return "Who";
    case MaskCategory::PLACE: return "Where";
    case MaskCategory::TEMPORAL: return "When";
    case MaskCategory::NUMERIC: return pseudo_ner_label == "MONEY" ? "How much" : "How many";
    case MaskCategory::THING: return "What";
  }
  return "What";
}

ClozeQuestion build_cloze(const std::vector<std::string>& tokens, TokenSpan span,
                          std::string_view pseudo_ner_label, bool initial_token_is_entity) {
  if (span.start >= span.end || span.end > tokens.size()) {
    throw Error(Errc::SpanMismatch, "answer [" + std::to_string(span.start) + "," +
                                        std::to_string(span.end) + ") does not fit a sentence of " +
                                        std::to_string(tokens.size()) + " tokens");
  }
  ClozeQuestion cloze;
  cloze.mask_category = high_level_mask(pseudo_ner_label);
  cloze.mask_position = span.start;
  cloze.initial_token_is_entity = initial_token_is_entity;
  cloze.tokens.reserve(tokens.size() - span.length() + 1);
  cloze.tokens.insert(cloze.tokens.end(), tokens.begin(), tokens.begin() + span.start);
  cloze.tokens.push_back(mask_token(cloze.mask_category));
  cloze.tokens.insert(cloze.tokens.end(), tokens.begin() + span.end, tokens.end());
  return cloze;
}

ClozeQuestion build_cloze(const AnnotatedSentence& sentence, const ExtendedAnswer& answer) {
  bool initial_entity = std::any_of(sentence.ner_spans.begin(), sentence.ner_spans.end(),
                                    [](const NerSpan& ne) { return ne.start == 0; });
  return build_cloze(sentence.tokens, answer.span, answer.pseudo_ner_label, initial_entity);
}

namespace {

bool is_sentence_final(const std::string& token) {
  return token == "." || token == "!" || token == "?";
}

std::string ascii_lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::vector<std::string> cloze_to_natural(const ClozeQuestion& cloze, std::string_view pseudo_ner_label) {
  std::vector<std::string> question;
  std::istringstream wh(wh_word_for(cloze.mask_category, pseudo_ner_label));
  for (std::string w; wh >> w;) question.push_back(w);
  const auto mask = cloze.tokens.begin() + static_cast<std::ptrdiff_t>(cloze.mask_position);

  auto after_end = cloze.tokens.end();
  while (after_end > mask + 1 && is_sentence_final(*(after_end - 1))) --after_end;
  question.insert(question.end(), mask + 1, after_end);

  for (auto it = cloze.tokens.begin(); it != mask; ++it) {
    if (it == cloze.tokens.begin() && !cloze.initial_token_is_entity) {
      question.push_back(ascii_lower(*it));
    } else {
      question.push_back(*it);
    }
  }
  return question;
}

std::string instance_id(std::string_view passage_id, TokenSpan ne, double omega_percent) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "|%zu|%zu|%.6f", ne.start, ne.end, omega_percent);
  std::string key(passage_id);
  key += buf;
  return hex64(fnv1a64(key));
}

QAInstance make_instance(std::string_view passage_id, const std::vector<std::string>& context,
                         std::size_t offset, const AnnotatedSentence& sentence,
                         const ExtendedAnswer& answer, std::vector<std::string> question,
                         double omega_percent) {
  const std::size_t n = sentence.tokens.size();
  if (offset + n > context.size() ||
      !std::equal(sentence.tokens.begin(), sentence.tokens.end(), context.begin() + offset)) {
    throw Error(Errc::OffsetMismatch, "sentence " + sentence.id + " does not occur at offset " +
                                          std::to_string(offset) + " of passage " + std::string(passage_id));
  }
  if (answer.span.start >= answer.span.end || answer.span.end > n) {
    throw Error(Errc::OffsetMismatch, "answer exceeds sentence " + sentence.id);
  }
  QAInstance inst;
  inst.source_ne = {answer.source_ne.start + offset, answer.source_ne.end + offset};
  inst.id = instance_id(passage_id, inst.source_ne, omega_percent);
  inst.context = context;
  inst.question = std::move(question);
  inst.answer_start = answer.span.start + offset;
  inst.answer_end = answer.span.end + offset;
  inst.answer_text = join_tokens(context, inst.answer_span());
  inst.answer_type = answer.answer_type;
  inst.pseudo_ner_label = answer.pseudo_ner_label;
  inst.sentence = {offset, offset + n};
  inst.initial_token_is_entity = std::any_of(sentence.ner_spans.begin(), sentence.ner_spans.end(),
                                             [](const NerSpan& ne) { return ne.start == 0; });
  return inst;
}

}  // namespace spanqa
