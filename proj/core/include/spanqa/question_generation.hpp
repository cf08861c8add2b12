#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "spanqa/answer_extension.hpp"
#include "spanqa/corpus.hpp"

namespace spanqa {

enum class MaskCategory { PERSON_NORP_ORG, PLACE, THING, TEMPORAL, NUMERIC };

std::string_view to_string(MaskCategory category) noexcept;
// The literal mask token placed in cloze questions, e.g. "[PLACE]".
std::string mask_token(MaskCategory category);

// Total over all strings; unknown labels fall into THING.
MaskCategory high_level_mask(std::string_view ner_label) noexcept;

std::string wh_word_for(MaskCategory category, std::string_view pseudo_ner_label);

struct ClozeQuestion {
  std::vector<std::string> tokens;
  MaskCategory mask_category = MaskCategory::THING;
  std::size_t mask_position = 0;
  // Whether the sentence's first token begins an entity; such tokens keep
  // their case when moved out of sentence-initial position.
  bool initial_token_is_entity = false;
};

// Throws Error{SpanMismatch} if the answer span is empty or exceeds the sentence.
ClozeQuestion build_cloze(const AnnotatedSentence& sentence, const ExtendedAnswer& answer);
ClozeQuestion build_cloze(const std::vector<std::string>& sentence_tokens, TokenSpan answer_span,
                          std::string_view pseudo_ner_label, bool initial_token_is_entity);

// Wh-fronting: wh-word, then the tokens after the mask (sentence-final
// punctuation dropped), then the tokens before it.
std::vector<std::string> cloze_to_natural(const ClozeQuestion& cloze, std::string_view pseudo_ner_label);

struct QAInstance {
  std::string id;
  std::vector<std::string> context;
  std::vector<std::string> question;
  std::size_t answer_start = 0;
  std::size_t answer_end = 0;
  std::string answer_text;
  AnswerType answer_type = AnswerType::NE;
  std::string pseudo_ner_label;
  // Provenance in context coordinates, kept so answers can be re-derived.
  TokenSpan source_ne;
  TokenSpan sentence;
  bool initial_token_is_entity = false;

  TokenSpan answer_span() const noexcept { return {answer_start, answer_end}; }
  friend bool operator==(const QAInstance&, const QAInstance&) = default;
};

// Deterministic instance id from the passage id, the entity span in passage
// coordinates and the threshold.
std::string instance_id(std::string_view passage_id, TokenSpan ne_in_passage, double omega_percent);

// Rebases a sentence-level answer into passage coordinates.
// Throws Error{OffsetMismatch} if the sentence does not occur at `sentence_offset`.
QAInstance make_instance(std::string_view passage_id, const std::vector<std::string>& passage_context,
                         std::size_t sentence_offset, const AnnotatedSentence& sentence,
                         const ExtendedAnswer& answer, std::vector<std::string> question,
                         double omega_percent);

}  // namespace spanqa
