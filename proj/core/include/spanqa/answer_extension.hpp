#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "spanqa/corpus.hpp"

namespace spanqa {

enum class AnswerType { NE, NP, ADJP, VP, S };

inline constexpr std::size_t kAnswerTypeCount = 5;
inline constexpr AnswerType kAllAnswerTypes[kAnswerTypeCount] = {
    AnswerType::NE, AnswerType::NP, AnswerType::ADJP, AnswerType::VP, AnswerType::S};

std::string_view to_string(AnswerType type) noexcept;
std::optional<AnswerType> answer_type_from_string(std::string_view name) noexcept;
inline std::size_t index_of(AnswerType type) noexcept { return static_cast<std::size_t>(type); }

struct ExtensionConfig {
  // Span Extending Threshold, in percent of the sentence's token count.
  double omega_percent = 80.0;
  // Bare constituent labels eligible as extended answers.
  std::set<std::string> candidate_labels = {"NP", "ADJP", "VP", "S", "SBAR"};

  // Throws Error{InvalidConfig}.
  void validate() const;
};

// NP, ADJP, VP map to themselves; S and SBAR map to S. Labels outside
// `candidate_labels` (or with no answer type) give nullopt.
std::optional<AnswerType> classify_label(std::string_view bare_label,
                                         const std::set<std::string>& candidate_labels);

struct ExtendedAnswer {
  TokenSpan span;
  AnswerType answer_type = AnswerType::NE;
  std::string pseudo_ner_label;
  NerSpan source_ne;

  friend bool operator==(const ExtendedAnswer&, const ExtendedAnswer&) = default;
};

// True when a span of `length` tokens is at most omega percent of the sentence.
bool within_threshold(std::size_t length, std::size_t sentence_length, double omega_percent) noexcept;

// Walks the constituents containing the entity from the inside out and keeps
// the last candidate-labeled constituent that strictly extends the entity and
// stays within the threshold. Falls back to the entity itself.
// Throws Error{NeNotInSentence} if `ne` is not one of sentence.ner_spans.
ExtendedAnswer extend_answer(const AnnotatedSentence& sentence, const NerSpan& ne,
                             const ExtensionConfig& cfg);

// The entity span itself, typed NE. Used for entity-only datasets.
ExtendedAnswer entity_answer(const NerSpan& ne);

std::vector<ExtendedAnswer> extract_all_answers(const AnnotatedSentence& sentence,
                                                const ExtensionConfig& cfg);

}  // namespace spanqa
