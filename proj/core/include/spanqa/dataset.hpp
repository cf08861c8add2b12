#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "spanqa/answer_extension.hpp"
#include "spanqa/corpus.hpp"
#include "spanqa/question_generation.hpp"

namespace spanqa {

enum class BuildMode { NeOnly, Diverse, Random };

std::string_view to_string(BuildMode mode) noexcept;
// Accepts "ne-only", "diverse", "random". Throws Error{InvalidConfig}.
BuildMode build_mode_from_string(std::string_view name);

struct Provenance {
  double omega_percent = 80.0;
  std::vector<std::string> candidate_labels;
  std::string corpus_hash;
  std::uint64_t seed = 0;
  BuildMode mode = BuildMode::Diverse;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct QADataset {
  std::vector<QAInstance> instances;
  Provenance provenance;

  std::size_t size() const noexcept { return instances.size(); }
  bool empty() const noexcept { return instances.empty(); }
};

struct BuildOptions {
  BuildMode mode = BuildMode::Diverse;
  std::uint64_t seed = 0;
  // Worker threads for per-passage construction; results are merged in
  // passage order, so the output does not depend on this.
  unsigned threads = 1;
};

struct BuildResult {
  QADataset dataset;
  std::vector<SkippedRecord> skipped;
  std::size_t sentences = 0;
  std::size_t entities = 0;
  std::size_t duplicates_removed = 0;
};

// Groups consecutive sentences sharing a non-empty `doc` into one passage;
// every instance's context is its passage.
BuildResult build_dataset(const std::vector<AnnotatedSentence>& sentences, const ExtensionConfig& cfg,
                          const BuildOptions& options, std::uint64_t corpus_hash = 0);
BuildResult build_dataset(std::istream& corpus, const ExtensionConfig& cfg, const BuildOptions& options);

// Replaces each answer by a uniformly drawn window of the same token length
// that covers the source entity and stays inside its sentence, and rebuilds
// the question for the new span.
QADataset random_extension_dataset(const QADataset& extended, std::uint64_t seed);

struct AnswerTypePrior {
  std::array<std::uint64_t, kAnswerTypeCount> counts{};
  std::array<double, kAnswerTypeCount> frequencies{};

  std::uint64_t total() const noexcept;
  double frequency(AnswerType t) const noexcept { return frequencies[index_of(t)]; }

  static AnswerTypePrior from_counts(const std::array<std::uint64_t, kAnswerTypeCount>& counts);
  // Add-one smoothing on the counts, so every frequency is strictly positive.
  AnswerTypePrior smoothed() const;
  static AnswerTypePrior uniform();
};

// Throws Error{EmptyDataset}.
AnswerTypePrior compute_type_distribution(const QADataset& dataset);

struct LengthHistogram {
  // Inclusive upper edges; bin i holds lengths in (edges[i-1], edges[i]], the
  // final bin holds everything above edges.back().
  std::vector<std::size_t> upper_edges;
  std::vector<std::uint64_t> counts;

  std::vector<std::string> labels() const;
  std::uint64_t total() const noexcept;
};

// Bins 1-5, 6-10, 11-15, 16-20, 21-25, >25.
std::vector<std::size_t> default_length_edges();

// Throws Error{InvalidConfig} if edges are not strictly ascending.
LengthHistogram compute_length_histogram(const QADataset& dataset, const std::vector<std::size_t>& upper_edges);

struct SplitPlan {
  std::size_t initial_size = 0;
  std::size_t filter_parts = 1;
  std::uint64_t seed = 0;
  // Draw the initial sample per answer type in proportion to type counts.
  bool stratified = false;

  void validate() const;
};

struct SplitResult {
  QADataset initial;
  std::vector<QADataset> parts;
};

// Throws Error{InitialSizeTooLarge}.
SplitResult split_dataset(const QADataset& dataset, const SplitPlan& plan);

// SQuAD-style JSON Lines; offsets are characters into the single-space join.
void export_squad(const QADataset& dataset, std::ostream& out);
// Throws Error{MalformedRecord} with the offending line number.
QADataset import_squad(std::istream& in);

std::string squad_record_json(const QAInstance& instance);
QAInstance parse_squad_record(std::string_view line);

// Character offset of token `index` in the single-space join of `tokens`.
std::size_t char_offset(const std::vector<std::string>& tokens, std::size_t index);

}  // namespace spanqa
