#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "spanqa/dataset.hpp"

namespace spanqa {

struct NbestEntry {
  std::string text;
  std::size_t start = 0;  // context token index
  std::size_t end = 0;    // exclusive
  double prob = 0;

  friend bool operator==(const NbestEntry&, const NbestEntry&) = default;
};

struct PredictionRecord {
  std::string instance_id;
  std::vector<NbestEntry> nbest;  // by probability, descending

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

// Throws Error{MalformedRecord} if nbest is empty, a probability lies outside
// [0, 1], or probabilities increase.
void validate_prediction(const PredictionRecord& record);

enum class MatchMode { ExactOffsets, NormalizedText };

std::string_view to_string(MatchMode mode) noexcept;
MatchMode match_mode_from_string(std::string_view name);

struct FilterConfig {
  std::size_t k = 1;
  double gamma_sub = 0.1;
  MatchMode match_mode = MatchMode::ExactOffsets;
  // Replace the answer of a substring-kept instance with the predicted span.
  bool relabel_substring = false;

  void validate() const;
};

enum class FilterReason { TopK, Substring, Rejected };
std::string_view to_string(FilterReason reason) noexcept;

struct FilterDecision {
  std::string instance_id;
  bool kept = false;
  FilterReason reason = FilterReason::Rejected;
  std::optional<std::size_t> matched_prediction;
  bool missing_prediction = false;
};

// SQuAD-style normalization: lowercase, strip punctuation and articles,
// collapse whitespace.
std::string normalize_answer(std::string_view text);

// Index of the first of the top k entries matching the synthetic answer.
// Throws Error{IdMismatch}.
std::optional<std::size_t> top_k_match(const QAInstance& instance, const PredictionRecord& pred,
                                       const FilterConfig& cfg);
bool top_k_keep(const QAInstance& instance, const PredictionRecord& pred, const FilterConfig& cfg);

// Index of the first entry that lies inside an NE answer (token-aligned) with
// probability above gamma_sub. Throws Error{IdMismatch}.
std::optional<std::size_t> substring_match(const QAInstance& instance, const PredictionRecord& pred,
                                           const FilterConfig& cfg);
bool substring_keep(const QAInstance& instance, const PredictionRecord& pred, const FilterConfig& cfg);

// Decision for one instance; TOP_K wins when both predicates hold.
FilterDecision decide(const QAInstance& instance, const PredictionRecord* pred, const FilterConfig& cfg);

struct FilterResult {
  QADataset kept;
  std::vector<FilterDecision> decisions;
  std::size_t kept_top_k = 0;
  std::size_t kept_substring = 0;
  std::size_t rejected = 0;
  std::size_t missing = 0;
};

using PredictionMap = std::map<std::string, PredictionRecord>;

FilterResult filter_part(const QADataset& part, const PredictionMap& predictions, const FilterConfig& cfg);

std::string prediction_record_json(const PredictionRecord& record);
PredictionRecord parse_prediction_record(std::string_view line);
void write_predictions(const std::vector<PredictionRecord>& records, std::ostream& out);
// Throws Error{MalformedRecord} naming the line.
PredictionMap read_predictions(std::istream& in);
void write_decisions(const std::vector<FilterDecision>& decisions, std::ostream& out);

// The model side of the training loop.
class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;
  virtual void fine_tune(const QADataset& data) = 0;
  virtual std::vector<PredictionRecord> predict(const QADataset& data) = 0;
  // Where the current weights live, if the adapter persists them.
  virtual std::string checkpoint() const { return {}; }
};

// Runs external commands; "{dataset}", "{predictions}" and "{checkpoint}" in
// the templates are replaced with file paths under `work_dir`. Command stdout
// is sent to stderr.
class CommandAdapter : public ModelAdapter {
 public:
  CommandAdapter(std::string predict_command, std::string fine_tune_command, std::string work_dir,
                 std::string checkpoint_path);

  void fine_tune(const QADataset& data) override;
  std::vector<PredictionRecord> predict(const QADataset& data) override;
  std::string checkpoint() const override { return checkpoint_; }

 private:
  std::string predict_command_;
  std::string fine_tune_command_;
  std::string work_dir_;
  std::string checkpoint_;
  int calls_ = 0;
};

struct RoundReport {
  std::size_t round = 0;  // 0 is the initial fine-tune
  std::size_t part_size = 0;
  std::size_t kept_top_k = 0;
  std::size_t kept_substring = 0;
  std::size_t rejected = 0;
  std::size_t missing = 0;
  bool fine_tuned = false;
  std::string checkpoint;
  std::vector<FilterDecision> decisions;
};

struct RunReport {
  SplitPlan plan;
  FilterConfig filter;
  std::vector<RoundReport> rounds;
};

// Fine-tune on the initial split, then for each filter part: predict,
// filter, fine-tune on what was kept. An empty kept set skips that round's
// fine-tune. Adapter exceptions become Error{AdapterFailure} naming the round.
RunReport run_training_procedure(const QADataset& dataset, const SplitPlan& plan, ModelAdapter& adapter,
                                 const FilterConfig& cfg);

}  // namespace spanqa
