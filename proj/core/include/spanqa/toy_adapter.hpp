#pragma once

#include <string>
#include <vector>

#include "spanqa/denoising_filter.hpp"
#include "spanqa/toy_model.hpp"

namespace spanqa::toy {

inline constexpr int kStartToken = 0;
inline constexpr int kSeparatorToken = 1;
inline constexpr int kEndToken = 2;

// Token ids are hashed into [3, vocab_size).
int token_id(std::string_view token, int vocab_size);

// Layout: start, question, separator, context, end. Answer positions are
// shifted past the question.
ToyExample encode_instance(const QAInstance& instance, int vocab_size);
// Sequence position of context token 0.
inline std::size_t context_offset(const QAInstance& instance) { return instance.question.size() + 2; }

struct ToyAdapterOptions {
  ToyModelConfig model;
  TrainOptions train{1e-2, -1.0, 50, 0};
  std::size_t batch_size = 16;
  std::size_t nbest = 10;
  std::size_t max_answer_tokens = 30;
  // Saved after every fine-tune when non-empty.
  std::string checkpoint_path;
};

// Predicts the n most probable spans of one instance, scoring a span by
// start probability times end probability.
PredictionRecord predict_instance(const ToyModel& model, const QAInstance& instance, std::size_t nbest,
                                  std::size_t max_answer_tokens);

class ToyAdapter : public ModelAdapter {
 public:
  explicit ToyAdapter(ToyAdapterOptions options);
  ToyAdapter(ToyAdapterOptions options, ToyModel model);

  void fine_tune(const QADataset& data) override;
  std::vector<PredictionRecord> predict(const QADataset& data) override;
  std::string checkpoint() const override { return options_.checkpoint_path; }

  const ToyModel& model() const noexcept { return model_; }
  const std::vector<TraceRow>& trace() const noexcept { return trace_; }

 private:
  ToyAdapterOptions options_;
  ToyModel model_;
  std::vector<TraceRow> trace_;
  int rounds_ = 0;
};

struct SeparableTask {
  std::vector<ToyBatch> train;
  ToyBatch held_out;
  std::vector<double> priors;
};

// Synthetic QA sequences whose answer tokens, and a question marker token,
// come from a vocabulary block planted per answer type; answer types are
// balanced. The embedding columns of each block are aligned with a
// type-specific direction.
SeparableTask make_separable_task(ToyModel& model, std::size_t train_size, std::size_t held_out_size,
                                  int seq_len, std::size_t batch_size, std::uint64_t seed);

}  // namespace spanqa::toy
