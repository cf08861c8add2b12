#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spanqa/autodiff.hpp"
#include "spanqa/dataset.hpp"
#include "spanqa/errors.hpp"
#include "spanqa/random.hpp"

namespace spanqa::toy {

using ad::Matrix;
using ad::ParamStore;
using Vector = Eigen::VectorXd;

struct ToyModelConfig {
  int vocab_size = 64;
  int d = 8;          // embedding width
  int hidden = 16;    // encoder width
  int num_types = 5;  // answer types L
  int special_tokens = 3;
  double gamma_prior = 1.0;  // variance of the N(1, gamma I) prior on z
  double alpha = 1.0;
  double beta = 1.0;
  double init_scale = 0.3;
  std::uint64_t seed = 0;

  // Throws Error{InvalidConfig}.
  void validate() const;
};

// Slots of the parameter store, in storage order.
enum Slot : std::size_t {
  kEmbedding,  // d x V
  kEncW1,      // H x d
  kEncB1,      // H x 1
  kEncW2,      // H x 2H
  kEncB2,      // H x 1
  kStartW,     // 1 x H
  kEndW,       // 1 x H
  kAdjMuW,     // d x H
  kAdjMuB,     // d x 1
  kAdjLogvarW, // d x H
  kAdjLogvarB, // d x 1
  kDiscW,      // L x d
  kDiscB,      // L x 1
  kSlotCount
};

enum class ParamGroup { Qa, Adjustor, Discriminator };
ParamGroup group_of(std::size_t slot) noexcept;

inline constexpr double kLogvarMin = -20.0;
inline constexpr double kLogvarMax = 5.0;

struct ToyModel {
  ToyModelConfig config;
  ParamStore params;
};

// Seeded random weights; adjustor biases start at mean 1 and log-variance 0.
ToyModel init_model(const ToyModelConfig& config);
// Every weight and bias zero except the adjustor mean bias (1).
ToyModel zero_model(const ToyModelConfig& config);

// One sequence: question, context and special tokens, P positions in total.
struct ToyExample {
  std::vector<int> ids;
  int answer_start = 0;  // position of the first answer token
  int answer_end = 0;    // position of the last answer token (inclusive)
  int label = 0;         // answer type index
};

using ToyBatch = std::vector<ToyExample>;

// Throws Error{ShapeMismatch} on out-of-range ids, positions or labels.
void check_batch(const ToyModelConfig& config, const ToyBatch& batch);

struct SpanDistributions {
  Vector start;
  Vector end;
};

struct GaussianField {
  Matrix mu;      // d x P
  Matrix sigma2;  // d x P
};

SpanDistributions forward_plain(const ToyModel& model, const ToyExample& example);
// Encoder output (H x P) for the plain embeddings.
Matrix encode_hiddens(const ToyModel& model, const ToyExample& example);
GaussianField adjustor_forward(const ToyModel& model, const Matrix& hiddens);
Matrix sample_adjusting_vector(const GaussianField& field, const Matrix& noise);
SpanDistributions forward_adjusted(const ToyModel& model, const ToyExample& example, const Matrix& z);
double kl_to_prior(const GaussianField& field, double gamma_prior);
// L x P: column j is the logit-adjusted class distribution for z_j.
// Throws Error{ZeroPrior} if a prior is not strictly positive.
Matrix discriminator_forward(const ToyModel& model, const Matrix& z, const std::vector<double>& priors);

// Standard-normal d x P draws, one per example.
std::vector<Matrix> draw_noise(const ToyModelConfig& config, const ToyBatch& batch, Rng& rng);

struct LossBreakdown {
  double mle = 0;
  double adjust = 0;  // NLL on adjusted embeddings + beta * KL
  double kl = 0;      // batch-mean KL, before beta
  double disc = 0;
  double total = 0;
};

// A recorded forward pass of the full objective. backward() may run once.
class LossGraph {
 public:
  // `frozen_z`, when given, replaces the discriminator's input for each
  // example; used by the finite-difference check to hold the detached
  // adjusting vector fixed.
  LossGraph(const ToyModel& model, const ToyBatch& batch, const std::vector<Matrix>& noise,
            const std::vector<double>& priors, const std::vector<Matrix>* frozen_z = nullptr);

  const LossBreakdown& losses() const noexcept { return losses_; }
  // The adjusting vectors sampled for each example.
  const std::vector<Matrix>& adjusting_vectors() const noexcept { return z_; }

  // Gradients of the total; the discriminator term reaches only its own
  // weights. Throws Error{GraphReuse} on a second call.
  ParamStore backward();

 private:
  const ToyModel* model_;
  ad::Tape tape_;
  ad::Var total_;
  LossBreakdown losses_;
  std::vector<Matrix> z_;
};

double loss_mle(const ToyModel& model, const ToyBatch& batch);
double loss_adjust(const ToyModel& model, const ToyBatch& batch, const std::vector<Matrix>& noise);
double loss_disc(const ToyModel& model, const std::vector<Matrix>& z, const ToyBatch& batch,
                 const std::vector<double>& priors);
LossBreakdown loss_total(const ToyModel& model, const ToyBatch& batch, const std::vector<Matrix>& noise,
                         const std::vector<double>& priors);

// Type priors from dataset counts with add-one smoothing, as a vector of L.
std::vector<double> priors_from(const AnswerTypePrior& prior);
std::vector<double> uniform_priors(int num_types);

struct GradCheckOptions {
  ToyModelConfig model;
  int seq_len = 12;
  int batch_size = 3;
  double step = 1e-5;
  std::uint64_t data_seed = 7;
};

struct GradCheckReport {
  double max_relative_error = 0;
  std::string worst_parameter;
  long worst_index = -1;
  double worst_analytic = 0;
  double worst_numeric = 0;
  std::size_t checked = 0;
  double seconds = 0;
  double tolerance = 0;

  bool passed() const noexcept { return max_relative_error < tolerance; }
};

class ToleranceExceeded : public Error {
 public:
  explicit ToleranceExceeded(GradCheckReport report);
  const GradCheckReport& report() const noexcept { return report_; }

 private:
  GradCheckReport report_;
};

// Relative error |a - n| / max(1e-8, |a| + |n|).
double relative_error(double analytic, double numeric) noexcept;

// Central differences of the total objective (with the discriminator input
// held at its recorded value) against backward(), over every parameter.
GradCheckReport run_grad_check(const GradCheckOptions& options);
// As run_grad_check, throwing ToleranceExceeded when the error is not below
// `tolerance`.
GradCheckReport grad_check(const GradCheckOptions& options, double tolerance);

struct TrainOptions {
  double learning_rate = 1e-2;
  // Learning rate for the discriminator; negative means learning_rate.
  double disc_learning_rate = -1.0;
  int steps = 100;
  std::uint64_t seed = 0;
};

struct TraceRow {
  int step = 0;
  LossBreakdown losses;
};

struct TrainResult {
  std::vector<TraceRow> trace;
};

// Plain gradient descent, one batch per step (cycling through `batches`).
// Updates model.params in place. Throws Error{DivergenceDetected} naming
// the step if a loss or gradient stops being finite.
TrainResult train_steps(ToyModel& model, const std::vector<ToyBatch>& batches, const std::vector<double>& priors,
                        const TrainOptions& options);

void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out);

// Fraction of positions whose discriminator argmax equals the example label,
// with z = mu (no sampling noise).
double discriminator_accuracy(const ToyModel& model, const ToyBatch& batch, const std::vector<double>& priors);

// Versioned JSON checkpoint: config snapshot plus flat parameter arrays.
void save_checkpoint(const ToyModel& model, std::ostream& out);
// Throws Error{MalformedRecord}.
ToyModel load_checkpoint(std::istream& in);

}  // namespace spanqa::toy
