#include "spanqa/toy_model.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace spanqa::toy {

using ad::Tape;
using ad::Var;

void ToyModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::InvalidConfig, what); };
  if (d < 1) fail("d must be at least 1");
  if (hidden < 1) fail("hidden must be at least 1");
  if (num_types < 2) fail("the number of answer types must be at least 2");
  if (vocab_size < 1) fail("vocab_size must be positive");
  if (special_tokens < 0) fail("special_tokens must be non-negative");
  if (!(gamma_prior > 0)) fail("gamma_prior must be positive");
  if (alpha < 0 || beta < 0) fail("alpha and beta must be non-negative");
}

ParamGroup group_of(std::size_t slot) noexcept {
  if (slot >= kAdjMuW && slot <= kAdjLogvarB) return ParamGroup::Adjustor;
  if (slot == kDiscW || slot == kDiscB) return ParamGroup::Discriminator;
  return ParamGroup::Qa;
}

namespace {

constexpr std::array<const char*, kSlotCount> kSlotNames = {
    "embedding", "enc_w1",   "enc_b1",       "enc_w2",       "enc_b2", "start_w",
    "end_w",     "adj_mu_w", "adj_mu_b", "adj_logvar_w", "adj_logvar_b", "disc_w", "disc_b"};

ParamStore shaped_store(const ToyModelConfig& c) {
  ParamStore s;
  const int H = c.hidden;
  s.add(kSlotNames[kEmbedding], Matrix::Zero(c.d, c.vocab_size));
  s.add(kSlotNames[kEncW1], Matrix::Zero(H, c.d));
  s.add(kSlotNames[kEncB1], Matrix::Zero(H, 1));
  s.add(kSlotNames[kEncW2], Matrix::Zero(H, 2 * H));
  s.add(kSlotNames[kEncB2], Matrix::Zero(H, 1));
  s.add(kSlotNames[kStartW], Matrix::Zero(1, H));
  s.add(kSlotNames[kEndW], Matrix::Zero(1, H));
  s.add(kSlotNames[kAdjMuW], Matrix::Zero(c.d, H));
  s.add(kSlotNames[kAdjMuB], Matrix::Ones(c.d, 1));
  s.add(kSlotNames[kAdjLogvarW], Matrix::Zero(c.d, H));
  s.add(kSlotNames[kAdjLogvarB], Matrix::Zero(c.d, 1));
  s.add(kSlotNames[kDiscW], Matrix::Zero(c.num_types, c.d));
  s.add(kSlotNames[kDiscB], Matrix::Zero(c.num_types, 1));
  return s;
}

}  // namespace

ToyModel zero_model(const ToyModelConfig& config) {
  config.validate();
  return {config, shaped_store(config)};
}

ToyModel init_model(const ToyModelConfig& config) {
  ToyModel m = zero_model(config);
  Rng rng = named_stream(config.seed, "init");
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t slot = 0; slot < kSlotCount; ++slot) {
    // Biases keep their starting values.
    if (slot == kEncB1 || slot == kEncB2 || slot == kAdjMuB ||
        slot == kAdjLogvarB || slot == kDiscB) {
      continue;
    }
    Matrix& w = m.params[slot];
    const double scale = slot == kEmbedding ? 1.0 : config.init_scale;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = scale * normal(rng);
    }
  }
  return m;
}

void check_batch(const ToyModelConfig& config, const ToyBatch& batch) {
  for (std::size_t e = 0; e < batch.size(); ++e) {
    const auto& ex = batch[e];
    const int P = static_cast<int>(ex.ids.size());
    auto fail = [e](const std::string& what) {
      throw Error(Errc::ShapeMismatch, "example " + std::to_string(e) + ": " + what);
    };
    if (P == 0) fail("empty sequence");
    for (int id : ex.ids) {
      if (id < 0 || id >= config.vocab_size) fail("token id " + std::to_string(id) + " outside vocabulary");
    }
    if (ex.answer_start < 0 || ex.answer_start >= P || ex.answer_end < 0 || ex.answer_end >= P) {
      fail("answer position outside the sequence");
    }
    if (ex.label < 0 || ex.label >= config.num_types) fail("label outside [0, L)");
  }
}

namespace {

using Params = std::array<Var, kSlotCount>;

Params bind(Tape& t, const ParamStore& store) {
  Params p;
  for (std::size_t s = 0; s < kSlotCount; ++s) p[s] = t.parameter(store, s);
  return p;
}

struct Encoded {
  Var hiddens;    // H x P
  Var log_start;  // P x 1
  Var log_end;    // P x 1
};

Encoded encode(Tape& t, const Params& p, Var x) {
  const Eigen::Index P = t.value(x).cols();
  Var h1 = t.tanh(t.add_col(t.matmul(p[kEncW1], x), p[kEncB1]));
  Var pooled = t.repeat_cols(t.mean_cols(h1), P);
  Var h2 = t.tanh(t.add_col(t.matmul(p[kEncW2], t.vcat(h1, pooled)), p[kEncB2]));
  Var start = t.transpose(t.matmul(p[kStartW], h2));
  Var end = t.transpose(t.matmul(p[kEndW], h2));
  return {h2, t.log_softmax_cols(start), t.log_softmax_cols(end)};
}

Var nll(Tape& t, const Encoded& enc, const ToyExample& ex) {
  Var s = t.pick_sum(enc.log_start, {{ex.answer_start, 0}});
  Var e = t.pick_sum(enc.log_end, {{ex.answer_end, 0}});
  return t.scale(t.add(s, e), -1.0);
}

struct Adjusted {
  Var mu;
  Var logvar;
  Var z;
};

Adjusted adjust(Tape& t, const Params& p, Var hiddens, const Matrix& noise) {
  Var mu = t.add_col(t.matmul(p[kAdjMuW], hiddens), p[kAdjMuB]);
  Var logvar = t.clamp(t.add_col(t.matmul(p[kAdjLogvarW], hiddens), p[kAdjLogvarB]), kLogvarMin, kLogvarMax);
  if (noise.rows() != t.value(mu).rows() || noise.cols() != t.value(mu).cols()) {
    throw Error(Errc::ShapeMismatch, "noise must be d x P");
  }
  Var stddev = t.exp(t.scale(logvar, 0.5));
  Var z = t.add(mu, t.mul(stddev, t.constant(noise)));
  return {mu, logvar, z};
}

// 1/2 sum [ sigma2/g + (mu-1)^2/g - 1 + ln g - logvar ]
Var kl(Tape& t, const Adjusted& a, double gamma) {
  const double entries = static_cast<double>(t.value(a.mu).size());
  Var var_term = t.scale(t.sum(t.exp(a.logvar)), 0.5 / gamma);
  Var mean_term = t.scale(t.sum(t.square(t.add_scalar(a.mu, -1.0))), 0.5 / gamma);
  Var log_term = t.scale(t.sum(a.logvar), -0.5);
  Var total = t.add(t.add(var_term, mean_term), log_term);
  return t.add_scalar(total, 0.5 * entries * (std::log(gamma) - 1.0));
}

Matrix log_priors(const std::vector<double>& priors, int num_types) {
  if (static_cast<int>(priors.size()) != num_types) {
    throw Error(Errc::ShapeMismatch, "expected " + std::to_string(num_types) + " priors, got " +
                                         std::to_string(priors.size()));
  }
  Matrix out(num_types, 1);
  for (int i = 0; i < num_types; ++i) {
    if (!(priors[i] > 0)) throw Error(Errc::ZeroPrior, "prior of type " + std::to_string(i) + " is not positive");
    out(i, 0) = std::log(priors[i]);
  }
  return out;
}

Var disc_log_probs(Tape& t, const Params& p, Var z, const Matrix& log_prior) {
  Var logits = t.add_col(t.matmul(p[kDiscW], z), p[kDiscB]);
  return t.log_softmax_cols(t.add_col(logits, t.constant(log_prior)));
}

Var embed(Tape& t, const Params& p, const ToyExample& ex) { return t.gather_cols(p[kEmbedding], ex.ids); }

SpanDistributions to_distributions(const Tape& t, const Encoded& enc) {
  return {t.value(enc.log_start).col(0).array().exp(), t.value(enc.log_end).col(0).array().exp()};
}

}  // namespace

SpanDistributions forward_plain(const ToyModel& model, const ToyExample& example) {
  check_batch(model.config, {example});
  Tape t;
  Params p = bind(t, model.params);
  return to_distributions(t, encode(t, p, embed(t, p, example)));
}

Matrix encode_hiddens(const ToyModel& model, const ToyExample& example) {
  check_batch(model.config, {example});
  Tape t;
  Params p = bind(t, model.params);
  return t.value(encode(t, p, embed(t, p, example)).hiddens);
}

GaussianField adjustor_forward(const ToyModel& model, const Matrix& hiddens) {
  Tape t;
  Params p = bind(t, model.params);
  Var h = t.constant(hiddens);
  Var mu = t.add_col(t.matmul(p[kAdjMuW], h), p[kAdjMuB]);
  Var logvar = t.clamp(t.add_col(t.matmul(p[kAdjLogvarW], h), p[kAdjLogvarB]), kLogvarMin, kLogvarMax);
  return {t.value(mu), t.value(logvar).array().exp()};
}

Matrix sample_adjusting_vector(const GaussianField& field, const Matrix& noise) {
  if (noise.rows() != field.mu.rows() || noise.cols() != field.mu.cols()) {
    throw Error(Errc::ShapeMismatch, "noise must match the field shape");
  }
  return field.mu.array() + field.sigma2.array().sqrt() * noise.array();
}

SpanDistributions forward_adjusted(const ToyModel& model, const ToyExample& example, const Matrix& z) {
  check_batch(model.config, {example});
  if (z.rows() != model.config.d || z.cols() != static_cast<Eigen::Index>(example.ids.size())) {
    throw Error(Errc::ShapeMismatch, "z must be d x P");
  }
  Tape t;
  Params p = bind(t, model.params);
  Var x = t.mul(embed(t, p, example), t.constant(z));
  return to_distributions(t, encode(t, p, x));
}

double kl_to_prior(const GaussianField& field, double gamma) {
  if (!(gamma > 0)) throw Error(Errc::InvalidConfig, "gamma_prior must be positive");
  const auto s2 = field.sigma2.array();
  const auto dm = field.mu.array() - 1.0;
  return 0.5 * (s2 / gamma + dm.square() / gamma - 1.0 + (gamma / s2).log()).sum();
}

Matrix discriminator_forward(const ToyModel& model, const Matrix& z, const std::vector<double>& priors) {
  if (z.rows() != model.config.d) throw Error(Errc::ShapeMismatch, "z must have d rows");
  Tape t;
  Params p = bind(t, model.params);
  Var logp = disc_log_probs(t, p, t.constant(z), log_priors(priors, model.config.num_types));
  return t.value(logp).array().exp();
}

std::vector<Matrix> draw_noise(const ToyModelConfig& config, const ToyBatch& batch, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Matrix> out;
  out.reserve(batch.size());
  for (const auto& ex : batch) {
    Matrix m(config.d, static_cast<Eigen::Index>(ex.ids.size()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
    }
    out.push_back(std::move(m));
  }
  return out;
}

LossGraph::LossGraph(const ToyModel& model, const ToyBatch& batch, const std::vector<Matrix>& noise,
                     const std::vector<double>& priors, const std::vector<Matrix>* frozen_z)
    : model_(&model) {
  const auto& cfg = model.config;
  check_batch(cfg, batch);
  if (batch.empty()) throw Error(Errc::ShapeMismatch, "empty batch");
  if (noise.size() != batch.size()) throw Error(Errc::ShapeMismatch, "one noise draw per example required");
  if (frozen_z && frozen_z->size() != batch.size()) throw Error(Errc::ShapeMismatch, "one frozen z per example");
  const Matrix log_prior = log_priors(priors, cfg.num_types);

  Tape& t = tape_;
  Params p = bind(t, model.params);
  std::vector<Var> mle_terms, nll_adj_terms, kl_terms, disc_terms;
  double positions = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const ToyExample& ex = batch[i];
    const Eigen::Index P = static_cast<Eigen::Index>(ex.ids.size());
    positions += static_cast<double>(P);

    Var x = embed(t, p, ex);
    Encoded plain = encode(t, p, x);
    mle_terms.push_back(nll(t, plain, ex));

    Adjusted a = adjust(t, p, plain.hiddens, noise[i]);
    z_.push_back(t.value(a.z));
    kl_terms.push_back(kl(t, a, cfg.gamma_prior));
    Encoded adjusted = encode(t, p, t.mul(x, a.z));
    nll_adj_terms.push_back(nll(t, adjusted, ex));

    Var z_in = frozen_z ? t.constant((*frozen_z)[i]) : t.detach(a.z);
    Var logp = disc_log_probs(t, p, z_in, log_prior);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> picks;
    for (Eigen::Index j = 0; j < P; ++j) picks.emplace_back(ex.label, j);
    disc_terms.push_back(t.pick_sum(logp, picks));
  }

  auto total_of = [&t](const std::vector<Var>& terms) {
    Var acc = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) acc = t.add(acc, terms[i]);
    return acc;
  };
  const double n = static_cast<double>(batch.size());
  Var mle = t.scale(total_of(mle_terms), 1.0 / n);
  Var kl_mean = t.scale(total_of(kl_terms), 1.0 / n);
  Var adjust = t.add(t.scale(total_of(nll_adj_terms), 1.0 / n), t.scale(kl_mean, cfg.beta));
  Var disc = t.scale(total_of(disc_terms), -1.0 / positions);
  total_ = t.add(t.add(mle, adjust), t.scale(disc, cfg.alpha));

  losses_.mle = t.scalar(mle);
  losses_.adjust = t.scalar(adjust);
  losses_.kl = t.scalar(kl_mean);
  losses_.disc = t.scalar(disc);
  losses_.total = t.scalar(total_);
}

ParamStore LossGraph::backward() { return tape_.backward(total_, model_->params); }

double loss_mle(const ToyModel& model, const ToyBatch& batch) {
  check_batch(model.config, batch);
  double acc = 0;
  for (const auto& ex : batch) {
    auto dist = forward_plain(model, ex);
    acc -= std::log(dist.start(ex.answer_start)) + std::log(dist.end(ex.answer_end));
  }
  return acc / static_cast<double>(batch.size());
}

double loss_adjust(const ToyModel& model, const ToyBatch& batch, const std::vector<Matrix>& noise) {
  return LossGraph(model, batch, noise, uniform_priors(model.config.num_types)).losses().adjust;
}

double loss_disc(const ToyModel& model, const std::vector<Matrix>& z, const ToyBatch& batch,
                 const std::vector<double>& priors) {
  check_batch(model.config, batch);
  if (z.size() != batch.size()) throw Error(Errc::ShapeMismatch, "one z per example required");
  double acc = 0;
  double positions = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (z[i].cols() != static_cast<Eigen::Index>(batch[i].ids.size())) {
      throw Error(Errc::ShapeMismatch, "z must be d x P");
    }
    Matrix probs = discriminator_forward(model, z[i], priors);
    for (Eigen::Index j = 0; j < probs.cols(); ++j) acc -= std::log(probs(batch[i].label, j));
    positions += static_cast<double>(probs.cols());
  }
  return acc / positions;
}

LossBreakdown loss_total(const ToyModel& model, const ToyBatch& batch, const std::vector<Matrix>& noise,
                         const std::vector<double>& priors) {
  return LossGraph(model, batch, noise, priors).losses();
}

std::vector<double> priors_from(const AnswerTypePrior& prior) {
  auto smoothed = prior.smoothed();
  return {smoothed.frequencies.begin(), smoothed.frequencies.end()};
}

std::vector<double> uniform_priors(int num_types) {
  return std::vector<double>(static_cast<std::size_t>(num_types), 1.0 / num_types);
}

ToleranceExceeded::ToleranceExceeded(GradCheckReport report)
    : Error(Errc::ToleranceExceeded, "max relative error " + std::to_string(report.max_relative_error) +
                                         " at " + report.worst_parameter + "[" +
                                         std::to_string(report.worst_index) + "] is not below " +
                                         std::to_string(report.tolerance)),
      report_(std::move(report)) {}

double relative_error(double analytic, double numeric) noexcept {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradCheckReport run_grad_check(const GradCheckOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const ToyModelConfig& cfg = options.model;
  if (cfg.d > 16 || options.seq_len > 24) {
    throw Error(Errc::InvalidConfig, "gradient check is limited to d <= 16 and P <= 24");
  }
  if (options.seq_len < cfg.special_tokens + 1) throw Error(Errc::InvalidConfig, "sequence too short");
  ToyModel model = init_model(cfg);

  Rng rng = named_stream(options.data_seed, "gradcheck-data");
  ToyBatch batch;
  for (int b = 0; b < options.batch_size; ++b) {
    ToyExample ex;
    for (int j = 0; j < options.seq_len; ++j) {
      ex.ids.push_back(static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cfg.vocab_size))));
    }
    ex.answer_start = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(options.seq_len)));
    ex.answer_end = ex.answer_start +
                    static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(options.seq_len - ex.answer_start)));
    ex.label = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cfg.num_types)));
    batch.push_back(std::move(ex));
  }
  auto noise = draw_noise(cfg, batch, rng);
  // Skewed priors exercise the logit adjustment.
  std::vector<double> priors(static_cast<std::size_t>(cfg.num_types));
  double mass = 0;
  for (int i = 0; i < cfg.num_types; ++i) mass += priors[i] = 1.0 / (1.0 + i * i);
  for (auto& v : priors) v /= mass;

  LossGraph base(model, batch, noise, priors);
  const std::vector<Matrix> frozen = base.adjusting_vectors();
  const ParamStore analytic = base.backward();

  GradCheckReport report;
  for (std::size_t slot = 0; slot < model.params.size(); ++slot) {
    Matrix& w = model.params[slot];
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      double& v = w.data()[k];
      const double saved = v;
      v = saved + options.step;
      const double plus = LossGraph(model, batch, noise, priors, &frozen).losses().total;
      v = saved - options.step;
      const double minus = LossGraph(model, batch, noise, priors, &frozen).losses().total;
      v = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic[slot].data()[k];
      const double err = relative_error(a, numeric);
      ++report.checked;
      if (err > report.max_relative_error || report.worst_index < 0) {
        report.max_relative_error = err;
        report.worst_parameter = model.params.name(slot);
        report.worst_index = static_cast<long>(k);
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

GradCheckReport grad_check(const GradCheckOptions& options, double tolerance) {
  GradCheckReport report = run_grad_check(options);
  report.tolerance = tolerance;
  if (!report.passed()) throw ToleranceExceeded(report);
  return report;
}

namespace {

bool finite(const LossBreakdown& l) {
  return std::isfinite(l.mle) && std::isfinite(l.adjust) && std::isfinite(l.kl) && std::isfinite(l.disc) &&
         std::isfinite(l.total);
}

}  // namespace

TrainResult train_steps(ToyModel& model, const std::vector<ToyBatch>& batches, const std::vector<double>& priors,
                        const TrainOptions& options) {
  TrainResult result;
  if (options.steps <= 0) return result;
  if (batches.empty()) throw Error(Errc::InvalidConfig, "no training batches");
  const double lr = options.learning_rate;
  const double lr_disc = options.disc_learning_rate < 0 ? lr : options.disc_learning_rate;
  Rng rng = named_stream(options.seed, "train-noise");
  result.trace.reserve(static_cast<std::size_t>(options.steps));

  for (int step = 0; step < options.steps; ++step) {
    const ToyBatch& batch = batches[static_cast<std::size_t>(step) % batches.size()];
    auto noise = draw_noise(model.config, batch, rng);
    LossGraph graph(model, batch, noise, priors);
    if (!finite(graph.losses())) {
      throw Error(Errc::DivergenceDetected, "non-finite loss at step " + std::to_string(step));
    }
    result.trace.push_back({step, graph.losses()});
    ParamStore grads = graph.backward();
    if (!grads.all_finite()) {
      throw Error(Errc::DivergenceDetected, "non-finite gradient at step " + std::to_string(step));
    }
    for (std::size_t s = 0; s < model.params.size(); ++s) {
      const double rate = group_of(s) == ParamGroup::Discriminator ? lr_disc : lr;
      if (rate != 0.0) model.params[s] -= rate * grads[s];
    }
  }
  return result;
}

void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out) {
  out << "step,l_mle,l_adjust,kl,l_disc,total\n";
  char buf[256];
  for (const auto& row : trace) {
    const auto& l = row.losses;
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.step, l.mle, l.adjust, l.kl, l.disc,
                  l.total);
    out << buf;
  }
}

double discriminator_accuracy(const ToyModel& model, const ToyBatch& batch, const std::vector<double>& priors) {
  check_batch(model.config, batch);
  std::size_t correct = 0, total = 0;
  for (const auto& ex : batch) {
    GaussianField field = adjustor_forward(model, encode_hiddens(model, ex));
    Matrix probs = discriminator_forward(model, field.mu, priors);
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      Eigen::Index best;
      probs.col(j).maxCoeff(&best);
      correct += best == ex.label;
      ++total;
    }
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

namespace {

constexpr const char* kCheckpointFormat = "spanqa-toy-checkpoint";
constexpr int kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const ToyModel& model, std::ostream& out) {
  using nlohmann::json;
  const auto& c = model.config;
  json params = json::object();
  for (std::size_t s = 0; s < model.params.size(); ++s) {
    const Matrix& w = model.params[s];
    std::vector<double> flat(w.data(), w.data() + w.size());
    params[model.params.name(s)] = {{"rows", w.rows()}, {"cols", w.cols()}, {"data", flat}};
  }
  json j = {{"format", kCheckpointFormat},
            {"version", kCheckpointVersion},
            {"config",
             {{"vocab_size", c.vocab_size},
              {"d", c.d},
              {"hidden", c.hidden},
              {"num_types", c.num_types},
              {"special_tokens", c.special_tokens},
              {"gamma_prior", c.gamma_prior},
              {"alpha", c.alpha},
              {"beta", c.beta},
              {"init_scale", c.init_scale},
              {"seed", c.seed}}},
            {"params", params}};
  out << j.dump() << '\n';
  if (!out) throw Error(Errc::Io, "failed writing checkpoint");
}

ToyModel load_checkpoint(std::istream& in) {
  using nlohmann::json;
  try {
    json j = json::parse(in);
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw Error(Errc::MalformedRecord, "not a toy-model checkpoint");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw Error(Errc::MalformedRecord, "unsupported checkpoint version " + j.at("version").dump());
    }
    const auto& jc = j.at("config");
    ToyModelConfig c;
    c.vocab_size = jc.at("vocab_size").get<int>();
    c.d = jc.at("d").get<int>();
    c.hidden = jc.at("hidden").get<int>();
    c.num_types = jc.at("num_types").get<int>();
    c.special_tokens = jc.at("special_tokens").get<int>();
    c.gamma_prior = jc.at("gamma_prior").get<double>();
    c.alpha = jc.at("alpha").get<double>();
    c.beta = jc.at("beta").get<double>();
    c.init_scale = jc.at("init_scale").get<double>();
    c.seed = jc.at("seed").get<std::uint64_t>();
    ToyModel model = zero_model(c);
    const auto& jp = j.at("params");
    for (std::size_t s = 0; s < model.params.size(); ++s) {
      const auto& entry = jp.at(model.params.name(s));
      Matrix& w = model.params[s];
      auto data = entry.at("data").get<std::vector<double>>();
      if (entry.at("rows").get<Eigen::Index>() != w.rows() || entry.at("cols").get<Eigen::Index>() != w.cols() ||
          static_cast<Eigen::Index>(data.size()) != w.size()) {
        throw Error(Errc::MalformedRecord, "parameter " + model.params.name(s) + " has the wrong shape");
      }
      std::copy(data.begin(), data.end(), w.data());
    }
    return model;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, std::string("checkpoint: ") + e.what());
  }
}

}  // namespace spanqa::toy
