#include "spanqa/toy_adapter.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "spanqa/errors.hpp"
#include "spanqa/random.hpp"

namespace spanqa::toy {

int token_id(std::string_view token, int vocab_size) {
  if (vocab_size <= kEndToken + 1) throw Error(Errc::InvalidConfig, "vocabulary too small for the adapter");
  std::string lower(token);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto buckets = static_cast<std::uint64_t>(vocab_size - kEndToken - 1);
  return kEndToken + 1 + static_cast<int>(fnv1a64(lower) % buckets);
}

ToyExample encode_instance(const QAInstance& inst, int vocab_size) {
  ToyExample ex;
  ex.ids.reserve(inst.question.size() + inst.context.size() + 3);
  ex.ids.push_back(kStartToken);
  for (const auto& t : inst.question) ex.ids.push_back(token_id(t, vocab_size));
  ex.ids.push_back(kSeparatorToken);
  for (const auto& t : inst.context) ex.ids.push_back(token_id(t, vocab_size));
  ex.ids.push_back(kEndToken);
  const auto offset = static_cast<int>(context_offset(inst));
  ex.answer_start = offset + static_cast<int>(inst.answer_start);
  ex.answer_end = offset + static_cast<int>(inst.answer_end) - 1;
  ex.label = static_cast<int>(index_of(inst.answer_type));
  return ex;
}

PredictionRecord predict_instance(const ToyModel& model, const QAInstance& inst, std::size_t nbest,
                                  std::size_t max_answer_tokens) {
  ToyExample ex = encode_instance(inst, model.config.vocab_size);
  ex.label = std::min(ex.label, model.config.num_types - 1);
  const SpanDistributions dist = forward_plain(model, ex);
  const std::size_t offset = context_offset(inst);
  const std::size_t n = inst.context.size();

  std::vector<NbestEntry> candidates;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t e = s; e < n && e - s < max_answer_tokens; ++e) {
      const double p = dist.start(static_cast<Eigen::Index>(offset + s)) * dist.end(static_cast<Eigen::Index>(offset + e));
      candidates.push_back({"", s, e + 1, std::clamp(p, 0.0, 1.0)});
    }
  }
  const std::size_t keep = std::min(nbest, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                    [](const NbestEntry& a, const NbestEntry& b) {
                      if (a.prob != b.prob) return a.prob > b.prob;
                      if (a.start != b.start) return a.start < b.start;
                      return a.end < b.end;
                    });
  candidates.resize(keep);
  for (auto& c : candidates) c.text = join_tokens(inst.context, {c.start, c.end});
  return {inst.id, std::move(candidates)};
}

ToyAdapter::ToyAdapter(ToyAdapterOptions options) : ToyAdapter(options, init_model(options.model)) {}

ToyAdapter::ToyAdapter(ToyAdapterOptions options, ToyModel model)
    : options_(std::move(options)), model_(std::move(model)) {
  if (model_.config.num_types < static_cast<int>(kAnswerTypeCount)) {
    throw Error(Errc::InvalidConfig, "the adapter needs one discriminator class per answer type");
  }
}

void ToyAdapter::fine_tune(const QADataset& data) {
  if (data.empty()) return;
  std::vector<ToyBatch> batches;
  const std::size_t bs = std::max<std::size_t>(1, options_.batch_size);
  for (std::size_t i = 0; i < data.size(); i += bs) {
    ToyBatch b;
    for (std::size_t j = i; j < std::min(data.size(), i + bs); ++j) {
      b.push_back(encode_instance(data.instances[j], model_.config.vocab_size));
    }
    batches.push_back(std::move(b));
  }
  TrainOptions train = options_.train;
  train.seed = options_.train.seed + static_cast<std::uint64_t>(rounds_++);
  auto result = train_steps(model_, batches, priors_from(compute_type_distribution(data)), train);
  trace_.insert(trace_.end(), result.trace.begin(), result.trace.end());
  if (!options_.checkpoint_path.empty()) {
    std::ofstream out(options_.checkpoint_path);
    if (!out) throw Error(Errc::Io, "cannot write checkpoint " + options_.checkpoint_path);
    save_checkpoint(model_, out);
  }
}

std::vector<PredictionRecord> ToyAdapter::predict(const QADataset& data) {
  std::vector<PredictionRecord> out;
  out.reserve(data.size());
  for (const auto& inst : data.instances) {
    out.push_back(predict_instance(model_, inst, options_.nbest, options_.max_answer_tokens));
  }
  return out;
}

SeparableTask make_separable_task(ToyModel& model, std::size_t train_size, std::size_t held_out_size, int seq_len,
                                  std::size_t batch_size, std::uint64_t seed) {
  const auto& cfg = model.config;
  const int L = cfg.num_types;
  const int first = kEndToken + 1;
  const int block = (cfg.vocab_size - first) / (L + 1);
  if (block < 2) throw Error(Errc::InvalidConfig, "vocabulary too small for a separable task");
  if (seq_len < 8) throw Error(Errc::InvalidConfig, "sequence too short for a separable task");
  const int filler_begin = first + L * block;

  Rng rng = named_stream(seed, "separable-task");
  std::normal_distribution<double> normal(0.0, 1.0);

  // Plant a direction per type into that type's vocabulary block.
  Matrix& emb = model.params[kEmbedding];
  for (int l = 0; l < L; ++l) {
    Eigen::VectorXd dir(cfg.d);
    for (int i = 0; i < cfg.d; ++i) dir(i) = normal(rng);
    dir.normalize();
    for (int t = 0; t < block; ++t) {
      const int id = first + l * block + t;
      for (int i = 0; i < cfg.d; ++i) emb(i, id) = 2.0 * dir(i) + 0.2 * normal(rng);
    }
  }

  auto pick = [&rng](int lo, int hi) { return lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo))); };
  const int question_len = 3;
  const int context_len = seq_len - question_len - 3;
  auto make = [&](int label) {
    ToyExample ex;
    const int type_block = first + label * block;
    ex.ids.push_back(kStartToken);
    ex.ids.push_back(pick(type_block, type_block + block));  // type marker
    for (int q = 1; q < question_len; ++q) ex.ids.push_back(pick(filler_begin, cfg.vocab_size));
    ex.ids.push_back(kSeparatorToken);
    const int context_start = static_cast<int>(ex.ids.size());
    const int span = 1 + pick(0, 3);
    const int answer_at = pick(0, context_len - span + 1);
    for (int c = 0; c < context_len; ++c) {
      const bool in_answer = c >= answer_at && c < answer_at + span;
      ex.ids.push_back(in_answer ? pick(type_block, type_block + block) : pick(filler_begin, cfg.vocab_size));
    }
    ex.ids.push_back(kEndToken);
    ex.answer_start = context_start + answer_at;
    ex.answer_end = context_start + answer_at + span - 1;
    ex.label = label;
    return ex;
  };

  SeparableTask task;
  ToyBatch all;
  for (std::size_t i = 0; i < train_size; ++i) all.push_back(make(static_cast<int>(i % static_cast<std::size_t>(L))));
  seeded_shuffle(all, rng);
  const std::size_t bs = std::max<std::size_t>(1, batch_size);
  for (std::size_t i = 0; i < all.size(); i += bs) {
    task.train.emplace_back(all.begin() + static_cast<std::ptrdiff_t>(i),
                            all.begin() + static_cast<std::ptrdiff_t>(std::min(all.size(), i + bs)));
  }
  for (std::size_t i = 0; i < held_out_size; ++i) task.held_out.push_back(make(static_cast<int>(i % static_cast<std::size_t>(L))));
  task.priors = uniform_priors(L);
  return task;
}

}  // namespace spanqa::toy
