#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spanqa/denoising_filter.hpp"
#include "spanqa/errors.hpp"
#include "test_support.hpp"

namespace spanqa {
namespace {

using nlohmann::json;
using testing::fixture_path;

QAInstance tim_cook(AnswerType type = AnswerType::NE) {
  QAInstance inst;
  inst.id = "tc";
  inst.context = {"Apple", "CEO", "Tim", "Cook", "introduces", "two", "new", "products", "."};
  inst.question = {"Who", "introduces", "two", "new", "products"};
  inst.answer_start = 2;
  inst.answer_end = 4;
  inst.answer_text = "Tim Cook";
  inst.answer_type = type;
  inst.pseudo_ner_label = "PERSON";
  inst.source_ne = {2, 4};
  inst.sentence = {0, 9};
  return inst;
}

PredictionRecord pred(std::string id, std::vector<NbestEntry> nbest) { return {std::move(id), std::move(nbest)}; }

struct FilterFixture {
  QADataset part;
  PredictionMap predictions;
  json expected;

  FilterFixture() {
    std::ifstream inst(fixture_path("filter_instances.jsonl"));
    part = import_squad(inst);
    std::ifstream preds(fixture_path("filter_predictions.jsonl"));
    predictions = read_predictions(preds);
    expected = json::parse(testing::read_file(fixture_path("filter_expected.json")));
  }
};

const FilterFixture& fixture() {
  static const FilterFixture f;
  return f;
}

std::string reason_name(const FilterDecision& d) {
  return d.missing_prediction ? "MISSING" : std::string(to_string(d.reason));
}

std::set<std::string> kept_ids(const FilterResult& r) {
  std::set<std::string> out;
  for (const auto& i : r.kept.instances) out.insert(i.id);
  return out;
}

TEST(TopKKeep, RankSemantics) {
  const QAInstance inst = tim_cook();
  const PredictionRecord p = pred("tc", {{"Apple", 0, 1, 0.6}, {"Tim Cook", 2, 4, 0.3}});
  FilterConfig c;
  EXPECT_FALSE(top_k_keep(inst, p, c));
  c.k = 2;
  EXPECT_TRUE(top_k_keep(inst, p, c));
  EXPECT_EQ(top_k_match(inst, p, c), 1u);
  EXPECT_TRUE(top_k_keep(inst, pred("tc", {{"Tim Cook", 2, 4, 0.9}}), FilterConfig{}));
}

TEST(TopKKeep, ExactOffsetsIgnoreText) {
  const QAInstance inst = tim_cook();
  FilterConfig c;
  EXPECT_FALSE(top_k_keep(inst, pred("tc", {{"Tim Cook", 1, 4, 0.9}}), c));
  EXPECT_TRUE(top_k_keep(inst, pred("tc", {{"whatever", 2, 4, 0.9}}), c));
  c.match_mode = MatchMode::NormalizedText;
  EXPECT_TRUE(top_k_keep(inst, pred("tc", {{"tim cook.", 7, 9, 0.9}}), c));
  EXPECT_FALSE(top_k_keep(inst, pred("tc", {{"whatever", 2, 4, 0.9}}), c));
}

TEST(SubstringKeep, Examples) {
  const FilterConfig c;
  EXPECT_TRUE(substring_keep(tim_cook(), pred("tc", {{"Tim", 2, 3, 0.4}}), c));
  EXPECT_FALSE(substring_keep(tim_cook(), pred("tc", {{"Tim", 2, 3, 0.05}}), c));
  EXPECT_TRUE(substring_keep(tim_cook(), pred("tc", {{"Cook", 3, 4, 0.4}}), c));
  EXPECT_FALSE(substring_keep(tim_cook(), pred("tc", {{"Tim", 2, 3, 0.1}}), c));
  EXPECT_FALSE(substring_keep(tim_cook(), pred("tc", {{"CEO Tim", 1, 3, 0.9}}), c));
  EXPECT_FALSE(substring_keep(tim_cook(), pred("tc", {{"", 3, 3, 0.9}}), c));
  for (auto type : {AnswerType::NP, AnswerType::ADJP, AnswerType::VP, AnswerType::S}) {
    EXPECT_FALSE(substring_keep(tim_cook(type), pred("tc", {{"Tim", 2, 3, 0.9}}), c));
  }
  FilterConfig closed;
  closed.gamma_sub = 1.0;
  EXPECT_FALSE(substring_keep(tim_cook(), pred("tc", {{"Tim", 2, 3, 1.0}}), closed));
}

TEST(SubstringKeep, NormalizedIsTokenAligned) {
  FilterConfig c;
  c.match_mode = MatchMode::NormalizedText;
  EXPECT_TRUE(substring_keep(tim_cook(), pred("tc", {{"TIM", 0, 0, 0.4}}), c));
  EXPECT_FALSE(substring_keep(tim_cook(), pred("tc", {{"im Coo", 0, 0, 0.4}}), c));
  EXPECT_FALSE(substring_keep(tim_cook(), pred("tc", {{"the", 0, 0, 0.4}}), c));
  EXPECT_EQ(normalize_answer("  The Tim,  COOK! "), "tim cook");
}

TEST(Decide, PriorityAndErrors) {
  const QAInstance inst = tim_cook();
  const PredictionRecord both = pred("tc", {{"Tim Cook", 2, 4, 0.5}, {"Tim", 2, 3, 0.4}});
  const FilterDecision d = decide(inst, &both, FilterConfig{});
  EXPECT_TRUE(d.kept);
  EXPECT_EQ(d.reason, FilterReason::TopK);
  EXPECT_EQ(d.matched_prediction, 0u);

  const FilterDecision missing = decide(inst, nullptr, FilterConfig{});
  EXPECT_FALSE(missing.kept);
  EXPECT_TRUE(missing.missing_prediction);
  EXPECT_EQ(missing.reason, FilterReason::Rejected);

  const PredictionRecord other = pred("zz", {{"Tim", 2, 3, 0.4}});
  try {
    decide(inst, &other, FilterConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IdMismatch);
  }
  EXPECT_THROW(substring_keep(inst, other, FilterConfig{}), Error);
}

TEST(ValidatePrediction, Invariants) {
  EXPECT_NO_THROW(validate_prediction(pred("a", {{"x", 0, 1, 0.5}, {"y", 1, 2, 0.5}})));
  EXPECT_THROW(validate_prediction(pred("a", {})), Error);
  EXPECT_THROW(validate_prediction(pred("a", {{"x", 0, 1, 1.5}})), Error);
  EXPECT_THROW(validate_prediction(pred("a", {{"x", 0, 1, 0.2}, {"y", 1, 2, 0.3}})), Error);
  EXPECT_THROW(validate_prediction(pred("a", {{"x", 2, 1, 0.2}})), Error);
}

TEST(FilterConfig, Validation) {
  FilterConfig c;
  c.k = 0;
  EXPECT_THROW(c.validate(), Error);
  c = FilterConfig{};
  c.gamma_sub = 1.1;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_EQ(match_mode_from_string(to_string(MatchMode::NormalizedText)), MatchMode::NormalizedText);
  EXPECT_THROW(match_mode_from_string("fuzzy"), Error);
}

TEST(PredictionFile, RoundTripAndLineNumbers) {
  const PredictionRecord r = pred("q1", {{"Tim \"Cook\"", 2, 4, 0.75}, {"Tim", 2, 3, 0.125}});
  std::stringstream io;
  write_predictions({r, pred("q2", {{"x", 0, 1, 1.0}})}, io);
  const PredictionMap back = read_predictions(io);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.at("q1"), r);

  std::istringstream bad("{\"id\":\"a\",\"nbest\":[{\"text\":\"x\",\"start\":0,\"end\":1,\"prob\":0.5}]}\n\n{\"id\":\"b\"}\n");
  try {
    read_predictions(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MalformedRecord);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(FilterPart, EmptyAndPerfectParts) {
  EXPECT_TRUE(filter_part(QADataset{}, {}, FilterConfig{}).kept.empty());
  const FilterFixture& f = fixture();
  PredictionMap perfect;
  for (const auto& i : f.part.instances) perfect[i.id] = pred(i.id, {{i.answer_text, i.answer_start, i.answer_end, 0.9}});
  const FilterResult r = filter_part(f.part, perfect, FilterConfig{});
  EXPECT_EQ(r.kept.size(), f.part.size());
  EXPECT_EQ(r.kept_top_k, f.part.size());
  EXPECT_EQ(r.kept.instances, f.part.instances);
}

TEST(FilterPart, MatchesHandEvaluatedFixture) {
  const FilterFixture& f = fixture();
  ASSERT_EQ(f.part.size(), 200u);
  const FilterResult r = filter_part(f.part, f.predictions, FilterConfig{});
  ASSERT_EQ(r.decisions.size(), 200u);
  const auto& reasons = f.expected.at("default_reasons");
  for (const auto& d : r.decisions) {
    EXPECT_EQ(reason_name(d), reasons.at(d.instance_id).get<std::string>()) << d.instance_id;
    EXPECT_EQ(d.kept, d.reason != FilterReason::Rejected);
  }
  EXPECT_EQ(r.kept_top_k, 20u);
  EXPECT_EQ(r.kept_substring, 40u);
  EXPECT_EQ(r.rejected, 130u);
  EXPECT_EQ(r.missing, 10u);
}

TEST(FilterPart, SweepMatchesOracleAndIsMonotone) {
  const FilterFixture& f = fixture();
  std::map<std::pair<std::size_t, double>, std::set<std::string>> kept;
  for (const auto& [key, want] : f.expected.at("sweep").items()) {
    FilterConfig c;
    ASSERT_EQ(std::sscanf(key.c_str(), "k=%zu,gamma=%lf", &c.k, &c.gamma_sub), 2) << key;
    const FilterResult r = filter_part(f.part, f.predictions, c);
    EXPECT_EQ(r.kept_top_k, want.at("top_k").get<std::size_t>()) << key;
    EXPECT_EQ(r.kept_substring, want.at("substring").get<std::size_t>()) << key;
    EXPECT_EQ(r.rejected, want.at("rejected").get<std::size_t>()) << key;
    EXPECT_EQ(r.missing, want.at("missing").get<std::size_t>()) << key;
    const auto ids = kept_ids(r);
    EXPECT_EQ(ids, want.at("kept").get<std::set<std::string>>()) << key;
    for (const auto& i : r.kept.instances) {
      const PredictionRecord& p = f.predictions.at(i.id);
      EXPECT_TRUE(top_k_keep(i, p, c) || substring_keep(i, p, c)) << key << " " << i.id;
    }
    kept[{c.k, c.gamma_sub}] = ids;
  }
  ASSERT_EQ(kept.size(), 35u);
  for (const auto& [a, ids_a] : kept) {
    for (const auto& [b, ids_b] : kept) {
      if (a.first <= b.first && a.second >= b.second) {
        EXPECT_TRUE(std::includes(ids_b.begin(), ids_b.end(), ids_a.begin(), ids_a.end()));
      }
    }
  }
}

TEST(FilterPart, RelabelReplacesSubstringAnswers) {
  QADataset part;
  part.instances = {tim_cook()};
  PredictionMap preds{{"tc", pred("tc", {{"Apple", 0, 1, 0.5}, {"Cook", 3, 4, 0.3}})}};
  FilterConfig c;
  EXPECT_EQ(filter_part(part, preds, c).kept.instances[0].answer_text, "Tim Cook");
  c.relabel_substring = true;
  const QAInstance relabeled = filter_part(part, preds, c).kept.instances[0];
  EXPECT_EQ(relabeled.answer_text, "Cook");
  EXPECT_EQ(relabeled.answer_span(), (TokenSpan{3, 4}));
}

// Records calls and answers every instance with its gold span at rank one,
// except ids listed in `miss`, which get a wrong span.
class ScriptedAdapter : public ModelAdapter {
 public:
  std::vector<std::string> calls;
  std::vector<std::size_t> fine_tune_sizes;
  std::set<std::string> miss;
  int fail_on_predict = -1;

  void fine_tune(const QADataset& data) override {
    calls.push_back("fine_tune");
    fine_tune_sizes.push_back(data.size());
  }
  std::vector<PredictionRecord> predict(const QADataset& data) override {
    calls.push_back("predict");
    if (fail_on_predict == static_cast<int>(std::count(calls.begin(), calls.end(), "predict"))) {
      throw std::runtime_error("boom");
    }
    std::vector<PredictionRecord> out;
    for (const auto& i : data.instances) {
      const bool wrong = miss.count(i.id) > 0;
      const std::size_t s = wrong ? (i.answer_start == 0 ? 1 : 0) : i.answer_start;
      out.push_back(pred(i.id, {{"x", s, s + 1 + (wrong ? 0 : i.answer_end - i.answer_start - 1), 0.9}}));
    }
    return out;
  }
  std::string checkpoint() const override { return "ckpt-" + std::to_string(calls.size()); }
};

TEST(RunTrainingProcedure, PerfectAdapterKeepsEverything) {
  const FilterFixture& f = fixture();
  ScriptedAdapter a;
  const RunReport r = run_training_procedure(f.part, SplitPlan{20, 6, 3, false}, a, FilterConfig{});
  ASSERT_EQ(r.rounds.size(), 7u);
  EXPECT_EQ(r.rounds[0].part_size, 20u);
  std::size_t total = 20;
  for (std::size_t i = 1; i < r.rounds.size(); ++i) {
    EXPECT_EQ(r.rounds[i].round, i);
    EXPECT_EQ(r.rounds[i].kept_top_k, r.rounds[i].part_size);
    EXPECT_TRUE(r.rounds[i].fine_tuned);
    total += r.rounds[i].part_size;
  }
  EXPECT_EQ(total, 200u);
  EXPECT_EQ(a.calls.size(), 13u);
  EXPECT_EQ(a.calls[0], "fine_tune");
  for (std::size_t i = 1; i < a.calls.size(); i += 2) {
    EXPECT_EQ(a.calls[i], "predict");
    EXPECT_EQ(a.calls[i + 1], "fine_tune");
  }
  EXPECT_EQ(r.rounds.back().checkpoint, "ckpt-13");
}

TEST(RunTrainingProcedure, EmptyKeptSetSkipsFineTune) {
  const FilterFixture& f = fixture();
  QADataset vp;
  for (const auto& i : f.part.instances) {
    if (i.answer_type != AnswerType::NE && vp.size() < 12) vp.instances.push_back(i);
  }
  ScriptedAdapter a;
  for (const auto& i : vp.instances) a.miss.insert(i.id);
  const RunReport r = run_training_procedure(vp, SplitPlan{4, 2, 0, false}, a, FilterConfig{});
  ASSERT_EQ(r.rounds.size(), 3u);
  EXPECT_TRUE(r.rounds[0].fine_tuned);
  EXPECT_FALSE(r.rounds[1].fine_tuned);
  EXPECT_EQ(r.rounds[1].rejected, 4u);
  EXPECT_EQ(a.fine_tune_sizes, (std::vector<std::size_t>{4}));
}

TEST(RunTrainingProcedure, AdapterFailureNamesRound) {
  const FilterFixture& f = fixture();
  ScriptedAdapter a;
  a.fail_on_predict = 2;
  try {
    run_training_procedure(f.part, SplitPlan{20, 6, 3, false}, a, FilterConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::AdapterFailure);
    EXPECT_NE(std::string(e.what()).find("round 2"), std::string::npos);
  }
}

}  // namespace
}  // namespace spanqa
