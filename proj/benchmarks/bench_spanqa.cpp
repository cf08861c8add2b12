#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "spanqa/answer_extension.hpp"
#include "spanqa/corpus.hpp"
#include "spanqa/dataset.hpp"
#include "spanqa/denoising_filter.hpp"
#include "spanqa/question_generation.hpp"
#include "spanqa/random.hpp"
#include "spanqa/toy_adapter.hpp"
#include "spanqa/toy_model.hpp"

namespace {

using namespace spanqa;

std::string fixture(const std::string& name) {
  std::ifstream in(std::string(SPANQA_FIXTURE_DIR) + "/" + name, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<AnnotatedSentence> mini_corpus() {
  std::istringstream in(fixture("mini_corpus.jsonl"));
  return load_corpus(in).sentences;
}

void BM_ParseCorpus(benchmark::State& state) {
  const std::string text = fixture("mini_corpus.jsonl");
  for (auto _ : state) {
    std::istringstream in(text);
    benchmark::DoNotOptimize(load_corpus(in));
  }
  state.SetItemsProcessed(state.iterations() * 50);
}
BENCHMARK(BM_ParseCorpus);

void BM_ExtractAllAnswers(benchmark::State& state) {
  const auto sentences = mini_corpus();
  const ExtensionConfig cfg;
  for (auto _ : state) {
    for (const auto& s : sentences) benchmark::DoNotOptimize(extract_all_answers(s, cfg));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(sentences.size()));
}
BENCHMARK(BM_ExtractAllAnswers);

void BM_QuestionGeneration(benchmark::State& state) {
  const auto sentences = mini_corpus();
  std::vector<std::pair<const AnnotatedSentence*, ExtendedAnswer>> answers;
  for (const auto& s : sentences) {
    for (const auto& a : extract_all_answers(s, ExtensionConfig{})) answers.emplace_back(&s, a);
  }
  for (auto _ : state) {
    for (const auto& [s, a] : answers) {
      benchmark::DoNotOptimize(cloze_to_natural(build_cloze(*s, a), a.pseudo_ner_label));
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(answers.size()));
}
BENCHMARK(BM_QuestionGeneration);

void BM_BuildDataset(benchmark::State& state) {
  auto base = mini_corpus();
  std::vector<AnnotatedSentence> sentences;
  for (int copy = 0; copy < state.range(0); ++copy) {
    for (auto s : base) {
      s.id += "-" + std::to_string(copy);
      s.doc = s.doc.empty() ? "" : s.doc + "-" + std::to_string(copy);
      sentences.push_back(std::move(s));
    }
  }
  BuildOptions opt;
  opt.threads = static_cast<unsigned>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(build_dataset(sentences, ExtensionConfig{}, opt));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(sentences.size()));
}
BENCHMARK(BM_BuildDataset)->Args({20, 1})->Args({20, 4});

void BM_FilterPart(benchmark::State& state) {
  std::istringstream part_in(fixture("filter_instances.jsonl"));
  const QADataset part = import_squad(part_in);
  std::istringstream pred_in(fixture("filter_predictions.jsonl"));
  const PredictionMap preds = read_predictions(pred_in);
  FilterConfig cfg;
  cfg.k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(filter_part(part, preds, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(part.size()));
}
BENCHMARK(BM_FilterPart)->Arg(1)->Arg(10);

void BM_SplitDataset(benchmark::State& state) {
  std::istringstream part_in(fixture("filter_instances.jsonl"));
  const QADataset data = import_squad(part_in);
  for (auto _ : state) benchmark::DoNotOptimize(split_dataset(data, SplitPlan{50, 6, 1, state.range(0) != 0}));
}
BENCHMARK(BM_SplitDataset)->Arg(0)->Arg(1);

void BM_LossAndBackward(benchmark::State& state) {
  using namespace spanqa::toy;
  ToyModel model = init_model(ToyModelConfig{});
  const SeparableTask task = make_separable_task(model, 16, 0, static_cast<int>(state.range(0)), 16, 0);
  Rng rng = named_stream(0, "bench-noise");
  const auto noise = draw_noise(model.config, task.train[0], rng);
  for (auto _ : state) {
    LossGraph graph(model, task.train[0], noise, task.priors);
    benchmark::DoNotOptimize(graph.backward());
  }
}
BENCHMARK(BM_LossAndBackward)->Arg(12)->Arg(48);

void BM_TrainStep(benchmark::State& state) {
  using namespace spanqa::toy;
  ToyModel model = init_model(ToyModelConfig{});
  const SeparableTask task = make_separable_task(model, 64, 0, 12, 16, 0);
  TrainOptions opt;
  opt.steps = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train_steps(model, task.train, task.priors, opt));
}
BENCHMARK(BM_TrainStep);

void BM_GradCheck(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(toy::run_grad_check(toy::GradCheckOptions{}));
}
BENCHMARK(BM_GradCheck)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
