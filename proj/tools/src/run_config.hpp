#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "spanqa/answer_extension.hpp"
#include "spanqa/dataset.hpp"
#include "spanqa/denoising_filter.hpp"
#include "spanqa/toy_adapter.hpp"
#include "spanqa/toy_model.hpp"

namespace spanqa::cli {

using toy::GradCheckOptions;
using toy::ToyAdapterOptions;
using toy::ToyModelConfig;
using toy::TrainOptions;

struct PathsConfig {
  std::string corpus;
  std::string dataset;
  std::string predictions;
  std::string output;
  std::string stats;
  std::string decisions;
  std::string out_dir;
  std::string checkpoint;
};

struct GradCheckConfig {
  int seq_len = 12;
  int batch_size = 3;
  double step = 1e-5;
  std::uint64_t data_seed = 7;
  double tolerance = 1e-4;
};

struct AdapterConfig {
  // Empty commands select the built-in toy model.
  std::string predict_command;
  std::string fine_tune_command;
  std::string work_dir;
};

struct RunConfig {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool timestamp = true;
  PathsConfig paths;
  ExtensionConfig extension;
  BuildMode mode = BuildMode::Diverse;
  SplitPlan split{300, 6, 0, false};
  FilterConfig filter;
  ToyModelConfig model;
  TrainOptions train;
  std::size_t batch_size = 16;
  std::size_t nbest = 10;
  std::size_t max_answer_tokens = 30;
  GradCheckConfig gradcheck;
  AdapterConfig adapter;

  // Throws Error{InvalidConfig}.
  void validate() const;
};

// Overlays a YAML document onto `config`. Unknown keys and ill-typed values
// throw Error{InvalidConfig} naming the key.
void apply_yaml(RunConfig& config, const std::string& text);
void apply_yaml_file(RunConfig& config, const std::string& path);

// The effective configuration, in the schema apply_yaml reads.
nlohmann::ordered_json to_json(const RunConfig& config);
std::string to_yaml(const RunConfig& config);

ToyAdapterOptions adapter_options(const RunConfig& config);
GradCheckOptions grad_check_options(const RunConfig& config);

}  // namespace spanqa::cli
