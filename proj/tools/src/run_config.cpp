#include "run_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "spanqa/errors.hpp"

namespace spanqa::cli {

void RunConfig::validate() const {
  extension.validate();
  split.validate();
  filter.validate();
  model.validate();
  if (threads < 1 || threads > 256) throw Error(Errc::InvalidConfig, "threads must be in [1, 256]");
  if (train.steps < 0) throw Error(Errc::InvalidConfig, "train.steps must be non-negative");
  if (!(train.learning_rate >= 0)) throw Error(Errc::InvalidConfig, "train.learning_rate must be non-negative");
  if (batch_size == 0) throw Error(Errc::InvalidConfig, "train.batch_size must be positive");
  if (nbest == 0) throw Error(Errc::InvalidConfig, "train.nbest must be positive");
  if (max_answer_tokens == 0) throw Error(Errc::InvalidConfig, "train.max_answer_tokens must be positive");
  if (gradcheck.seq_len < 1 || gradcheck.batch_size < 1) {
    throw Error(Errc::InvalidConfig, "gradcheck.seq_len and gradcheck.batch_size must be positive");
  }
  if (!(gradcheck.step > 0)) throw Error(Errc::InvalidConfig, "gradcheck.step must be positive");
  if (!(gradcheck.tolerance > 0)) throw Error(Errc::InvalidConfig, "gradcheck.tolerance must be positive");
  if (adapter.predict_command.empty() != adapter.fine_tune_command.empty()) {
    throw Error(Errc::InvalidConfig, "adapter.predict_command and adapter.fine_tune_command must be given together");
  }
}

namespace {

using Setter = std::function<void(const YAML::Node&)>;
using Section = std::map<std::string, Setter>;

template <typename T>
Setter set(T& target) {
  return [&target](const YAML::Node& n) { target = n.as<T>(); };
}

Setter set_mode(BuildMode& target) {
  return [&target](const YAML::Node& n) { target = build_mode_from_string(n.as<std::string>()); };
}

Setter set_match_mode(MatchMode& target) {
  return [&target](const YAML::Node& n) { target = match_mode_from_string(n.as<std::string>()); };
}

Setter set_labels(std::set<std::string>& target) {
  return [&target](const YAML::Node& n) {
    if (!n.IsSequence()) throw Error(Errc::InvalidConfig, "expected a list of labels");
    target.clear();
    for (const auto& item : n) target.insert(item.as<std::string>());
  };
}

// Carries a message that already names its key.
struct KeyError : Error {
  explicit KeyError(const std::string& what) : Error(Errc::InvalidConfig, what) {}
};

std::string strip_code(const Error& e) {
  const std::string what = e.what();
  const std::string prefix = std::string(errc_name(e.code())) + ": ";
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

void apply_section(const YAML::Node& node, const Section& section, const std::string& prefix) {
  if (!node.IsMap()) throw KeyError("'" + (prefix.empty() ? std::string("config") : prefix) + "' must be a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    auto it = section.find(key);
    if (it == section.end()) throw KeyError("unknown config key '" + path + "'");
    try {
      it->second(kv.second);
    } catch (const KeyError&) {
      throw;
    } catch (const YAML::Exception& e) {
      throw KeyError("bad value for '" + path + "': " + e.msg);
    } catch (const Error& e) {
      if (e.code() != Errc::InvalidConfig) throw;
      throw KeyError("'" + path + "': " + strip_code(e));
    }
  }
}

Setter nested(Section section, std::string prefix) {
  return [section = std::move(section), prefix = std::move(prefix)](const YAML::Node& n) {
    apply_section(n, section, prefix);
  };
}

Section schema(RunConfig& c) {
  bool* timestamp = &c.timestamp;
  return {
      {"seed", set(c.seed)},
      {"threads", set(c.threads)},
      {"timestamp", [timestamp](const YAML::Node& n) { *timestamp = n.as<bool>(); }},
      {"paths", nested({{"corpus", set(c.paths.corpus)},
                        {"dataset", set(c.paths.dataset)},
                        {"predictions", set(c.paths.predictions)},
                        {"output", set(c.paths.output)},
                        {"stats", set(c.paths.stats)},
                        {"decisions", set(c.paths.decisions)},
                        {"out_dir", set(c.paths.out_dir)},
                        {"checkpoint", set(c.paths.checkpoint)}},
                       "paths")},
      {"extension", nested({{"omega", set(c.extension.omega_percent)},
                            {"candidate_labels", set_labels(c.extension.candidate_labels)}},
                           "extension")},
      {"build", nested({{"mode", set_mode(c.mode)}}, "build")},
      {"split", nested({{"initial_size", set(c.split.initial_size)},
                        {"filter_parts", set(c.split.filter_parts)},
                        {"stratified", set(c.split.stratified)}},
                       "split")},
      {"filter", nested({{"k", set(c.filter.k)},
                         {"gamma_sub", set(c.filter.gamma_sub)},
                         {"match_mode", set_match_mode(c.filter.match_mode)},
                         {"relabel_substring", set(c.filter.relabel_substring)}},
                        "filter")},
      {"model", nested({{"vocab_size", set(c.model.vocab_size)},
                        {"d", set(c.model.d)},
                        {"hidden", set(c.model.hidden)},
                        {"num_types", set(c.model.num_types)},
                        {"gamma_prior", set(c.model.gamma_prior)},
                        {"alpha", set(c.model.alpha)},
                        {"beta", set(c.model.beta)},
                        {"init_scale", set(c.model.init_scale)}},
                       "model")},
      {"train", nested({{"learning_rate", set(c.train.learning_rate)},
                        {"disc_learning_rate", set(c.train.disc_learning_rate)},
                        {"steps", set(c.train.steps)},
                        {"batch_size", set(c.batch_size)},
                        {"nbest", set(c.nbest)},
                        {"max_answer_tokens", set(c.max_answer_tokens)}},
                       "train")},
      {"gradcheck", nested({{"seq_len", set(c.gradcheck.seq_len)},
                            {"batch_size", set(c.gradcheck.batch_size)},
                            {"step", set(c.gradcheck.step)},
                            {"data_seed", set(c.gradcheck.data_seed)},
                            {"tolerance", set(c.gradcheck.tolerance)}},
                           "gradcheck")},
      {"adapter", nested({{"predict_command", set(c.adapter.predict_command)},
                          {"fine_tune_command", set(c.adapter.fine_tune_command)},
                          {"work_dir", set(c.adapter.work_dir)}},
                         "adapter")},
  };
}

}  // namespace

void apply_yaml(RunConfig& config, const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(Errc::InvalidConfig, "config is not valid YAML: " + e.msg);
  }
  if (root.IsNull()) return;
  apply_section(root, schema(config), "");
}

void apply_yaml_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_yaml(config, ss.str());
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  using J = nlohmann::ordered_json;
  J j;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["timestamp"] = c.timestamp;
  j["paths"] = J{{"corpus", c.paths.corpus},   {"dataset", c.paths.dataset},     {"predictions", c.paths.predictions},
                 {"output", c.paths.output},   {"stats", c.paths.stats},         {"decisions", c.paths.decisions},
                 {"out_dir", c.paths.out_dir}, {"checkpoint", c.paths.checkpoint}};
  j["extension"] = J{{"omega", c.extension.omega_percent}, {"candidate_labels", c.extension.candidate_labels}};
  j["build"] = J{{"mode", to_string(c.mode)}};
  j["split"] = J{{"initial_size", c.split.initial_size},
                 {"filter_parts", c.split.filter_parts},
                 {"stratified", c.split.stratified}};
  j["filter"] = J{{"k", c.filter.k},
                  {"gamma_sub", c.filter.gamma_sub},
                  {"match_mode", to_string(c.filter.match_mode)},
                  {"relabel_substring", c.filter.relabel_substring}};
  j["model"] = J{{"vocab_size", c.model.vocab_size}, {"d", c.model.d},
                 {"hidden", c.model.hidden},         {"num_types", c.model.num_types},
                 {"gamma_prior", c.model.gamma_prior}, {"alpha", c.model.alpha},
                 {"beta", c.model.beta},             {"init_scale", c.model.init_scale}};
  j["train"] = J{{"learning_rate", c.train.learning_rate}, {"disc_learning_rate", c.train.disc_learning_rate},
                 {"steps", c.train.steps},                 {"batch_size", c.batch_size},
                 {"nbest", c.nbest},                       {"max_answer_tokens", c.max_answer_tokens}};
  j["gradcheck"] = J{{"seq_len", c.gradcheck.seq_len},     {"batch_size", c.gradcheck.batch_size},
                     {"step", c.gradcheck.step},           {"data_seed", c.gradcheck.data_seed},
                     {"tolerance", c.gradcheck.tolerance}};
  j["adapter"] = J{{"predict_command", c.adapter.predict_command},
                   {"fine_tune_command", c.adapter.fine_tune_command},
                   {"work_dir", c.adapter.work_dir}};
  return j;
}

namespace {

void emit(YAML::Emitter& out, const nlohmann::ordered_json& j) {
  if (j.is_object()) {
    out << YAML::BeginMap;
    for (const auto& [k, v] : j.items()) {
      out << YAML::Key << k << YAML::Value;
      emit(out, v);
    }
    out << YAML::EndMap;
  } else if (j.is_array()) {
    out << YAML::Flow << YAML::BeginSeq;
    for (const auto& v : j) emit(out, v);
    out << YAML::EndSeq;
  } else if (j.is_string()) {
    out << YAML::DoubleQuoted << j.get<std::string>();
  } else {
    out << j.dump();
  }
}

}  // namespace

std::string to_yaml(const RunConfig& c) {
  YAML::Emitter out;
  emit(out, to_json(c));
  return std::string(out.c_str()) + "\n";
}

ToyAdapterOptions adapter_options(const RunConfig& c) {
  ToyAdapterOptions o;
  o.model = c.model;
  o.model.seed = c.seed;
  o.train = c.train;
  o.train.seed = c.seed;
  o.batch_size = c.batch_size;
  o.nbest = c.nbest;
  o.max_answer_tokens = c.max_answer_tokens;
  o.checkpoint_path = c.paths.checkpoint;
  return o;
}

GradCheckOptions grad_check_options(const RunConfig& c) {
  GradCheckOptions o;
  o.model = c.model;
  o.model.seed = c.seed;
  o.seq_len = c.gradcheck.seq_len;
  o.batch_size = c.gradcheck.batch_size;
  o.step = c.gradcheck.step;
  o.data_seed = c.gradcheck.data_seed;
  return o;
}

}  // namespace spanqa::cli
