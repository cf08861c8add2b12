#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <nlohmann/json.hpp>

#include "run_config.hpp"
#include "spanqa/errors.hpp"

namespace spanqa::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using namespace spanqa::toy;

namespace {

// Flags are recorded here and applied after the config file, so that the
// file overrides defaults and flags override the file.
class Overrides {
 public:
  template <typename T, typename Apply>
  CLI::Option* option(CLI::App* app, const std::string& name, const std::string& help, Apply apply) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *value, help);
    items_.push_back({opt, [value, apply](RunConfig& c) { apply(c, *value); }});
    return opt;
  }

  template <typename Apply>
  CLI::Option* flag(CLI::App* app, const std::string& name, const std::string& help, Apply apply) {
    CLI::Option* opt = app->add_flag(name, help);
    items_.push_back({opt, [apply](RunConfig& c) { apply(c); }});
    return opt;
  }

  void apply(RunConfig& c) const {
    for (const auto& [opt, fn] : items_) {
      if (opt->count() > 0) fn(c);
    }
  }

 private:
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> items_;
};

struct Context {
  RunConfig config;
  std::ostream* out;
  std::ostream* err;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json report_header(const Context& ctx, const std::string& command) {
  Json j;
  j["command"] = command;
  if (ctx.config.timestamp) j["created_at"] = utc_now();
  return j;
}

void emit(const Context& ctx, const Json& report) { *ctx.out << report.dump(2) << '\n'; }

std::string require_path(const std::string& value, const std::string& what) {
  if (value.empty()) throw Error(Errc::InvalidConfig, "missing " + what);
  return value;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  return out;
}

void write_json_file(const std::string& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(Errc::Io, "failed writing " + path);
}

QADataset read_dataset(const std::string& path) {
  auto in = open_in(path);
  return import_squad(in);
}

void write_dataset(const std::string& path, const QADataset& d) {
  auto out = open_out(path);
  export_squad(d, out);
}

Json provenance_json(const Provenance& p) {
  return Json{{"omega", p.omega_percent},
              {"candidate_labels", p.candidate_labels},
              {"corpus_hash", p.corpus_hash},
              {"seed", p.seed},
              {"mode", to_string(p.mode)}};
}

Json stats_json(const QADataset& d) {
  Json j;
  j["instances"] = d.size();
  if (d.empty()) {
    j["type_distribution"] = nullptr;
    j["length_histogram"] = nullptr;
    return j;
  }
  const AnswerTypePrior prior = compute_type_distribution(d);
  Json types = Json::object();
  for (AnswerType t : kAllAnswerTypes) {
    types[std::string(to_string(t))] = Json{{"count", prior.counts[index_of(t)]}, {"frequency", prior.frequency(t)}};
  }
  j["type_distribution"] = types;
  const LengthHistogram h = compute_length_histogram(d, default_length_edges());
  Json bins = Json::array();
  const auto labels = h.labels();
  for (std::size_t i = 0; i < h.counts.size(); ++i) bins.push_back(Json{{"bin", labels[i]}, {"count", h.counts[i]}});
  j["length_histogram"] = bins;
  return j;
}

Json decision_counts(std::size_t part, std::size_t top_k, std::size_t substring, std::size_t rejected,
                     std::size_t missing) {
  return Json{{"part_size", part},
              {"kept", top_k + substring},
              {"kept_top_k", top_k},
              {"kept_substring", substring},
              {"rejected", rejected},
              {"missing", missing}};
}

// ---------------------------------------------------------------------------

int cmd_validate(Context& ctx) {
  const std::string path = require_path(ctx.config.paths.corpus, "corpus path");
  auto in = open_in(path);
  Json issues = Json::array();
  std::size_t sentences = 0, invalid = 0, warnings = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++sentences;
    try {
      const AnnotatedSentence s = parse_corpus_record(line);
      const ValidationReport r = validate_sentence(s);
      for (const auto& i : r.issues) {
        issues.push_back(Json{{"line", line_no}, {"id", s.id}, {"code", i.code}, {"message", i.message}});
      }
      warnings += r.warnings.size();
      if (!r.is_valid()) ++invalid;
    } catch (const Error& e) {
      ++invalid;
      issues.push_back(Json{{"line", line_no}, {"id", nullptr}, {"code", errc_name(e.code())}, {"message", e.what()}});
    }
  }
  if (in.bad()) throw Error(Errc::Io, "read failure on " + path);
  if (sentences == 0) *ctx.err << "warning: " << path << " contains zero sentences\n";
  Json report = report_header(ctx, "validate");
  report["corpus"] = path;
  report["sentences"] = sentences;
  report["valid"] = sentences - invalid;
  report["invalid"] = invalid;
  report["warnings"] = warnings;
  report["issues"] = issues;
  emit(ctx, report);
  return invalid == 0 ? kExitOk : kExitInvalidCorpus;
}

int cmd_build(Context& ctx) {
  const RunConfig& c = ctx.config;
  const std::string corpus = require_path(c.paths.corpus, "corpus path");
  const std::string output = require_path(c.paths.output, "output path (-o)");
  auto in = open_in(corpus);
  BuildOptions opt;
  opt.mode = c.mode;
  opt.seed = c.seed;
  opt.threads = c.threads;
  const BuildResult r = build_dataset(in, c.extension, opt);
  write_dataset(output, r.dataset);

  Json stats = stats_json(r.dataset);
  stats["provenance"] = provenance_json(r.dataset.provenance);
  const std::string stats_path = c.paths.stats.empty() ? output + ".stats.json" : c.paths.stats;
  write_json_file(stats_path, stats);

  Json skipped = Json::array();
  for (const auto& s : r.skipped) skipped.push_back(Json{{"line", s.line_no}, {"reason", s.reason}});
  Json report = report_header(ctx, "build");
  report["corpus"] = corpus;
  report["output"] = output;
  report["stats_file"] = stats_path;
  report["sentences"] = r.sentences;
  report["entities"] = r.entities;
  report["instances"] = r.dataset.size();
  report["duplicates_removed"] = r.duplicates_removed;
  report["skipped"] = skipped;
  report["provenance"] = stats["provenance"];
  emit(ctx, report);
  return kExitOk;
}

int cmd_stats(Context& ctx) {
  const std::string path = require_path(ctx.config.paths.dataset, "dataset path");
  const QADataset d = read_dataset(path);
  Json report = report_header(ctx, "stats");
  report["dataset"] = path;
  report.update(stats_json(d));
  if (!ctx.config.paths.output.empty()) write_json_file(ctx.config.paths.output, report);
  emit(ctx, report);
  return kExitOk;
}

SplitPlan effective_plan(const RunConfig& c) {
  SplitPlan plan = c.split;
  plan.seed = c.seed;
  return plan;
}

int cmd_split(Context& ctx) {
  const RunConfig& c = ctx.config;
  const std::string path = require_path(c.paths.dataset, "dataset path");
  const std::string dir = require_path(c.paths.out_dir, "output directory (--out-dir)");
  const QADataset d = read_dataset(path);
  const SplitResult r = split_dataset(d, effective_plan(c));
  write_dataset((fs::path(dir) / "initial.jsonl").string(), r.initial);
  Json parts = Json::array();
  for (std::size_t i = 0; i < r.parts.size(); ++i) {
    const std::string name = "part-" + std::to_string(i + 1) + ".jsonl";
    write_dataset((fs::path(dir) / name).string(), r.parts[i]);
    parts.push_back(Json{{"file", name}, {"size", r.parts[i].size()}});
  }
  Json report = report_header(ctx, "split");
  report["dataset"] = path;
  report["instances"] = d.size();
  report["seed"] = c.seed;
  report["stratified"] = c.split.stratified;
  report["initial"] = Json{{"file", "initial.jsonl"}, {"size", r.initial.size()}};
  report["parts"] = parts;
  write_json_file((fs::path(dir) / "split_report.json").string(), report);
  emit(ctx, report);
  return kExitOk;
}

int cmd_filter(Context& ctx) {
  const RunConfig& c = ctx.config;
  const std::string part_path = require_path(c.paths.dataset, "part dataset path");
  const std::string pred_path = require_path(c.paths.predictions, "predictions path (--predictions)");
  const QADataset part = read_dataset(part_path);
  auto pin = open_in(pred_path);
  const PredictionMap preds = read_predictions(pin);
  const FilterResult r = filter_part(part, preds, c.filter);
  if (!c.paths.output.empty()) write_dataset(c.paths.output, r.kept);
  if (!c.paths.decisions.empty()) {
    auto out = open_out(c.paths.decisions);
    write_decisions(r.decisions, out);
  }
  for (const auto& d : r.decisions) {
    if (d.missing_prediction) *ctx.err << "warning: no prediction for " << d.instance_id << '\n';
  }
  Json report = report_header(ctx, "filter");
  report["part"] = part_path;
  report["predictions"] = pred_path;
  report["filter"] = to_json(c)["filter"];
  report["counts"] = decision_counts(part.size(), r.kept_top_k, r.kept_substring, r.rejected, r.missing);
  emit(ctx, report);
  return kExitOk;
}

std::unique_ptr<ModelAdapter> make_adapter(const RunConfig& c, const std::string& dir) {
  if (!c.adapter.predict_command.empty()) {
    const std::string work = c.adapter.work_dir.empty() ? (fs::path(dir) / "adapter").string() : c.adapter.work_dir;
    fs::create_directories(work);
    const std::string ckpt = c.paths.checkpoint.empty() ? (fs::path(dir) / "model.ckpt").string() : c.paths.checkpoint;
    return std::make_unique<CommandAdapter>(c.adapter.predict_command, c.adapter.fine_tune_command, work, ckpt);
  }
  ToyAdapterOptions opt = adapter_options(c);
  if (opt.checkpoint_path.empty()) opt.checkpoint_path = (fs::path(dir) / "model.ckpt").string();
  return std::make_unique<ToyAdapter>(opt);
}

int cmd_run(Context& ctx) {
  const RunConfig& c = ctx.config;
  const std::string path = require_path(c.paths.dataset, "dataset path");
  const std::string dir = require_path(c.paths.out_dir, "output directory (--out-dir)");
  const QADataset d = read_dataset(path);
  fs::create_directories(dir);
  auto adapter = make_adapter(c, dir);
  const RunReport r = run_training_procedure(d, effective_plan(c), *adapter, c.filter);

  Json rounds = Json::array();
  for (const auto& rr : r.rounds) {
    Json j{{"round", rr.round}};
    j.update(decision_counts(rr.part_size, rr.kept_top_k, rr.kept_substring, rr.rejected, rr.missing));
    if (rr.round == 0) {
      j["kept"] = rr.part_size;
      j["kept_top_k"] = nullptr;
      j["kept_substring"] = nullptr;
    }
    j["fine_tuned"] = rr.fine_tuned;
    if (!rr.fine_tuned) *ctx.err << "round " << rr.round << ": nothing kept, fine-tune skipped\n";
    j["checkpoint"] = rr.checkpoint;
    if (rr.round > 0) {
      const std::string name = "round-" + std::to_string(rr.round) + "-decisions.jsonl";
      auto out = open_out((fs::path(dir) / name).string());
      write_decisions(rr.decisions, out);
      j["decisions_file"] = name;
    }
    rounds.push_back(j);
  }
  if (const auto* toy = dynamic_cast<const ToyAdapter*>(adapter.get())) {
    std::vector<TraceRow> trace = toy->trace();
    for (std::size_t i = 0; i < trace.size(); ++i) trace[i].step = static_cast<int>(i);
    auto out = open_out((fs::path(dir) / "trace.csv").string());
    write_trace_csv(trace, out);
  }
  Json report = report_header(ctx, "run");
  report["dataset"] = path;
  report["adapter"] = c.adapter.predict_command.empty() ? "toy" : "command";
  report["config"] = to_json(c);
  report["rounds"] = rounds;
  write_json_file((fs::path(dir) / "run_report.json").string(), report);
  emit(ctx, report);
  return kExitOk;
}

int cmd_gradcheck(Context& ctx) {
  const RunConfig& c = ctx.config;
  const GradCheckReport r = run_grad_check(grad_check_options(c));
  const bool passed = r.max_relative_error < c.gradcheck.tolerance;
  Json report = report_header(ctx, "gradcheck");
  report["model"] = to_json(c)["model"];
  report["seq_len"] = c.gradcheck.seq_len;
  report["batch_size"] = c.gradcheck.batch_size;
  report["step"] = c.gradcheck.step;
  report["parameters_checked"] = r.checked;
  report["max_relative_error"] = r.max_relative_error;
  report["worst_parameter"] = r.worst_parameter;
  report["worst_index"] = r.worst_index;
  report["worst_analytic"] = r.worst_analytic;
  report["worst_numeric"] = r.worst_numeric;
  report["tolerance"] = c.gradcheck.tolerance;
  report["passed"] = passed;
  if (c.timestamp) report["seconds"] = r.seconds;
  emit(ctx, report);
  if (!passed) {
    *ctx.err << "error: max relative error " << r.max_relative_error << " is not below " << c.gradcheck.tolerance
             << '\n';
    return kExitTolerance;
  }
  return kExitOk;
}

int cmd_export_squad(Context& ctx) {
  const RunConfig& c = ctx.config;
  const std::string path = require_path(c.paths.dataset, "dataset path");
  const std::string output = require_path(c.paths.output, "output path (-o)");
  const QADataset d = read_dataset(path);
  Json data = Json::array();
  std::map<std::string, std::size_t> paragraph_of;
  Json paragraphs = Json::array();
  for (const auto& inst : d.instances) {
    const std::string context = join_tokens(inst.context);
    auto [it, fresh] = paragraph_of.try_emplace(context, paragraphs.size());
    if (fresh) paragraphs.push_back(Json{{"context", context}, {"qas", Json::array()}});
    const std::string answer = join_tokens(inst.context, inst.answer_span());
    paragraphs[it->second]["qas"].push_back(
        Json{{"id", inst.id},
             {"question", join_tokens(inst.question)},
             {"answers", Json::array({Json{{"text", answer}, {"answer_start", char_offset(inst.context, inst.answer_start)}}})}});
  }
  data.push_back(Json{{"title", fs::path(path).stem().string()}, {"paragraphs", paragraphs}});
  write_json_file(output, Json{{"version", "1.1"}, {"data", data}});
  Json report = report_header(ctx, "export-squad");
  report["dataset"] = path;
  report["output"] = output;
  report["paragraphs"] = paragraphs.size();
  report["questions"] = d.size();
  emit(ctx, report);
  return kExitOk;
}

ToyModel load_model(const std::string& path) {
  auto in = open_in(path);
  return load_checkpoint(in);
}

int cmd_predict(Context& ctx) {
  const RunConfig& c = ctx.config;
  const std::string path = require_path(c.paths.dataset, "dataset path");
  const std::string ckpt = require_path(c.paths.checkpoint, "checkpoint (--checkpoint)");
  const std::string output = require_path(c.paths.output, "predictions output (-o)");
  const QADataset d = read_dataset(path);
  ToyAdapter adapter(adapter_options(c), load_model(ckpt));
  const auto preds = adapter.predict(d);
  auto out = open_out(output);
  write_predictions(preds, out);
  Json report = report_header(ctx, "predict");
  report["dataset"] = path;
  report["checkpoint"] = ckpt;
  report["output"] = output;
  report["predictions"] = preds.size();
  emit(ctx, report);
  return kExitOk;
}

int cmd_fine_tune(Context& ctx) {
  const RunConfig& c = ctx.config;
  const std::string path = require_path(c.paths.dataset, "dataset path");
  const std::string ckpt = require_path(c.paths.checkpoint, "checkpoint (--checkpoint)");
  const QADataset d = read_dataset(path);
  const bool resumed = fs::exists(ckpt);
  ToyAdapterOptions opt = adapter_options(c);
  ToyAdapter adapter(opt, resumed ? load_model(ckpt) : init_model(opt.model));
  adapter.fine_tune(d);
  if (d.empty()) {
    auto out = open_out(ckpt);
    save_checkpoint(adapter.model(), out);
  }
  Json report = report_header(ctx, "fine-tune");
  report["dataset"] = path;
  report["checkpoint"] = ckpt;
  report["resumed"] = resumed;
  report["instances"] = d.size();
  report["steps"] = adapter.trace().size();
  if (!adapter.trace().empty()) {
    const auto& first = adapter.trace().front().losses;
    const auto& last = adapter.trace().back().losses;
    report["loss_first"] = first.total;
    report["loss_last"] = last.total;
  }
  emit(ctx, report);
  return kExitOk;
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::ToleranceExceeded: return kExitTolerance;
    case Errc::Io: return kExitIo;
    case Errc::AdapterFailure:
    case Errc::DivergenceDetected: return kExitRuntime;
    default: return kExitValidation;
  }
}

// ---------------------------------------------------------------------------

void add_extension_flags(CLI::App* app, Overrides& o) {
  o.option<double>(app, "--omega", "Span extending threshold, percent of sentence tokens (0, 100]",
                   [](RunConfig& c, double v) { c.extension.omega_percent = v; });
  o.option<std::vector<std::string>>(app, "--labels", "Candidate constituent labels (NP ADJP VP S SBAR)",
                                     [](RunConfig& c, const std::vector<std::string>& v) {
                                       c.extension.candidate_labels = {v.begin(), v.end()};
                                     });
  o.option<std::string>(app, "--mode", "Answer construction: ne-only, diverse or random",
                        [](RunConfig& c, const std::string& v) { c.mode = build_mode_from_string(v); });
}

void add_split_flags(CLI::App* app, Overrides& o) {
  o.option<std::size_t>(app, "--initial", "Size of the initial fine-tuning split",
                        [](RunConfig& c, std::size_t v) { c.split.initial_size = v; });
  o.option<std::size_t>(app, "--parts", "Number of filter parts N",
                        [](RunConfig& c, std::size_t v) { c.split.filter_parts = v; });
  o.flag(app, "--stratified", "Sample the initial split per answer type",
         [](RunConfig& c) { c.split.stratified = true; });
}

void add_filter_flags(CLI::App* app, Overrides& o) {
  o.option<std::size_t>(app, "-k,--top-k", "Top-K filter size", [](RunConfig& c, std::size_t v) { c.filter.k = v; });
  o.option<double>(app, "--gamma-sub", "Substring filter probability threshold",
                   [](RunConfig& c, double v) { c.filter.gamma_sub = v; });
  o.option<std::string>(app, "--match-mode", "exact-offsets or normalized-text",
                        [](RunConfig& c, const std::string& v) { c.filter.match_mode = match_mode_from_string(v); });
  o.flag(app, "--relabel", "Replace substring-kept answers with the matched prediction",
         [](RunConfig& c) { c.filter.relabel_substring = true; });
}

void add_model_flags(CLI::App* app, Overrides& o) {
  o.option<int>(app, "--dim", "Embedding width d", [](RunConfig& c, int v) { c.model.d = v; });
  o.option<int>(app, "--hidden", "Encoder width", [](RunConfig& c, int v) { c.model.hidden = v; });
  o.option<int>(app, "--vocab", "Vocabulary size", [](RunConfig& c, int v) { c.model.vocab_size = v; });
  o.option<int>(app, "--types", "Number of answer types L", [](RunConfig& c, int v) { c.model.num_types = v; });
  o.option<double>(app, "--alpha", "Weight of the discriminator loss", [](RunConfig& c, double v) { c.model.alpha = v; });
  o.option<double>(app, "--beta", "Weight of the KL term", [](RunConfig& c, double v) { c.model.beta = v; });
  o.option<double>(app, "--gamma-prior", "Variance of the N(1, gamma I) prior",
                   [](RunConfig& c, double v) { c.model.gamma_prior = v; });
}

void add_train_flags(CLI::App* app, Overrides& o) {
  o.option<double>(app, "--lr", "Learning rate", [](RunConfig& c, double v) { c.train.learning_rate = v; });
  o.option<int>(app, "--steps", "Gradient steps per fine-tune", [](RunConfig& c, int v) { c.train.steps = v; });
  o.option<std::size_t>(app, "--batch-size", "Instances per batch",
                        [](RunConfig& c, std::size_t v) { c.batch_size = v; });
  o.option<std::size_t>(app, "--nbest", "Predictions kept per instance",
                        [](RunConfig& c, std::size_t v) { c.nbest = v; });
}

CLI::Option* add_path(CLI::App* app, Overrides& o, const std::string& name, const std::string& help,
                      std::string PathsConfig::*field) {
  return o.option<std::string>(app, name, help, [field](RunConfig& c, const std::string& v) { c.paths.*field = v; });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic extractive QA data: span extension, question generation, filtering and a toy trainer",
               args.empty() ? "spanqa" : args[0]};
  app.set_help_flag();
  app.set_help_all_flag("-h,--help", "Print help for every command and flag, then exit");
  app.require_subcommand(0, 1);
  app.fallthrough();

  Overrides o;
  std::string config_path;
  bool print_config = false;
  app.add_option("-c,--config", config_path, "YAML config file (defaults < file < flags)");
  app.add_flag("--print-config", print_config, "Print the effective config as YAML and exit");
  o.option<std::uint64_t>(&app, "--seed", "Top-level seed", [](RunConfig& c, std::uint64_t v) { c.seed = v; });
  o.option<unsigned>(&app, "--threads", "Worker threads (1 = serial)", [](RunConfig& c, unsigned v) { c.threads = v; });
  o.flag(&app, "--no-timestamp", "Omit timestamps and timings from reports",
         [](RunConfig& c) { c.timestamp = false; });

  std::map<CLI::App*, std::function<int(Context&)>> handlers;

  auto* validate = app.add_subcommand("validate", "Check a corpus; exit 1 if any sentence is invalid");
  add_path(validate, o, "corpus", "Corpus JSON Lines file", &PathsConfig::corpus);
  handlers[validate] = cmd_validate;

  auto* build = app.add_subcommand("build", "Build a QA dataset and its stats file from a corpus");
  add_path(build, o, "corpus", "Corpus JSON Lines file", &PathsConfig::corpus);
  add_path(build, o, "-o,--output", "Dataset output (JSON Lines)", &PathsConfig::output);
  add_path(build, o, "--stats", "Stats output (default: <output>.stats.json)", &PathsConfig::stats);
  add_extension_flags(build, o);
  handlers[build] = cmd_build;

  auto* stats = app.add_subcommand("stats", "Answer type distribution and length histogram");
  add_path(stats, o, "dataset", "Dataset JSON Lines file", &PathsConfig::dataset);
  add_path(stats, o, "-o,--output", "Also write the report here", &PathsConfig::output);
  handlers[stats] = cmd_stats;

  auto* split = app.add_subcommand("split", "Split a dataset into an initial set and N filter parts");
  add_path(split, o, "dataset", "Dataset JSON Lines file", &PathsConfig::dataset);
  add_path(split, o, "--out-dir", "Directory for initial.jsonl and part-*.jsonl", &PathsConfig::out_dir);
  add_split_flags(split, o);
  handlers[split] = cmd_split;

  auto* filter = app.add_subcommand("filter", "Apply the Top-K and Substring filters to one part");
  add_path(filter, o, "part", "Part dataset JSON Lines file", &PathsConfig::dataset);
  add_path(filter, o, "-p,--predictions", "Prediction JSON Lines file", &PathsConfig::predictions);
  add_path(filter, o, "-o,--output", "Kept instances output", &PathsConfig::output);
  add_path(filter, o, "--decisions", "Per-instance decisions output", &PathsConfig::decisions);
  add_filter_flags(filter, o);
  handlers[filter] = cmd_filter;

  auto* runcmd = app.add_subcommand("run", "Initial fine-tune, then predict, filter and fine-tune per part");
  add_path(runcmd, o, "dataset", "Dataset JSON Lines file", &PathsConfig::dataset);
  add_path(runcmd, o, "--out-dir", "Directory for the run report, decisions and checkpoint", &PathsConfig::out_dir);
  add_path(runcmd, o, "--checkpoint", "Checkpoint path (default: <out-dir>/model.ckpt)", &PathsConfig::checkpoint);
  o.option<std::string>(runcmd, "--predict-command",
                        "External predict command; {dataset} {predictions} {checkpoint} are substituted",
                        [](RunConfig& c, const std::string& v) { c.adapter.predict_command = v; });
  o.option<std::string>(runcmd, "--fine-tune-command",
                        "External fine-tune command; {dataset} {checkpoint} are substituted",
                        [](RunConfig& c, const std::string& v) { c.adapter.fine_tune_command = v; });
  add_split_flags(runcmd, o);
  add_filter_flags(runcmd, o);
  add_model_flags(runcmd, o);
  add_train_flags(runcmd, o);
  handlers[runcmd] = cmd_run;

  auto* gradcheck = app.add_subcommand("gradcheck", "Compare backward() with central differences");
  o.option<double>(gradcheck, "--tolerance", "Maximum relative error (exit 3 when reached)",
                   [](RunConfig& c, double v) { c.gradcheck.tolerance = v; });
  o.option<int>(gradcheck, "--seq-len", "Sequence length P", [](RunConfig& c, int v) { c.gradcheck.seq_len = v; });
  o.option<double>(gradcheck, "--step", "Finite-difference step h", [](RunConfig& c, double v) { c.gradcheck.step = v; });
  add_model_flags(gradcheck, o);
  handlers[gradcheck] = cmd_gradcheck;

  auto* export_squad_cmd = app.add_subcommand("export-squad", "Write a dataset as a SQuAD v1.1 JSON document");
  add_path(export_squad_cmd, o, "dataset", "Dataset JSON Lines file", &PathsConfig::dataset);
  add_path(export_squad_cmd, o, "-o,--output", "SQuAD JSON output", &PathsConfig::output);
  handlers[export_squad_cmd] = cmd_export_squad;

  auto* predict = app.add_subcommand("predict", "Adapter hook: n-best predictions from a toy checkpoint");
  add_path(predict, o, "dataset", "Dataset JSON Lines file", &PathsConfig::dataset);
  add_path(predict, o, "--checkpoint", "Toy model checkpoint", &PathsConfig::checkpoint);
  add_path(predict, o, "-o,--output", "Prediction JSON Lines output", &PathsConfig::output);
  o.option<std::size_t>(predict, "--nbest", "Predictions kept per instance",
                        [](RunConfig& c, std::size_t v) { c.nbest = v; });
  handlers[predict] = cmd_predict;

  auto* fine_tune = app.add_subcommand("fine-tune", "Adapter hook: train a toy checkpoint (created if absent)");
  add_path(fine_tune, o, "dataset", "Dataset JSON Lines file", &PathsConfig::dataset);
  add_path(fine_tune, o, "--checkpoint", "Toy model checkpoint", &PathsConfig::checkpoint);
  add_model_flags(fine_tune, o);
  add_train_flags(fine_tune, o);
  handlers[fine_tune] = cmd_fine_tune;

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitValidation;
  }

  Context ctx{RunConfig{}, &out, &err};
  try {
    if (!config_path.empty()) apply_yaml_file(ctx.config, config_path);
    o.apply(ctx.config);
    ctx.config.validate();
    if (print_config) {
      out << to_yaml(ctx.config);
      return kExitOk;
    }
    for (const auto& [sub, handler] : handlers) {
      if (sub->parsed()) return handler(ctx);
    }
    err << "error: a subcommand is required\nRun with --help for usage.\n";
    return kExitValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace spanqa::cli
