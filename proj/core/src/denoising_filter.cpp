#include "spanqa/denoising_filter.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spanqa/errors.hpp"

namespace spanqa {

using nlohmann::json;

void validate_prediction(const PredictionRecord& r) {
  if (r.nbest.empty()) throw Error(Errc::MalformedRecord, "prediction for " + r.instance_id + " has no n-best entries");
  for (std::size_t i = 0; i < r.nbest.size(); ++i) {
    const double p = r.nbest[i].prob;
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(Errc::MalformedRecord, "prediction for " + r.instance_id + " has probability outside [0,1]");
    }
    if (i > 0 && p > r.nbest[i - 1].prob) {
      throw Error(Errc::MalformedRecord, "n-best for " + r.instance_id + " is not sorted by probability");
    }
    if (r.nbest[i].end < r.nbest[i].start) {
      throw Error(Errc::MalformedRecord, "n-best entry with end before start for " + r.instance_id);
    }
  }
}

std::string_view to_string(MatchMode mode) noexcept {
  return mode == MatchMode::ExactOffsets ? "exact-offsets" : "normalized-text";
}

MatchMode match_mode_from_string(std::string_view name) {
  if (name == "exact-offsets") return MatchMode::ExactOffsets;
  if (name == "normalized-text") return MatchMode::NormalizedText;
  throw Error(Errc::InvalidConfig, "unknown match mode '" + std::string(name) + "'");
}

void FilterConfig::validate() const {
  if (k < 1) throw Error(Errc::InvalidConfig, "k must be at least 1");
  if (!(gamma_sub >= 0.0 && gamma_sub <= 1.0)) throw Error(Errc::InvalidConfig, "substring threshold must be in [0,1]");
}

std::string_view to_string(FilterReason reason) noexcept {
  switch (reason) {
    case FilterReason::TopK: return "TOP_K";
    case FilterReason::Substring: return "SUBSTRING";
    case FilterReason::Rejected: return "REJECTED";
  }
  return "REJECTED";
}

namespace {

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

void check_ids(const QAInstance& instance, const PredictionRecord& pred) {
  if (pred.instance_id != instance.id) {
    throw Error(Errc::IdMismatch, "prediction " + pred.instance_id + " does not belong to instance " + instance.id);
  }
}

bool contains_run(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

}  // namespace

std::string normalize_answer(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (unsigned char c : text) {
    if (std::ispunct(c)) continue;
    cleaned += static_cast<char>(std::tolower(c));
  }
  std::string out;
  for (const auto& w : words(cleaned)) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::optional<std::size_t> top_k_match(const QAInstance& instance, const PredictionRecord& pred,
                                       const FilterConfig& cfg) {
  check_ids(instance, pred);
  const std::size_t limit = std::min(cfg.k, pred.nbest.size());
  const std::string gold = cfg.match_mode == MatchMode::NormalizedText ? normalize_answer(instance.answer_text) : "";
  for (std::size_t i = 0; i < limit; ++i) {
    const auto& e = pred.nbest[i];
    bool hit = cfg.match_mode == MatchMode::ExactOffsets
                   ? (e.start == instance.answer_start && e.end == instance.answer_end)
                   : normalize_answer(e.text) == gold;
    if (hit) return i;
  }
  return std::nullopt;
}

bool top_k_keep(const QAInstance& instance, const PredictionRecord& pred, const FilterConfig& cfg) {
  return top_k_match(instance, pred, cfg).has_value();
}

std::optional<std::size_t> substring_match(const QAInstance& instance, const PredictionRecord& pred,
                                           const FilterConfig& cfg) {
  check_ids(instance, pred);
  if (instance.answer_type != AnswerType::NE) return std::nullopt;
  const auto gold_words = words(cfg.match_mode == MatchMode::NormalizedText ? normalize_answer(instance.answer_text)
                                                                           : instance.answer_text);
  for (std::size_t i = 0; i < pred.nbest.size(); ++i) {
    const auto& e = pred.nbest[i];
    if (!(e.prob > cfg.gamma_sub)) continue;
    bool inside;
    if (cfg.match_mode == MatchMode::ExactOffsets) {
      inside = e.start < e.end && e.start >= instance.answer_start && e.end <= instance.answer_end;
    } else {
      inside = contains_run(gold_words, words(normalize_answer(e.text)));
    }
    if (inside) return i;
  }
  return std::nullopt;
}

bool substring_keep(const QAInstance& instance, const PredictionRecord& pred, const FilterConfig& cfg) {
  return substring_match(instance, pred, cfg).has_value();
}

FilterDecision decide(const QAInstance& instance, const PredictionRecord* pred, const FilterConfig& cfg) {
  FilterDecision d;
  d.instance_id = instance.id;
  if (!pred) {
    d.missing_prediction = true;
    return d;
  }
  if (auto hit = top_k_match(instance, *pred, cfg)) {
    d.kept = true;
    d.reason = FilterReason::TopK;
    d.matched_prediction = hit;
  } else if (auto sub = substring_match(instance, *pred, cfg)) {
    d.kept = true;
    d.reason = FilterReason::Substring;
    d.matched_prediction = sub;
  }
  return d;
}

FilterResult filter_part(const QADataset& part, const PredictionMap& predictions, const FilterConfig& cfg) {
  cfg.validate();
  FilterResult out;
  out.kept.provenance = part.provenance;
  out.decisions.reserve(part.size());
  for (const auto& inst : part.instances) {
    auto it = predictions.find(inst.id);
    const PredictionRecord* pred = it == predictions.end() ? nullptr : &it->second;
    FilterDecision d = decide(inst, pred, cfg);
    if (d.missing_prediction) {
      ++out.missing;
    } else if (d.reason == FilterReason::TopK) {
      ++out.kept_top_k;
    } else if (d.reason == FilterReason::Substring) {
      ++out.kept_substring;
    } else {
      ++out.rejected;
    }
    if (d.kept) {
      QAInstance kept = inst;
      if (d.reason == FilterReason::Substring && cfg.relabel_substring) {
        const auto& e = pred->nbest[*d.matched_prediction];
        if (e.start < e.end && e.end <= kept.context.size()) {
          kept.answer_start = e.start;
          kept.answer_end = e.end;
          kept.answer_text = join_tokens(kept.context, kept.answer_span());
        }
      }
      out.kept.instances.push_back(std::move(kept));
    }
    out.decisions.push_back(std::move(d));
  }
  return out;
}

std::string prediction_record_json(const PredictionRecord& r) {
  json nbest = json::array();
  for (const auto& e : r.nbest) {
    nbest.push_back({{"text", e.text}, {"start", e.start}, {"end", e.end}, {"prob", e.prob}});
  }
  return json{{"id", r.instance_id}, {"nbest", nbest}}.dump();
}

PredictionRecord parse_prediction_record(std::string_view line) {
  try {
    json j = json::parse(line);
    PredictionRecord r;
    r.instance_id = j.at("id").get<std::string>();
    for (const auto& e : j.at("nbest")) {
      r.nbest.push_back({e.at("text").get<std::string>(), e.at("start").get<std::size_t>(),
                         e.at("end").get<std::size_t>(), e.at("prob").get<double>()});
    }
    validate_prediction(r);
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, std::string("prediction record: ") + e.what());
  }
}

void write_predictions(const std::vector<PredictionRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << prediction_record_json(r) << '\n';
  if (!out) throw Error(Errc::Io, "failed writing predictions");
}

PredictionMap read_predictions(std::istream& in) {
  PredictionMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      auto r = parse_prediction_record(line);
      out[r.instance_id] = std::move(r);
    } catch (const Error& e) {
      throw Error(Errc::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (in.bad()) throw Error(Errc::Io, "read failure");
  return out;
}

void write_decisions(const std::vector<FilterDecision>& decisions, std::ostream& out) {
  for (const auto& d : decisions) {
    json j = {{"id", d.instance_id}, {"kept", d.kept}, {"reason", std::string(to_string(d.reason))}};
    j["matched_prediction"] = d.matched_prediction ? json(*d.matched_prediction) : json(nullptr);
    if (d.missing_prediction) j["missing_prediction"] = true;
    out << j.dump() << '\n';
  }
}

CommandAdapter::CommandAdapter(std::string predict_command, std::string fine_tune_command, std::string work_dir,
                               std::string checkpoint_path)
    : predict_command_(std::move(predict_command)),
      fine_tune_command_(std::move(fine_tune_command)),
      work_dir_(std::move(work_dir)),
      checkpoint_(std::move(checkpoint_path)) {}

namespace {

std::string substitute(std::string text, const std::string& key, const std::string& value) {
  for (std::size_t pos = 0; (pos = text.find(key, pos)) != std::string::npos; pos += value.size()) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

void run_command(const std::string& command) {
  const std::string wrapped = "(" + command + ") 1>&2";
  int status = std::system(wrapped.c_str());
  if (status != 0) throw Error(Errc::AdapterFailure, "command exited with status " + std::to_string(status) + ": " + command);
}

}  // namespace

void CommandAdapter::fine_tune(const QADataset& data) {
  const std::string dataset_path = work_dir_ + "/call-" + std::to_string(++calls_) + "-train.jsonl";
  {
    std::ofstream out(dataset_path);
    if (!out) throw Error(Errc::Io, "cannot write " + dataset_path);
    export_squad(data, out);
  }
  std::string cmd = substitute(fine_tune_command_, "{dataset}", dataset_path);
  run_command(substitute(cmd, "{checkpoint}", checkpoint_));
}

std::vector<PredictionRecord> CommandAdapter::predict(const QADataset& data) {
  const std::string stem = work_dir_ + "/call-" + std::to_string(++calls_);
  const std::string dataset_path = stem + "-predict.jsonl";
  const std::string predictions_path = stem + "-predictions.jsonl";
  {
    std::ofstream out(dataset_path);
    if (!out) throw Error(Errc::Io, "cannot write " + dataset_path);
    export_squad(data, out);
  }
  std::string cmd = substitute(predict_command_, "{dataset}", dataset_path);
  cmd = substitute(cmd, "{predictions}", predictions_path);
  run_command(substitute(cmd, "{checkpoint}", checkpoint_));
  std::ifstream in(predictions_path);
  if (!in) throw Error(Errc::AdapterFailure, "predict command wrote no " + predictions_path);
  PredictionMap map = read_predictions(in);
  std::vector<PredictionRecord> out;
  out.reserve(map.size());
  for (auto& [id, r] : map) out.push_back(std::move(r));
  return out;
}

RunReport run_training_procedure(const QADataset& dataset, const SplitPlan& plan, ModelAdapter& adapter,
                                 const FilterConfig& cfg) {
  cfg.validate();
  SplitResult split = split_dataset(dataset, plan);
  RunReport report;
  report.plan = plan;
  report.filter = cfg;

  auto guarded = [](std::size_t round, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.code() == Errc::AdapterFailure) {
        throw Error(Errc::AdapterFailure, "round " + std::to_string(round) + ": " + e.what());
      }
      throw;
    } catch (const std::exception& e) {
      throw Error(Errc::AdapterFailure, "round " + std::to_string(round) + ": " + e.what());
    }
  };

  RoundReport initial;
  initial.part_size = split.initial.size();
  if (!split.initial.empty()) {
    guarded(0, [&] { adapter.fine_tune(split.initial); });
    initial.fine_tuned = true;
  }
  initial.checkpoint = adapter.checkpoint();
  report.rounds.push_back(std::move(initial));

  for (std::size_t i = 0; i < split.parts.size(); ++i) {
    const std::size_t round = i + 1;
    const QADataset& part = split.parts[i];
    std::vector<PredictionRecord> preds;
    if (!part.empty()) guarded(round, [&] { preds = adapter.predict(part); });
    PredictionMap map;
    for (auto& r : preds) {
      validate_prediction(r);
      map[r.instance_id] = std::move(r);
    }
    FilterResult filtered = filter_part(part, map, cfg);

    RoundReport rr;
    rr.round = round;
    rr.part_size = part.size();
    rr.kept_top_k = filtered.kept_top_k;
    rr.kept_substring = filtered.kept_substring;
    rr.rejected = filtered.rejected;
    rr.missing = filtered.missing;
    if (!filtered.kept.empty()) {
      guarded(round, [&] { adapter.fine_tune(filtered.kept); });
      rr.fine_tuned = true;
    }
    rr.checkpoint = adapter.checkpoint();
    rr.decisions = std::move(filtered.decisions);
    report.rounds.push_back(std::move(rr));
  }
  return report;
}

}  // namespace spanqa
