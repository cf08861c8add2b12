#include "spanqa/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "spanqa/errors.hpp"
#include "spanqa/random.hpp"

namespace spanqa {

using nlohmann::json;

std::string_view to_string(BuildMode mode) noexcept {
  switch (mode) {
    case BuildMode::NeOnly: return "ne-only";
    case BuildMode::Diverse: return "diverse";
    case BuildMode::Random: return "random";
  }
  return "diverse";
}

BuildMode build_mode_from_string(std::string_view name) {
  for (auto m : {BuildMode::NeOnly, BuildMode::Diverse, BuildMode::Random}) {
    if (to_string(m) == name) return m;
  }
  throw Error(Errc::InvalidConfig, "unknown build mode '" + std::string(name) + "'");
}

namespace {

struct Passage {
  std::string id;
  bool from_doc = false;
  std::vector<const AnnotatedSentence*> sentences;
};

std::vector<Passage> group_passages(const std::vector<AnnotatedSentence>& sentences) {
  std::vector<Passage> passages;
  for (const auto& s : sentences) {
    if (!s.doc.empty() && !passages.empty() && passages.back().from_doc && passages.back().id == s.doc) {
      passages.back().sentences.push_back(&s);
    } else {
      passages.push_back({s.doc.empty() ? s.id : s.doc, !s.doc.empty(), {&s}});
    }
  }
  return passages;
}

std::vector<QAInstance> build_passage(const Passage& passage, const ExtensionConfig& cfg, BuildMode mode) {
  std::vector<std::string> context;
  for (const auto* s : passage.sentences) context.insert(context.end(), s->tokens.begin(), s->tokens.end());

  std::vector<QAInstance> out;
  std::size_t offset = 0;
  for (const auto* s : passage.sentences) {
    for (const auto& ne : s->ner_spans) {
      ExtendedAnswer answer = mode == BuildMode::NeOnly ? entity_answer(ne) : extend_answer(*s, ne, cfg);
      auto question = cloze_to_natural(build_cloze(*s, answer), answer.pseudo_ner_label);
      out.push_back(make_instance(passage.id, context, offset, *s, answer, std::move(question),
                                  cfg.omega_percent));
    }
    offset += s->tokens.size();
  }
  return out;
}

std::string triple_key(const QAInstance& inst) {
  std::string key = join_tokens(inst.context);
  key += '\x1f';
  key += join_tokens(inst.question);
  key += '\x1f';
  key += std::to_string(inst.answer_start) + ":" + std::to_string(inst.answer_end);
  return key;
}

}  // namespace

BuildResult build_dataset(const std::vector<AnnotatedSentence>& sentences, const ExtensionConfig& cfg,
                          const BuildOptions& options, std::uint64_t corpus_hash) {
  cfg.validate();
  BuildResult result;

  std::vector<AnnotatedSentence> valid;
  valid.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    auto report = validate_sentence(sentences[i]);
    if (report.is_valid()) {
      valid.push_back(sentences[i]);
    } else {
      result.skipped.push_back({i + 1, report.issues.front().code + ": " + report.issues.front().message});
    }
  }
  result.sentences = valid.size();
  for (const auto& s : valid) result.entities += s.ner_spans.size();

  const auto passages = group_passages(valid);
  std::vector<std::vector<QAInstance>> per_passage(passages.size());
  const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, passages.size()));
  if (workers <= 1) {
    for (std::size_t p = 0; p < passages.size(); ++p) per_passage[p] = build_passage(passages[p], cfg, options.mode);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t p = w; p < passages.size(); p += workers) {
          per_passage[p] = build_passage(passages[p], cfg, options.mode);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  QADataset& ds = result.dataset;
  std::unordered_set<std::string> seen_triples;
  std::unordered_map<std::string, std::size_t> id_uses;
  for (auto& batch : per_passage) {
    for (auto& inst : batch) {
      if (!seen_triples.insert(triple_key(inst)).second) {
        ++result.duplicates_removed;
        continue;
      }
      auto& uses = id_uses[inst.id];
      if (++uses > 1) inst.id += "-" + std::to_string(uses);
      ds.instances.push_back(std::move(inst));
    }
  }

  ds.provenance.omega_percent = cfg.omega_percent;
  ds.provenance.candidate_labels.assign(cfg.candidate_labels.begin(), cfg.candidate_labels.end());
  ds.provenance.corpus_hash = hex64(corpus_hash);
  ds.provenance.seed = options.seed;
  ds.provenance.mode = options.mode;

  if (options.mode == BuildMode::Random) {
    QADataset randomized = random_extension_dataset(ds, options.seed);
    ds = std::move(randomized);
  }
  return result;
}

BuildResult build_dataset(std::istream& corpus, const ExtensionConfig& cfg, const BuildOptions& options) {
  LoadedCorpus loaded = load_corpus(corpus);
  BuildResult result = build_dataset(loaded.sentences, cfg, options, loaded.content_hash);
  result.skipped.insert(result.skipped.begin(), loaded.skipped.begin(), loaded.skipped.end());
  return result;
}

QADataset random_extension_dataset(const QADataset& extended, std::uint64_t seed) {
  Rng rng = named_stream(seed, "random-extension");
  QADataset out;
  out.provenance = extended.provenance;
  out.provenance.mode = BuildMode::Random;
  out.provenance.seed = seed;
  out.instances.reserve(extended.size());
  for (const auto& src : extended.instances) {
    QAInstance inst = src;
    const std::size_t len = src.answer_end - src.answer_start;
    const TokenSpan ne = src.source_ne;
    const TokenSpan sent = src.sentence;
    if (len >= ne.length() && len <= sent.length() && sent.contains(ne)) {
      const std::size_t lo = std::max(sent.start, ne.end >= len ? ne.end - len : 0);
      const std::size_t hi = std::min(ne.start, sent.end - len);
      const std::size_t start = lo + uniform_index(rng, hi - lo + 1);
      inst.answer_start = start;
      inst.answer_end = start + len;
      inst.answer_text = join_tokens(inst.context, inst.answer_span());
      if (inst.answer_span() == ne) inst.answer_type = AnswerType::NE;

      std::vector<std::string> sentence_tokens(inst.context.begin() + sent.start,
                                               inst.context.begin() + sent.end);
      auto cloze = build_cloze(sentence_tokens, {start - sent.start, start - sent.start + len},
                               inst.pseudo_ner_label, inst.initial_token_is_entity);
      inst.question = cloze_to_natural(cloze, inst.pseudo_ner_label);
    }
    out.instances.push_back(std::move(inst));
  }
  return out;
}

std::uint64_t AnswerTypePrior::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

AnswerTypePrior AnswerTypePrior::from_counts(const std::array<std::uint64_t, kAnswerTypeCount>& counts) {
  AnswerTypePrior prior;
  prior.counts = counts;
  const auto total = prior.total();
  if (total == 0) throw Error(Errc::EmptyDataset, "no answers to count");
  for (std::size_t i = 0; i < kAnswerTypeCount; ++i) {
    prior.frequencies[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return prior;
}

AnswerTypePrior AnswerTypePrior::smoothed() const {
  auto c = counts;
  for (auto& v : c) ++v;
  return from_counts(c);
}

AnswerTypePrior AnswerTypePrior::uniform() {
  std::array<std::uint64_t, kAnswerTypeCount> c;
  c.fill(1);
  return from_counts(c);
}

AnswerTypePrior compute_type_distribution(const QADataset& dataset) {
  if (dataset.empty()) throw Error(Errc::EmptyDataset, "cannot compute a type distribution of an empty dataset");
  std::array<std::uint64_t, kAnswerTypeCount> counts{};
  for (const auto& inst : dataset.instances) ++counts[index_of(inst.answer_type)];
  return AnswerTypePrior::from_counts(counts);
}

std::vector<std::size_t> default_length_edges() { return {5, 10, 15, 20, 25}; }

std::vector<std::string> LengthHistogram::labels() const {
  std::vector<std::string> out;
  std::size_t lower = 1;
  for (auto edge : upper_edges) {
    out.push_back(lower == edge ? std::to_string(edge) : std::to_string(lower) + "-" + std::to_string(edge));
    lower = edge + 1;
  }
  out.push_back(upper_edges.empty() ? ">0" : ">" + std::to_string(upper_edges.back()));
  return out;
}

std::uint64_t LengthHistogram::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

LengthHistogram compute_length_histogram(const QADataset& dataset, const std::vector<std::size_t>& edges) {
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i] <= edges[i - 1]) throw Error(Errc::InvalidConfig, "histogram edges must be strictly ascending");
  }
  LengthHistogram hist{edges, std::vector<std::uint64_t>(edges.size() + 1, 0)};
  for (const auto& inst : dataset.instances) {
    const std::size_t len = inst.answer_end - inst.answer_start;
    auto bin = std::lower_bound(edges.begin(), edges.end(), len) - edges.begin();
    ++hist.counts[static_cast<std::size_t>(bin)];
  }
  return hist;
}

void SplitPlan::validate() const {
  if (filter_parts < 1) throw Error(Errc::InvalidConfig, "filter_parts must be at least 1");
}

SplitResult split_dataset(const QADataset& dataset, const SplitPlan& plan) {
  plan.validate();
  if (plan.initial_size > dataset.size()) {
    throw Error(Errc::InitialSizeTooLarge, "initial size " + std::to_string(plan.initial_size) +
                                               " exceeds dataset size " + std::to_string(dataset.size()));
  }
  Rng rng = named_stream(plan.seed, "split");
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  if (!plan.stratified) {
    seeded_shuffle(order, rng);
  } else {
    std::array<std::vector<std::size_t>, kAnswerTypeCount> by_type;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      by_type[index_of(dataset.instances[i].answer_type)].push_back(i);
    }
    // Largest-remainder allocation of the initial sample across types.
    std::array<std::size_t, kAnswerTypeCount> take{};
    std::array<double, kAnswerTypeCount> remainder{};
    std::size_t allocated = 0;
    for (std::size_t t = 0; t < kAnswerTypeCount; ++t) {
      seeded_shuffle(by_type[t], rng);
      double exact = dataset.empty() ? 0.0
                                     : static_cast<double>(plan.initial_size) * by_type[t].size() / dataset.size();
      take[t] = static_cast<std::size_t>(exact);
      remainder[t] = exact - take[t];
      allocated += take[t];
    }
    std::array<std::size_t, kAnswerTypeCount> rank;
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::stable_sort(rank.begin(), rank.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; allocated < plan.initial_size; k = (k + 1) % kAnswerTypeCount) {
      auto t = rank[k];
      if (take[t] < by_type[t].size()) {
        ++take[t];
        ++allocated;
      }
    }
    std::vector<std::size_t> head, tail;
    for (std::size_t t = 0; t < kAnswerTypeCount; ++t) {
      head.insert(head.end(), by_type[t].begin(), by_type[t].begin() + take[t]);
      tail.insert(tail.end(), by_type[t].begin() + take[t], by_type[t].end());
    }
    seeded_shuffle(head, rng);
    seeded_shuffle(tail, rng);
    order = std::move(head);
    order.insert(order.end(), tail.begin(), tail.end());
  }

  SplitResult out;
  out.initial.provenance = dataset.provenance;
  for (std::size_t i = 0; i < plan.initial_size; ++i) out.initial.instances.push_back(dataset.instances[order[i]]);

  const std::size_t rest = dataset.size() - plan.initial_size;
  const std::size_t base = rest / plan.filter_parts;
  const std::size_t extra = rest % plan.filter_parts;
  std::size_t cursor = plan.initial_size;
  out.parts.resize(plan.filter_parts);
  for (std::size_t p = 0; p < plan.filter_parts; ++p) {
    out.parts[p].provenance = dataset.provenance;
    const std::size_t size = base + (p < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) out.parts[p].instances.push_back(dataset.instances[order[cursor++]]);
  }
  return out;
}

std::size_t char_offset(const std::vector<std::string>& tokens, std::size_t index) {
  std::size_t offset = 0;
  for (std::size_t i = 0; i < index && i < tokens.size(); ++i) offset += tokens[i].size() + 1;
  return offset;
}

std::string squad_record_json(const QAInstance& inst) {
  json j = {
      {"id", inst.id},
      {"context", join_tokens(inst.context)},
      {"question", join_tokens(inst.question)},
      {"answers", json::array({{{"text", inst.answer_text},
                                {"answer_start", char_offset(inst.context, inst.answer_start)}}})},
      {"answer_type", std::string(to_string(inst.answer_type))},
      {"pseudo_ner_label", inst.pseudo_ner_label},
      {"source_ne", {{"start", inst.source_ne.start}, {"end", inst.source_ne.end}}},
      {"sentence", {{"start", inst.sentence.start}, {"end", inst.sentence.end}}},
      {"initial_entity", inst.initial_token_is_entity},
  };
  return j.dump();
}

void export_squad(const QADataset& dataset, std::ostream& out) {
  for (const auto& inst : dataset.instances) out << squad_record_json(inst) << '\n';
  if (!out) throw Error(Errc::Io, "failed writing dataset");
}

namespace {

std::vector<std::string> split_spaces(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

TokenSpan read_span(const json& j, const char* key, TokenSpan fallback) {
  if (!j.contains(key)) return fallback;
  const auto& s = j.at(key);
  return {s.at("start").get<std::size_t>(), s.at("end").get<std::size_t>()};
}

}  // namespace

QAInstance parse_squad_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, std::string("invalid JSON: ") + e.what());
  }
  try {
    QAInstance inst;
    inst.id = j.at("id").get<std::string>();
    inst.context = split_spaces(j.at("context").get<std::string>());
    inst.question = split_spaces(j.at("question").get<std::string>());
    const auto& answers = j.at("answers");
    if (!answers.is_array() || answers.empty()) throw Error(Errc::MalformedRecord, "record has no answers");
    const auto& a = answers.front();
    inst.answer_text = a.at("text").get<std::string>();
    const auto char_start = a.at("answer_start").get<std::size_t>();

    std::size_t start_token = inst.context.size();
    for (std::size_t i = 0, offset = 0; i < inst.context.size(); offset += inst.context[i].size() + 1, ++i) {
      if (offset == char_start) {
        start_token = i;
        break;
      }
    }
    if (start_token == inst.context.size()) {
      throw Error(Errc::MalformedRecord, "answer_start " + std::to_string(char_start) + " is not a token boundary");
    }
    const auto answer_tokens = split_spaces(inst.answer_text);
    if (answer_tokens.empty() || start_token + answer_tokens.size() > inst.context.size() ||
        !std::equal(answer_tokens.begin(), answer_tokens.end(), inst.context.begin() + start_token)) {
      throw Error(Errc::MalformedRecord, "answer text does not match the context at answer_start");
    }
    inst.answer_start = start_token;
    inst.answer_end = start_token + answer_tokens.size();

    const auto type_name = j.at("answer_type").get<std::string>();
    auto type = answer_type_from_string(type_name);
    if (!type) throw Error(Errc::MalformedRecord, "unknown answer_type '" + type_name + "'");
    inst.answer_type = *type;
    inst.pseudo_ner_label = j.value("pseudo_ner_label", std::string{});
    inst.source_ne = read_span(j, "source_ne", inst.answer_span());
    inst.sentence = read_span(j, "sentence", {0, inst.context.size()});
    inst.initial_token_is_entity = j.value("initial_entity", false);
    if (inst.sentence.end > inst.context.size() || inst.source_ne.end > inst.context.size()) {
      throw Error(Errc::MalformedRecord, "provenance span exceeds the context");
    }
    return inst;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, std::string("bad field: ") + e.what());
  }
}

QADataset import_squad(std::istream& in) {
  QADataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      ds.instances.push_back(parse_squad_record(line));
    } catch (const Error& e) {
      throw Error(Errc::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (in.bad()) throw Error(Errc::Io, "read failure");
  return ds;
}

}  // namespace spanqa
