#include "tempamb/runner.hpp"

#include <atomic>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <unordered_set>

#include "tempamb/baselines.hpp"
#include "tempamb/errors.hpp"
#include "tempamb/search.hpp"
#include "tempamb/util.hpp"
#include "tempamb/version.hpp"

namespace tempamb {

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["dataset"] = dataset_path;
  if (format) j["format"] = tempamb::to_string(*format);
  j["columns"] = {{"id", columns.id},
                  {"question", columns.question},
                  {"label", columns.label},
                  {"source", columns.source}};
  j["strategy"] = strategy;
  j["oracle"] = oracle.to_json();
  j["mode"] = tempamb::to_string(mode);
  j["policy"] = tempamb::to_string(policy);
  if (range_override) {
    j["range"] = {{"start_year", range_override->start_year},
                  {"end_year", range_override->end_year}};
  }
  if (equivalence_template) j["equivalence_template"] = *equivalence_template;
  j["baseline_default_label"] = tempamb::to_string(baseline_default_label);
  if (cache_path) j["cache"] = *cache_path;
  j["fanout"] = fanout;
  j["output"] = output_path;
  j["seed"] = seed;
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig cfg;
  if (j.contains("dataset")) cfg.dataset_path = j["dataset"].get<std::string>();
  if (j.contains("format")) cfg.format = parse_format(j["format"].get<std::string>());
  if (j.contains("columns")) {
    const auto& c = j["columns"];
    if (c.contains("id")) cfg.columns.id = c["id"].get<std::string>();
    if (c.contains("question")) cfg.columns.question = c["question"].get<std::string>();
    if (c.contains("label")) cfg.columns.label = c["label"].get<std::string>();
    if (c.contains("source")) cfg.columns.source = c["source"].get<std::string>();
  }
  if (j.contains("strategy")) cfg.strategy = j["strategy"].get<std::string>();
  if (j.contains("oracle")) cfg.oracle = OracleConfig::from_json(j["oracle"]);
  if (j.contains("mode")) cfg.mode = parse_equivalence_mode(j["mode"].get<std::string>());
  if (j.contains("policy")) {
    cfg.policy = parse_unparseable_policy(j["policy"].get<std::string>());
  }
  if (j.contains("range") && !j["range"].is_null()) {
    cfg.range_override = TimeRange{j["range"].at("start_year").get<int>(),
                                   j["range"].at("end_year").get<int>()};
  }
  if (j.contains("equivalence_template") && !j["equivalence_template"].is_null()) {
    cfg.equivalence_template = j["equivalence_template"].get<std::string>();
  }
  if (j.contains("baseline_default_label")) {
    cfg.baseline_default_label =
        parse_label(j["baseline_default_label"].get<std::string>());
  }
  if (j.contains("cache") && !j["cache"].is_null()) {
    cfg.cache_path = j["cache"].get<std::string>();
  }
  if (j.contains("fanout")) cfg.fanout = j["fanout"].get<int>();
  if (j.contains("output")) cfg.output_path = j["output"].get<std::string>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  return cfg;
}

FileFormat infer_format(const std::string& path) {
  const std::size_t dot = path.find_last_of('.');
  if (dot != std::string::npos) {
    const std::string ext = to_lower(path.substr(dot + 1));
    if (ext == "jsonl") return FileFormat::Jsonl;
    if (ext == "csv") return FileFormat::Csv;
    if (ext == "tsv") return FileFormat::Tsv;
  }
  throw ConfigError("cannot infer dataset format from \"" + path +
                    "\"; pass an explicit format");
}

// ---------------------------------------------------------------------------
// Output file scanning (resume support)
// ---------------------------------------------------------------------------

namespace {

struct ExistingOutput {
  bool has_meta = false;
  std::unordered_set<std::string> done_ids;
  std::vector<std::string> kept_lines;
  bool truncated_tail = false;  // a partial trailing line was dropped
};

ExistingOutput scan_existing(const std::string& path) {
  ExistingOutput ex;
  std::ifstream in(path);
  if (!in) return ex;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      if (in.peek() == EOF) {
        ex.truncated_tail = true;  // interrupted mid-write; drop and redo
        break;
      }
      throw ParseError(row, "output file \"" + path + "\" holds invalid JSON");
    }
    if (j.contains("meta")) {
      ex.has_meta = true;
    } else if (j.contains("question_id")) {
      ex.done_ids.insert(j["question_id"].get<std::string>());
    }
    ex.kept_lines.push_back(line);
  }
  return ex;
}

}  // namespace

// ---------------------------------------------------------------------------
// Classify
// ---------------------------------------------------------------------------

RunSummary run_classify(const RunConfig& cfg, std::ostream* progress) {
  if (cfg.dataset_path.empty()) throw ConfigError("no dataset path given");
  const FileFormat fmt =
      cfg.format ? *cfg.format : infer_format(cfg.dataset_path);
  const Dataset ds = load(cfg.dataset_path, fmt, cfg.columns);
  const StrategySpec sspec = StrategySpec::parse(cfg.strategy);
  if (cfg.range_override) validate_range(*cfg.range_override);
  if (cfg.fanout < 1) throw ConfigError("fanout must be >= 1");

  std::shared_ptr<Oracle> oracle{make_oracle(cfg.oracle)};
  if (auto* synth = dynamic_cast<SyntheticOracle*>(oracle.get())) {
    for (const Question& q : ds.items()) synth->register_question(q);
  }
  std::shared_ptr<ResponseCache> cache;
  if (cfg.cache_path) {
    cache = std::make_shared<ResponseCache>(*cfg.cache_path);
    oracle = std::make_shared<CachedOracle>(oracle, cache, cfg.oracle.fingerprint());
  }

  const EquivalencePromptTemplate eq_tmpl =
      cfg.equivalence_template ? EquivalencePromptTemplate::load(*cfg.equivalence_template)
                               : EquivalencePromptTemplate::default_few_shot();
  ClassificationPromptTemplate cls_tmpl;
  if (sspec.kind == StrategyKind::FewShot) {
    cls_tmpl = sspec.exemplar_file ? ClassificationPromptTemplate::load(*sspec.exemplar_file)
                                   : ClassificationPromptTemplate::default_few_shot();
  } else {
    cls_tmpl = ClassificationPromptTemplate::zero_shot();
  }

  const bool to_stdout = cfg.output_path == "-";
  ExistingOutput existing;
  if (!to_stdout) {
    existing = scan_existing(cfg.output_path);
    if (existing.truncated_tail) {
      std::ofstream rewrite(cfg.output_path, std::ios::trunc);
      if (!rewrite) throw ConfigError("cannot rewrite \"" + cfg.output_path + "\"");
      for (const std::string& line : existing.kept_lines) rewrite << line << '\n';
    }
  }

  std::ofstream file_out;
  if (!to_stdout) {
    file_out.open(cfg.output_path, std::ios::app);
    if (!file_out) throw ConfigError("cannot open output file \"" + cfg.output_path + "\"");
  }
  std::ostream& out = to_stdout ? std::cout : file_out;

  if (!existing.has_meta) {
    nlohmann::ordered_json meta;
    meta["meta"] = {{"version", std::string(kVersion)}, {"config", cfg.to_json()}};
    out << meta.dump() << '\n';
  }

  std::vector<const Question*> work;
  for (const Question& q : ds.items()) {
    if (!existing.done_ids.count(q.id)) work.push_back(&q);
  }

  RunSummary summary;
  summary.n_total = ds.size();
  summary.n_skipped = ds.size() - work.size();

  std::atomic<std::size_t> n_failed{0};
  std::mutex write_mu;
  std::map<std::size_t, std::string> pending;
  std::size_t next_write = 0;
  std::size_t written = 0;

  auto emit = [&](std::size_t index, std::string line) {
    std::lock_guard<std::mutex> lock(write_mu);
    pending.emplace(index, std::move(line));
    while (!pending.empty() && pending.begin()->first == next_write) {
      out << pending.begin()->second << '\n';
      pending.erase(pending.begin());
      ++next_write;
      ++written;
      if (progress && (written % 50 == 0 || written == work.size())) {
        *progress << "classified " << written << "/" << work.size() << '\n';
        progress->flush();
      }
    }
  };

  auto build_row = [&](const Question& q) -> std::string {
    try {
      SearchOutcome o;
      if (sspec.is_baseline()) {
        o = classify_direct(*oracle, cls_tmpl, q, sspec, cfg.baseline_default_label);
      } else {
        const TimeRange range = resolve_range(q.source, cfg.range_override);
        StrategySpec q_spec = sspec;
        if (q_spec.kind == StrategyKind::Random && !q_spec.seed) {
          q_spec.seed = mix64(cfg.seed ^ fnv1a64(q.id));
        }
        SearchOptions opts;
        opts.policy = cfg.policy;
        o = run_search(q, range, q_spec,
                       make_equivalence_fn(*oracle, eq_tmpl, q, range, cfg.mode), opts);
      }
      return to_jsonl(o);
    } catch (const std::exception& e) {
      n_failed.fetch_add(1, std::memory_order_relaxed);
      nlohmann::ordered_json j;
      j["question_id"] = q.id;
      j["error"] = e.what();
      return j.dump();
    }
  };

  const int threads = std::min<int>(cfg.fanout, static_cast<int>(work.size()) + 1);
  if (threads <= 1) {
    for (std::size_t i = 0; i < work.size(); ++i) emit(i, build_row(*work[i]));
  } else {
#pragma omp parallel for num_threads(threads) schedule(dynamic)
    for (std::size_t i = 0; i < work.size(); ++i) {
      emit(i, build_row(*work[i]));
    }
  }
  out.flush();

  summary.n_failed = n_failed.load();
  summary.n_done = work.size() - summary.n_failed;
  return summary;
}

// ---------------------------------------------------------------------------
// Reading results back
// ---------------------------------------------------------------------------

OutcomeFile read_outcomes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open outcomes file \"" + path + "\"");
  OutcomeFile file;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(row, std::string("invalid JSON in outcomes file: ") + e.what());
    }
    try {
      if (j.contains("meta")) {
        file.meta = j["meta"];
      } else if (j.contains("error")) {
        file.failures.push_back(
            {j.at("question_id").get<std::string>(), j["error"].get<std::string>()});
      } else {
        file.outcomes.push_back(SearchOutcome::from_json(j));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(row, std::string("malformed outcome row: ") + e.what());
    }
  }
  return file;
}

MetricsReport evaluate_outcomes(const std::string& pred_path,
                                const std::string& gold_path,
                                std::optional<FileFormat> gold_format,
                                const ColumnMap& columns) {
  const OutcomeFile pred = read_outcomes(pred_path);
  const FileFormat fmt = gold_format ? *gold_format : infer_format(gold_path);
  const Dataset gold = load(gold_path, fmt, columns);
  MetricsReport report =
      score(pred.outcomes, gold, static_cast<int>(pred.failures.size()));
  if (pred.meta.is_object() && pred.meta.contains("config")) {
    const auto& cfg = pred.meta["config"];
    if (cfg.contains("mode")) report.mode = cfg["mode"].get<std::string>();
    if (cfg.contains("policy")) report.policy = cfg["policy"].get<std::string>();
  }
  return report;
}

}  // namespace tempamb
