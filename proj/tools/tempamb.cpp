#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tempamb/dataset.hpp"
#include "tempamb/errors.hpp"
#include "tempamb/evaluation.hpp"
#include "tempamb/runner.hpp"
#include "tempamb/util.hpp"
#include "tempamb/version.hpp"

namespace {

using namespace tempamb;

TimeRange parse_range_arg(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts.size() != 2) {
    throw ConfigError("range must look like <start>:<end>, got \"" + s + "\"");
  }
  try {
    return validate_range({std::stoi(parts[0]), std::stoi(parts[1])});
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("range must hold two years, got \"" + s + "\"");
  }
}

void write_text(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write \"" + path + "\"");
  out << content;
}

RunConfig preload_config(int argc, char** argv) {
  std::string config_path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) config_path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0) config_path = arg.substr(9);
  }
  if (config_path.empty()) return {};
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config file \"" + config_path + "\"");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid config file \"" + config_path + "\": " + e.what());
  }
  return RunConfig::from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  try {
    cfg = preload_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  CLI::App app{"Temporal-ambiguity question detection pipeline"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  std::string config_path_flag;

  // classify ---------------------------------------------------------------
  auto* classify = app.add_subcommand("classify", "Label every dataset question");
  std::string format_str, mode_str = to_string(cfg.mode), policy_str = to_string(cfg.policy);
  std::string range_str, default_label_str = to_string(cfg.baseline_default_label);
  std::string eq_template, cache_path, oracle_kind, world_path, endpoint, model,
      api_key_env;
  classify->add_option("--config", config_path_flag, "JSON config file; flags win");
  classify->add_option("--dataset", cfg.dataset_path, "Dataset file (jsonl/csv/tsv)");
  classify->add_option("--format", format_str, "Dataset format override");
  classify->add_option("--id-col", cfg.columns.id, "Id column name");
  classify->add_option("--question-col", cfg.columns.question, "Question column name");
  classify->add_option("--label-col", cfg.columns.label, "Label column name");
  classify->add_option("--source-col", cfg.columns.source, "Source column name");
  classify->add_option("--strategy", cfg.strategy,
                       "linear | skip:<s> | random:<k>[:seed=<n>] | dac | dac:half-ltr | "
                       "dac:half-rtl | zero-shot | few-shot[:file=<path>]");
  classify->add_option("--mode", mode_str, "Equivalence mode: direct | answer-compare");
  classify->add_option("--policy", policy_str,
                       "Unparseable verdicts count as: same | different");
  classify->add_option("--range", range_str, "Time range override <start>:<end>");
  classify->add_option("--equivalence-template", eq_template,
                       "Equivalence exemplar JSON file");
  classify->add_option("--default-label", default_label_str,
                       "Baseline label for unparseable responses");
  classify->add_option("--cache", cache_path, "Response cache JSONL file");
  classify->add_option("--fanout", cfg.fanout, "Questions in flight");
  classify->add_option("--output", cfg.output_path, "Outcome JSONL file, - for stdout");
  classify->add_option("--seed", cfg.seed, "Master seed");
  classify->add_option("--oracle", oracle_kind, "Oracle kind: synthetic | chat");
  classify->add_option("--world", world_path, "Synthetic world JSON file");
  classify->add_option("--endpoint", endpoint, "Chat completions endpoint URL");
  classify->add_option("--model", model, "Model name");
  classify->add_option("--api-key-env", api_key_env,
                       "Environment variable holding the API key");
  classify->add_option("--temperature", cfg.oracle.temperature, "Sampling temperature");
  classify->add_option("--max-tokens", cfg.oracle.max_output_tokens,
                       "Completion token cap");
  std::int64_t timeout_ms = cfg.oracle.request_timeout.count();
  classify->add_option("--timeout-ms", timeout_ms, "Per-request timeout");
  classify->add_option("--max-retries", cfg.oracle.max_retries,
                       "Retries for transient failures");
  classify->add_option("--rps", cfg.oracle.rate_limit_rps,
                       "Requests per second cap, 0 = unlimited");

  // evaluate ---------------------------------------------------------------
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold");
  std::string pred_path, gold_path, gold_format_str, eval_json;
  ColumnMap eval_columns;
  evaluate->add_option("--pred", pred_path, "Classify output JSONL")->required();
  evaluate->add_option("--gold", gold_path, "Gold dataset")->required();
  evaluate->add_option("--gold-format", gold_format_str, "Gold format override");
  evaluate->add_option("--id-col", eval_columns.id, "Id column name");
  evaluate->add_option("--question-col", eval_columns.question, "Question column name");
  evaluate->add_option("--label-col", eval_columns.label, "Label column name");
  evaluate->add_option("--source-col", eval_columns.source, "Source column name");
  evaluate->add_option("--json", eval_json, "Write the report as JSON, - for stdout");

  // stats ------------------------------------------------------------------
  auto* stats_cmd = app.add_subcommand("stats", "Dataset composition");
  std::string stats_dataset, stats_format_str, stats_json;
  ColumnMap stats_columns;
  stats_cmd->add_option("--dataset", stats_dataset, "Dataset file")->required();
  stats_cmd->add_option("--format", stats_format_str, "Format override");
  stats_cmd->add_option("--id-col", stats_columns.id, "Id column name");
  stats_cmd->add_option("--question-col", stats_columns.question, "Question column name");
  stats_cmd->add_option("--label-col", stats_columns.label, "Label column name");
  stats_cmd->add_option("--source-col", stats_columns.source, "Source column name");
  stats_cmd->add_option("--json", stats_json, "Write the stats as JSON, - for stdout");

  // efficiency -------------------------------------------------------------
  auto* efficiency = app.add_subcommand("efficiency", "Search cost model");
  std::string eff_range_str = "2000:2024";
  std::string eff_strategies = "linear,skip:2,skip:5,skip:10,random:5,dac";
  std::string eff_dist_str = "uniform-single", eff_csv, eff_json;
  std::uint64_t eff_worlds = 10000, eff_seed = 7;
  bool eff_serial = false;
  efficiency->add_option("--range", eff_range_str, "Time range <start>:<end>");
  efficiency->add_option("--strategies", eff_strategies, "Comma-separated strategies");
  efficiency->add_option("--worlds", eff_worlds, "Monte Carlo world count");
  efficiency->add_option("--dist", eff_dist_str,
                         "uniform-single | no-change | mixture:<p>");
  efficiency->add_option("--seed", eff_seed, "Monte Carlo seed");
  efficiency->add_option("--csv", eff_csv, "Write entries as CSV, - for stdout");
  efficiency->add_option("--json", eff_json, "Write entries as JSON, - for stdout");
  efficiency->add_flag("--serial", eff_serial, "Use the serial reference kernel");

  // cache ------------------------------------------------------------------
  auto* cache_cmd = app.add_subcommand("cache", "Response cache maintenance");
  cache_cmd->require_subcommand(1);
  std::string cache_file;
  auto* cache_inspect = cache_cmd->add_subcommand("inspect", "Show cache contents");
  cache_inspect->add_option("--cache", cache_file, "Cache JSONL file")->required();
  auto* cache_clear = cache_cmd->add_subcommand("clear", "Empty the cache");
  cache_clear->add_option("--cache", cache_file, "Cache JSONL file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (classify->parsed()) {
      if (!format_str.empty()) cfg.format = parse_format(format_str);
      cfg.mode = parse_equivalence_mode(mode_str);
      cfg.policy = parse_unparseable_policy(policy_str);
      if (!range_str.empty()) cfg.range_override = parse_range_arg(range_str);
      if (!eq_template.empty()) cfg.equivalence_template = eq_template;
      cfg.baseline_default_label = parse_label(default_label_str);
      if (!cache_path.empty()) cfg.cache_path = cache_path;
      if (!oracle_kind.empty()) {
        const std::string k = to_lower(trim(oracle_kind));
        if (k == "synthetic") cfg.oracle.kind = OracleConfig::Kind::Synthetic;
        else if (k == "chat" || k == "chat-endpoint")
          cfg.oracle.kind = OracleConfig::Kind::ChatEndpoint;
        else throw ConfigError("unknown oracle kind \"" + oracle_kind + "\"");
      }
      if (!world_path.empty()) cfg.oracle.world_path = world_path;
      if (!endpoint.empty()) cfg.oracle.endpoint_url = endpoint;
      if (!model.empty()) cfg.oracle.model_name = model;
      if (!api_key_env.empty()) cfg.oracle.api_key_env_var = api_key_env;
      cfg.oracle.request_timeout = std::chrono::milliseconds(timeout_ms);

      const RunSummary summary = run_classify(cfg, &std::cerr);
      std::cerr << "done: " << summary.n_done << " classified, " << summary.n_failed
                << " failed, " << summary.n_skipped << " resumed of "
                << summary.n_total << '\n';
      return summary.n_failed > 0 ? 2 : 0;
    }

    if (evaluate->parsed()) {
      std::optional<FileFormat> gf;
      if (!gold_format_str.empty()) gf = parse_format(gold_format_str);
      const MetricsReport report =
          evaluate_outcomes(pred_path, gold_path, gf, eval_columns);
      std::cout << report.table();
      if (!eval_json.empty()) {
        nlohmann::ordered_json j;
        j["version"] = std::string(kVersion);
        j["pred"] = pred_path;
        j["gold"] = gold_path;
        j["metrics"] = report.to_json();
        write_text(eval_json, j.dump(2) + "\n");
      }
      return 0;
    }

    if (stats_cmd->parsed()) {
      const FileFormat fmt = stats_format_str.empty()
                                 ? infer_format(stats_dataset)
                                 : parse_format(stats_format_str);
      const Dataset ds = load(stats_dataset, fmt, stats_columns);
      const DatasetStats s = stats(ds);
      std::cout << stats_table(s);
      if (!stats_json.empty()) {
        nlohmann::ordered_json j;
        j["version"] = std::string(kVersion);
        j["dataset"] = stats_dataset;
        j["stats"] = {{"total", s.total},
                      {"ambiguous", s.ambiguous},
                      {"unambiguous", s.unambiguous},
                      {"unlabeled", s.unlabeled},
                      {"avg_question_length_words", s.avg_question_length_words}};
        write_text(stats_json, j.dump(2) + "\n");
      }
      return 0;
    }

    if (efficiency->parsed()) {
      const TimeRange range = parse_range_arg(eff_range_str);
      const ChangePointDist dist = ChangePointDist::parse(eff_dist_str);
      std::vector<EfficiencyEntry> entries;
      for (const std::string& name : split(eff_strategies, ',')) {
        if (trim(name).empty()) continue;
        const StrategySpec spec = StrategySpec::parse(trim(name));
        entries.push_back(eff_serial
                              ? efficiency_monte_carlo_serial(range, spec, eff_worlds,
                                                              dist, eff_seed)
                              : efficiency_monte_carlo(range, spec, eff_worlds, dist,
                                                       eff_seed));
      }
      std::cout << efficiency_table(entries);
      if (!eff_csv.empty()) {
        std::string csv = "strategy,best,worst,mean,stddev,min,max\n";
        for (const auto& e : entries) {
          csv += e.strategy.to_string() + ',' + std::to_string(e.best_case) + ',' +
                 std::to_string(e.worst_case) + ',' +
                 std::to_string(e.mean_comparisons) + ',' +
                 std::to_string(e.stddev_comparisons) + ',' +
                 std::to_string(e.min_comparisons) + ',' +
                 std::to_string(e.max_comparisons) + '\n';
        }
        write_text(eff_csv, csv);
      }
      if (!eff_json.empty()) {
        nlohmann::ordered_json j;
        j["version"] = std::string(kVersion);
        j["range"] = eff_range_str;
        j["worlds"] = eff_worlds;
        j["dist"] = dist.to_string();
        j["seed"] = eff_seed;
        j["entries"] = nlohmann::ordered_json::array();
        for (const auto& e : entries) j["entries"].push_back(e.to_json());
        write_text(eff_json, j.dump(2) + "\n");
      }
      return 0;
    }

    if (cache_inspect->parsed()) {
      ResponseCache cache(cache_file);
      std::cout << "Cache file  " << cache.path() << '\n'
                << "Records     " << cache.size() << '\n';
      for (const auto& [fingerprint, count] : cache.records_per_fingerprint()) {
        std::cout << "  " << fingerprint << "  " << count << '\n';
      }
      return 0;
    }
    if (cache_clear->parsed()) {
      ResponseCache cache(cache_file);
      const std::size_t had = cache.size();
      cache.clear();
      std::cout << "Removed " << had << " records from " << cache_file << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
