#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tempamb/dataset.hpp"
#include "tempamb/detection.hpp"
#include "tempamb/domain.hpp"
#include "tempamb/evaluation.hpp"
#include "tempamb/oracle.hpp"

namespace tempamb {

/// Everything a classify run needs, JSON round-trippable so every output
/// file can embed the exact configuration that produced it.
struct RunConfig {
  std::string dataset_path;
  std::optional<FileFormat> format;  // inferred from the extension when absent
  ColumnMap columns;
  std::string strategy = "linear";
  OracleConfig oracle;
  EquivalenceMode mode = EquivalenceMode::DirectPrompt;
  UnparseablePolicy policy = UnparseablePolicy::TreatAsSame;
  std::optional<TimeRange> range_override;
  /// Equivalence exemplars for search probes; the stock two when absent.
  std::optional<std::string> equivalence_template;
  Label baseline_default_label = Label::Unambiguous;
  std::optional<std::string> cache_path;
  int fanout = 1;                 // questions in flight
  std::string output_path = "-";  // "-" = stdout (no resume)
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

FileFormat infer_format(const std::string& path);  // by extension; ConfigError

struct RunSummary {
  std::size_t n_total = 0;    // dataset size
  std::size_t n_done = 0;     // outcome rows written this run
  std::size_t n_failed = 0;   // failure rows written this run
  std::size_t n_skipped = 0;  // already present (resume)
};

/// Classifies every dataset question under the configured strategy. The
/// first output line is {"meta": {"version", "config"}}; each later line is
/// one outcome or failure row, in dataset order. Rerunning against an
/// existing output file skips questions that already have a row, so an
/// interrupted run resumed equals an uninterrupted one. Oracle errors fail
/// the question, not the batch. Progress goes to *progress when given.
RunSummary run_classify(const RunConfig& cfg, std::ostream* progress = nullptr);

/// Parsed contents of a classify output file.
struct OutcomeFile {
  nlohmann::json meta;  // null when the file has no meta line
  std::vector<SearchOutcome> outcomes;
  struct Failure {
    std::string question_id;
    std::string error;
  };
  std::vector<Failure> failures;
};

OutcomeFile read_outcomes(const std::string& path);

/// Scores a classify output file against a gold dataset; echoes the
/// producing run's strategy/mode/policy into the report when recorded.
MetricsReport evaluate_outcomes(const std::string& pred_path,
                                const std::string& gold_path,
                                std::optional<FileFormat> gold_format = {},
                                const ColumnMap& columns = {});

}  // namespace tempamb
