#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tempamb/dataset.hpp"
#include "tempamb/domain.hpp"
#include "tempamb/oracle.hpp"
#include "tempamb/util.hpp"

namespace tempamb {

/// Confusion-matrix metrics with Ambiguous as the positive class. A
/// degenerate_* flag marks a metric whose denominator was empty and was
/// therefore reported as 0.
struct MetricsReport {
  int tp = 0, fp = 0, fn = 0, tn = 0;
  int n_failed = 0;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
  bool degenerate_accuracy = false;
  bool degenerate_precision = false;
  bool degenerate_recall = false;
  bool degenerate_f1 = false;
  std::optional<StrategySpec> strategy;  // set when all outcomes agree
  std::optional<std::string> mode;       // echoed from the producing run
  std::optional<std::string> policy;

  std::string table() const;
  nlohmann::ordered_json to_json() const;
};

/// Counts predictions against gold labels. Throws UnknownQuestionId for an
/// outcome absent from gold and MissingGoldLabel for an unlabeled gold row.
/// n_failed is carried through for the size invariant
/// tp+fp+fn+tn+n_failed = evaluated questions.
MetricsReport score(const std::vector<SearchOutcome>& outcomes, const Dataset& gold,
                    int n_failed = 0);

/// (best, worst) comparison counts for a search strategy over a range.
/// Best is always 1; worst is the exact exhaustion cost, i.e. the number of
/// probes issued when no verdict ever differs.
std::pair<int, int> efficiency_bounds(TimeRange range, const StrategySpec& spec);

// ---------------------------------------------------------------------------
// Monte Carlo efficiency model
// ---------------------------------------------------------------------------

enum class ChangePointKind { UniformSingleChange, NoChange, Mixture };

/// How sampled worlds place their answer change: a single change at a year
/// uniform over the candidates, no change at all, or a coin flip between
/// the two with P(change) = mixture_p.
struct ChangePointDist {
  ChangePointKind kind = ChangePointKind::UniformSingleChange;
  double mixture_p = 0.5;

  static ChangePointDist parse(std::string_view s);  // "uniform-single" | "no-change" | "mixture:<p>"
  std::string to_string() const;
};

/// One sampled timeline anchored at range.start_year.
SyntheticWorld::Timeline sample_timeline(TimeRange range, const ChangePointDist& dist,
                                         PortableRng& rng);

struct EfficiencyEntry {
  StrategySpec strategy;
  int best_case = 0;
  int worst_case = 0;
  double mean_comparisons = 0.0;
  double stddev_comparisons = 0.0;
  int min_comparisons = 0;
  int max_comparisons = 0;
  std::uint64_t n_worlds = 0;
  ChangePointDist dist;
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const;
};

/// Samples n_worlds synthetic timelines and runs the real search end-to-end
/// against a synthetic oracle for each, reporting the comparison-count
/// distribution. Deterministic under seed; per-world sub-seeds are derived
/// from it, so the parallel kernel and the serial reference agree exactly.
EfficiencyEntry efficiency_monte_carlo(TimeRange range, const StrategySpec& spec,
                                       std::uint64_t n_worlds,
                                       const ChangePointDist& dist, std::uint64_t seed);

/// Serial reference implementation of the same computation.
EfficiencyEntry efficiency_monte_carlo_serial(TimeRange range, const StrategySpec& spec,
                                              std::uint64_t n_worlds,
                                              const ChangePointDist& dist,
                                              std::uint64_t seed);

std::string efficiency_table(const std::vector<EfficiencyEntry>& entries);

}  // namespace tempamb
