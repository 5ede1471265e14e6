#include "tempamb/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <sstream>

#include "tempamb/errors.hpp"
#include "tempamb/search.hpp"
#include "tempamb/util.hpp"

namespace tempamb {

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

MetricsReport score(const std::vector<SearchOutcome>& outcomes, const Dataset& gold,
                    int n_failed) {
  MetricsReport r;
  r.n_failed = n_failed;

  bool uniform = true;
  for (const SearchOutcome& o : outcomes) {
    const Question* g = gold.find(o.question_id);
    if (!g) {
      throw UnknownQuestionId("outcome question \"" + o.question_id +
                              "\" is not in the gold dataset");
    }
    if (!g->gold_label) {
      throw MissingGoldLabel("gold dataset has no label for \"" + o.question_id + "\"");
    }
    const bool pred_pos = o.predicted == Label::Ambiguous;
    const bool gold_pos = *g->gold_label == Label::Ambiguous;
    if (pred_pos && gold_pos) ++r.tp;
    else if (pred_pos && !gold_pos) ++r.fp;
    else if (!pred_pos && gold_pos) ++r.fn;
    else ++r.tn;

    if (!r.strategy) r.strategy = o.strategy;
    else if (!(*r.strategy == o.strategy)) uniform = false;
  }
  if (!uniform) r.strategy.reset();

  const int total = r.tp + r.fp + r.fn + r.tn;
  if (total > 0) r.accuracy = static_cast<double>(r.tp + r.tn) / total;
  else r.degenerate_accuracy = true;
  if (r.tp + r.fp > 0) r.precision = static_cast<double>(r.tp) / (r.tp + r.fp);
  else r.degenerate_precision = true;
  if (r.tp + r.fn > 0) r.recall = static_cast<double>(r.tp) / (r.tp + r.fn);
  else r.degenerate_recall = true;
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  } else {
    r.degenerate_f1 = true;
  }
  return r;
}

std::string MetricsReport::table() const {
  auto metric = [](double v, bool degenerate) {
    return fixed3(v) + (degenerate ? "  (empty denominator)" : "");
  };
  std::ostringstream out;
  if (strategy) out << "Strategy   " << strategy->to_string() << '\n';
  if (mode) out << "Mode       " << *mode << '\n';
  if (policy) out << "Policy     " << *policy << '\n';
  out << "TP         " << tp << '\n'
      << "FP         " << fp << '\n'
      << "FN         " << fn << '\n'
      << "TN         " << tn << '\n'
      << "Failed     " << n_failed << '\n'
      << "Accuracy   " << metric(accuracy, degenerate_accuracy) << '\n'
      << "Precision  " << metric(precision, degenerate_precision) << '\n'
      << "Recall     " << metric(recall, degenerate_recall) << '\n'
      << "F1         " << metric(f1, degenerate_f1) << '\n';
  return out.str();
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  if (strategy) j["strategy"] = strategy->to_string();
  if (mode) j["mode"] = *mode;
  if (policy) j["policy"] = *policy;
  j["tp"] = tp;
  j["fp"] = fp;
  j["fn"] = fn;
  j["tn"] = tn;
  j["n_failed"] = n_failed;
  j["accuracy"] = accuracy;
  j["precision"] = precision;
  j["recall"] = recall;
  j["f1"] = f1;
  nlohmann::ordered_json degenerate = nlohmann::ordered_json::array();
  if (degenerate_accuracy) degenerate.push_back("accuracy");
  if (degenerate_precision) degenerate.push_back("precision");
  if (degenerate_recall) degenerate.push_back("recall");
  if (degenerate_f1) degenerate.push_back("f1");
  j["degenerate"] = degenerate;
  return j;
}

// ---------------------------------------------------------------------------
// Bounds
// ---------------------------------------------------------------------------

std::pair<int, int> efficiency_bounds(TimeRange range, const StrategySpec& spec) {
  if (!spec.is_search()) {
    throw ConfigError("strategy " + spec.to_string() + " has no probe bounds");
  }
  return {1, exhaustive_probe_count(range, spec)};
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

ChangePointDist ChangePointDist::parse(std::string_view s) {
  const std::string t = to_lower(trim(s));
  if (t == "uniform-single") return {ChangePointKind::UniformSingleChange, 0.0};
  if (t == "no-change") return {ChangePointKind::NoChange, 0.0};
  if (t.rfind("mixture:", 0) == 0) {
    try {
      const double p = std::stod(t.substr(8));
      if (p < 0.0 || p > 1.0) throw ConfigError("mixture probability out of [0,1]");
      return {ChangePointKind::Mixture, p};
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("bad mixture probability in \"" + std::string(s) + "\"");
    }
  }
  throw ConfigError("unknown change-point distribution \"" + std::string(s) + "\"");
}

std::string ChangePointDist::to_string() const {
  switch (kind) {
    case ChangePointKind::UniformSingleChange: return "uniform-single";
    case ChangePointKind::NoChange: return "no-change";
    case ChangePointKind::Mixture: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "mixture:%g", mixture_p);
      return buf;
    }
  }
  return "uniform-single";
}

namespace {

double unit_interval(PortableRng& rng) {
  return static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
}

}  // namespace

SyntheticWorld::Timeline sample_timeline(TimeRange range, const ChangePointDist& dist,
                                         PortableRng& rng) {
  validate_range(range);
  SyntheticWorld::Timeline tl{{range.start_year, "a"}};
  bool change = false;
  switch (dist.kind) {
    case ChangePointKind::UniformSingleChange: change = true; break;
    case ChangePointKind::NoChange: change = false; break;
    case ChangePointKind::Mixture: change = unit_interval(rng) < dist.mixture_p; break;
  }
  if (change) {
    const int year =
        range.start_year + 1 + static_cast<int>(rng.below(range.length() - 1));
    tl.emplace_back(year, "b");
  }
  return tl;
}

nlohmann::ordered_json EfficiencyEntry::to_json() const {
  nlohmann::ordered_json j;
  j["strategy"] = strategy.to_string();
  j["best_case"] = best_case;
  j["worst_case"] = worst_case;
  j["mean_comparisons"] = mean_comparisons;
  j["stddev_comparisons"] = stddev_comparisons;
  j["min_comparisons"] = min_comparisons;
  j["max_comparisons"] = max_comparisons;
  j["n_worlds"] = n_worlds;
  j["dist"] = dist.to_string();
  j["seed"] = seed;
  return j;
}

namespace {

int world_comparisons(TimeRange range, const StrategySpec& spec,
                      const ChangePointDist& dist, std::uint64_t world_seed) {
  PortableRng rng(world_seed);
  SyntheticWorld world;
  world.add("w", sample_timeline(range, dist, rng));
  SyntheticOracle oracle(std::move(world));
  const Question q{"w", "what value does the sampled world hold?", std::nullopt,
                   Source::Other};
  oracle.register_question(q);

  StrategySpec run_spec = spec;
  if (run_spec.kind == StrategyKind::Random && !run_spec.seed) {
    run_spec.seed = mix64(world_seed ^ 0x5be1ce11edULL);
  }
  const EquivalencePromptTemplate tmpl = EquivalencePromptTemplate::zero_shot();
  const EquivalenceFn fn =
      make_equivalence_fn(oracle, tmpl, q, range, EquivalenceMode::DirectPrompt);
  return run_search(q, range, run_spec, fn).comparisons;
}

EfficiencyEntry finish_entry(TimeRange range, const StrategySpec& spec,
                             std::uint64_t n_worlds, const ChangePointDist& dist,
                             std::uint64_t seed, std::uint64_t sum, std::uint64_t sum_sq,
                             int mn, int mx) {
  EfficiencyEntry entry;
  entry.strategy = spec;
  std::tie(entry.best_case, entry.worst_case) = efficiency_bounds(range, spec);
  entry.n_worlds = n_worlds;
  entry.dist = dist;
  entry.seed = seed;
  const double n = static_cast<double>(n_worlds);
  entry.mean_comparisons = static_cast<double>(sum) / n;
  const double var =
      static_cast<double>(sum_sq) / n - entry.mean_comparisons * entry.mean_comparisons;
  entry.stddev_comparisons = std::sqrt(std::max(0.0, var));
  entry.min_comparisons = mn;
  entry.max_comparisons = mx;
  return entry;
}

}  // namespace

EfficiencyEntry efficiency_monte_carlo_serial(TimeRange range, const StrategySpec& spec,
                                              std::uint64_t n_worlds,
                                              const ChangePointDist& dist,
                                              std::uint64_t seed) {
  validate_range(range);
  if (n_worlds == 0) throw ConfigError("n_worlds must be >= 1");
  efficiency_bounds(range, spec);  // reject baseline specs up front
  std::uint64_t sum = 0, sum_sq = 0;
  int mn = std::numeric_limits<int>::max(), mx = 0;
  for (std::uint64_t w = 0; w < n_worlds; ++w) {
    const int c = world_comparisons(range, spec, dist, mix64(seed ^ mix64(w)));
    sum += static_cast<std::uint64_t>(c);
    sum_sq += static_cast<std::uint64_t>(c) * static_cast<std::uint64_t>(c);
    mn = std::min(mn, c);
    mx = std::max(mx, c);
  }
  return finish_entry(range, spec, n_worlds, dist, seed, sum, sum_sq, mn, mx);
}

EfficiencyEntry efficiency_monte_carlo(TimeRange range, const StrategySpec& spec,
                                       std::uint64_t n_worlds,
                                       const ChangePointDist& dist, std::uint64_t seed) {
  validate_range(range);
  if (n_worlds == 0) throw ConfigError("n_worlds must be >= 1");
  // Exceptions cannot leave the parallel region; reject bad specs here.
  efficiency_bounds(range, spec);
  std::uint64_t sum = 0, sum_sq = 0;
  int mn = std::numeric_limits<int>::max(), mx = 0;
  const long long n = static_cast<long long>(n_worlds);
#pragma omp parallel for schedule(static) reduction(+ : sum, sum_sq) \
    reduction(min : mn) reduction(max : mx)
  for (long long w = 0; w < n; ++w) {
    const int c = world_comparisons(range, spec, dist,
                                    mix64(seed ^ mix64(static_cast<std::uint64_t>(w))));
    sum += static_cast<std::uint64_t>(c);
    sum_sq += static_cast<std::uint64_t>(c) * static_cast<std::uint64_t>(c);
    mn = std::min(mn, c);
    mx = std::max(mx, c);
  }
  return finish_entry(range, spec, n_worlds, dist, seed, sum, sum_sq, mn, mx);
}

std::string efficiency_table(const std::vector<EfficiencyEntry>& entries) {
  std::size_t width = 8;
  for (const auto& e : entries) {
    width = std::max(width, e.strategy.to_string().size());
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width + 2)) << "strategy"
      << std::right << std::setw(6) << "best" << std::setw(7) << "worst"
      << std::setw(10) << "mean" << std::setw(10) << "stddev" << '\n';
  for (const auto& e : entries) {
    out << std::left << std::setw(static_cast<int>(width + 2)) << e.strategy.to_string()
        << std::right << std::setw(6) << e.best_case << std::setw(7) << e.worst_case
        << std::setw(10) << fixed3(e.mean_comparisons) << std::setw(10)
        << fixed3(e.stddev_comparisons) << '\n';
  }
  return out.str();
}

}  // namespace tempamb
