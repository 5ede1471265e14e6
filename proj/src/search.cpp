#include "tempamb/search.hpp"

#include <algorithm>
#include <numeric>

#include "tempamb/errors.hpp"
#include "tempamb/util.hpp"

namespace tempamb {

ProbePlan plan_linear(TimeRange range) {
  validate_range(range);
  ProbePlan plan;
  for (int y = range.start_year + 1; y <= range.end_year; ++y) plan.years.push_back(y);
  return plan;
}

ProbePlan plan_skip_list(TimeRange range, int interval) {
  validate_range(range);
  if (interval < 1) {
    throw ConfigError("skip interval must be >= 1, got " + std::to_string(interval));
  }
  ProbePlan plan;
  for (int y = range.start_year + interval; y <= range.end_year; y += interval) {
    plan.years.push_back(y);
  }
  return plan;
}

ProbePlan plan_random(TimeRange range, int samples, std::uint64_t seed) {
  validate_range(range);
  const int candidates = range.length() - 1;
  if (samples < 1) {
    throw ConfigError("sample count must be >= 1, got " + std::to_string(samples));
  }
  if (samples > candidates) {
    throw TooManySamples("cannot draw " + std::to_string(samples) +
                         " distinct years from " + std::to_string(candidates) +
                         " candidates");
  }
  std::vector<int> pool(candidates);
  std::iota(pool.begin(), pool.end(), range.start_year + 1);
  PortableRng rng(seed);
  ProbePlan plan;
  for (int i = 0; i < samples; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
    plan.years.push_back(pool[i]);
  }
  return plan;
}

DacCursor::DacCursor(TimeRange range, DacVariant variant) : variant_(variant) {
  validate_range(range);
  stack_.push_back({range.start_year + 1, range.end_year});
}

std::optional<int> DacCursor::next() {
  if (stack_.empty()) return std::nullopt;
  const Interval cur = stack_.back();
  stack_.pop_back();
  const int mid = (cur.lo + cur.hi) / 2;
  const Interval left{cur.lo, mid - 1};
  const Interval right{mid + 1, cur.hi};
  switch (variant_) {
    case DacVariant::Full:
      if (right.lo <= right.hi) stack_.push_back(right);
      if (left.lo <= left.hi) stack_.push_back(left);
      break;
    case DacVariant::HalfLtr:
      if (left.lo <= left.hi) stack_.push_back(left);
      else if (right.lo <= right.hi) stack_.push_back(right);
      break;
    case DacVariant::HalfRtl:
      if (right.lo <= right.hi) stack_.push_back(right);
      else if (left.lo <= left.hi) stack_.push_back(left);
      break;
  }
  return mid;
}

std::vector<int> dac_sequence(TimeRange range, DacVariant variant) {
  DacCursor cursor(range, variant);
  std::vector<int> years;
  while (auto y = cursor.next()) years.push_back(*y);
  return years;
}

namespace {

DacVariant dac_variant_of(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::DacFull: return DacVariant::Full;
    case StrategyKind::DacHalfLtr: return DacVariant::HalfLtr;
    default: return DacVariant::HalfRtl;
  }
}

ProbePlan static_plan(TimeRange range, const StrategySpec& spec) {
  switch (spec.kind) {
    case StrategyKind::Linear:
      return plan_linear(range);
    case StrategyKind::SkipList:
      return plan_skip_list(range, spec.interval.value_or(1));
    case StrategyKind::Random:
      if (!spec.seed) {
        throw ConfigError("random strategy needs a materialized seed at search time");
      }
      return plan_random(range, spec.samples.value_or(1), *spec.seed);
    default:
      throw ConfigError("strategy " + spec.to_string() + " has no static plan");
  }
}

bool counts_as_different(VerdictValue v, UnparseablePolicy policy) {
  if (v == VerdictValue::Different) return true;
  return v == VerdictValue::Unparseable && policy == UnparseablePolicy::TreatAsDifferent;
}

}  // namespace

int exhaustive_probe_count(TimeRange range, const StrategySpec& spec) {
  validate_range(range);
  switch (spec.kind) {
    case StrategyKind::Linear:
      return static_cast<int>(plan_linear(range).years.size());
    case StrategyKind::SkipList:
      return static_cast<int>(plan_skip_list(range, spec.interval.value_or(1)).years.size());
    case StrategyKind::Random:
      // Without replacement, every draw is issued; the seed never matters.
      return spec.samples.value_or(1);
    case StrategyKind::DacFull:
    case StrategyKind::DacHalfLtr:
    case StrategyKind::DacHalfRtl:
      return static_cast<int>(dac_sequence(range, dac_variant_of(spec.kind)).size());
    default:
      throw ConfigError("strategy " + spec.to_string() + " issues no probes");
  }
}

SearchOutcome run_search(const Question& q, TimeRange range, const StrategySpec& spec,
                         const EquivalenceFn& equivalence, const SearchOptions& options) {
  validate_range(range);
  if (!spec.is_search()) {
    throw ConfigError("strategy " + spec.to_string() + " is not a search strategy");
  }

  SearchOutcome outcome;
  outcome.question_id = q.id;
  outcome.strategy = spec;

  const bool adaptive = spec.kind == StrategyKind::DacFull ||
                        spec.kind == StrategyKind::DacHalfLtr ||
                        spec.kind == StrategyKind::DacHalfRtl;

  auto stop_at = [&](const EquivalenceVerdict& v) {
    if (!counts_as_different(v.value, options.policy)) return false;
    outcome.predicted = Label::Ambiguous;
    outcome.witness = std::make_pair(range.start_year, v.probe_year);
    return true;
  };

  if (adaptive) {
    DacCursor cursor(range, dac_variant_of(spec.kind));
    while (auto year = cursor.next()) {
      outcome.trace.push_back(equivalence(*year));
      if (stop_at(outcome.trace.back())) break;
    }
  } else {
    const ProbePlan plan = static_plan(range, spec);
    const int fanout = std::max(1, options.probe_fanout);
    bool done = false;
    for (std::size_t lo = 0; lo < plan.years.size() && !done; lo += fanout) {
      const std::size_t hi = std::min(plan.years.size(), lo + fanout);
      std::vector<EquivalenceVerdict> batch(hi - lo);
      if (hi - lo == 1) {
        batch[0] = equivalence(plan.years[lo]);
      } else {
#pragma omp parallel for schedule(dynamic)
        for (std::size_t i = lo; i < hi; ++i) {
          batch[i - lo] = equivalence(plan.years[i]);
        }
      }
      // Every issued probe enters the trace; the first hit in plan order
      // wins, so the witness is independent of completion order.
      for (const EquivalenceVerdict& v : batch) outcome.trace.push_back(v);
      for (const EquivalenceVerdict& v : batch) {
        if (stop_at(v)) {
          done = true;
          break;
        }
      }
    }
  }

  outcome.comparisons = static_cast<int>(outcome.trace.size());
  return outcome;
}

EquivalenceFn make_equivalence_fn(Oracle& oracle, const EquivalencePromptTemplate& tmpl,
                                  const Question& q, TimeRange range,
                                  EquivalenceMode mode) {
  return [&oracle, tmpl, q, range, mode](int probe_year) {
    return test_equivalence(oracle, tmpl, q, range, probe_year, mode);
  };
}

}  // namespace tempamb
