#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tempamb/detection.hpp"
#include "tempamb/domain.hpp"

namespace tempamb {

enum class Adaptivity { Static, Adaptive };

/// Years to probe, each in (start_year, end_year], all distinct. Static
/// plans are fixed up front; adaptive plans come from a DacCursor instead.
struct ProbePlan {
  std::vector<int> years;
  Adaptivity adaptivity = Adaptivity::Static;
};

/// start_year+1 ... end_year.
ProbePlan plan_linear(TimeRange range);

/// start_year+s, start_year+2s, ... while within the range.
ProbePlan plan_skip_list(TimeRange range, int interval);

/// k distinct years drawn uniformly without replacement, in draw order.
/// Fully determined by the seed. Throws TooManySamples past |T|-1.
ProbePlan plan_random(TimeRange range, int samples, std::uint64_t seed);

enum class DacVariant { Full, HalfLtr, HalfRtl };

/// Midpoint-splitting probe source over [start_year+1, end_year]. Emits
/// mid = floor((lo+hi)/2) of the current interval, then
///   Full    - descends into both halves, left before right (preorder), so
///             exhaustion visits every candidate year once
///   HalfLtr - descends into the left half, falling back to the right half
///             only when the left is empty
///   HalfRtl - the mirror image
/// A Different verdict ends the search outright, so the cursor never needs
/// the verdicts back; it only describes the continuation path.
class DacCursor {
public:
  DacCursor(TimeRange range, DacVariant variant);

  std::optional<int> next();

private:
  struct Interval {
    int lo, hi;
  };
  DacVariant variant_;
  std::vector<Interval> stack_;
};

/// The full probe sequence a DacCursor walks when nothing ever differs.
std::vector<int> dac_sequence(TimeRange range, DacVariant variant);

/// Probes issued when the plan is exhausted without early exit: the exact
/// worst-case comparison count for the strategy over this range.
int exhaustive_probe_count(TimeRange range, const StrategySpec& spec);

/// One equivalence probe for a given year, bound to an oracle and template.
using EquivalenceFn = std::function<EquivalenceVerdict(int probe_year)>;

struct SearchOptions {
  UnparseablePolicy policy = UnparseablePolicy::TreatAsSame;
  /// Static plans may issue up to this many probes concurrently per batch;
  /// every issued probe counts as a comparison. Adaptive plans ignore it.
  int probe_fanout = 1;
};

/// Drives probes in plan order and stops at the first verdict that counts
/// as Different under the policy, recording witness (start_year, probe_year)
/// and predicting Ambiguous; an exhausted plan predicts Unambiguous with no
/// witness. comparisons counts every issued probe. Oracle errors propagate
/// with the question unlabeled. Under the default policy every Ambiguous
/// prediction's witness verdict in the trace is Different.
SearchOutcome run_search(const Question& q, TimeRange range, const StrategySpec& spec,
                         const EquivalenceFn& equivalence,
                         const SearchOptions& options = {});

/// Conveniences binding test_equivalence to an oracle and template.
EquivalenceFn make_equivalence_fn(Oracle& oracle, const EquivalencePromptTemplate& tmpl,
                                  const Question& q, TimeRange range,
                                  EquivalenceMode mode);

}  // namespace tempamb
