#include <algorithm>
#include <atomic>
#include <optional>
#include <set>
#include <vector>

#include "doctest.h"
#include "tempamb/errors.hpp"
#include "tempamb/oracle.hpp"
#include "tempamb/search.hpp"
#include "testutil.hpp"

using namespace tempamb;

namespace {

const TimeRange kModern{2000, 2024};
const TimeRange kArchival{1987, 2007};

/// Equivalence function for a world whose answer flips at change_year and
/// stays flipped; no change when nullopt.
EquivalenceFn step_at(std::optional<int> change_year) {
  return [=](int probe) {
    const bool diff = change_year && probe >= *change_year;
    return EquivalenceVerdict{diff ? VerdictValue::Different : VerdictValue::Same,
                              diff ? "No" : "Yes", probe};
  };
}

/// Answer differs only inside [from, to] and then reverts.
EquivalenceFn blip(int from, int to) {
  return [=](int probe) {
    const bool diff = probe >= from && probe <= to;
    return EquivalenceVerdict{diff ? VerdictValue::Different : VerdictValue::Same,
                              diff ? "No" : "Yes", probe};
  };
}

Question dummy() { return Question{"q", "who holds the title?", {}, Source::Other}; }

std::vector<int> years_of(const ProbePlan& plan) { return plan.years; }

}  // namespace

TEST_CASE("linear plan covers every candidate year in order") {
  auto plan = plan_linear(kModern);
  REQUIRE(plan.years.size() == 24);
  CHECK(plan.years.front() == 2001);
  CHECK(plan.years.back() == 2024);
  CHECK(std::is_sorted(plan.years.begin(), plan.years.end()));

  auto archival = plan_linear(kArchival);
  CHECK(archival.years.size() == 20);
  CHECK(archival.years.front() == 1988);
  CHECK(archival.years.back() == 2007);
}

TEST_CASE("skip-list plans stride by the interval") {
  CHECK(years_of(plan_skip_list(kModern, 2)) ==
        std::vector<int>{2002, 2004, 2006, 2008, 2010, 2012, 2014, 2016, 2018, 2020,
                         2022, 2024});
  CHECK(years_of(plan_skip_list(kModern, 5)) == std::vector<int>{2005, 2010, 2015, 2020});
  CHECK(years_of(plan_skip_list(kModern, 10)) == std::vector<int>{2010, 2020});
  CHECK(years_of(plan_skip_list(kModern, 24)) == std::vector<int>{2024});
  CHECK(plan_skip_list(kModern, 25).years.empty());
  CHECK(years_of(plan_skip_list(kModern, 1)) == years_of(plan_linear(kModern)));
  CHECK_THROWS_AS(plan_skip_list(kModern, 0), ConfigError);
}

TEST_CASE("random plans are seed-determined draws without replacement") {
  CHECK(years_of(plan_random(kModern, 5, 42)) ==
        std::vector<int>{2004, 2013, 2011, 2008, 2014});

  auto again = plan_random(kModern, 5, 42);
  CHECK(again.years == plan_random(kModern, 5, 42).years);

  auto full = plan_random(kModern, 24, 7);
  std::set<int> distinct(full.years.begin(), full.years.end());
  CHECK(distinct.size() == 24);
  CHECK(*distinct.begin() == 2001);
  CHECK(*distinct.rbegin() == 2024);
  CHECK(full.years != years_of(plan_random(kModern, 24, 8)));

  CHECK_THROWS_AS(plan_random(kModern, 25, 1), TooManySamples);
  CHECK_THROWS_AS(plan_random(kModern, 0, 1), ConfigError);
}

TEST_CASE("dac sequences are frozen midpoint preorders") {
  CHECK(dac_sequence(kModern, DacVariant::Full) ==
        std::vector<int>{2012, 2006, 2003, 2001, 2002, 2004, 2005, 2009, 2007, 2008,
                         2010, 2011, 2018, 2015, 2013, 2014, 2016, 2017, 2021, 2019,
                         2020, 2023, 2022, 2024});
  CHECK(dac_sequence(kModern, DacVariant::HalfLtr) ==
        std::vector<int>{2012, 2006, 2003, 2001, 2002});
  CHECK(dac_sequence(kModern, DacVariant::HalfRtl) ==
        std::vector<int>{2012, 2018, 2021, 2023, 2024});
  CHECK(dac_sequence(kArchival, DacVariant::HalfLtr) ==
        std::vector<int>{1997, 1992, 1989, 1988});

  auto full = dac_sequence(kModern, DacVariant::Full);
  std::set<int> distinct(full.begin(), full.end());
  CHECK(distinct.size() == 24);
}

TEST_CASE("dac cursor exhausts and then yields nothing") {
  DacCursor cursor(kModern, DacVariant::HalfLtr);
  std::vector<int> seen;
  while (auto y = cursor.next()) seen.push_back(*y);
  CHECK(seen == dac_sequence(kModern, DacVariant::HalfLtr));
  CHECK(!cursor.next().has_value());
}

TEST_CASE("exhaustive probe counts per strategy") {
  CHECK(exhaustive_probe_count(kModern, StrategySpec::parse("linear")) == 24);
  CHECK(exhaustive_probe_count(kModern, StrategySpec::parse("skip:2")) == 12);
  CHECK(exhaustive_probe_count(kModern, StrategySpec::parse("skip:5")) == 4);
  CHECK(exhaustive_probe_count(kModern, StrategySpec::parse("skip:10")) == 2);
  CHECK(exhaustive_probe_count(kModern, StrategySpec::parse("random:5")) == 5);
  CHECK(exhaustive_probe_count(kModern, StrategySpec::parse("dac")) == 24);
  CHECK(exhaustive_probe_count(kModern, StrategySpec::parse("dac:half-ltr")) == 5);
  CHECK(exhaustive_probe_count(kModern, StrategySpec::parse("dac:half-rtl")) == 5);
  CHECK(exhaustive_probe_count(kArchival, StrategySpec::parse("linear")) == 20);
  CHECK(exhaustive_probe_count(kArchival, StrategySpec::parse("skip:2")) == 10);
  CHECK(exhaustive_probe_count(kArchival, StrategySpec::parse("dac:half-ltr")) == 4);
  CHECK_THROWS_AS(exhaustive_probe_count(kModern, StrategySpec::parse("zero-shot")),
                  ConfigError);
}

TEST_CASE("a change at 2022 costs linear 22 probes and skip-2 half that") {
  auto linear = run_search(dummy(), kModern, StrategySpec::parse("linear"), step_at(2022));
  CHECK(linear.predicted == Label::Ambiguous);
  CHECK(linear.comparisons == 22);
  CHECK(linear.witness == std::make_pair(2000, 2022));
  REQUIRE(linear.trace.size() == 22);
  CHECK(linear.trace.back().value == VerdictValue::Different);
  CHECK(linear.trace.back().probe_year == 2022);
  for (std::size_t i = 0; i + 1 < linear.trace.size(); ++i) {
    CHECK(linear.trace[i].value == VerdictValue::Same);
  }

  auto skip2 = run_search(dummy(), kModern, StrategySpec::parse("skip:2"), step_at(2022));
  CHECK(skip2.predicted == Label::Ambiguous);
  CHECK(skip2.comparisons == 11);
  CHECK(skip2.witness == std::make_pair(2000, 2022));

  auto dac = run_search(dummy(), kModern, StrategySpec::parse("dac"), step_at(2022));
  CHECK(dac.predicted == Label::Ambiguous);
  CHECK(dac.comparisons == 22);  // 2023 is the first hit in the preorder
  CHECK(dac.witness == std::make_pair(2000, 2023));
}

TEST_CASE("no change exhausts the plan and predicts unambiguous") {
  auto out = run_search(dummy(), kModern, StrategySpec::parse("linear"), step_at({}));
  CHECK(out.predicted == Label::Unambiguous);
  CHECK(!out.witness.has_value());
  CHECK(out.comparisons == 24);
  CHECK(out.trace.size() == 24);
}

TEST_CASE("an immediate change stops after one probe") {
  auto out = run_search(dummy(), kModern, StrategySpec::parse("linear"), step_at(2001));
  CHECK(out.comparisons == 1);
  CHECK(out.witness == std::make_pair(2000, 2001));
}

TEST_CASE("sparse probes can miss a late change") {
  auto out = run_search(dummy(), kModern, StrategySpec::parse("skip:5"), step_at(2022));
  CHECK(out.predicted == Label::Unambiguous);
  CHECK(out.comparisons == 4);
}

TEST_CASE("half-interval dac can miss a change outside its half") {
  auto out = run_search(dummy(), kModern, StrategySpec::parse("dac:half-ltr"), blip(2010, 2010));
  CHECK(out.predicted == Label::Unambiguous);
  CHECK(out.comparisons == 5);

  auto full = run_search(dummy(), kModern, StrategySpec::parse("dac"), blip(2010, 2010));
  CHECK(full.predicted == Label::Ambiguous);
  CHECK(full.witness == std::make_pair(2000, 2010));
  CHECK(full.comparisons == 11);  // 2010 sits at position 11 of the preorder
}

TEST_CASE("random strategy needs a materialized seed and follows its plan") {
  CHECK_THROWS_AS(
      run_search(dummy(), kModern, StrategySpec::parse("random:5"), step_at(2022)),
      ConfigError);

  // Frozen plan for seed 42: 2004, 2013, 2011, 2008, 2014.
  auto out = run_search(dummy(), kModern, StrategySpec::parse("random:5:seed=42"),
                        blip(2013, 2013));
  CHECK(out.predicted == Label::Ambiguous);
  CHECK(out.comparisons == 2);
  CHECK(out.witness == std::make_pair(2000, 2013));
}

TEST_CASE("unparseable verdicts follow the configured policy") {
  auto junk_then_change = [](int probe) {
    if (probe == 2003) return EquivalenceVerdict{VerdictValue::Unparseable, "???", probe};
    const bool diff = probe >= 2010;
    return EquivalenceVerdict{diff ? VerdictValue::Different : VerdictValue::Same,
                              diff ? "No" : "Yes", probe};
  };

  SUBCASE("default policy ignores junk and keeps searching") {
    auto out = run_search(dummy(), kModern, StrategySpec::parse("linear"), junk_then_change);
    CHECK(out.predicted == Label::Ambiguous);
    CHECK(out.witness == std::make_pair(2000, 2010));
    CHECK(out.comparisons == 10);
    CHECK(out.trace[2].value == VerdictValue::Unparseable);
  }

  SUBCASE("treat-as-different stops at the junk probe") {
    SearchOptions opts;
    opts.policy = UnparseablePolicy::TreatAsDifferent;
    auto out =
        run_search(dummy(), kModern, StrategySpec::parse("linear"), junk_then_change, opts);
    CHECK(out.predicted == Label::Ambiguous);
    CHECK(out.witness == std::make_pair(2000, 2003));
    CHECK(out.comparisons == 3);
    CHECK(out.trace.back().value == VerdictValue::Unparseable);
  }

  SUBCASE("all junk under the default policy exhausts to unambiguous") {
    auto all_junk = [](int probe) {
      return EquivalenceVerdict{VerdictValue::Unparseable, "??", probe};
    };
    auto out = run_search(dummy(), kModern, StrategySpec::parse("linear"), all_junk);
    CHECK(out.predicted == Label::Unambiguous);
    CHECK(out.comparisons == 24);
  }
}

TEST_CASE("fanout batches issue whole batches and keep plan order") {
  std::atomic<int> issued{0};
  auto counted = [&](int probe) {
    issued.fetch_add(1);
    const bool diff = probe >= 2022;
    return EquivalenceVerdict{diff ? VerdictValue::Different : VerdictValue::Same,
                              diff ? "No" : "Yes", probe};
  };

  SearchOptions opts;
  opts.probe_fanout = 4;
  auto out = run_search(dummy(), kModern, StrategySpec::parse("linear"), counted, opts);
  CHECK(out.predicted == Label::Ambiguous);
  CHECK(out.witness == std::make_pair(2000, 2022));
  CHECK(out.comparisons == 24);  // the final batch of four is issued as a unit
  CHECK(issued.load() == 24);
  REQUIRE(out.trace.size() == 24);
  for (std::size_t i = 0; i < out.trace.size(); ++i) {
    CHECK(out.trace[i].probe_year == 2001 + static_cast<int>(i));
  }

  auto serial = run_search(dummy(), kModern, StrategySpec::parse("linear"), step_at(2022));
  CHECK(serial.comparisons == 22);  // fanout 1 stops mid-plan

  SearchOptions dac_opts;
  dac_opts.probe_fanout = 8;
  auto adaptive = run_search(dummy(), kModern, StrategySpec::parse("dac"), step_at(2022),
                             dac_opts);
  CHECK(adaptive.comparisons == 22);  // adaptive plans ignore fanout
}

TEST_CASE("run_search validates its inputs") {
  CHECK_THROWS_AS(
      run_search(dummy(), {2000, 2000}, StrategySpec::parse("linear"), step_at({})),
      DegenerateRange);
  CHECK_THROWS_AS(
      run_search(dummy(), kModern, StrategySpec::parse("zero-shot"), step_at({})),
      ConfigError);
}

TEST_CASE("search outcomes are deterministic") {
  auto spec = StrategySpec::parse("random:5:seed=99");
  auto a = run_search(dummy(), kModern, spec, step_at(2014));
  auto b = run_search(dummy(), kModern, spec, step_at(2014));
  CHECK(a == b);
}

TEST_CASE("make_equivalence_fn binds an oracle-backed probe") {
  SyntheticOracle oracle(SyntheticWorld::load(testutil::data_path("trio_world.json")));
  Question q{"nba", "who has the oldest team in the nba?", Label::Ambiguous,
             Source::SituatedQA};
  oracle.register_question(q);
  auto fn = make_equivalence_fn(oracle, EquivalencePromptTemplate::default_few_shot(), q,
                                kModern, EquivalenceMode::DirectPrompt);
  auto out = run_search(q, kModern, StrategySpec::parse("linear"), fn);
  CHECK(out.predicted == Label::Ambiguous);
  CHECK(out.comparisons == 22);
  CHECK(out.witness == std::make_pair(2000, 2022));
}

TEST_CASE("property sweep: soundness, budget, and skip:1 equivalence") {
  const std::vector<std::string> strategies = {
      "linear", "skip:2",       "skip:5",       "dac",
      "skip:1", "dac:half-ltr", "dac:half-rtl", "random:6:seed=11"};
  const std::vector<std::optional<int>> changes = {{},   2001, 2005, 2012,
                                                   2019, 2022, 2024};

  for (const auto& name : strategies) {
    auto spec = StrategySpec::parse(name);
    for (auto change : changes) {
      auto out = run_search(dummy(), kModern, spec, step_at(change));
      const int change_marker = change ? *change : -1;
      CAPTURE(name);
      CAPTURE(change_marker);

      CHECK(out.comparisons >= 1);
      CHECK(out.comparisons <= exhaustive_probe_count(kModern, spec));
      CHECK(out.comparisons == static_cast<int>(out.trace.size()));

      if (out.predicted == Label::Ambiguous) {
        REQUIRE(out.witness.has_value());
        CHECK(out.witness->first == 2000);
        REQUIRE(change.has_value());
        CHECK(out.witness->second >= *change);  // probe really differs
        CHECK(out.trace.back().value == VerdictValue::Different);
        CHECK(out.trace.back().probe_year == out.witness->second);
      } else {
        CHECK(!out.witness.has_value());
      }

      // Exhaustive strategies recover the ground truth exactly.
      if (name == "linear" || name == "skip:1" || name == "dac") {
        CHECK((out.predicted == Label::Ambiguous) == change.has_value());
      }
    }
  }

  for (auto change : changes) {
    auto a = run_search(dummy(), kModern, StrategySpec::parse("linear"), step_at(change));
    auto b = run_search(dummy(), kModern, StrategySpec::parse("skip:1"), step_at(change));
    CHECK(a.predicted == b.predicted);
    CHECK(a.witness == b.witness);
    CHECK(a.comparisons == b.comparisons);
    CHECK(a.trace == b.trace);
  }
}
