#include "doctest.h"
#include "tempamb/baselines.hpp"
#include "tempamb/errors.hpp"
#include "testutil.hpp"

using namespace tempamb;
using testutil::ScriptedOracle;
using testutil::TempDir;

namespace {

Question governor() {
  return Question{"gov", "Who is the first woman governor in india?", Label::Unambiguous,
                  Source::AmbigQA};
}

}  // namespace

TEST_CASE("zero-shot classification prompt matches the golden bytes") {
  auto prompt = render_classification_prompt(ClassificationPromptTemplate::zero_shot(),
                                             governor());
  CHECK(prompt == testutil::read_file(testutil::golden_path("zero_shot_prompt.txt")));
}

TEST_CASE("few-shot classification prompt matches the golden bytes") {
  auto tmpl = ClassificationPromptTemplate::default_few_shot();
  REQUIRE(tmpl.exemplars.size() == 6);
  auto prompt = render_classification_prompt(tmpl, governor());
  CHECK(prompt == testutil::read_file(testutil::golden_path("few_shot_prompt.txt")));
}

TEST_CASE("the few-shot prompt ends with the zero-shot prompt") {
  auto zero = render_classification_prompt(ClassificationPromptTemplate::zero_shot(),
                                           governor());
  auto few = render_classification_prompt(ClassificationPromptTemplate::default_few_shot(),
                                          governor());
  REQUIRE(few.size() > zero.size());
  CHECK(few.substr(few.size() - zero.size()) == zero);
  CHECK(few.back() == ':');
}

TEST_CASE("classification template loads overrides from JSON") {
  TempDir tmp;
  auto path = tmp.file("tmpl.json");
  testutil::write_file(path, R"({
    "instruction": "Ambiguous? YES/NO only.",
    "exemplars": [["Could this mean two things?", "Yes"]]
  })");
  auto tmpl = ClassificationPromptTemplate::load(path);
  CHECK(tmpl.instruction == "Ambiguous? YES/NO only.");
  REQUIRE(tmpl.exemplars.size() == 1);

  auto prompt = render_classification_prompt(tmpl, governor());
  CHECK(prompt.find("Ambiguous? YES/NO only.") != std::string::npos);
  CHECK(prompt.find("Could this mean two things?") != std::string::npos);
}

TEST_CASE("classify_direct parses the leading token") {
  auto spec = StrategySpec::parse("zero-shot");
  auto tmpl = ClassificationPromptTemplate::zero_shot();

  SUBCASE("yes means ambiguous") {
    ScriptedOracle oracle({"YES"});
    auto out = classify_direct(oracle, tmpl, governor(), spec);
    CHECK(out.question_id == "gov");
    CHECK(out.predicted == Label::Ambiguous);
    CHECK(out.baseline_raw == "YES");
    CHECK(!out.unparseable);
    CHECK(out.comparisons == 0);
    CHECK(!out.witness.has_value());
    CHECK(out.trace.empty());
    CHECK(out.strategy == spec);
    REQUIRE(oracle.prompts.size() == 1);
    CHECK(oracle.prompts[0] ==
          testutil::read_file(testutil::golden_path("zero_shot_prompt.txt")));
  }

  SUBCASE("no means unambiguous, case-insensitively") {
    ScriptedOracle oracle({"no, it is specific."});
    auto out = classify_direct(oracle, tmpl, governor(), spec);
    CHECK(out.predicted == Label::Unambiguous);
    CHECK(!out.unparseable);
    CHECK(out.baseline_raw == "no, it is specific.");
  }

  SUBCASE("junk falls back to the default label") {
    ScriptedOracle oracle({"cannot say"});
    auto out = classify_direct(oracle, tmpl, governor(), spec);
    CHECK(out.predicted == Label::Unambiguous);
    CHECK(out.unparseable);
  }

  SUBCASE("the fallback label is configurable") {
    ScriptedOracle oracle({"cannot say"});
    auto out = classify_direct(oracle, tmpl, governor(), spec, Label::Ambiguous);
    CHECK(out.predicted == Label::Ambiguous);
    CHECK(out.unparseable);
  }
}

TEST_CASE("classify_direct sends the few-shot prompt when so configured") {
  auto spec = StrategySpec::parse("few-shot");
  ScriptedOracle oracle({"Yes"});
  auto out = classify_direct(oracle, ClassificationPromptTemplate::default_few_shot(),
                             governor(), spec);
  CHECK(out.predicted == Label::Ambiguous);
  CHECK(out.strategy.kind == StrategyKind::FewShot);
  REQUIRE(oracle.prompts.size() == 1);
  CHECK(oracle.prompts[0] ==
        testutil::read_file(testutil::golden_path("few_shot_prompt.txt")));
}

TEST_CASE("baseline outcome rows serialize with raw and unparseable fields") {
  ScriptedOracle oracle({"whatever"});
  auto out = classify_direct(oracle, ClassificationPromptTemplate::zero_shot(), governor(),
                             StrategySpec::parse("zero-shot"));
  auto j = out.to_json();
  CHECK(j.contains("raw"));
  CHECK(j.at("unparseable").get<bool>());
  CHECK(j.at("comparisons").get<int>() == 0);
  CHECK(j.at("witness").is_null());
}
