#include "tempamb/baselines.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "tempamb/errors.hpp"
#include "tempamb/util.hpp"

namespace tempamb {

ClassificationPromptTemplate ClassificationPromptTemplate::zero_shot() {
  return ClassificationPromptTemplate{};
}

ClassificationPromptTemplate ClassificationPromptTemplate::default_few_shot() {
  ClassificationPromptTemplate tmpl;
  tmpl.exemplars = {
      {"How many dominant racecars did Harvick drive?", "No"},
      {"Where is the Maya Hieroglyphics Conference held?", "Yes"},
      {"What is Brian Deletka's job title?", "Yes"},
      {"What is Jalal Talabani the leader of?", "No"},
      {"Who is Blankenship's White House adviser?", "No"},
      {"Where was the gas giveaway in Hackensack?", "Yes"},
  };
  return tmpl;
}

ClassificationPromptTemplate ClassificationPromptTemplate::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open template file \"" + path + "\"");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid template file \"" + path + "\": " + e.what());
  }
  ClassificationPromptTemplate tmpl;
  if (j.contains("instruction")) tmpl.instruction = j["instruction"].get<std::string>();
  if (j.contains("exemplars")) {
    for (const auto& e : j["exemplars"]) {
      tmpl.exemplars.push_back({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
    }
  }
  return tmpl;
}

std::string render_classification_prompt(const ClassificationPromptTemplate& tmpl,
                                         const Question& q) {
  std::string out;
  for (const auto& e : tmpl.exemplars) {
    out += tmpl.instruction + "\n";
    out += "Question: " + e.question + "\n";
    out += "Answer: " + e.verdict + "\n\n";
  }
  out += tmpl.instruction + "\n";
  out += "Question: " + q.text + "\n";
  out += "Answer:";
  return out;
}

SearchOutcome classify_direct(Oracle& oracle, const ClassificationPromptTemplate& tmpl,
                              const Question& q, const StrategySpec& spec,
                              Label default_label) {
  const std::string raw = oracle.complete(render_classification_prompt(tmpl, q));
  SearchOutcome outcome;
  outcome.question_id = q.id;
  outcome.strategy = spec;
  outcome.baseline_raw = raw;
  const std::string token = normalized_first_token(raw);
  if (token == "yes") {
    outcome.predicted = Label::Ambiguous;
  } else if (token == "no") {
    outcome.predicted = Label::Unambiguous;
  } else {
    outcome.predicted = default_label;
    outcome.unparseable = true;
  }
  return outcome;
}

}  // namespace tempamb
