#include "tempamb/detection.hpp"

#include <cctype>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tempamb/errors.hpp"
#include "tempamb/util.hpp"

namespace tempamb {

namespace {

std::string rstrip(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

// "<base> as of <year>" -> base length, or npos when there is no such tail.
std::size_t suffix_start(const std::string& s, int* year_out) {
  std::size_t digits_end = s.size();
  std::size_t digits_begin = digits_end;
  while (digits_begin > 0 && std::isdigit(static_cast<unsigned char>(s[digits_begin - 1]))) {
    --digits_begin;
  }
  if (digits_begin == digits_end) return std::string::npos;
  constexpr std::string_view marker = " as of ";
  if (digits_begin < marker.size()) return std::string::npos;
  if (s.compare(digits_begin - marker.size(), marker.size(), marker) != 0) {
    return std::string::npos;
  }
  if (year_out) *year_out = std::stoi(s.substr(digits_begin, digits_end - digits_begin));
  return digits_begin - marker.size();
}

}  // namespace

std::string base_form(std::string_view text) {
  std::string s = rstrip(std::string(text));
  if (!s.empty() && s.back() == '?') s.pop_back();  // exactly one trailing "?"
  s = rstrip(s);
  const std::size_t cut = suffix_start(s, nullptr);
  if (cut != std::string::npos) s = rstrip(s.substr(0, cut));
  return s;
}

std::optional<std::pair<std::string, int>> split_disambiguated(std::string_view text) {
  std::string s = rstrip(std::string(text));
  if (s.empty() || s.back() != '?') return std::nullopt;
  s.pop_back();
  int year = 0;
  const std::size_t cut = suffix_start(s, &year);
  if (cut == std::string::npos) return std::nullopt;
  return std::make_pair(rstrip(s.substr(0, cut)), year);
}

DisambiguatedQuestion disambiguate(const Question& q, int year) {
  DisambiguatedQuestion dq;
  dq.base = q;
  dq.year = year;
  dq.text = base_form(q.text) + " as of " + std::to_string(year) + "?";
  return dq;
}

EquivalencePromptTemplate EquivalencePromptTemplate::zero_shot() {
  return EquivalencePromptTemplate{};
}

EquivalencePromptTemplate EquivalencePromptTemplate::default_few_shot() {
  EquivalencePromptTemplate tmpl;
  tmpl.exemplars = {
      {"who is president of india in present time as of 2000?",
       "who is president of india in present time as of 2011?", "No"},
      {"Who issued ashwamedha coins after performing ashvamedha sacrifice as of 2000?",
       "Who issued ashwamedha coins after performing ashvamedha sacrifice as of 2001?",
       "Yes"},
  };
  return tmpl;
}

EquivalencePromptTemplate EquivalencePromptTemplate::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open template file \"" + path + "\"");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid template file \"" + path + "\": " + e.what());
  }
  EquivalencePromptTemplate tmpl;
  if (j.contains("instruction")) tmpl.instruction = j["instruction"].get<std::string>();
  if (j.contains("exemplars")) {
    for (const auto& e : j["exemplars"]) {
      tmpl.exemplars.push_back({e.at(0).get<std::string>(), e.at(1).get<std::string>(),
                                e.at(2).get<std::string>()});
    }
  }
  return tmpl;
}

std::string render_equivalence_prompt(const EquivalencePromptTemplate& tmpl,
                                      const DisambiguatedQuestion& dq1,
                                      const DisambiguatedQuestion& dqk) {
  if (dq1.year == dqk.year) {
    throw SameYear("equivalence prompt needs two distinct years, got " +
                   std::to_string(dq1.year) + " twice");
  }
  std::string out;
  for (const auto& e : tmpl.exemplars) {
    out += "Q1: " + e.q1 + "\n";
    out += "Q2: " + e.q2 + "\n";
    out += tmpl.instruction + "\n";
    out += "Answer: " + e.verdict + "\n\n";
  }
  out += "Q1: " + dq1.text + "\n";
  out += "Q2: " + dqk.text + "\n";
  out += tmpl.instruction + "\n";
  out += "Answer:";
  return out;
}

EquivalenceVerdict parse_equivalence(std::string_view raw, int probe_year) {
  EquivalenceVerdict v;
  v.raw_response = std::string(raw);
  v.probe_year = probe_year;
  const std::string token = normalized_first_token(raw);
  if (token == "yes") {
    v.value = VerdictValue::Same;
  } else if (token == "no") {
    v.value = VerdictValue::Different;
  } else {
    v.value = VerdictValue::Unparseable;
  }
  return v;
}

EquivalenceMode parse_equivalence_mode(std::string_view s) {
  const std::string t = to_lower(trim(s));
  if (t == "direct") return EquivalenceMode::DirectPrompt;
  if (t == "answer-compare") return EquivalenceMode::AnswerThenCompare;
  throw ConfigError("unknown equivalence mode \"" + std::string(s) + "\"");
}

std::string to_string(EquivalenceMode mode) {
  return mode == EquivalenceMode::DirectPrompt ? "direct" : "answer-compare";
}

UnparseablePolicy parse_unparseable_policy(std::string_view s) {
  const std::string t = to_lower(trim(s));
  if (t == "same") return UnparseablePolicy::TreatAsSame;
  if (t == "different") return UnparseablePolicy::TreatAsDifferent;
  throw ConfigError("unknown unparseable policy \"" + std::string(s) + "\"");
}

std::string to_string(UnparseablePolicy policy) {
  return policy == UnparseablePolicy::TreatAsSame ? "same" : "different";
}

EquivalenceVerdict test_equivalence(Oracle& oracle, const EquivalencePromptTemplate& tmpl,
                                    const Question& q, TimeRange range, int probe_year,
                                    EquivalenceMode mode) {
  validate_range(range);
  if (!range.contains(probe_year) || probe_year == range.start_year) {
    throw Error("probe year " + std::to_string(probe_year) + " outside (" +
                std::to_string(range.start_year) + ", " +
                std::to_string(range.end_year) + "]");
  }
  const DisambiguatedQuestion dq1 = disambiguate(q, range.start_year);
  const DisambiguatedQuestion dqk = disambiguate(q, probe_year);

  if (mode == EquivalenceMode::DirectPrompt) {
    const std::string prompt = render_equivalence_prompt(tmpl, dq1, dqk);
    return parse_equivalence(oracle.complete(prompt), probe_year);
  }

  const std::string a1 = oracle.complete(dq1.text);
  const std::string ak = oracle.complete(dqk.text);
  EquivalenceVerdict v;
  v.probe_year = probe_year;
  v.raw_response = "A1: " + a1 + " | Ak: " + ak;
  v.value = normalize_answer(a1) == normalize_answer(ak) ? VerdictValue::Same
                                                         : VerdictValue::Different;
  return v;
}

}  // namespace tempamb
