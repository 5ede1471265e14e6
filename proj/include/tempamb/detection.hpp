#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tempamb/domain.hpp"
#include "tempamb/oracle.hpp"

namespace tempamb {

inline constexpr std::string_view kEquivalenceInstruction =
    "Is the answer for Q1 and Q2 same? Write only one word between 'Yes' and 'No'.";

/// Canonical base of a question text: trailing whitespace and one trailing
/// "?" removed, plus any existing "as of <year>" tail so disambiguating an
/// already-disambiguated text never stacks suffixes.
std::string base_form(std::string_view text);

/// Splits "<base> as of <year>?" into its parts; nullopt when the text does
/// not carry the suffix.
std::optional<std::pair<std::string, int>> split_disambiguated(std::string_view text);

/// Appends the year suffix: "<base> as of <year>?".
DisambiguatedQuestion disambiguate(const Question& q, int year);

struct EquivalencePromptTemplate {
  struct Exemplar {
    std::string q1;
    std::string q2;
    std::string verdict;  // "Yes" / "No"
  };

  std::string instruction{kEquivalenceInstruction};
  std::vector<Exemplar> exemplars;

  static EquivalencePromptTemplate zero_shot();
  /// The two stock exemplars (india president -> No, ashwamedha coins -> Yes).
  static EquivalencePromptTemplate default_few_shot();
  /// JSON override file: {"instruction": ..., "exemplars": [[q1, q2, verdict], ...]}.
  static EquivalencePromptTemplate load(const std::string& path);
};

/// Byte-exact rendering: each exemplar block is
/// "Q1: <q1>\nQ2: <q2>\n<instruction>\nAnswer: <verdict>\n\n", the target
/// block ends with "Answer:" awaiting completion. Throws SameYear when both
/// questions carry the same year.
std::string render_equivalence_prompt(const EquivalencePromptTemplate& tmpl,
                                      const DisambiguatedQuestion& dq1,
                                      const DisambiguatedQuestion& dqk);

/// Normalize the response (first token, punctuation stripped, lowercased):
/// "yes" -> Same, "no" -> Different, anything else -> Unparseable. The raw
/// response is preserved verbatim in the verdict.
EquivalenceVerdict parse_equivalence(std::string_view raw, int probe_year);

enum class EquivalenceMode { DirectPrompt, AnswerThenCompare };

EquivalenceMode parse_equivalence_mode(std::string_view s);  // "direct" | "answer-compare"
std::string to_string(EquivalenceMode mode);

/// How an Unparseable verdict counts when deciding whether to stop a
/// search. The default treats junk output as "not evidence of ambiguity".
enum class UnparseablePolicy { TreatAsSame, TreatAsDifferent };

UnparseablePolicy parse_unparseable_policy(std::string_view s);  // "same" | "different"
std::string to_string(UnparseablePolicy policy);

/// One equivalence probe: anchor year vs probe year.
///   DirectPrompt      - one oracle call with the rendered equivalence prompt.
///   AnswerThenCompare - two oracle calls, one per disambiguated question;
///                       answers are normalized and string-compared.
EquivalenceVerdict test_equivalence(Oracle& oracle, const EquivalencePromptTemplate& tmpl,
                                    const Question& q, TimeRange range, int probe_year,
                                    EquivalenceMode mode);

}  // namespace tempamb
