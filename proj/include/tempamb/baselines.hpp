#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tempamb/domain.hpp"
#include "tempamb/oracle.hpp"

namespace tempamb {

inline constexpr std::string_view kClassificationInstruction =
    "Is the following question ambiguous? Just give answer as 'YES' or 'NO'.";

struct ClassificationPromptTemplate {
  struct Exemplar {
    std::string question;
    std::string verdict;  // "Yes" / "No"
  };

  std::string instruction{kClassificationInstruction};
  std::vector<Exemplar> exemplars;

  static ClassificationPromptTemplate zero_shot();
  /// The six stock exemplars (Harvick, Maya Hieroglyphics, Brian Deletka,
  /// Jalal Talabani, Blankenship, Hackensack).
  static ClassificationPromptTemplate default_few_shot();
  /// JSON override file: {"instruction": ..., "exemplars": [[question, verdict], ...]}.
  static ClassificationPromptTemplate load(const std::string& path);
};

/// Byte-exact rendering: each exemplar as
/// "<instruction>\nQuestion: <text>\nAnswer: <verdict>\n\n", then the target
/// as "<instruction>\nQuestion: <text>\nAnswer:".
std::string render_classification_prompt(const ClassificationPromptTemplate& tmpl,
                                         const Question& q);

/// One oracle call, first token parsed case-insensitively: "yes" means
/// Ambiguous, "no" Unambiguous, anything else falls back to default_label
/// with the row flagged unparseable. No probes, no witness; comparisons 0.
SearchOutcome classify_direct(Oracle& oracle, const ClassificationPromptTemplate& tmpl,
                              const Question& q, const StrategySpec& spec,
                              Label default_label = Label::Unambiguous);

}  // namespace tempamb
