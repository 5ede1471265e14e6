#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace tempamb {

// ---------------------------------------------------------------------------
// Labels and sources
// ---------------------------------------------------------------------------

/// Ambiguous is the positive class for every metric.
enum class Label { Ambiguous, Unambiguous };

std::string to_string(Label label);                       // "ambiguous" / "unambiguous"
std::optional<Label> try_parse_label(std::string_view s); // case-insensitive
Label parse_label(std::string_view s);                    // throws UnknownLabel

enum class Source { ArchivalQA, SituatedQA, AmbigQA, Other };

std::string to_string(Source source);
Source parse_source(std::string_view s);  // case-insensitive; unknown strings map to Other

struct Question {
  std::string id;
  std::string text;
  std::optional<Label> gold_label;
  Source source = Source::Other;
};

// ---------------------------------------------------------------------------
// Time ranges
// ---------------------------------------------------------------------------

/// Inclusive year interval. A usable range has start_year < end_year, i.e.
/// at least one candidate year beyond the anchor.
struct TimeRange {
  int start_year = 0;
  int end_year = 0;

  int length() const { return end_year - start_year + 1; }
  bool contains(int year) const { return year >= start_year && year <= end_year; }
  bool operator==(const TimeRange&) const = default;
};

/// Throws DegenerateRange unless start_year < end_year.
TimeRange validate_range(TimeRange range);

/// Explicit override wins; otherwise ArchivalQA maps to 1987-2007 and every
/// other source to 2000-2024.
TimeRange resolve_range(Source source, std::optional<TimeRange> override_range = {});

struct DisambiguatedQuestion {
  Question base;
  int year = 0;
  std::string text;  // always ends with "as of <year>?"
};

// ---------------------------------------------------------------------------
// Equivalence verdicts
// ---------------------------------------------------------------------------

enum class VerdictValue { Same, Different, Unparseable };

std::string to_string(VerdictValue v);
VerdictValue parse_verdict_value(std::string_view s);

struct EquivalenceVerdict {
  VerdictValue value = VerdictValue::Unparseable;
  std::string raw_response;
  int probe_year = 0;

  bool operator==(const EquivalenceVerdict&) const = default;
};

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

enum class StrategyKind {
  Linear,
  SkipList,
  Random,
  DacFull,
  DacHalfLtr,
  DacHalfRtl,
  ZeroShot,
  FewShot,
};

/// Parsed form of the CLI strategy strings: "linear", "skip:<s>",
/// "random:<k>[:seed=<n>]", "dac", "dac:half-ltr", "dac:half-rtl",
/// "zero-shot", "few-shot[:file=<path>]".
struct StrategySpec {
  StrategyKind kind = StrategyKind::Linear;
  std::optional<int> interval;             // SkipList; >= 1
  std::optional<int> samples;              // Random; >= 1
  std::optional<std::uint64_t> seed;       // Random
  std::optional<std::string> exemplar_file;  // FewShot override

  static StrategySpec parse(std::string_view s);  // throws ConfigError
  std::string to_string() const;

  bool is_search() const;
  bool is_baseline() const { return !is_search(); }
  bool operator==(const StrategySpec&) const = default;
};

// ---------------------------------------------------------------------------
// Outcomes
// ---------------------------------------------------------------------------

/// Result of classifying one question. Search strategies fill witness/trace;
/// prompt baselines leave them empty and record the raw completion instead.
struct SearchOutcome {
  std::string question_id;
  Label predicted = Label::Unambiguous;
  std::optional<std::pair<int, int>> witness;  // (t1, year_k)
  int comparisons = 0;
  std::vector<EquivalenceVerdict> trace;
  StrategySpec strategy;

  std::optional<std::string> baseline_raw;  // baseline rows only
  bool unparseable = false;                 // baseline fell back to the default label

  nlohmann::ordered_json to_json() const;
  static SearchOutcome from_json(const nlohmann::json& j);

  bool operator==(const SearchOutcome&) const = default;
};

/// One JSON object, one line; stable key order for byte-identical reruns.
std::string to_jsonl(const SearchOutcome& outcome);

}  // namespace tempamb
