#include "tempamb/domain.hpp"

#include <charconv>

#include "tempamb/errors.hpp"
#include "tempamb/util.hpp"

namespace tempamb {

std::string to_string(Label label) {
  return label == Label::Ambiguous ? "ambiguous" : "unambiguous";
}

std::optional<Label> try_parse_label(std::string_view s) {
  const std::string t = to_lower(trim(s));
  if (t == "ambiguous") return Label::Ambiguous;
  if (t == "unambiguous") return Label::Unambiguous;
  return std::nullopt;
}

Label parse_label(std::string_view s) {
  if (auto label = try_parse_label(s)) return *label;
  throw UnknownLabel("unknown label: \"" + std::string(s) + "\"");
}

std::string to_string(Source source) {
  switch (source) {
    case Source::ArchivalQA: return "ArchivalQA";
    case Source::SituatedQA: return "SituatedQA";
    case Source::AmbigQA: return "AmbigQA";
    case Source::Other: break;
  }
  return "Other";
}

Source parse_source(std::string_view s) {
  const std::string t = to_lower(trim(s));
  if (t == "archivalqa") return Source::ArchivalQA;
  if (t == "situatedqa") return Source::SituatedQA;
  if (t == "ambigqa") return Source::AmbigQA;
  return Source::Other;
}

TimeRange validate_range(TimeRange range) {
  if (range.start_year >= range.end_year) {
    throw DegenerateRange("time range " + std::to_string(range.start_year) + ":" +
                          std::to_string(range.end_year) +
                          " has no year to compare against the anchor");
  }
  return range;
}

TimeRange resolve_range(Source source, std::optional<TimeRange> override_range) {
  if (override_range) return validate_range(*override_range);
  if (source == Source::ArchivalQA) return TimeRange{1987, 2007};
  return TimeRange{2000, 2024};
}

std::string to_string(VerdictValue v) {
  switch (v) {
    case VerdictValue::Same: return "same";
    case VerdictValue::Different: return "different";
    case VerdictValue::Unparseable: break;
  }
  return "unparseable";
}

VerdictValue parse_verdict_value(std::string_view s) {
  const std::string t = to_lower(trim(s));
  if (t == "same") return VerdictValue::Same;
  if (t == "different") return VerdictValue::Different;
  if (t == "unparseable") return VerdictValue::Unparseable;
  throw Error("unknown verdict value: \"" + std::string(s) + "\"");
}

namespace {

int parse_positive_int(std::string_view s, const char* what) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || value < 1) {
    throw ConfigError(std::string(what) + " must be a positive integer, got \"" +
                      std::string(s) + "\"");
  }
  return value;
}

std::uint64_t parse_u64(std::string_view s, const char* what) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError(std::string(what) + " must be an unsigned integer, got \"" +
                      std::string(s) + "\"");
  }
  return value;
}

}  // namespace

StrategySpec StrategySpec::parse(std::string_view s) {
  const std::string t = trim(s);
  StrategySpec spec;
  if (t == "linear") {
    spec.kind = StrategyKind::Linear;
    return spec;
  }
  if (t == "dac") {
    spec.kind = StrategyKind::DacFull;
    return spec;
  }
  if (t == "dac:half-ltr") {
    spec.kind = StrategyKind::DacHalfLtr;
    return spec;
  }
  if (t == "dac:half-rtl") {
    spec.kind = StrategyKind::DacHalfRtl;
    return spec;
  }
  if (t == "zero-shot") {
    spec.kind = StrategyKind::ZeroShot;
    return spec;
  }
  if (t.rfind("few-shot", 0) == 0) {
    spec.kind = StrategyKind::FewShot;
    if (t.size() > 8) {
      if (t.rfind("few-shot:file=", 0) != 0 || t.size() == 14) {
        throw ConfigError("expected few-shot[:file=<path>], got \"" + t + "\"");
      }
      spec.exemplar_file = t.substr(14);
    }
    return spec;
  }
  if (t.rfind("skip:", 0) == 0) {
    spec.kind = StrategyKind::SkipList;
    spec.interval = parse_positive_int(std::string_view(t).substr(5), "skip interval");
    return spec;
  }
  if (t.rfind("random:", 0) == 0) {
    spec.kind = StrategyKind::Random;
    const auto parts = split(std::string_view(t).substr(7), ':');
    if (parts.empty() || parts.size() > 2) {
      throw ConfigError("expected random:<k>[:seed=<n>], got \"" + t + "\"");
    }
    spec.samples = parse_positive_int(parts[0], "random sample count");
    if (parts.size() == 2) {
      if (parts[1].rfind("seed=", 0) != 0) {
        throw ConfigError("expected random:<k>[:seed=<n>], got \"" + t + "\"");
      }
      spec.seed = parse_u64(std::string_view(parts[1]).substr(5), "random seed");
    }
    return spec;
  }
  throw ConfigError("unknown strategy \"" + t + "\"");
}

std::string StrategySpec::to_string() const {
  switch (kind) {
    case StrategyKind::Linear: return "linear";
    case StrategyKind::SkipList: return "skip:" + std::to_string(interval.value_or(1));
    case StrategyKind::Random: {
      std::string out = "random:" + std::to_string(samples.value_or(1));
      if (seed) out += ":seed=" + std::to_string(*seed);
      return out;
    }
    case StrategyKind::DacFull: return "dac";
    case StrategyKind::DacHalfLtr: return "dac:half-ltr";
    case StrategyKind::DacHalfRtl: return "dac:half-rtl";
    case StrategyKind::ZeroShot: return "zero-shot";
    case StrategyKind::FewShot:
      return exemplar_file ? "few-shot:file=" + *exemplar_file : "few-shot";
  }
  return "linear";
}

bool StrategySpec::is_search() const {
  return kind != StrategyKind::ZeroShot && kind != StrategyKind::FewShot;
}

nlohmann::ordered_json SearchOutcome::to_json() const {
  nlohmann::ordered_json j;
  j["question_id"] = question_id;
  j["predicted"] = tempamb::to_string(predicted);
  if (witness) {
    j["witness"] = {witness->first, witness->second};
  } else {
    j["witness"] = nullptr;
  }
  j["comparisons"] = comparisons;
  j["strategy"] = strategy.to_string();
  nlohmann::ordered_json trace_json = nlohmann::ordered_json::array();
  for (const auto& v : trace) {
    trace_json.push_back({{"year", v.probe_year},
                          {"verdict", tempamb::to_string(v.value)},
                          {"raw", v.raw_response}});
  }
  j["trace"] = std::move(trace_json);
  if (baseline_raw) j["raw"] = *baseline_raw;
  if (strategy.is_baseline()) j["unparseable"] = unparseable;
  return j;
}

SearchOutcome SearchOutcome::from_json(const nlohmann::json& j) {
  SearchOutcome out;
  out.question_id = j.at("question_id").get<std::string>();
  out.predicted = parse_label(j.at("predicted").get<std::string>());
  if (!j.at("witness").is_null()) {
    const auto& w = j.at("witness");
    out.witness = std::make_pair(w.at(0).get<int>(), w.at(1).get<int>());
  }
  out.comparisons = j.at("comparisons").get<int>();
  out.strategy = StrategySpec::parse(j.at("strategy").get<std::string>());
  for (const auto& t : j.at("trace")) {
    EquivalenceVerdict v;
    v.probe_year = t.at("year").get<int>();
    v.value = parse_verdict_value(t.at("verdict").get<std::string>());
    v.raw_response = t.at("raw").get<std::string>();
    out.trace.push_back(std::move(v));
  }
  if (j.contains("raw")) out.baseline_raw = j.at("raw").get<std::string>();
  if (j.contains("unparseable")) out.unparseable = j.at("unparseable").get<bool>();
  return out;
}

std::string to_jsonl(const SearchOutcome& outcome) { return outcome.to_json().dump(); }

}  // namespace tempamb
