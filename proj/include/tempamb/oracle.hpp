#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tempamb/domain.hpp"

namespace tempamb {

/// The thing that answers prompts. Implementations must be safe to call
/// concurrently once configured.
class Oracle {
public:
  virtual ~Oracle() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

struct OracleConfig {
  enum class Kind { ChatEndpoint, Synthetic };

  Kind kind = Kind::Synthetic;
  std::optional<std::string> endpoint_url;
  std::optional<std::string> model_name;
  std::optional<std::string> api_key_env_var;
  double temperature = 0.0;
  int max_output_tokens = 16;
  std::chrono::milliseconds request_timeout{30000};
  int max_retries = 3;
  double rate_limit_rps = 0.0;  // 0 = unlimited
  std::optional<std::string> world_path;  // Synthetic

  /// Identity under which responses are cached: kind + model + temperature.
  std::string fingerprint() const;

  nlohmann::ordered_json to_json() const;
  static OracleConfig from_json(const nlohmann::json& j);
};

// ---------------------------------------------------------------------------
// Synthetic world
// ---------------------------------------------------------------------------

/// Piecewise-constant answer timelines standing in for a model's world
/// knowledge. The answer at a year is the answer of the latest change point
/// at or before it.
class SyntheticWorld {
public:
  using Timeline = std::vector<std::pair<int, std::string>>;

  SyntheticWorld() = default;

  /// Change points must be non-empty and strictly increasing in year.
  void add(const std::string& question_id, Timeline points);

  bool has(const std::string& question_id) const;
  const Timeline& timeline(const std::string& question_id) const;  // UnknownQuestion

  /// Step-function lookup; throws YearBeforeFirstChangePoint when the year
  /// precedes the first change point.
  std::string answer(const std::string& question_id, int year) const;

  /// Ground truth over a range: some year past the anchor answers
  /// differently than the anchor year.
  bool changes_within(const std::string& question_id, TimeRange range) const;

  /// The timeline holds more than one distinct answer string.
  bool multiple_answers(const std::string& question_id) const;

  const std::map<std::string, Timeline>& timelines() const { return timelines_; }

  static SyntheticWorld from_json(const nlohmann::json& j);
  static SyntheticWorld load(const std::string& path);

private:
  std::map<std::string, Timeline> timelines_;
};

/// Deterministic oracle backed by a SyntheticWorld. Recognizes the three
/// prompt shapes the pipeline emits:
///   - equivalence prompts (lines starting "Q1: " / "Q2: "): evaluates both
///     embedded years against the timeline and answers "Yes"/"No"
///   - classification prompts (lines starting "Question: "): answers "YES"
///     when the timeline holds more than one answer, else "NO"
///   - a bare disambiguated question: answers with the timeline value
///
/// Register every question before issuing prompts; registration is not
/// thread-safe, completion is.
class SyntheticOracle : public Oracle {
public:
  explicit SyntheticOracle(SyntheticWorld world);

  void register_question(const Question& q);
  void register_question(const std::string& id, const std::string& text);

  std::string complete(const std::string& prompt) override;

  const SyntheticWorld& world() const { return world_; }

private:
  std::string lookup_id(const std::string& base_text) const;

  SyntheticWorld world_;
  std::unordered_map<std::string, std::string> base_text_to_id_;
};

// ---------------------------------------------------------------------------
// Response cache
// ---------------------------------------------------------------------------

struct CacheRecord {
  std::string oracle_fingerprint;
  std::string prompt_hash;
  std::string response;
  std::string created_at;
};

/// Append-only JSONL cache, loaded into memory at startup. Duplicate keys
/// keep the first stored response. Reads may run concurrently; appends are
/// serialized.
class ResponseCache {
public:
  explicit ResponseCache(std::string path);

  std::optional<std::string> get(const std::string& fingerprint,
                                 const std::string& prompt_hash) const;

  /// Appends when the key is new; returns whether a record was written.
  bool put(const CacheRecord& record);

  std::size_t size() const;
  const std::string& path() const { return path_; }

  std::map<std::string, std::size_t> records_per_fingerprint() const;
  void clear();

  static std::string make_prompt_hash(std::string_view prompt);

private:
  mutable std::shared_mutex mu_;
  std::string path_;
  std::unordered_map<std::string, std::string> mem_;
};

/// Cache decorator: hit short-circuits, miss delegates and records.
class CachedOracle : public Oracle {
public:
  CachedOracle(std::shared_ptr<Oracle> inner, std::shared_ptr<ResponseCache> cache,
               std::string fingerprint);

  std::string complete(const std::string& prompt) override;

private:
  std::shared_ptr<Oracle> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::string fingerprint_;
};

// ---------------------------------------------------------------------------
// Rate limiting
// ---------------------------------------------------------------------------

/// Sliding-window limiter shared by all workers hitting one endpoint: at
/// most floor(rps) acquisitions in any trailing one-second window. The
/// clock and sleeper are injectable for tests.
class RateLimiter {
public:
  using TimePoint = std::chrono::steady_clock::time_point;
  using Clock = std::function<TimePoint()>;
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit RateLimiter(double permits_per_second, Clock clock = {}, Sleeper sleeper = {});

  void acquire();

private:
  double rps_;
  Clock clock_;
  Sleeper sleeper_;
  std::mutex mu_;
  std::vector<TimePoint> sent_;  // send times within the trailing window
};

// ---------------------------------------------------------------------------
// Chat endpoint
// ---------------------------------------------------------------------------

/// OpenAI-compatible chat-completions client. Transient failures (connect
/// errors, timeouts, 429, 5xx) retry with exponential backoff up to
/// max_retries; other HTTP errors surface immediately as EndpointError.
class ChatEndpointOracle : public Oracle {
public:
  explicit ChatEndpointOracle(OracleConfig cfg);

  std::string complete(const std::string& prompt) override;

private:
  OracleConfig cfg_;
  std::string base_url_;
  std::string completions_path_;
  std::string api_key_;
  std::shared_ptr<RateLimiter> limiter_;
};

/// Builds the oracle for a config; Synthetic configs load their world from
/// world_path. Question registration is the caller's job.
std::unique_ptr<Oracle> make_oracle(const OracleConfig& cfg);

}  // namespace tempamb
