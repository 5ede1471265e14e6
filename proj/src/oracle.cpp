#include "tempamb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "tempamb/detection.hpp"
#include "tempamb/errors.hpp"
#include "tempamb/util.hpp"

namespace tempamb {

namespace {

std::string format_temperature(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", t);
  return buf;
}

std::string kind_name(OracleConfig::Kind kind) {
  return kind == OracleConfig::Kind::ChatEndpoint ? "chat-endpoint" : "synthetic";
}

}  // namespace

// ---------------------------------------------------------------------------
// OracleConfig
// ---------------------------------------------------------------------------

std::string OracleConfig::fingerprint() const {
  std::string model = model_name.value_or("-");
  return kind_name(kind) + "|" + model + "|t=" + format_temperature(temperature);
}

nlohmann::ordered_json OracleConfig::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = kind_name(kind);
  if (endpoint_url) j["endpoint_url"] = *endpoint_url;
  if (model_name) j["model_name"] = *model_name;
  if (api_key_env_var) j["api_key_env_var"] = *api_key_env_var;
  j["temperature"] = temperature;
  j["max_output_tokens"] = max_output_tokens;
  j["request_timeout_ms"] = static_cast<std::int64_t>(request_timeout.count());
  j["max_retries"] = max_retries;
  j["rate_limit_rps"] = rate_limit_rps;
  if (world_path) j["world_path"] = *world_path;
  return j;
}

OracleConfig OracleConfig::from_json(const nlohmann::json& j) {
  OracleConfig cfg;
  if (j.contains("kind")) {
    const std::string k = to_lower(trim(j["kind"].get<std::string>()));
    if (k == "chat-endpoint" || k == "chat") {
      cfg.kind = Kind::ChatEndpoint;
    } else if (k == "synthetic") {
      cfg.kind = Kind::Synthetic;
    } else {
      throw ConfigError("unknown oracle kind \"" + k + "\"");
    }
  }
  if (j.contains("endpoint_url") && !j["endpoint_url"].is_null()) {
    cfg.endpoint_url = j["endpoint_url"].get<std::string>();
  }
  if (j.contains("model_name") && !j["model_name"].is_null()) {
    cfg.model_name = j["model_name"].get<std::string>();
  }
  if (j.contains("api_key_env_var") && !j["api_key_env_var"].is_null()) {
    cfg.api_key_env_var = j["api_key_env_var"].get<std::string>();
  }
  if (j.contains("temperature")) cfg.temperature = j["temperature"].get<double>();
  if (j.contains("max_output_tokens")) {
    cfg.max_output_tokens = j["max_output_tokens"].get<int>();
  }
  if (j.contains("request_timeout_ms")) {
    cfg.request_timeout = std::chrono::milliseconds(j["request_timeout_ms"].get<std::int64_t>());
  }
  if (j.contains("max_retries")) cfg.max_retries = j["max_retries"].get<int>();
  if (j.contains("rate_limit_rps")) cfg.rate_limit_rps = j["rate_limit_rps"].get<double>();
  if (j.contains("world_path") && !j["world_path"].is_null()) {
    cfg.world_path = j["world_path"].get<std::string>();
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// SyntheticWorld
// ---------------------------------------------------------------------------

void SyntheticWorld::add(const std::string& question_id, Timeline points) {
  if (points.empty()) {
    throw Error("timeline for \"" + question_id + "\" is empty");
  }
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].first <= points[i - 1].first) {
      throw Error("timeline for \"" + question_id +
                  "\" is not strictly increasing at year " +
                  std::to_string(points[i].first));
    }
  }
  if (!timelines_.emplace(question_id, std::move(points)).second) {
    throw DuplicateId("duplicate timeline for \"" + question_id + "\"");
  }
}

bool SyntheticWorld::has(const std::string& question_id) const {
  return timelines_.count(question_id) != 0;
}

const SyntheticWorld::Timeline& SyntheticWorld::timeline(
    const std::string& question_id) const {
  auto it = timelines_.find(question_id);
  if (it == timelines_.end()) {
    throw UnknownQuestion("no timeline for \"" + question_id + "\"");
  }
  return it->second;
}

std::string SyntheticWorld::answer(const std::string& question_id, int year) const {
  const Timeline& tl = timeline(question_id);
  if (year < tl.front().first) {
    throw YearBeforeFirstChangePoint("year " + std::to_string(year) +
                                     " precedes first change point " +
                                     std::to_string(tl.front().first) + " for \"" +
                                     question_id + "\"");
  }
  auto it = std::upper_bound(tl.begin(), tl.end(), year,
                             [](int y, const auto& p) { return y < p.first; });
  return std::prev(it)->second;
}

bool SyntheticWorld::changes_within(const std::string& question_id,
                                    TimeRange range) const {
  validate_range(range);
  const std::string anchor = answer(question_id, range.start_year);
  for (int y = range.start_year + 1; y <= range.end_year; ++y) {
    if (answer(question_id, y) != anchor) return true;
  }
  return false;
}

bool SyntheticWorld::multiple_answers(const std::string& question_id) const {
  const Timeline& tl = timeline(question_id);
  for (std::size_t i = 1; i < tl.size(); ++i) {
    if (tl[i].second != tl[0].second) return true;
  }
  return false;
}

SyntheticWorld SyntheticWorld::from_json(const nlohmann::json& j) {
  const nlohmann::json& root =
      (j.is_object() && j.contains("timelines")) ? j["timelines"] : j;
  if (!root.is_object()) {
    throw Error("world JSON must be an object mapping question ids to timelines");
  }
  SyntheticWorld world;
  for (auto it = root.begin(); it != root.end(); ++it) {
    Timeline points;
    for (const auto& entry : it.value()) {
      if (entry.is_array()) {
        points.emplace_back(entry.at(0).get<int>(), entry.at(1).get<std::string>());
      } else {
        points.emplace_back(entry.at("year").get<int>(),
                            entry.at("answer").get<std::string>());
      }
    }
    world.add(it.key(), std::move(points));
  }
  return world;
}

SyntheticWorld SyntheticWorld::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open world file \"" + path + "\"");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid world file \"" + path + "\": " + e.what());
  }
  return from_json(j);
}

// ---------------------------------------------------------------------------
// SyntheticOracle
// ---------------------------------------------------------------------------

SyntheticOracle::SyntheticOracle(SyntheticWorld world) : world_(std::move(world)) {}

void SyntheticOracle::register_question(const Question& q) {
  register_question(q.id, q.text);
}

void SyntheticOracle::register_question(const std::string& id, const std::string& text) {
  if (!world_.has(id)) {
    throw UnknownQuestion("no timeline for \"" + id + "\"");
  }
  base_text_to_id_[base_form(text)] = id;
}

std::string SyntheticOracle::lookup_id(const std::string& base_text) const {
  auto it = base_text_to_id_.find(base_text);
  if (it == base_text_to_id_.end()) {
    throw UnknownQuestion("no registered question matches \"" + base_text + "\"");
  }
  return it->second;
}

std::string SyntheticOracle::complete(const std::string& prompt) {
  std::optional<std::string> q1, q2, classify;
  for (const std::string& line : split(prompt, '\n')) {
    if (line.rfind("Q1: ", 0) == 0) q1 = line.substr(4);
    else if (line.rfind("Q2: ", 0) == 0) q2 = line.substr(4);
    else if (line.rfind("Question: ", 0) == 0) classify = line.substr(10);
  }

  if (q1 && q2) {
    auto p1 = split_disambiguated(*q1);
    auto p2 = split_disambiguated(*q2);
    if (!p1 || !p2) {
      throw Error("equivalence prompt lacks year suffixes: \"" + *q1 + "\" / \"" +
                  *q2 + "\"");
    }
    const std::string id = lookup_id(p1->first);
    const std::string a1 = world_.answer(id, p1->second);
    const std::string a2 = world_.answer(id, p2->second);
    return a1 == a2 ? "Yes" : "No";
  }

  if (classify) {
    const std::string id = lookup_id(base_form(*classify));
    return world_.multiple_answers(id) ? "YES" : "NO";
  }

  auto parts = split_disambiguated(trim(prompt));
  if (!parts) {
    throw Error("synthetic oracle cannot interpret prompt: \"" + trim(prompt) + "\"");
  }
  return world_.answer(lookup_id(parts->first), parts->second);
}

// ---------------------------------------------------------------------------
// ResponseCache
// ---------------------------------------------------------------------------

namespace {
constexpr char kKeySep = '\x1f';

std::string cache_key(const std::string& fingerprint, const std::string& prompt_hash) {
  return fingerprint + kKeySep + prompt_hash;
}
}  // namespace

ResponseCache::ResponseCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;  // fresh cache
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw CacheIoError("cache file \"" + path_ + "\" line " + std::to_string(row) +
                         ": " + e.what());
    }
    try {
      mem_.emplace(cache_key(j.at("oracle_fingerprint").get<std::string>(),
                             j.at("prompt_hash").get<std::string>()),
                   j.at("response").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw CacheIoError("cache file \"" + path_ + "\" line " + std::to_string(row) +
                         ": " + e.what());
    }
  }
}

std::optional<std::string> ResponseCache::get(const std::string& fingerprint,
                                              const std::string& prompt_hash) const {
  std::shared_lock lock(mu_);
  auto it = mem_.find(cache_key(fingerprint, prompt_hash));
  if (it == mem_.end()) return std::nullopt;
  return it->second;
}

bool ResponseCache::put(const CacheRecord& record) {
  std::unique_lock lock(mu_);
  auto [it, inserted] =
      mem_.emplace(cache_key(record.oracle_fingerprint, record.prompt_hash),
                   record.response);
  if (!inserted) return false;
  std::ofstream out(path_, std::ios::app);
  if (!out) {
    mem_.erase(it);
    throw CacheIoError("cannot append to cache file \"" + path_ + "\"");
  }
  nlohmann::ordered_json j;
  j["oracle_fingerprint"] = record.oracle_fingerprint;
  j["prompt_hash"] = record.prompt_hash;
  j["response"] = record.response;
  j["created_at"] = record.created_at;
  out << j.dump() << '\n';
  out.flush();
  if (!out) {
    mem_.erase(it);
    throw CacheIoError("write to cache file \"" + path_ + "\" failed");
  }
  return true;
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mu_);
  return mem_.size();
}

std::map<std::string, std::size_t> ResponseCache::records_per_fingerprint() const {
  std::shared_lock lock(mu_);
  std::map<std::string, std::size_t> counts;
  for (const auto& [key, value] : mem_) {
    (void)value;
    counts[key.substr(0, key.find(kKeySep))]++;
  }
  return counts;
}

void ResponseCache::clear() {
  std::unique_lock lock(mu_);
  mem_.clear();
  std::ofstream out(path_, std::ios::trunc);
  if (!out) throw CacheIoError("cannot truncate cache file \"" + path_ + "\"");
}

std::string ResponseCache::make_prompt_hash(std::string_view prompt) {
  return hex64(fnv1a64(prompt));
}

// ---------------------------------------------------------------------------
// CachedOracle
// ---------------------------------------------------------------------------

CachedOracle::CachedOracle(std::shared_ptr<Oracle> inner,
                           std::shared_ptr<ResponseCache> cache, std::string fingerprint)
    : inner_(std::move(inner)), cache_(std::move(cache)),
      fingerprint_(std::move(fingerprint)) {}

std::string CachedOracle::complete(const std::string& prompt) {
  const std::string hash = ResponseCache::make_prompt_hash(prompt);
  if (auto hit = cache_->get(fingerprint_, hash)) return *hit;
  std::string response = inner_->complete(prompt);
  cache_->put({fingerprint_, hash, response, iso8601_now()});
  return response;
}

// ---------------------------------------------------------------------------
// RateLimiter
// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(double permits_per_second, Clock clock, Sleeper sleeper)
    : rps_(permits_per_second),
      clock_(clock ? std::move(clock) : [] { return std::chrono::steady_clock::now(); }),
      sleeper_(sleeper ? std::move(sleeper) : [](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
      }) {}

void RateLimiter::acquire() {
  if (rps_ <= 0.0) return;
  // Sub-unit rates still admit one request per window.
  const std::size_t permits =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(rps_)));
  for (;;) {
    std::chrono::milliseconds wait{0};
    {
      std::lock_guard<std::mutex> lock(mu_);
      const TimePoint now = clock_();
      const TimePoint cutoff = now - std::chrono::seconds(1);
      sent_.erase(std::remove_if(sent_.begin(), sent_.end(),
                                 [&](TimePoint t) { return t <= cutoff; }),
                  sent_.end());
      if (sent_.size() < permits) {
        sent_.push_back(now);
        return;
      }
      const TimePoint oldest = *std::min_element(sent_.begin(), sent_.end());
      wait = std::chrono::duration_cast<std::chrono::milliseconds>(
          oldest + std::chrono::seconds(1) - now);
    }
    sleeper_(std::max(wait, std::chrono::milliseconds(1)));
  }
}

// ---------------------------------------------------------------------------
// ChatEndpointOracle
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kCompletionsSuffix = "/chat/completions";

void split_url(const std::string& url, std::string& base, std::string& path) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw ConfigError("endpoint_url \"" + url + "\" has no scheme");
  }
  const std::size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) {
    base = url;
    path.clear();
  } else {
    base = url.substr(0, slash);
    path = url.substr(slash);
  }
  while (!path.empty() && path.back() == '/') path.pop_back();
}

bool is_timeout_error(httplib::Error err) {
  return err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
         err == httplib::Error::Write;
}

}  // namespace

ChatEndpointOracle::ChatEndpointOracle(OracleConfig cfg) : cfg_(std::move(cfg)) {
  if (!cfg_.endpoint_url) throw ConfigError("chat oracle needs endpoint_url");
  if (!cfg_.model_name) throw ConfigError("chat oracle needs model_name");
  std::string path;
  split_url(*cfg_.endpoint_url, base_url_, path);
  if (path.size() >= kCompletionsSuffix.size() &&
      path.compare(path.size() - kCompletionsSuffix.size(), kCompletionsSuffix.size(),
                   kCompletionsSuffix) == 0) {
    completions_path_ = path;
  } else {
    completions_path_ = path + std::string(kCompletionsSuffix);
  }
  if (cfg_.api_key_env_var) {
    const char* key = std::getenv(cfg_.api_key_env_var->c_str());
    if (!key || !*key) {
      throw ConfigError("environment variable " + *cfg_.api_key_env_var +
                        " is not set");
    }
    api_key_ = key;
  }
  if (cfg_.rate_limit_rps > 0.0) {
    limiter_ = std::make_shared<RateLimiter>(cfg_.rate_limit_rps);
  }
}

std::string ChatEndpointOracle::complete(const std::string& prompt) {
  nlohmann::ordered_json body;
  body["model"] = *cfg_.model_name;
  body["messages"] = nlohmann::ordered_json::array(
      {nlohmann::ordered_json{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = cfg_.temperature;
  body["max_tokens"] = cfg_.max_output_tokens;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const int attempts = std::max(1, cfg_.max_retries + 1);
  bool timed_out = false;
  std::string last_failure = "no attempt made";

  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      const auto backoff = std::min<std::int64_t>(250LL << (attempt - 1), 5000);
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
    }
    if (limiter_) limiter_->acquire();

    httplib::Client client(base_url_);
    const auto timeout = cfg_.request_timeout;
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    auto res = client.Post(completions_path_, headers, payload, "application/json");
    if (!res) {
      timed_out = is_timeout_error(res.error());
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    timed_out = false;
    if (res->status == 429 || res->status >= 500) {
      last_failure = "status " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    if (res->status != 200) {
      throw EndpointError(res->status, res->body);
    }
    try {
      const auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw EndpointError(res->status,
                          std::string("malformed completion body: ") + e.what());
    }
  }

  if (timed_out) {
    throw Timeout("request to " + base_url_ + completions_path_ + " timed out after " +
                  std::to_string(attempts) + " attempts");
  }
  throw RetriesExhausted("gave up on " + base_url_ + completions_path_ + " after " +
                         std::to_string(attempts) + " attempts; last failure: " +
                         last_failure);
}

// ---------------------------------------------------------------------------
// Factory
// ---------------------------------------------------------------------------

std::unique_ptr<Oracle> make_oracle(const OracleConfig& cfg) {
  if (cfg.kind == OracleConfig::Kind::ChatEndpoint) {
    return std::make_unique<ChatEndpointOracle>(cfg);
  }
  if (!cfg.world_path) {
    throw ConfigError("synthetic oracle needs world_path");
  }
  return std::make_unique<SyntheticOracle>(SyntheticWorld::load(*cfg.world_path));
}

}  // namespace tempamb
