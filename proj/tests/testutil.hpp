#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "httplib.h"
#include "nlohmann/json.hpp"
#include "tempamb/errors.hpp"
#include "tempamb/oracle.hpp"

#ifndef TEMPAMB_TEST_DATA_DIR
#define TEMPAMB_TEST_DATA_DIR "tests/data"
#endif
#ifndef TEMPAMB_TEST_GOLDEN_DIR
#define TEMPAMB_TEST_GOLDEN_DIR "tests/golden"
#endif

namespace testutil {

inline std::string data_path(const std::string& name) {
  return std::string(TEMPAMB_TEST_DATA_DIR) + "/" + name;
}

inline std::string golden_path(const std::string& name) {
  return std::string(TEMPAMB_TEST_GOLDEN_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    for (int i = 0; i < 64; ++i) {
      auto candidate = base / ("tempamb_test_" + std::to_string(rd()));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("could not create temp dir");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Replays a fixed list of responses and records every prompt it sees.
class ScriptedOracle : public tempamb::Oracle {
 public:
  explicit ScriptedOracle(std::vector<std::string> responses)
      : responses_(std::move(responses)) {}

  std::string complete(const std::string& prompt) override {
    prompts.push_back(prompt);
    if (next_ >= responses_.size()) throw tempamb::Error("ScriptedOracle: script exhausted");
    return responses_[next_++];
  }

  std::vector<std::string> prompts;

 private:
  std::vector<std::string> responses_;
  std::size_t next_ = 0;
};

class ConstantOracle : public tempamb::Oracle {
 public:
  explicit ConstantOracle(std::string response) : response_(std::move(response)) {}
  std::string complete(const std::string& prompt) override {
    prompts.push_back(prompt);
    return response_;
  }
  std::vector<std::string> prompts;

 private:
  std::string response_;
};

// Pass-through wrapper counting completions on the wrapped oracle.
class CountingOracle : public tempamb::Oracle {
 public:
  explicit CountingOracle(tempamb::Oracle& inner) : inner_(inner) {}
  std::string complete(const std::string& prompt) override {
    calls.fetch_add(1);
    return inner_.complete(prompt);
  }
  std::atomic<std::size_t> calls{0};

 private:
  tempamb::Oracle& inner_;
};

// Minimal local chat-completions endpoint for exercising ChatEndpointOracle
// without the network. The responder maps the user message content to a
// (status, body) pair; the default wraps the content-independent reply "Yes".
class LocalChatServer {
 public:
  using Responder = std::function<std::pair<int, std::string>(const std::string&)>;

  static std::string chat_body(const std::string& content) {
    nlohmann::json body = {
        {"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
    return body.dump();
  }

  explicit LocalChatServer(Responder responder = nullptr)
      : responder_(std::move(responder)) {
    if (!responder_) {
      responder_ = [](const std::string&) { return std::make_pair(200, chat_body("Yes")); };
    }
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   hits.fetch_add(1);
                   std::string content;
                   try {
                     auto body = nlohmann::json::parse(req.body);
                     content = body.at("messages").at(0).at("content").get<std::string>();
                     last_model = body.value("model", "");
                     last_auth = req.get_header_value("Authorization");
                   } catch (const std::exception&) {
                     res.status = 400;
                     res.set_content("bad request", "text/plain");
                     return;
                   }
                   auto [status, payload] = responder_(content);
                   res.status = status;
                   res.set_content(payload, "application/json");
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("could not bind local chat server");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~LocalChatServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::atomic<std::size_t> hits{0};
  std::string last_model;
  std::string last_auth;

 private:
  httplib::Server server_;
  Responder responder_;
  int port_ = 0;
  std::thread thread_;
};

// setenv wrapper restoring the previous value when destroyed.
class EnvGuard {
 public:
  EnvGuard(std::string name, const std::string& value) : name_(std::move(name)) {
    const char* old = std::getenv(name_.c_str());
    if (old) previous_ = old;
    ::setenv(name_.c_str(), value.c_str(), 1);
  }
  ~EnvGuard() {
    if (previous_) {
      ::setenv(name_.c_str(), previous_->c_str(), 1);
    } else {
      ::unsetenv(name_.c_str());
    }
  }
  EnvGuard(const EnvGuard&) = delete;
  EnvGuard& operator=(const EnvGuard&) = delete;

 private:
  std::string name_;
  std::optional<std::string> previous_;
};

}  // namespace testutil
