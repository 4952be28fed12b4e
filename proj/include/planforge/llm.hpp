#pragma once

// Chat-completions client with record/replay. Every caller goes through the
// LLMClient interface, so tests run against ReplayClient or ScriptedClient.

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>
#include <thread>

#include <nlohmann/json.hpp>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

#include "planforge/digest.hpp"

namespace planforge {

class LLMError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LLMUnavailable : public LLMError {
 public:
  explicit LLMUnavailable(const std::string& why) : LLMError("llm unavailable: " + why) {}
};

class ReplayMiss : public LLMError {
 public:
  explicit ReplayMiss(std::string digest)
      : LLMError("replay miss: no recorded response for request " + digest), digest_(std::move(digest)) {}
  const std::string& digest() const { return digest_; }

 private:
  std::string digest_;
};

// Output hit max_output_tokens; the truncated text is kept for the caller.
class BudgetExceeded : public LLMError {
 public:
  explicit BudgetExceeded(std::string partial)
      : LLMError("llm output truncated at the token budget"), partial_(std::move(partial)) {}
  const std::string& partial() const { return partial_; }

 private:
  std::string partial_;
};

struct LLMConfig {
  std::string endpoint = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model = "default";
  std::string token_env = "PLANFORGE_LLM_TOKEN";
  std::size_t max_output_tokens = 16384;
  double temperature = 0.0;
  double timeout_s = 120.0;
  unsigned retries = 2;
  unsigned backoff_ms = 500;
  unsigned max_in_flight = 4;

  void check() const {
    if (max_output_tokens == 0) throw std::invalid_argument("max_output_tokens must be > 0");
    if (!(timeout_s > 0)) throw std::invalid_argument("timeout must be > 0");
    if (max_in_flight == 0) throw std::invalid_argument("max_in_flight must be > 0");
  }

  static LLMConfig from_json(const nlohmann::json& j) {
    LLMConfig c;
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model = j.value("model", c.model);
    c.token_env = j.value("token_env", c.token_env);
    c.max_output_tokens = j.value("max_output_tokens", c.max_output_tokens);
    c.temperature = j.value("temperature", c.temperature);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.retries = j.value("retries", c.retries);
    c.backoff_ms = j.value("backoff_ms", c.backoff_ms);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.check();
    return c;
  }
};

// Output ceilings for the two generation settings.
inline constexpr std::size_t kCoTMaxOutputTokens = 65536;
inline constexpr std::size_t kEvalMaxOutputTokens = 16384;

struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
  std::size_t max_tokens = kEvalMaxOutputTokens;
  double temperature = 0.0;

  // Wire body. nlohmann::json keeps object keys sorted, so dump() is canonical.
  nlohmann::json body() const {
    nlohmann::json msgs = nlohmann::json::array();
    if (!system.empty()) msgs.push_back({{"role", "system"}, {"content", system}});
    msgs.push_back({{"role", "user"}, {"content", user}});
    return {{"model", model}, {"messages", msgs}, {"max_tokens", max_tokens}, {"temperature", temperature}};
  }

  std::string digest() const { return sha256_hex(body().dump()); }
};

inline ChatRequest make_request(const LLMConfig& cfg, std::string system, std::string user) {
  return {cfg.model, std::move(system), std::move(user), cfg.max_output_tokens, cfg.temperature};
}

struct ChatResponse {
  std::string text;
  std::string finish_reason = "stop";
  std::optional<std::size_t> completion_tokens;

  nlohmann::json to_json() const {
    nlohmann::json j{{"text", text}, {"finish_reason", finish_reason}};
    j["completion_tokens"] = completion_tokens ? nlohmann::json(*completion_tokens) : nlohmann::json(nullptr);
    return j;
  }
  static ChatResponse from_json(const nlohmann::json& j) {
    ChatResponse r;
    r.text = j.at("text").get<std::string>();
    r.finish_reason = j.value("finish_reason", std::string("stop"));
    if (j.contains("completion_tokens") && !j["completion_tokens"].is_null())
      r.completion_tokens = j["completion_tokens"].get<std::size_t>();
    return r;
  }
};

class LLMClient {
 public:
  virtual ~LLMClient() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;

  std::string complete(const LLMConfig& cfg, const std::string& system, const std::string& user) {
    return complete(make_request(cfg, system, user)).text;
  }
};

// ---------------------------------------------------------------------------
// Session log: line-delimited {digest, request, response, latency_ms, timestamp}
// ---------------------------------------------------------------------------

struct SessionEntry {
  std::string digest;
  nlohmann::json request;
  ChatResponse response;
  double latency_ms = 0;
  std::string timestamp;

  nlohmann::json to_json() const {
    return {{"digest", digest},
            {"request", request},
            {"response", response.to_json()},
            {"latency_ms", latency_ms},
            {"timestamp", timestamp}};
  }
};

class SessionLog {
 public:
  SessionLog() = default;
  explicit SessionLog(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line);
      SessionEntry e{j.at("digest").get<std::string>(), j.at("request"), ChatResponse::from_json(j.at("response")),
                     j.value("latency_ms", 0.0), j.value("timestamp", std::string())};
      index(e);
    }
  }

  // Appends and persists. A digest seen before must carry the same request body.
  void append(SessionEntry e) {
    std::lock_guard lock(mu_);
    index(e);
    if (!path_.empty()) {
      std::ofstream out(path_, std::ios::app);
      out << e.to_json().dump() << "\n";
      if (!out) throw std::runtime_error("cannot append to session log " + path_);
    }
  }

  std::optional<ChatResponse> find(const std::string& digest) const {
    std::lock_guard lock(mu_);
    auto it = by_digest_.find(digest);
    if (it == by_digest_.end()) return std::nullopt;
    return entries_[it->second].response;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  std::vector<SessionEntry> entries() const {
    std::lock_guard lock(mu_);
    return entries_;
  }

 private:
  void index(const SessionEntry& e) {
    if (sha256_hex(e.request.dump()) != e.digest)
      throw std::runtime_error("session log entry digest does not match its request");
    auto it = by_digest_.find(e.digest);
    if (it != by_digest_.end() && entries_[it->second].request != e.request)
      throw std::runtime_error("session log digest collision for " + e.digest);
    if (it == by_digest_.end()) by_digest_.emplace(e.digest, entries_.size());
    entries_.push_back(e);
  }

  std::string path_;
  mutable std::mutex mu_;
  std::vector<SessionEntry> entries_;
  std::map<std::string, std::size_t> by_digest_;
};

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Clients
// ---------------------------------------------------------------------------

class ReplayClient : public LLMClient {
 public:
  explicit ReplayClient(std::shared_ptr<const SessionLog> log) : log_(std::move(log)) {}

  ChatResponse complete(const ChatRequest& req) override {
    std::string d = req.digest();
    auto r = log_->find(d);
    if (!r) throw ReplayMiss(d);
    if (r->finish_reason == "length") throw BudgetExceeded(r->text);
    return *r;
  }

 private:
  std::shared_ptr<const SessionLog> log_;
};

class RecordingClient : public LLMClient {
 public:
  RecordingClient(std::shared_ptr<LLMClient> inner, std::shared_ptr<SessionLog> log)
      : inner_(std::move(inner)), log_(std::move(log)) {}

  ChatResponse complete(const ChatRequest& req) override {
    auto t0 = std::chrono::steady_clock::now();
    ChatResponse r;
    try {
      r = inner_->complete(req);
    } catch (const BudgetExceeded& e) {
      r = {e.partial(), "length", std::nullopt};
      record(req, r, t0);
      throw;
    }
    record(req, r, t0);
    return r;
  }

 private:
  void record(const ChatRequest& req, const ChatResponse& r, std::chrono::steady_clock::time_point t0) {
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    log_->append({req.digest(), req.body(), r, ms, utc_timestamp()});
  }

  std::shared_ptr<LLMClient> inner_;
  std::shared_ptr<SessionLog> log_;
};

// Serves responses from a function of the request; keeps every request seen.
class ScriptedClient : public LLMClient {
 public:
  using Script = std::function<ChatResponse(const ChatRequest&, std::size_t call)>;

  explicit ScriptedClient(Script s) : script_(std::move(s)) {}

  // Replies in order, repeating the last reply once the list runs out.
  static std::shared_ptr<ScriptedClient> replies(std::vector<std::string> texts) {
    return std::make_shared<ScriptedClient>([texts](const ChatRequest&, std::size_t call) {
      if (texts.empty()) return ChatResponse{};
      return ChatResponse{texts[std::min(call, texts.size() - 1)], "stop", std::nullopt};
    });
  }

  ChatResponse complete(const ChatRequest& req) override {
    std::size_t n;
    {
      std::lock_guard lock(mu_);
      n = requests_.size();
      requests_.push_back(req);
    }
    ChatResponse r = script_(req, n);
    if (r.finish_reason == "length") throw BudgetExceeded(r.text);
    return r;
  }

  std::vector<ChatRequest> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }

 private:
  Script script_;
  mutable std::mutex mu_;
  std::vector<ChatRequest> requests_;
};

class HttpChatClient : public LLMClient {
 public:
  explicit HttpChatClient(LLMConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.check();
    auto scheme_end = cfg_.endpoint.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint must be an http(s) URL");
    auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
    base_ = cfg_.endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : cfg_.endpoint.substr(path_start);
  }

  ChatResponse complete(const ChatRequest& req) override {
    Slot slot(*this);
    std::string last_error;
    for (unsigned attempt = 0; attempt <= cfg_.retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.backoff_ms << (attempt - 1)));
      httplib::Client cli(base_);
      auto secs = static_cast<time_t>(cfg_.timeout_s);
      auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
      cli.set_connection_timeout(secs, usecs);
      cli.set_read_timeout(secs, usecs);
      cli.set_write_timeout(secs, usecs);
      httplib::Headers headers;
      if (const char* tok = std::getenv(cfg_.token_env.c_str()); tok && *tok)
        headers.emplace("Authorization", std::string("Bearer ") + tok);
      auto res = cli.Post(path_, headers, req.body().dump(), "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500 || res->status == 429) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) throw LLMUnavailable("HTTP " + std::to_string(res->status) + ": " + res->body);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw LLMUnavailable(std::string("malformed response body: ") + e.what());
      }
      if (!j.contains("choices") || j["choices"].empty()) throw LLMUnavailable("response has no choices");
      const auto& choice = j["choices"][0];
      ChatResponse r;
      r.text = choice.value("message", nlohmann::json::object()).value("content", std::string());
      r.finish_reason = choice.value("finish_reason", std::string("stop"));
      if (j.contains("usage") && j["usage"].contains("completion_tokens"))
        r.completion_tokens = j["usage"]["completion_tokens"].get<std::size_t>();
      if (r.finish_reason == "length") throw BudgetExceeded(r.text);
      return r;
    }
    throw LLMUnavailable(last_error + " after " + std::to_string(cfg_.retries + 1) + " attempts");
  }

 private:
  // Bounds concurrent requests to cfg.max_in_flight.
  struct Slot {
    explicit Slot(HttpChatClient& c) : c_(c) {
      std::unique_lock lock(c_.mu_);
      c_.cv_.wait(lock, [&] { return c_.in_flight_ < c_.cfg_.max_in_flight; });
      ++c_.in_flight_;
    }
    ~Slot() {
      {
        std::lock_guard lock(c_.mu_);
        --c_.in_flight_;
      }
      c_.cv_.notify_one();
    }
    HttpChatClient& c_;
  };

  LLMConfig cfg_;
  std::string base_;
  std::string path_;
  std::mutex mu_;
  std::condition_variable cv_;
  unsigned in_flight_ = 0;
};

// Approximate token count: whitespace-separated words.
inline std::size_t whitespace_tokens(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!ws && !in_word) ++n;
    in_word = !ws;
  }
  return n;
}

}  // namespace planforge
