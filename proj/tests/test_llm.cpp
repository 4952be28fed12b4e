#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "planforge/llm.hpp"
#include "planforge/repair.hpp"
#include "planforge/taskgen.hpp"
#include "test_util.hpp"

using namespace planforge;
using nlohmann::json;

namespace {

std::filesystem::path temp_log(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("planforge_llm_" + name + ".jsonl");
  std::filesystem::remove(p);
  return p;
}

ChatRequest request(std::string user = "plan this") {
  LLMConfig c;
  c.model = "m";
  return make_request(c, "be brief", std::move(user));
}

// Loopback chat endpoint. The handler decides each reply.
class MockServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit MockServer(Handler h) {
    srv_.Post("/v1/chat/completions", [this, h](const httplib::Request& req, httplib::Response& res) {
      int now = ++active_;
      int seen = peak_.load();
      while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
      }
      ++hits_;
      h(req, res);
      --active_;
    });
    port_ = srv_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { srv_.listen_after_bind(); });
    srv_.wait_until_ready();
  }
  ~MockServer() {
    srv_.stop();
    thread_.join();
  }

  LLMConfig config() const {
    LLMConfig c;
    c.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    c.model = "mock";
    c.retries = 2;
    c.backoff_ms = 1;
    c.timeout_s = 5;
    return c;
  }
  int hits() const { return hits_; }
  int peak() const { return peak_; }

 private:
  httplib::Server srv_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> hits_{0}, active_{0}, peak_{0};
};

std::string completion(const std::string& text, const std::string& finish = "stop", int tokens = 7) {
  return json{{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}, {"finish_reason", finish}}}},
              {"usage", {{"completion_tokens", tokens}}}}
      .dump();
}

}  // namespace

TEST(LLMConfig, Invariants) {
  EXPECT_THROW(LLMConfig::from_json(json{{"max_output_tokens", 0}}), std::invalid_argument);
  EXPECT_THROW(LLMConfig::from_json(json{{"timeout_s", 0.0}}), std::invalid_argument);
  auto c = LLMConfig::from_json(json{{"model", "x"}, {"token_env", "MY_TOKEN"}});
  EXPECT_EQ(c.model, "x");
  EXPECT_EQ(c.token_env, "MY_TOKEN");
}

TEST(ChatRequest, CanonicalBodyAndDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  auto r = request("u");
  const std::string expected =
      R"({"max_tokens":16384,"messages":[{"content":"be brief","role":"system"},{"content":"u","role":"user"}],)"
      R"("model":"m","temperature":0.0})";
  EXPECT_EQ(r.body().dump(), expected);
  EXPECT_EQ(r.digest(), sha256_hex(expected));
  EXPECT_EQ(request("u").digest(), r.digest());
  EXPECT_NE(request("v").digest(), r.digest());
}

TEST(Replay, ServesLoggedResponseVerbatim) {
  auto path = temp_log("one");
  auto r = request();
  SessionEntry e{r.digest(), r.body(), {"  (pick-up a)\n<FINAL>x</FINAL>  ", "stop", 3}, 12.5, "2024-01-01T00:00:00Z"};
  write_file(path, e.to_json().dump() + "\n");
  ReplayClient c(std::make_shared<const SessionLog>(path.string()));
  auto got = c.complete(r);
  EXPECT_EQ(got.text, "  (pick-up a)\n<FINAL>x</FINAL>  ");
  EXPECT_EQ(got.completion_tokens, 3u);
  try {
    c.complete(request("something else"));
    FAIL();
  } catch (const ReplayMiss& m) {
    EXPECT_EQ(m.digest(), request("something else").digest());
  }
}

TEST(Replay, TruncatedEntryRaisesBudgetExceeded) {
  auto r = request();
  auto log = std::make_shared<SessionLog>();
  log->append({r.digest(), r.body(), {"partial pla", "length", std::nullopt}, 0, ""});
  ReplayClient c(log);
  try {
    c.complete(r);
    FAIL();
  } catch (const BudgetExceeded& e) {
    EXPECT_EQ(e.partial(), "partial pla");
  }
}

TEST(SessionLog, RejectsTamperedEntries) {
  auto path = temp_log("tampered");
  auto r = request();
  auto j = SessionEntry{r.digest(), r.body(), {"ok", "stop", std::nullopt}, 0, ""}.to_json();
  j["request"]["model"] = "other";
  write_file(path, j.dump() + "\n");
  EXPECT_THROW(SessionLog(path.string()), std::runtime_error);
}

TEST(SessionLog, RecordThenReplay) {
  auto path = temp_log("roundtrip");
  auto inner = std::make_shared<ScriptedClient>(
      [](const ChatRequest& q, std::size_t) { return ChatResponse{"echo: " + q.user, "stop", 4}; });
  {
    RecordingClient rec(inner, std::make_shared<SessionLog>(path.string()));
    EXPECT_EQ(rec.complete(request("a")).text, "echo: a");
    EXPECT_EQ(rec.complete(request("b")).text, "echo: b");
  }
  auto log = std::make_shared<const SessionLog>(path.string());
  ASSERT_EQ(log->size(), 2u);
  auto entries = log->entries();
  EXPECT_EQ(entries[0].request, request("a").body());
  EXPECT_FALSE(entries[0].timestamp.empty());
  ReplayClient replay(log);
  EXPECT_EQ(replay.complete(request("b")).text, "echo: b");
  EXPECT_EQ(replay.complete(request("a")).completion_tokens, 4u);
}

TEST(Http, CompletesAndSendsTokenFromEnvironment) {
  std::string auth, body;
  MockServer srv([&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    body = req.body;
    res.set_content(completion("(stack a b)"), "application/json");
  });
  auto cfg = srv.config();
  cfg.token_env = "PLANFORGE_TEST_TOKEN";
  ::setenv("PLANFORGE_TEST_TOKEN", "sekret", 1);
  HttpChatClient c(cfg);
  auto r = c.complete(make_request(cfg, "sys", "usr"));
  ::unsetenv("PLANFORGE_TEST_TOKEN");
  EXPECT_EQ(r.text, "(stack a b)");
  EXPECT_EQ(r.completion_tokens, 7u);
  EXPECT_EQ(auth, "Bearer sekret");
  EXPECT_EQ(json::parse(body), make_request(cfg, "sys", "usr").body());
}

TEST(Http, TruncatedOutputIsBudgetExceeded) {
  MockServer srv([](const httplib::Request&, httplib::Response& res) {
    res.set_content(completion("(pick-up a)\n(sta", "length"), "application/json");
  });
  HttpChatClient c(srv.config());
  try {
    c.complete(request());
    FAIL();
  } catch (const BudgetExceeded& e) {
    EXPECT_EQ(e.partial(), "(pick-up a)\n(sta");
  }
  EXPECT_EQ(srv.hits(), 1);
}

TEST(Http, RetriesServerErrors) {
  std::atomic<int> n{0};
  MockServer srv([&](const httplib::Request&, httplib::Response& res) {
    if (n++ < 2) {
      res.status = n == 1 ? 503 : 429;
      return;
    }
    res.set_content(completion("third time"), "application/json");
  });
  HttpChatClient c(srv.config());
  EXPECT_EQ(c.complete(request()).text, "third time");
  EXPECT_EQ(srv.hits(), 3);
}

TEST(Http, UnavailableAfterRetries) {
  MockServer srv([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  HttpChatClient c(srv.config());
  EXPECT_THROW(c.complete(request()), LLMUnavailable);
  EXPECT_EQ(srv.hits(), 3);

  MockServer bad([](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  HttpChatClient c2(bad.config());
  EXPECT_THROW(c2.complete(request()), LLMUnavailable);
  EXPECT_EQ(bad.hits(), 1);

  MockServer junk([](const httplib::Request&, httplib::Response& res) { res.set_content("{", "application/json"); });
  HttpChatClient c3(junk.config());
  EXPECT_THROW(c3.complete(request()), LLMUnavailable);
}

TEST(Http, ConnectionRefused) {
  LLMConfig cfg;
  {
    MockServer srv([](const httplib::Request&, httplib::Response&) {});
    cfg = srv.config();
  }
  cfg.retries = 1;
  HttpChatClient c(cfg);
  EXPECT_THROW(c.complete(request()), LLMUnavailable);
}

TEST(Http, BoundsRequestsInFlight) {
  MockServer srv([](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(40));
    res.set_content(completion("ok"), "application/json");
  });
  auto cfg = srv.config();
  cfg.max_in_flight = 2;
  HttpChatClient c(cfg);
  std::vector<std::thread> ts;
  for (int i = 0; i < 6; ++i) ts.emplace_back([&, i] { c.complete(request(std::to_string(i))); });
  for (auto& t : ts) t.join();
  EXPECT_EQ(srv.hits(), 6);
  EXPECT_LE(srv.peak(), 2);
}

// A repair session recorded once replays offline to the same domain.
TEST(Replay, RepairSessionRoundTrip) {
  std::string fixed(domains::kBlocksWorld);
  std::string broken = fixed;
  broken.replace(broken.find("(on ?x ?y) (clear ?x) (handempty) (not (holding ?x))"), std::string("(on ?x ?y) ").size(),
                 "");
  auto d = std::make_shared<const Domain>(parse_domain(fixed));
  std::vector<Problem> suite{rebind(testutil::bw3(), d)};
  auto path = temp_log("repair");
  RepairResult live;
  {
    RecordingClient rec(ScriptedClient::replies({"```pddl\n" + fixed + "\n```"}),
                        std::make_shared<SessionLog>(path.string()));
    live = repair_loop(broken, suite, rec);
  }
  ReplayClient replay(std::make_shared<const SessionLog>(path.string()));
  auto again = repair_loop(broken, suite, replay);
  EXPECT_EQ(again.domain_text, live.domain_text);
  EXPECT_EQ(again.rounds, 1u);
  ReplayClient empty(std::make_shared<const SessionLog>());
  RepairOptions ro;
  ro.max_rounds = 1;
  EXPECT_THROW(repair_loop(broken, suite, empty, ro), RepairFailed);
}
