#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <deque>
#include <thread>

#include <nlohmann/json.hpp>

#include "desk_fixtures.hpp"
#include "pcr/backend.hpp"
#include "pcr/text.hpp"

using namespace pcr;
namespace support = pcr::testing;
using namespace std::chrono_literals;
using json = nlohmann::json;

namespace {

CompletionRequest request_for(const std::string& prompt) {
  return CompletionRequest{RenderedPrompt::make("code-fix", prompt), {}};
}

std::string ok_body(const std::string& content, const std::string& id = "cmpl-1") {
  return json{{"id", id}, {"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})}}
      .dump();
}

// Replays a queue of canned responses; an empty queue is a transport failure.
class FakeTransport : public HttpTransport {
 public:
  std::deque<HttpResponse> queue;
  std::vector<std::string> urls;
  std::vector<std::string> bodies;
  std::vector<std::vector<std::pair<std::string, std::string>>> headers;

  HttpResponse post(const std::string& url, const std::vector<std::pair<std::string, std::string>>& h,
                    const std::string& body) override {
    urls.push_back(url);
    headers.push_back(h);
    bodies.push_back(body);
    if (queue.empty()) throw TransportError("connection refused");
    auto r = queue.front();
    queue.pop_front();
    return r;
  }
};

struct Fixture {
  std::shared_ptr<FakeTransport> transport = std::make_shared<FakeTransport>();
  std::vector<std::chrono::milliseconds> sleeps;
  LiveBackend backend;

  Fixture()
      : backend(settings(), transport, [this](std::chrono::milliseconds d) { sleeps.push_back(d); }) {}

  static LiveSettings settings() {
    LiveSettings s;
    s.api_key = "sk-test";
    s.base_url = "http://example.invalid/v1/";
    s.requests_per_minute = 0;
    return s;
  }
};

class CountingBackend : public Backend {
 public:
  std::atomic<int> calls{0};
  CompletionResponse complete(const CompletionRequest& r) override {
    ++calls;
    return {"echo:" + r.prompt.text, "inner", ResponseSource::Live, 1.0};
  }
};

}  // namespace

TEST(Live, RequestShape) {
  Fixture f;
  f.transport->queue.push_back({200, ok_body("fixed")});
  auto req = request_for("make this code compilable\n\nx");
  auto resp = f.backend.complete(req);
  EXPECT_EQ(resp.text, "fixed");
  EXPECT_EQ(resp.source, ResponseSource::Live);
  EXPECT_EQ(resp.call_id, "cmpl-1");
  ASSERT_EQ(f.transport->urls.size(), 1u);
  EXPECT_EQ(f.transport->urls[0], "http://example.invalid/v1/chat/completions");
  auto body = json::parse(f.transport->bodies[0]);
  EXPECT_EQ(body["model"], "gpt-3.5-turbo");
  EXPECT_EQ(body["temperature"], 0.0);
  ASSERT_EQ(body["messages"].size(), 1u);
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], req.prompt.text);
  EXPECT_NE(std::find(f.transport->headers[0].begin(), f.transport->headers[0].end(),
                      std::pair<std::string, std::string>{"Authorization", "Bearer sk-test"}),
            f.transport->headers[0].end());
  EXPECT_TRUE(f.sleeps.empty());
}

TEST(Live, RetriesTransientFailuresOnBackoffSchedule) {
  Fixture f;
  f.transport->queue = {{503, "busy"}, {429, "slow down"}, {200, ok_body("ok")}};
  EXPECT_EQ(f.backend.complete(request_for("p")).text, "ok");
  EXPECT_EQ(f.transport->urls.size(), 3u);
  EXPECT_EQ(f.sleeps, (std::vector<std::chrono::milliseconds>{500ms, 1000ms}));
}

TEST(Live, AtMostThreeAttempts) {
  Fixture f;
  f.transport->queue = {{500, "a"}, {502, "b"}, {504, "c"}, {200, ok_body("never")}};
  EXPECT_THROW(f.backend.complete(request_for("p")), ProviderError);
  EXPECT_EQ(f.transport->urls.size(), 3u);
  // Added latency is bounded by the schedule: 500 + 1000 ms.
  std::chrono::milliseconds total{0};
  for (auto d : f.sleeps) total += d;
  EXPECT_EQ(total, 1500ms);
}

TEST(Live, TransportErrorsAreRetried) {
  Fixture f;
  EXPECT_THROW(f.backend.complete(request_for("p")), ProviderError);
  EXPECT_EQ(f.transport->urls.size(), 3u);
}

TEST(Live, AuthFailureIsNotRetried) {
  Fixture f;
  f.transport->queue = {{401, "no"}, {200, ok_body("x")}};
  EXPECT_THROW(f.backend.complete(request_for("p")), AuthError);
  EXPECT_EQ(f.transport->urls.size(), 1u);

  LiveSettings s = Fixture::settings();
  s.api_key.clear();
  auto t = std::make_shared<FakeTransport>();
  LiveBackend keyless(s, t, [](auto) {});
  EXPECT_THROW(keyless.complete(request_for("p")), AuthError);
  EXPECT_TRUE(t->urls.empty());
}

TEST(Live, ClientErrorAndMalformedBody) {
  Fixture f;
  f.transport->queue = {{400, "bad request"}};
  EXPECT_THROW(f.backend.complete(request_for("p")), ProviderError);
  EXPECT_EQ(f.transport->urls.size(), 1u);

  EXPECT_THROW(LiveBackend::response_text("not json"), ProviderError);
  EXPECT_THROW(LiveBackend::response_text(R"({"choices": []})"), ProviderError);
  EXPECT_EQ(LiveBackend::response_text(R"({"choices": [{"message": {"content": null}}]})"), "");
}

TEST(Live, InvalidParamsRejectedBeforeSending) {
  Fixture f;
  auto req = request_for("p");
  req.params.temperature = -1;
  EXPECT_THROW(f.backend.complete(req), ValidationError);
  req.params.temperature = 0;
  req.params.max_output_tokens = 0;
  EXPECT_THROW(f.backend.complete(req), ValidationError);
  EXPECT_TRUE(f.transport->urls.empty());
}

TEST(Live, HttpTransportAgainstLocalServer) {
  httplib::Server server;
  std::string seen_auth, seen_body;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.set_content(ok_body("from server", "srv-9"), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  LiveSettings s = Fixture::settings();
  s.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  LiveBackend backend(s, make_http_transport(5s), [](auto) {});
  auto resp = backend.complete(request_for("hello"));
  server.stop();
  t.join();
  EXPECT_EQ(resp.text, "from server");
  EXPECT_EQ(resp.call_id, "srv-9");
  EXPECT_EQ(seen_auth, "Bearer sk-test");
  EXPECT_EQ(json::parse(seen_body)["messages"][0]["content"], "hello");
}

TEST(Live, HttpTransportUnreachableIsTransportError) {
  auto transport = make_http_transport(1s);
  EXPECT_THROW(transport->post("http://127.0.0.1:1/v1/chat/completions", {}, "{}"), TransportError);
}

TEST(RateLimit, ZeroDisablesLimiting) {
  RateLimiter limiter(0);
  auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 1000; ++i) limiter.acquire();
  EXPECT_LT(std::chrono::steady_clock::now() - start, 1s);
}

TEST(RateLimit, BucketRefillsAtConfiguredRate) {
  RateLimiter limiter(6000);  // 100 per second, bucket of 100
  auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 110; ++i) limiter.acquire();
  auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_GE(elapsed, 80ms);
  EXPECT_LT(elapsed, 2s);
}

TEST(Replay, HitAndMiss) {
  ReplayStore store;
  auto req = request_for("prompt");
  store.insert(req.prompt.content_hash, "answer");
  ReplayBackend backend(store);
  auto resp = backend.complete(req);
  EXPECT_EQ(resp.text, "answer");
  EXPECT_EQ(resp.source, ResponseSource::Replay);
  auto other = request_for("prompt ");
  try {
    backend.complete(other);
    FAIL();
  } catch (const ReplayMiss& e) {
    EXPECT_EQ(e.hash(), other.prompt.content_hash);
    EXPECT_NE(std::string(e.what()).find(other.prompt.content_hash), std::string::npos);
  }
}

TEST(Replay, InsertConflictLeavesStoreUnchanged) {
  ReplayStore store;
  store.insert("h1", "a");
  store.insert("h1", "a");
  EXPECT_THROW(store.insert("h1", "b"), ReplayConflict);
  EXPECT_EQ(store.find("h1"), "a");
  EXPECT_EQ(store.size(), 1u);
}

TEST(Replay, MergeConflicts) {
  ReplayStore a, b, c;
  a.insert("h1", "x");
  b.insert("h1", "x");
  b.insert("h2", "y");
  c.insert("h2", "z");
  EXPECT_EQ(ReplayStore::merge({a, b}).size(), 2u);
  EXPECT_THROW(ReplayStore::merge({a, b, c}), ReplayConflict);
}

TEST(Replay, JsonRoundTripAndErrors) {
  ReplayStore s;
  s.set_metadata({"gpt-3.5-turbo", "2026-01-01T00:00:00Z"});
  s.insert(std::string(64, 'a'), "line1\nline2 \"q\"");
  auto back = ReplayStore::from_json(s.to_json(), "mem");
  EXPECT_EQ(back.entries(), s.entries());
  EXPECT_EQ(back.metadata().model_name, "gpt-3.5-turbo");
  EXPECT_THROW(ReplayStore::from_json("{", "mem"), Error);
  EXPECT_THROW(ReplayStore::from_json(R"({"entries": {"h": 3}})", "mem"), Error);
  EXPECT_THROW(ReplayStore::from_json(R"([])", "mem"), Error);
  EXPECT_THROW(ReplayStore::load("/nonexistent/store.json"), IoError);
}

TEST(Recording, PersistsAndRejectsConflicts) {
  support::TempDir dir;
  auto inner = std::make_shared<CountingBackend>();
  auto file = std::make_shared<ReplayStoreFile>(dir / "store.json", "m");
  RecordingBackend rec(inner, file);
  auto req = request_for("one");
  rec.complete(req);
  auto loaded = ReplayStore::load(dir / "store.json");
  EXPECT_EQ(loaded.find(req.prompt.content_hash), "echo:one");
  EXPECT_EQ(loaded.metadata().model_name, "m");
  EXPECT_FALSE(file->record(req.prompt.content_hash, "echo:one"));
  EXPECT_THROW(file->record(req.prompt.content_hash, "different"), ReplayConflict);
  EXPECT_EQ(ReplayStore::load(dir / "store.json").find(req.prompt.content_hash), "echo:one");
}

TEST(Recording, ConcurrentRecordersKeepEveryEntry) {
  support::TempDir dir;
  const auto path = dir / "shared.json";
  constexpr int kThreads = 8, kPerThread = 25;
  std::vector<std::thread> threads;
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      ReplayStoreFile own(path, "m");  // separate handle per thread, like separate processes
      for (int i = 0; i < kPerThread; ++i) own.record("t" + std::to_string(t) + "-" + std::to_string(i), "v");
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(ReplayStore::load(path).size(), static_cast<std::size_t>(kThreads * kPerThread));
}

TEST(Cache, HitReturnsOriginalText) {
  auto inner = std::make_shared<CountingBackend>();
  CachingBackend cache(inner);
  auto req = request_for("q");
  auto first = cache.complete(req);
  auto second = cache.complete(req);
  EXPECT_EQ(first.source, ResponseSource::Live);
  EXPECT_EQ(second.source, ResponseSource::Cache);
  EXPECT_EQ(second.text, first.text);
  EXPECT_EQ(inner->calls, 1);
  auto other_model = req;
  other_model.params.model_name = "other";
  cache.complete(other_model);
  EXPECT_EQ(inner->calls, 2);
  EXPECT_EQ(cache.size(), 2u);
}

TEST(Cache, PersistentAcrossInstances) {
  support::TempDir dir;
  auto req = request_for("persist me");
  {
    auto inner = std::make_shared<CountingBackend>();
    CachingBackend cache(inner, std::make_shared<ReplayStoreFile>(dir / "cache.json"));
    cache.complete(req);
  }
  auto inner = std::make_shared<CountingBackend>();
  CachingBackend cache(inner, std::make_shared<ReplayStoreFile>(dir / "cache.json"));
  auto resp = cache.complete(req);
  EXPECT_EQ(resp.source, ResponseSource::Cache);
  EXPECT_EQ(resp.text, "echo:persist me");
  EXPECT_EQ(inner->calls, 0);
}

TEST(Factory, ReplayModeNeverTouchesTransport) {
  support::TempDir dir;
  ReplayStore s;
  auto req = request_for("x");
  s.insert(req.prompt.content_hash, "y");
  text::write_file_atomic(dir / "s.json", s.to_json());
  auto transport = std::make_shared<FakeTransport>();
  BackendSettings settings;
  settings.store_paths = {dir / "s.json"};
  settings.cache = true;
  auto backend = make_backend(settings, transport);
  EXPECT_EQ(backend->complete(req).text, "y");
  EXPECT_EQ(backend->complete(req).source, ResponseSource::Cache);
  EXPECT_THROW(backend->complete(request_for("z")), ReplayMiss);
  EXPECT_TRUE(transport->urls.empty());

  settings.store_paths.clear();
  EXPECT_THROW(make_backend(settings, transport), ValidationError);
  EXPECT_EQ(parse_backend_mode("record"), BackendMode::Record);
  EXPECT_THROW(parse_backend_mode("mock"), ValidationError);
}

TEST(Factory, RecordModeWritesFirstStore) {
  support::TempDir dir;
  auto transport = std::make_shared<FakeTransport>();
  transport->queue.push_back({200, ok_body("recorded")});
  BackendSettings settings;
  settings.mode = BackendMode::Record;
  settings.store_paths = {dir / "out.json"};
  settings.live = Fixture::settings();
  auto backend = make_backend(settings, transport);
  auto req = request_for("r");
  EXPECT_EQ(backend->complete(req).text, "recorded");
  EXPECT_EQ(ReplayStore::load(dir / "out.json").find(req.prompt.content_hash), "recorded");
}
