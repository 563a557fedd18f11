#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pcr/errors.hpp"
#include "pcr/prompt.hpp"

namespace pcr {

struct CompletionParams {
  double temperature = 0.0;
  int max_output_tokens = 2048;
  std::string model_name = "gpt-3.5-turbo";
};

struct CompletionRequest {
  RenderedPrompt prompt;
  CompletionParams params;
};

enum class ResponseSource { Live, Cache, Replay };
std::string_view to_string(ResponseSource source);

struct CompletionResponse {
  std::string text;
  std::string call_id;
  ResponseSource source = ResponseSource::Live;
  double latency_ms = 0.0;
};

// Any failure of the completion backend.
class BackendError : public Error {
 public:
  using Error::Error;
};

class ReplayMiss : public BackendError {
 public:
  explicit ReplayMiss(std::string hash)
      : BackendError("replay miss: no recorded response for prompt hash " + hash), hash_(std::move(hash)) {}
  const std::string& hash() const { return hash_; }

 private:
  std::string hash_;
};

class ProviderError : public BackendError {
 public:
  using BackendError::BackendError;
};

class AuthError : public BackendError {
 public:
  using BackendError::BackendError;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Safe for concurrent callers.
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Transport

struct HttpResponse {
  int status = 0;
  std::string body;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

// Minimal HTTP POST seam. Implementations throw TransportError when no
// response was received at all.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& url, const std::vector<std::pair<std::string, std::string>>& headers,
                            const std::string& body) = 0;
};

// cpp-httplib backed transport (http and https).
std::shared_ptr<HttpTransport> make_http_transport(std::chrono::seconds timeout = std::chrono::seconds(120));

// ---------------------------------------------------------------------------
// Live chat-completion client

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
};

// Token bucket over requests per minute. Blocks in acquire() until a token
// is available. A rate of 0 disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute);
  void acquire();

 private:
  std::mutex mu_;
  double rate_per_sec_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

struct LiveSettings {
  std::string api_key;
  std::string base_url = "https://api.openai.com/v1";
  RetryPolicy retry;
  double requests_per_minute = 60.0;
};

class LiveBackend : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  LiveBackend(LiveSettings settings, std::shared_ptr<HttpTransport> transport, Sleeper sleeper = {});
  CompletionResponse complete(const CompletionRequest& request) override;

  // Request body sent to <base_url>/chat/completions.
  static std::string request_body(const CompletionRequest& request);
  // choices[0].message.content; throws ProviderError on malformed bodies.
  static std::string response_text(const std::string& body);

 private:
  LiveSettings settings_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
  RateLimiter limiter_;
};

// ---------------------------------------------------------------------------
// Replay store

struct ReplayMetadata {
  std::string model_name;
  std::string recorded_at;
};

class ReplayConflict : public Error {
 public:
  using Error::Error;
};

// content_hash -> response text, persisted as one JSON document:
//   {"metadata": {"model_name": ..., "recorded_at": ...},
//    "entries": {"<hex hash>": "<text>", ...}}
// Lookups are exact-hash only.
class ReplayStore {
 public:
  ReplayStore() = default;

  static ReplayStore load(const std::string& path);
  // Merges several stores; the same hash with different text is a conflict.
  static ReplayStore merge(const std::vector<ReplayStore>& stores);

  std::optional<std::string> find(const std::string& hash) const;
  std::size_t size() const;
  const ReplayMetadata& metadata() const { return metadata_; }
  void set_metadata(ReplayMetadata m) { metadata_ = std::move(m); }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  // New hash: inserted. Same hash and text: no-op. Same hash, different text:
  // ReplayConflict and the store is left unchanged.
  void insert(const std::string& hash, const std::string& text);

  std::string to_json() const;
  static ReplayStore from_json(const std::string& json_text, const std::string& origin);

 private:
  ReplayMetadata metadata_;
  std::map<std::string, std::string> entries_;
};

// A ReplayStore bound to a file. record() merges the entry into the on-disk
// document under an exclusive file lock and replaces the file atomically, so
// concurrent recorders (threads or processes) never corrupt it.
class ReplayStoreFile {
 public:
  explicit ReplayStoreFile(std::string path, std::string model_name = {});

  // Returns true when the entry was new.
  bool record(const std::string& hash, const std::string& text);
  ReplayStore snapshot() const;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::string model_name_;
  mutable std::mutex mu_;
};

class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(ReplayStore store);
  CompletionResponse complete(const CompletionRequest& request) override;

 private:
  ReplayStore store_;
};

// Forwards to `inner` and persists every response it returns.
class RecordingBackend : public Backend {
 public:
  RecordingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<ReplayStoreFile> store);
  CompletionResponse complete(const CompletionRequest& request) override;

 private:
  std::shared_ptr<Backend> inner_;
  std::shared_ptr<ReplayStoreFile> store_;
};

// Content-addressed cache in front of another backend. Keyed by model name
// and prompt content hash; optionally persisted to a store file.
class CachingBackend : public Backend {
 public:
  CachingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<ReplayStoreFile> persistent = nullptr);
  CompletionResponse complete(const CompletionRequest& request) override;
  std::size_t size() const;

  static std::string cache_key(const CompletionRequest& request);

 private:
  std::shared_ptr<Backend> inner_;
  std::shared_ptr<ReplayStoreFile> persistent_;
  mutable std::mutex mu_;
  std::map<std::string, std::string> memory_;
};

// ---------------------------------------------------------------------------
// Factory

enum class BackendMode { Live, Record, Replay };
std::string_view to_string(BackendMode mode);
BackendMode parse_backend_mode(std::string_view s);

struct BackendSettings {
  BackendMode mode = BackendMode::Replay;
  bool cache = false;
  // Replay: every file is loaded and merged. Record: the first file is the
  // output store.
  std::vector<std::string> store_paths;
  std::string cache_path;  // empty: in-memory cache only
  std::string model_name = "gpt-3.5-turbo";
  LiveSettings live;
};

// Replay mode never touches `transport`. Live and record modes use it, or a
// real HTTP transport when it is null.
std::shared_ptr<Backend> make_backend(const BackendSettings& settings,
                                      std::shared_ptr<HttpTransport> transport = nullptr);

}  // namespace pcr
