#include "pcr/backend.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <thread>

#include "pcr/text.hpp"

namespace pcr {

using json = nlohmann::json;

std::string_view to_string(ResponseSource source) {
  switch (source) {
    case ResponseSource::Live: return "live";
    case ResponseSource::Cache: return "cache";
    case ResponseSource::Replay: return "replay";
  }
  return "live";
}

std::string_view to_string(BackendMode mode) {
  switch (mode) {
    case BackendMode::Live: return "live";
    case BackendMode::Record: return "record";
    case BackendMode::Replay: return "replay";
  }
  return "replay";
}

BackendMode parse_backend_mode(std::string_view s) {
  if (s == "live") return BackendMode::Live;
  if (s == "record") return BackendMode::Record;
  if (s == "replay") return BackendMode::Replay;
  throw ValidationError("unknown backend '" + std::string(s) + "' (expected live, record or replay)");
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

std::string short_hash(const std::string& hash) { return hash.substr(0, 16); }

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// RateLimiter

RateLimiter::RateLimiter(double requests_per_minute)
    : rate_per_sec_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, std::floor(requests_per_minute / 60.0))),
      tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (rate_per_sec_ <= 0.0) return;
  std::unique_lock lock(mu_);
  while (true) {
    auto now = std::chrono::steady_clock::now();
    double dt = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + dt * rate_per_sec_);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_sec_);
    // Sleeping under the lock serializes egress, which is the point.
    std::this_thread::sleep_for(wait);
  }
}

// ---------------------------------------------------------------------------
// LiveBackend

LiveBackend::LiveBackend(LiveSettings settings, std::shared_ptr<HttpTransport> transport, Sleeper sleeper)
    : settings_(std::move(settings)),
      transport_(std::move(transport)),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      limiter_(settings_.requests_per_minute) {
  if (!transport_) throw ValidationError("live backend requires a transport");
}

std::string LiveBackend::request_body(const CompletionRequest& request) {
  json body = {
      {"model", request.params.model_name},
      {"messages", json::array({{{"role", "user"}, {"content", request.prompt.text}}})},
      {"temperature", request.params.temperature},
      {"max_tokens", request.params.max_output_tokens},
  };
  return body.dump();
}

std::string LiveBackend::response_text(const std::string& body) {
  try {
    auto doc = json::parse(body);
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed completion response: ") + e.what());
  }
}

CompletionResponse LiveBackend::complete(const CompletionRequest& request) {
  static std::atomic<unsigned long> counter{0};
  if (request.params.temperature < 0.0) throw ValidationError("temperature must be >= 0");
  if (request.params.max_output_tokens <= 0) throw ValidationError("max_output_tokens must be positive");
  if (settings_.api_key.empty()) throw AuthError("no API key configured (set PCR_API_KEY)");

  auto url = settings_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  url += "/chat/completions";
  std::vector<std::pair<std::string, std::string>> headers = {
      {"Authorization", "Bearer " + settings_.api_key},
      {"Content-Type", "application/json"},
  };
  auto body = request_body(request);

  auto backoff = settings_.retry.initial_backoff;
  std::string last_error;
  const int attempts = std::max(1, settings_.retry.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    limiter_.acquire();
    auto start = std::chrono::steady_clock::now();
    bool transient = false;
    try {
      auto resp = transport_->post(url, headers, body);
      if (resp.status == 401 || resp.status == 403) {
        throw AuthError("credentials rejected by provider (HTTP " + std::to_string(resp.status) + ")");
      }
      if (resp.status >= 200 && resp.status < 300) {
        CompletionResponse out;
        out.text = response_text(resp.body);
        out.source = ResponseSource::Live;
        out.latency_ms = elapsed_ms(start);
        std::string id;
        try {
          auto doc = json::parse(resp.body);
          if (doc.contains("id") && doc["id"].is_string()) id = doc["id"].get<std::string>();
        } catch (const json::exception&) {
        }
        out.call_id = id.empty() ? "live-" + std::to_string(++counter) : id;
        return out;
      }
      last_error = "HTTP " + std::to_string(resp.status) + ": " + resp.body.substr(0, 200);
      transient = resp.status == 408 || resp.status == 429 || resp.status >= 500;
    } catch (const TransportError& e) {
      last_error = e.what();
      transient = true;
    }
    if (!transient) throw ProviderError("completion request failed: " + last_error);
    if (attempt < attempts) {
      spdlog::warn("completion attempt {}/{} failed ({}); retrying in {} ms", attempt, attempts, last_error,
                   backoff.count());
      sleeper_(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(backoff.count()) * settings_.retry.multiplier));
    }
  }
  throw ProviderError("completion request failed after " + std::to_string(attempts) + " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// ReplayStore

std::optional<std::string> ReplayStore::find(const std::string& hash) const {
  auto it = entries_.find(hash);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::size_t ReplayStore::size() const { return entries_.size(); }

void ReplayStore::insert(const std::string& hash, const std::string& text) {
  auto it = entries_.find(hash);
  if (it != entries_.end()) {
    if (it->second != text) {
      throw ReplayConflict("conflicting responses recorded for prompt hash " + hash);
    }
    return;
  }
  entries_.emplace(hash, text);
}

std::string ReplayStore::to_json() const {
  json doc;
  doc["metadata"] = {{"model_name", metadata_.model_name}, {"recorded_at", metadata_.recorded_at}};
  doc["entries"] = json::object();
  for (const auto& [hash, text] : entries_) doc["entries"][hash] = text;
  return doc.dump(2) + "\n";
}

ReplayStore ReplayStore::from_json(const std::string& json_text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(origin + ": invalid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_object()) {
    throw ValidationError(origin + ": replay store needs an 'entries' object");
  }
  ReplayStore store;
  if (doc.contains("metadata") && doc["metadata"].is_object()) {
    const auto& m = doc["metadata"];
    store.metadata_.model_name = m.value("model_name", "");
    store.metadata_.recorded_at = m.value("recorded_at", "");
  }
  for (const auto& [hash, text] : doc["entries"].items()) {
    if (!text.is_string()) throw ValidationError(origin + ": entry " + hash + " is not a string");
    store.entries_.emplace(hash, text.get<std::string>());
  }
  return store;
}

ReplayStore ReplayStore::load(const std::string& path) { return from_json(text::read_file(path), path); }

ReplayStore ReplayStore::merge(const std::vector<ReplayStore>& stores) {
  ReplayStore out;
  for (const auto& s : stores) {
    if (out.metadata_.model_name.empty()) out.metadata_ = s.metadata_;
    for (const auto& [hash, text] : s.entries_) out.insert(hash, text);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ReplayStoreFile

namespace {

class FileLock {
 public:
  explicit FileLock(const std::string& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError(path, "cannot open lock file");
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw IoError(path, "cannot lock");
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace

ReplayStoreFile::ReplayStoreFile(std::string path, std::string model_name)
    : path_(std::move(path)), model_name_(std::move(model_name)) {
  auto parent = std::filesystem::path(path_).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

bool ReplayStoreFile::record(const std::string& hash, const std::string& text) {
  std::lock_guard guard(mu_);
  FileLock lock(path_ + ".lock");
  ReplayStore store;
  if (std::filesystem::exists(path_)) store = ReplayStore::load(path_);
  if (auto existing = store.find(hash)) {
    if (*existing != text) throw ReplayConflict("conflicting responses recorded for prompt hash " + hash);
    return false;
  }
  store.insert(hash, text);
  auto meta = store.metadata();
  if (meta.model_name.empty()) meta.model_name = model_name_;
  meta.recorded_at = utc_timestamp();
  store.set_metadata(meta);
  text::write_file_atomic(path_, store.to_json());
  return true;
}

ReplayStore ReplayStoreFile::snapshot() const {
  std::lock_guard guard(mu_);
  if (!std::filesystem::exists(path_)) return {};
  return ReplayStore::load(path_);
}

// ---------------------------------------------------------------------------
// Replay / record / cache

ReplayBackend::ReplayBackend(ReplayStore store) : store_(std::move(store)) {}

CompletionResponse ReplayBackend::complete(const CompletionRequest& request) {
  const auto& hash = request.prompt.content_hash;
  auto hit = store_.find(hash);
  if (!hit) throw ReplayMiss(hash);
  return CompletionResponse{*hit, "replay-" + short_hash(hash), ResponseSource::Replay, 0.0};
}

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<ReplayStoreFile> store)
    : inner_(std::move(inner)), store_(std::move(store)) {}

CompletionResponse RecordingBackend::complete(const CompletionRequest& request) {
  auto resp = inner_->complete(request);
  store_->record(request.prompt.content_hash, resp.text);
  return resp;
}

CachingBackend::CachingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<ReplayStoreFile> persistent)
    : inner_(std::move(inner)), persistent_(std::move(persistent)) {
  if (persistent_) {
    auto stored = persistent_->snapshot();
    for (const auto& [k, v] : stored.entries()) memory_.emplace(k, v);
  }
}

std::string CachingBackend::cache_key(const CompletionRequest& request) {
  return request.prompt.content_hash + "@" + request.params.model_name;
}

std::size_t CachingBackend::size() const {
  std::lock_guard lock(mu_);
  return memory_.size();
}

CompletionResponse CachingBackend::complete(const CompletionRequest& request) {
  auto key = cache_key(request);
  {
    std::lock_guard lock(mu_);
    if (auto it = memory_.find(key); it != memory_.end()) {
      return CompletionResponse{it->second, "cache-" + short_hash(request.prompt.content_hash), ResponseSource::Cache,
                                0.0};
    }
  }
  auto resp = inner_->complete(request);
  {
    std::lock_guard lock(mu_);
    memory_.emplace(key, resp.text);
  }
  if (persistent_) persistent_->record(key, resp.text);
  return resp;
}

// ---------------------------------------------------------------------------
// Factory

std::shared_ptr<Backend> make_backend(const BackendSettings& settings, std::shared_ptr<HttpTransport> transport) {
  std::shared_ptr<Backend> backend;
  switch (settings.mode) {
    case BackendMode::Replay: {
      if (settings.store_paths.empty()) throw ValidationError("replay backend needs at least one replay store");
      std::vector<ReplayStore> stores;
      for (const auto& p : settings.store_paths) stores.push_back(ReplayStore::load(p));
      backend = std::make_shared<ReplayBackend>(ReplayStore::merge(stores));
      break;
    }
    case BackendMode::Live:
    case BackendMode::Record: {
      if (!transport) transport = make_http_transport();
      backend = std::make_shared<LiveBackend>(settings.live, transport);
      if (settings.mode == BackendMode::Record) {
        if (settings.store_paths.empty()) throw ValidationError("record backend needs an output replay store path");
        backend = std::make_shared<RecordingBackend>(
            backend, std::make_shared<ReplayStoreFile>(settings.store_paths.front(), settings.model_name));
      }
      break;
    }
  }
  if (settings.cache) {
    std::shared_ptr<ReplayStoreFile> file;
    if (!settings.cache_path.empty()) file = std::make_shared<ReplayStoreFile>(settings.cache_path, settings.model_name);
    backend = std::make_shared<CachingBackend>(backend, file);
  }
  return backend;
}

}  // namespace pcr
