#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "adprompt/digest.hpp"
#include "adprompt/errors.hpp"
#include "adprompt/prompt_builder.hpp"

namespace adprompt {

// Near-greedy decoding defaults used for every evaluation run.
struct SamplingParams {
  double temperature = 0.01;
  int top_k = 50;
  double top_p = 1.0;
  int max_output_tokens = 512;
};

struct BackendConfig {
  std::string endpoint_url;  // e.g. "http://localhost:8080"
  std::string completions_path = "/v1/chat/completions";
  std::string model_id;
  std::string api_key_env_var;  // key read from the environment, never from config files
  int timeout_s = 60;
  int max_retries = 3;
  int retry_backoff_ms = 250;  // doubled per retry
  int max_in_flight = 4;
  bool supports_images = false;
  bool supports_top_k = true;  // some chat-completion dialects reject top_k
};

enum class CacheMode { off, record, replay };

struct CompletionRecord {
  std::string cache_key;
  nlohmann::json request = nlohmann::json::object();
  std::string response_text;
  nlohmann::json metadata = nlohmann::json::object();
};

// Stable digest of everything that determines a completion: model id,
// sampling parameters, the full role-tagged message sequence, and the
// digests of any attachments. Byte serialization: NUL-delimited
// tag/value pairs in the fixed order below, hashed with SHA-256.
// Seeds deliberately do not enter the key: with near-greedy decoding the
// response is treated as a function of the request alone.
inline std::string cache_key(const std::string& model_id, const SamplingParams& params,
                             const std::vector<Message>& messages,
                             const std::vector<std::string>& attachment_digests = {}) {
  std::string bytes = "adprompt-cache-v1";
  bytes += '\0';
  auto field = [&bytes](std::string_view tag, std::string_view value) {
    bytes.append(tag);
    bytes += '\0';
    bytes.append(value);
    bytes += '\0';
  };
  char num[64];
  field("model", model_id);
  std::snprintf(num, sizeof(num), "%.6f", params.temperature);
  field("temperature", num);
  field("top_k", std::to_string(params.top_k));
  std::snprintf(num, sizeof(num), "%.6f", params.top_p);
  field("top_p", num);
  field("max_output_tokens", std::to_string(params.max_output_tokens));
  field("messages", std::to_string(messages.size()));
  for (const auto& m : messages) {
    field("m", to_string(m.role));
    field("c", m.content);
  }
  for (const auto& d : attachment_digests) field("a", d);
  return sha256_hex(bytes);
}

// Append-only directory of completion records, one JSON file per cache key
// plus a human-readable index. Reads are lock-free once written; writes go
// through a single in-process mutex.
class CompletionCache {
 public:
  explicit CompletionCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const { return dir_; }

  std::optional<CompletionRecord> get(const std::string& key) const {
    const auto path = record_path(key);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("response_text")) {
      throw DataError("corrupt cache record '" + path.string() + "'");
    }
    CompletionRecord rec;
    rec.cache_key = key;
    rec.request = doc.value("request", nlohmann::json::object());
    rec.response_text = doc["response_text"].get<std::string>();
    rec.metadata = doc.value("metadata", nlohmann::json::object());
    return rec;
  }

  void put(const CompletionRecord& rec) {
    std::lock_guard<std::mutex> lock(write_mutex_);
    std::filesystem::create_directories(dir_);
    const auto path = record_path(rec.cache_key);
    if (std::filesystem::exists(path)) return;  // append-only, first write wins
    nlohmann::json doc;
    doc["cache_key"] = rec.cache_key;
    doc["request"] = rec.request;
    doc["response_text"] = rec.response_text;
    doc["metadata"] = rec.metadata;
    std::ofstream out(path, std::ios::binary);
    out << doc.dump(2) << "\n";
    std::ofstream index(dir_ / "index.tsv", std::ios::app);
    index << rec.cache_key << '\t' << rec.request.value("model", "?") << '\t'
          << rec.request.value("messages", nlohmann::json::array()).size() << '\t'
          << rec.response_text.size() << "\n";
  }

 private:
  std::filesystem::path record_path(const std::string& key) const {
    return dir_ / (key + ".json");
  }
  std::filesystem::path dir_;
  mutable std::mutex write_mutex_;
};

struct HttpResponse {
  bool transport_ok = false;  // false: connection-level failure
  bool timed_out = false;
  int status = 0;
  std::string body;
  std::string error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const BackendConfig& backend, const std::string& body) = 0;
};

class HttplibTransport : public HttpTransport {
 public:
  HttpResponse post(const BackendConfig& backend, const std::string& body) override {
    httplib::Client client(backend.endpoint_url);
    client.set_connection_timeout(backend.timeout_s, 0);
    client.set_read_timeout(backend.timeout_s, 0);
    client.set_write_timeout(backend.timeout_s, 0);
    httplib::Headers headers;
    if (!backend.api_key_env_var.empty()) {
      if (const char* key = std::getenv(backend.api_key_env_var.c_str())) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
      }
    }
    auto result = client.Post(backend.completions_path, headers, body, "application/json");
    HttpResponse response;
    if (!result) {
      response.timed_out = result.error() == httplib::Error::ConnectionTimeout ||
                           result.error() == httplib::Error::Read ||
                           result.error() == httplib::Error::Write;
      response.error = httplib::to_string(result.error());
      return response;
    }
    response.transport_ok = true;
    response.status = result->status;
    response.body = result->body;
    return response;
  }
};

namespace detail {

// Counting semaphore bounding in-flight requests.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int limit) : available_(limit > 0 ? limit : 1) {}

  class Slot {
   public:
    explicit Slot(InFlightLimiter& limiter) : limiter_(limiter) { limiter_.acquire(); }
    ~Slot() { limiter_.release(); }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    InFlightLimiter& limiter_;
  };

 private:
  void acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [this] { return available_ > 0; });
    --available_;
  }
  void release() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      ++available_;
    }
    cv_.notify_one();
  }
  std::mutex mutex_;
  std::condition_variable cv_;
  int available_;
};

}  // namespace detail

// Backend-agnostic chat-completion client. In replay mode no network
// operation is ever attempted: a missing record is a hard error naming the
// key. In record mode an existing record is served as-is, otherwise the live
// response is fetched and frozen. Transport failures are retried with
// exponential backoff up to max_retries; errors stay errors — they are never
// turned into a class decision.
class LlmClient {
 public:
  LlmClient(BackendConfig backend, CacheMode mode = CacheMode::off,
            std::shared_ptr<CompletionCache> cache = nullptr,
            std::shared_ptr<HttpTransport> transport = nullptr)
      : backend_(std::move(backend)),
        mode_(mode),
        cache_(std::move(cache)),
        transport_(transport ? std::move(transport) : std::make_shared<HttplibTransport>()),
        limiter_(backend_.max_in_flight) {
    if (mode_ != CacheMode::off && !cache_) {
      throw ConfigError("record/replay mode requires a cache directory");
    }
  }

  const BackendConfig& backend() const { return backend_; }

  std::string complete(const std::vector<Message>& messages, const SamplingParams& params) {
    return run(messages, params, /*image_path=*/std::nullopt);
  }

  // As complete(), with the image attached to the final user message using
  // the content-part convention (base64 data URL). Refuses before any
  // network call when the backend is not image-capable.
  std::string complete_multimodal(const std::vector<Message>& messages,
                                  const std::string& image_path,
                                  const SamplingParams& params) {
    if (!backend_.supports_images) {
      throw CapabilityError("backend '" + backend_.model_id + "' does not accept images");
    }
    return run(messages, params, image_path);
  }

 private:
  std::string run(const std::vector<Message>& messages, const SamplingParams& params,
                  const std::optional<std::string>& image_path) {
    std::vector<std::string> attachment_digests;
    std::string image_bytes;
    if (image_path) {
      image_bytes = read_file_bytes(*image_path);
      attachment_digests.push_back(sha256_hex(image_bytes));
    }
    const std::string key = cache_key(backend_.model_id, params, messages, attachment_digests);

    if (mode_ == CacheMode::replay) {
      auto rec = cache_->get(key);
      if (!rec) throw CacheMissError(key);
      return rec->response_text;
    }
    if (mode_ == CacheMode::record) {
      if (auto rec = cache_->get(key)) return rec->response_text;
    }

    nlohmann::json request = build_request(messages, params, image_path, image_bytes);
    const auto started = std::chrono::steady_clock::now();
    nlohmann::json usage;
    const std::string response_text = post_with_retries(request.dump(), usage);
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);

    if (mode_ == CacheMode::record) {
      CompletionRecord rec;
      rec.cache_key = key;
      rec.request = redact_request(request, attachment_digests);
      rec.response_text = response_text;
      rec.metadata["latency_ms"] = elapsed.count();
      if (!backend_.supports_top_k) rec.metadata["top_k_not_transmitted"] = params.top_k;
      if (!usage.is_null()) rec.metadata["usage"] = usage;
      cache_->put(rec);
    }
    return response_text;
  }

  nlohmann::json build_request(const std::vector<Message>& messages,
                               const SamplingParams& params,
                               const std::optional<std::string>& image_path,
                               const std::string& image_bytes) const {
    nlohmann::json request;
    request["model"] = backend_.model_id;
    request["temperature"] = params.temperature;
    request["top_p"] = params.top_p;
    request["max_tokens"] = params.max_output_tokens;
    if (backend_.supports_top_k) {
      request["top_k"] = params.top_k;
    } else {
      std::fprintf(stderr,
                   "warning: backend does not accept top_k; top_k=%d recorded in "
                   "metadata only\n",
                   params.top_k);
    }
    nlohmann::json msgs = nlohmann::json::array();
    size_t last_user = messages.size();
    for (size_t i = 0; i < messages.size(); ++i) {
      if (messages[i].role == Role::user) last_user = i;
    }
    for (size_t i = 0; i < messages.size(); ++i) {
      const auto& m = messages[i];
      nlohmann::json jm;
      jm["role"] = to_string(m.role);
      if (image_path && i == last_user) {
        jm["content"] = nlohmann::json::array(
            {{{"type", "text"}, {"text", m.content}},
             {{"type", "image_url"},
              {"image_url",
               {{"url", "data:" + mime_type(*image_path) + ";base64," +
                            base64_encode(image_bytes)}}}}});
      } else {
        jm["content"] = m.content;
      }
      msgs.push_back(std::move(jm));
    }
    request["messages"] = std::move(msgs);
    return request;
  }

  // Cache records keep the request auditable without embedding megabytes of
  // base64: image parts are replaced by their digests.
  static nlohmann::json redact_request(nlohmann::json request,
                                       const std::vector<std::string>& attachment_digests) {
    for (auto& m : request["messages"]) {
      if (m["content"].is_array()) {
        for (auto& part : m["content"]) {
          if (part.value("type", "") == "image_url") {
            part["image_url"] = nlohmann::json{{"sha256", attachment_digests.empty()
                                                              ? std::string("?")
                                                              : attachment_digests.front()}};
          }
        }
      }
    }
    request["attachments"] = attachment_digests;
    return request;
  }

  static std::string mime_type(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == "jpg" || ext == "jpeg") return "image/jpeg";
    if (ext == "gif") return "image/gif";
    if (ext == "webp") return "image/webp";
    return "image/png";
  }

  std::string post_with_retries(const std::string& body, nlohmann::json& usage) {
    detail::InFlightLimiter::Slot slot(limiter_);
    const int attempts = backend_.max_retries + 1;
    std::string last_error;
    for (int attempt = 0; attempt < attempts; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(
            static_cast<long>(backend_.retry_backoff_ms) << (attempt - 1)));
      }
      HttpResponse response = transport_->post(backend_, body);
      if (!response.transport_ok) {
        if (response.timed_out) {
          last_error = "timeout: " + response.error;
          if (attempts == 1) throw TimeoutError("request timed out: " + response.error);
        } else {
          last_error = "transport: " + response.error;
          if (attempts == 1) throw TransportError("transport failure: " + response.error);
        }
        continue;
      }
      if (response.status == 401 || response.status == 403) {
        throw AuthError("authentication failed (HTTP " + std::to_string(response.status) +
                        ")");
      }
      if (response.status == 408 || response.status == 429 || response.status >= 500) {
        last_error = "HTTP " + std::to_string(response.status);
        if (attempts == 1) {
          throw TransportError("server error: " + last_error);
        }
        continue;
      }
      if (response.status != 200) {
        throw BackendError("server rejected request (HTTP " +
                           std::to_string(response.status) + "): " + response.body);
      }
      return extract_completion(response.body, usage);
    }
    throw RetriesExhaustedError("gave up after " + std::to_string(attempts) +
                                " attempts; last failure: " + last_error);
  }

  static std::string extract_completion(const std::string& body, nlohmann::json& usage) {
    nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw MalformedResponseError("response body is not JSON");
    }
    if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
      throw MalformedResponseError("response has no choices");
    }
    const auto& choice = doc["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string()) {
      throw MalformedResponseError("response choice has no message content");
    }
    usage = doc.value("usage", nlohmann::json());
    return choice["message"]["content"].get<std::string>();
  }

  BackendConfig backend_;
  CacheMode mode_;
  std::shared_ptr<CompletionCache> cache_;
  std::shared_ptr<HttpTransport> transport_;
  detail::InFlightLimiter limiter_;
};

}  // namespace adprompt
