// Copyright 2026 The confcorrect Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CONFCORRECT_CORRECTOR_HPP
#define CONFCORRECT_CORRECTOR_HPP

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "confcorrect/error.hpp"
#include "confcorrect/normalize.hpp"
#include "confcorrect/strategy.hpp"
#include "confcorrect/types.hpp"

namespace confcorrect {

enum class BackendKind { kHttp, kMockIdentity, kMockScripted, kReplay };

inline constexpr std::array<std::pair<BackendKind, std::string_view>, 4> kBackendNames{{
    {BackendKind::kHttp, "http"},
    {BackendKind::kMockIdentity, "mock_identity"},
    {BackendKind::kMockScripted, "mock_scripted"},
    {BackendKind::kReplay, "replay"},
}};

inline std::string_view to_string(BackendKind k) { return detail::enum_name(k, kBackendNames); }
inline BackendKind parse_backend(std::string_view s) { return detail::parse_enum(s, kBackendNames, "backend"); }

inline constexpr const char* kApiKeyEnv = "CONFCORRECT_API_KEY";
inline constexpr const char* kEndpointEnv = "CONFCORRECT_ENDPOINT";

struct BackendConfig {
  BackendKind kind = BackendKind::kMockIdentity;
  /// Base URL of an OpenAI-compatible server, e.g. http://localhost:8000/v1.
  std::string endpoint;
  std::string model_name = "default";
  double timeout_seconds = 60.0;
  int max_retries = 3;
  int concurrency_limit = 4;
  std::optional<std::filesystem::path> cache_path;
  /// Input-to-output table for mock_scripted.
  std::optional<std::filesystem::path> script_path;
  std::string api_key;
  /// First retry delay; doubles on every further attempt.
  double backoff_seconds = 0.5;
  std::optional<long long> seed;
  double temperature = 0.0;

  void validate() const {
    if (concurrency_limit < 1) throw ParameterError("concurrency_limit must be >= 1");
    if (max_retries < 0) throw ParameterError("max_retries must be >= 0");
    if (!(timeout_seconds > 0.0)) throw ParameterError("timeout must be > 0");
    if (!(backoff_seconds >= 0.0)) throw ParameterError("backoff must be >= 0");
    if (kind == BackendKind::kHttp && endpoint.empty()) {
      throw ParameterError("http backend needs an endpoint (--endpoint or CONFCORRECT_ENDPOINT)");
    }
    if (kind == BackendKind::kReplay && !cache_path) throw ParameterError("replay backend needs a cache path");
    if (kind == BackendKind::kMockScripted && !script_path) {
      throw ParameterError("mock_scripted backend needs a script file");
    }
  }

  /// Provenance string for report headers. Never includes the API key.
  std::string describe() const {
    std::ostringstream s;
    s << "kind=" << to_string(kind) << " model=" << model_name << " temperature=" << temperature;
    if (kind == BackendKind::kHttp) s << " endpoint=" << endpoint;
    if (seed) s << " seed=" << *seed;
    if (cache_path) s << " cache=" << cache_path->filename().string();
    if (script_path) s << " script=" << script_path->filename().string();
    return s.str();
  }
};

/// Hex SHA-256 over model name, a NUL separator and the exact prompt bytes.
inline std::string prompt_hash(std::string_view prompt, std::string_view model_name) {
  std::string material(model_name);
  material.push_back('\0');
  material.append(prompt);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(material.data(), material.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

struct CorrectionRecord {
  std::string prompt_hash;
  std::string raw_output;
  double latency_ms = 0.0;
  std::string backend;
  std::string timestamp;
};

inline nlohmann::ordered_json to_json(const CorrectionRecord& r) {
  nlohmann::ordered_json j;
  j["prompt_hash"] = r.prompt_hash;
  j["raw_output"] = r.raw_output;
  j["latency_ms"] = r.latency_ms;
  j["backend"] = r.backend;
  j["timestamp"] = r.timestamp;
  return j;
}

inline CorrectionRecord correction_record_from_json(const nlohmann::json& j) {
  CorrectionRecord r;
  r.prompt_hash = j.at("prompt_hash").get<std::string>();
  r.raw_output = j.at("raw_output").get<std::string>();
  r.latency_ms = j.value("latency_ms", 0.0);
  r.backend = j.value("backend", "");
  r.timestamp = j.value("timestamp", "");
  return r;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Prompt-hash keyed store of backend outputs, optionally persisted as an
/// append-only line-delimited file. Readers run concurrently; writes are
/// serialized. On duplicate hashes in the file the first record wins.
class ResponseCache {
 public:
  ResponseCache() = default;

  explicit ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(*path_);
    if (!in) return;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        auto rec = correction_record_from_json(nlohmann::json::parse(line));
        entries_.emplace(rec.prompt_hash, std::move(rec));
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path_->string() + ":" + std::to_string(lineno) + ": bad cache record: " + e.what());
      }
    }
  }

  std::optional<CorrectionRecord> lookup(const std::string& hash) const {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(hash); it != entries_.end()) return it->second;
    return std::nullopt;
  }

  void store(const CorrectionRecord& rec) {
    std::unique_lock lock(mutex_);
    if (!entries_.emplace(rec.prompt_hash, rec).second) return;
    if (!path_) return;
    std::ofstream out(*path_, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to cache " + path_->string());
    out << to_json(rec).dump() << '\n';
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, CorrectionRecord> entries_;
};

/// Something that turns a prompt into raw model text.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const std::string& prompt) = 0;
  virtual std::string name() const = 0;
};

/// Echoes the hypothesis line of the prompt without confidence annotations.
class IdentityBackend : public Backend {
 public:
  std::string complete(const std::string& prompt) override {
    return join_words(parse_correction(extract_question_text(prompt)).words);
  }
  std::string name() const override { return "mock_identity"; }
};

/// Returns scripted outputs keyed by the normalized hypothesis line; inputs
/// without an entry are echoed like IdentityBackend.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::map<std::string, std::string> script) {
    for (auto& [in, out] : script) script_.emplace(key(in), std::move(out));
  }

  /// Reads either one JSON object `{input: output, ...}` or lines of
  /// `{"input": ..., "output": ...}`.
  static ScriptedBackend from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open script " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const auto text = buf.str();
    std::map<std::string, std::string> script;
    try {
      auto whole = nlohmann::json::parse(text, nullptr, false);
      if (!whole.is_discarded() && whole.is_object() && !whole.contains("input")) {
        for (auto& [k, v] : whole.items()) script.emplace(k, v.get<std::string>());
      } else {
        std::istringstream lines(text);
        std::string line;
        while (std::getline(lines, line)) {
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          auto j = nlohmann::json::parse(line);
          script.emplace(j.at("input").get<std::string>(), j.at("output").get<std::string>());
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("bad script file " + path.string() + ": " + e.what());
    }
    return ScriptedBackend(std::move(script));
  }

  std::string complete(const std::string& prompt) override {
    const auto words = join_words(parse_correction(extract_question_text(prompt)).words);
    if (auto it = script_.find(words); it != script_.end()) return it->second;
    return words;
  }
  std::string name() const override { return "mock_scripted"; }

 private:
  static std::string key(const std::string& text) { return join_words(normalize_text(text)); }
  std::map<std::string, std::string> script_;
};

/// Replay is cache-only; reaching the backend means a miss.
class ReplayMissBackend : public Backend {
 public:
  std::string complete(const std::string&) override {
    throw BackendError("replay cache miss: prompt not present in cache");
  }
  std::string name() const override { return "replay"; }
};

/// OpenAI-compatible chat-completions client with exponential backoff on
/// transient failures (connection errors, 408, 429, 5xx).
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
    auto url = cfg_.endpoint;
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto scheme = url.find("://");
    const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) {
      origin_ = url;
    } else {
      origin_ = url.substr(0, path_start);
      base_path_ = url.substr(path_start);
    }
  }

  std::string complete(const std::string& prompt) override {
    nlohmann::json body;
    body["model"] = cfg_.model_name;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = cfg_.temperature;
    if (cfg_.seed) body["seed"] = *cfg_.seed;
    const auto payload = body.dump();

    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        const auto delay = cfg_.backoff_seconds * static_cast<double>(1 << std::min(attempt - 1, 16));
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      }
      httplib::Client client(origin_);
      const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::duration<double>(cfg_.timeout_seconds));
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      auto res = client.Post(base_path_ + "/chat/completions", headers, payload, "application/json");
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 408 || res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status < 200 || res->status >= 300) {
        throw BackendError("HTTP " + std::to_string(res->status) + " from " + cfg_.endpoint + ": " + res->body);
      }
      return extract_content(res->body);
    }
    throw BackendError("giving up after " + std::to_string(cfg_.max_retries + 1) + " attempts: " + last_error);
  }

  std::string name() const override { return "http"; }

  static std::string extract_content(const std::string& body) {
    try {
      const auto j = nlohmann::json::parse(body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("malformed chat-completions response: ") + e.what());
    }
  }

 private:
  BackendConfig cfg_;
  std::string origin_;
  std::string base_path_;
};

inline std::shared_ptr<Backend> make_backend(const BackendConfig& cfg) {
  switch (cfg.kind) {
    case BackendKind::kHttp: return std::make_shared<HttpBackend>(cfg);
    case BackendKind::kMockIdentity: return std::make_shared<IdentityBackend>();
    case BackendKind::kMockScripted:
      return std::make_shared<ScriptedBackend>(ScriptedBackend::from_file(*cfg.script_path));
    case BackendKind::kReplay: return std::make_shared<ReplayMissBackend>();
  }
  throw ParameterError("unknown backend kind");
}

/// A backend fronted by the response cache. Identical prompts issued
/// concurrently share one backend call.
class Corrector {
 public:
  explicit Corrector(BackendConfig cfg) : Corrector(cfg, nullptr) {}

  Corrector(BackendConfig cfg, std::shared_ptr<Backend> backend) : cfg_(std::move(cfg)) {
    cfg_.validate();
    backend_ = backend ? std::move(backend) : make_backend(cfg_);
    cache_ = cfg_.cache_path ? std::make_unique<ResponseCache>(*cfg_.cache_path) : std::make_unique<ResponseCache>();
  }

  std::string correct(const std::string& prompt) { return correct_record(prompt).raw_output; }

  CorrectionRecord correct_record(const std::string& prompt) {
    const auto hash = prompt_hash(prompt, cfg_.model_name);
    if (auto hit = cache_->lookup(hash)) return *hit;

    std::promise<CorrectionRecord> promise;
    std::shared_future<CorrectionRecord> pending;
    bool owner = false;
    {
      std::lock_guard lock(inflight_mutex_);
      if (auto it = inflight_.find(hash); it != inflight_.end()) {
        pending = it->second;
      } else {
        pending = promise.get_future().share();
        inflight_.emplace(hash, pending);
        owner = true;
      }
    }
    if (!owner) return pending.get();

    // A racing owner may have finished between our lookup and the insert.
    if (auto hit = cache_->lookup(hash)) {
      promise.set_value(*hit);
      finish(hash);
      return *hit;
    }
    try {
      const auto start = std::chrono::steady_clock::now();
      ++calls_;
      CorrectionRecord rec;
      rec.raw_output = backend_->complete(prompt);
      rec.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      rec.prompt_hash = hash;
      rec.backend = backend_->name();
      rec.timestamp = utc_timestamp();
      cache_->store(rec);
      promise.set_value(rec);
      finish(hash);
      return rec;
    } catch (...) {
      promise.set_exception(std::current_exception());
      finish(hash);
      throw;
    }
  }

  /// Number of prompts that reached the backend (cache misses).
  std::size_t backend_calls() const noexcept { return calls_.load(); }
  const BackendConfig& config() const noexcept { return cfg_; }

 private:
  void finish(const std::string& hash) {
    std::lock_guard lock(inflight_mutex_);
    inflight_.erase(hash);
  }

  BackendConfig cfg_;
  std::shared_ptr<Backend> backend_;
  std::unique_ptr<ResponseCache> cache_;
  std::mutex inflight_mutex_;
  std::unordered_map<std::string, std::shared_future<CorrectionRecord>> inflight_;
  std::atomic<std::size_t> calls_{0};
};

/// One-shot convenience wrapper; builds a Corrector per call.
inline std::string correct(const std::string& prompt, const BackendConfig& cfg) {
  Corrector corrector(cfg);
  return corrector.correct(prompt);
}

enum class BatchStatus { kPassThrough, kCorrected, kFailed };

inline constexpr std::array<std::pair<BatchStatus, std::string_view>, 3> kBatchStatusNames{{
    {BatchStatus::kPassThrough, "passthrough"},
    {BatchStatus::kCorrected, "corrected"},
    {BatchStatus::kFailed, "failed"},
}};
inline std::string_view to_string(BatchStatus s) { return detail::enum_name(s, kBatchStatusNames); }
inline BatchStatus parse_batch_status(std::string_view s) {
  return detail::parse_enum(s, kBatchStatusNames, "status");
}

struct BatchOutput {
  BatchStatus status = BatchStatus::kPassThrough;
  /// Backend text, or the hypothesis for pass-through and failed entries.
  std::string raw_output;
  std::string prompt_hash;
  std::string error;
};

/// Runs every triggered decision through `corrector` with at most
/// `concurrency_limit` requests in flight. Results are keyed by utterance
/// id; a failing utterance is marked failed without stopping the batch.
inline std::map<std::string, BatchOutput> correct_batch(std::span<const Utterance> utterances,
                                                        std::span<const CorrectionDecision> decisions,
                                                        Corrector& corrector) {
  if (utterances.size() != decisions.size()) {
    throw ParameterError("correct_batch: utterance and decision counts differ");
  }
  std::vector<BatchOutput> outputs(utterances.size());
  std::vector<std::size_t> work;
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    outputs[i].raw_output = join_words(utterances[i].hypothesis_words());
    if (!decisions[i].should_correct) continue;
    if (!decisions[i].prompt) {
      throw ParameterError("utterance '" + utterances[i].id + "' is marked for correction but has no prompt");
    }
    work.push_back(i);
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < work.size(); k = next++) {
      const auto i = work[k];
      auto& out = outputs[i];
      const auto& prompt = *decisions[i].prompt;
      out.prompt_hash = prompt_hash(prompt, corrector.config().model_name);
      try {
        out.raw_output = corrector.correct(prompt);
        out.status = BatchStatus::kCorrected;
      } catch (const std::exception& e) {
        out.status = BatchStatus::kFailed;
        out.error = e.what();
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(corrector.config().concurrency_limit),
                                             work.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    if (threads > 0) worker();
  }

  std::map<std::string, BatchOutput> keyed;
  for (std::size_t i = 0; i < utterances.size(); ++i) keyed.emplace(utterances[i].id, std::move(outputs[i]));
  return keyed;
}

}  // namespace confcorrect

#endif  // CONFCORRECT_CORRECTOR_HPP
