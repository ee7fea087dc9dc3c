#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "moodscan/prompt.hpp"

namespace moodscan {

struct BackendConfig {
  std::string base_url = "http://127.0.0.1:11434";
  std::string endpoint_path = "/api/generate";
  std::string model_name = "gemma3:27b";
  double temperature = 0.0;
  double request_timeout_s = 120.0;
  int max_retries = 3;
  int max_in_flight = 4;
  // Exponential backoff between transport retries.
  double backoff_initial_s = 0.5;
  double backoff_multiplier = 2.0;
  double backoff_jitter = 0.2;

  void validate() const;  // throws std::invalid_argument
};

struct RawResponse {
  std::string text;
  std::chrono::milliseconds latency{0};
  int attempt = 1;
};

enum class BackendErrorKind { Timeout, Transport };

std::string_view backend_error_kind_name(BackendErrorKind kind);

class BackendError : public std::runtime_error {
 public:
  BackendError(BackendErrorKind kind, std::string post_id, const std::string& what, int attempts = 1)
      : std::runtime_error(what), kind_(kind), post_id_(std::move(post_id)), attempts_(attempts) {}

  BackendErrorKind kind() const { return kind_; }
  const std::string& post_id() const { return post_id_; }
  int attempts() const { return attempts_; }

 private:
  BackendErrorKind kind_;
  std::string post_id_;
  int attempts_;
};

// One request/response exchange with a text-generation server. Implementations
// throw BackendError on failure and must be safe for concurrent calls.
class TextBackend {
 public:
  virtual ~TextBackend() = default;
  virtual std::string complete(std::string_view post_id, const RenderedPrompt& prompt, const BackendConfig& config) = 0;
};

// Non-streaming JSON "generate" endpoint: POST {model, prompt, temperature,
// stream:false}, completion read from the "response" field.
class HttpBackend final : public TextBackend {
 public:
  std::string complete(std::string_view post_id, const RenderedPrompt& prompt, const BackendConfig& config) override;

  static std::string request_body(const RenderedPrompt& prompt, const BackendConfig& config);
  // Extracts the completion text; accepts {"response": ...} and the
  // chat-style {"message": {"content": ...}} layout.
  static std::string completion_from_body(std::string_view body);
};

// What the mock does for a single attempt.
struct MockReply {
  enum class Kind { Text, TransportFailure, Timeout };
  Kind kind = Kind::Text;
  std::string text;

  static MockReply ok(std::string t) { return {Kind::Text, std::move(t)}; }
  static MockReply transport_failure() { return {Kind::TransportFailure, {}}; }
  static MockReply timeout() { return {Kind::Timeout, {}}; }
};

// Deterministic in-process backend. The responder sees the post id, the prompt,
// and the 1-based call number for that post id.
class MockBackend final : public TextBackend {
 public:
  using Responder = std::function<MockReply(std::string_view post_id, const RenderedPrompt& prompt, int call)>;

  MockBackend();  // keyword responder, see keyword_responder()
  explicit MockBackend(Responder responder);

  // Emotion present iff the prompt contains "#<emotion_name>". A prompt
  // containing "#noanswer" gets prose instead of an object; "#offline" fails
  // at transport level. Scored prompts receive a correct severity_score.
  static Responder keyword_responder();

  // Fixed extra latency per call, to make overlap observable.
  void set_delay(std::chrono::microseconds d) { delay_ = d; }

  std::string complete(std::string_view post_id, const RenderedPrompt& prompt, const BackendConfig& config) override;

  std::size_t calls() const { return calls_.load(); }
  std::size_t peak_in_flight() const { return peak_.load(); }
  std::vector<std::string> call_log() const;
  void reset_counters();

 private:
  Responder responder_;
  std::chrono::microseconds delay_{0};
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> peak_{0};
  mutable std::mutex mu_;
  std::vector<std::string> log_;
  std::map<std::string, int, std::less<>> per_post_;
};

// Sleeps between retries; tests substitute a no-op.
using Sleeper = std::function<void(std::chrono::duration<double>)>;
Sleeper real_sleeper();

// Calls backend.complete, retrying transport failures and timeouts up to
// config.max_retries times with jittered exponential backoff.
RawResponse generate(TextBackend& backend, std::string_view post_id, const RenderedPrompt& prompt,
                     const BackendConfig& config, const Sleeper& sleep = real_sleeper());

// Runs task(i) for i in [0, n) with at most max_in_flight concurrent tasks.
// A task that throws aborts dispatch of further tasks; the first exception is
// rethrown after in-flight tasks finish.
void run_bounded(std::size_t n, int max_in_flight, const std::function<void(std::size_t)>& task);

struct BatchItem {
  std::string post_id;
  RenderedPrompt prompt;
};

struct BatchOutcome {
  std::string post_id;
  std::optional<RawResponse> response;
  std::optional<BackendError> error;
};

struct BatchSummary {
  std::size_t ok = 0;
  std::size_t failed = 0;
  bool operator==(const BatchSummary&) const = default;
};

// Sink calls are serialized.
using BatchSink = std::function<void(BatchOutcome)>;

BatchSummary generate_batch(TextBackend& backend, const std::vector<BatchItem>& items, const BackendConfig& config,
                            const BatchSink& sink, const Sleeper& sleep = real_sleeper());

}  // namespace moodscan
