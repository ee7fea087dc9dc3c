#include "moodscan/backend.hpp"

#include <algorithm>
#include <exception>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "moodscan/core.hpp"

namespace moodscan {

using json = nlohmann::json;

void BackendConfig::validate() const {
  if (base_url.empty()) throw std::invalid_argument("backend base_url is empty");
  if (model_name.empty()) throw std::invalid_argument("backend model_name is empty");
  if (temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
  if (request_timeout_s <= 0.0) throw std::invalid_argument("request_timeout must be positive");
  if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
  if (backoff_initial_s < 0.0 || backoff_multiplier < 1.0 || backoff_jitter < 0.0 || backoff_jitter >= 1.0) {
    throw std::invalid_argument("invalid backoff parameters");
  }
}

std::string_view backend_error_kind_name(BackendErrorKind kind) {
  return kind == BackendErrorKind::Timeout ? "Timeout" : "TransportError";
}

// ---------------------------------------------------------------------------
// HTTP

std::string HttpBackend::request_body(const RenderedPrompt& prompt, const BackendConfig& config) {
  json body = {
      {"model", config.model_name},
      {"prompt", prompt.text},
      {"stream", false},
      {"options", {{"temperature", config.temperature}}},
      {"temperature", config.temperature},
  };
  return body.dump();
}

std::string HttpBackend::completion_from_body(std::string_view body) {
  json parsed = json::parse(body.begin(), body.end(), nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded() || !parsed.is_object()) throw std::runtime_error("response body is not a JSON object");
  if (auto it = parsed.find("response"); it != parsed.end() && it->is_string()) return it->get<std::string>();
  if (auto it = parsed.find("message"); it != parsed.end() && it->is_object()) {
    if (auto c = it->find("content"); c != it->end() && c->is_string()) return c->get<std::string>();
  }
  throw std::runtime_error("response body has no completion text");
}

std::string HttpBackend::complete(std::string_view post_id, const RenderedPrompt& prompt, const BackendConfig& config) {
  httplib::Client client(config.base_url);
  if (!client.is_valid()) {
    throw BackendError(BackendErrorKind::Transport, std::string(post_id), "invalid base_url: " + config.base_url);
  }
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(config.request_timeout_s));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(config.endpoint_path, request_body(prompt, config), "application/json");
  if (!res) {
    const auto err = res.error();
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    // Some platforms report a refused connect as ConnectionTimeout, so the
    // elapsed time decides.
    const bool timed_out = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) &&
                           elapsed >= 0.95 * config.request_timeout_s;
    throw BackendError(timed_out ? BackendErrorKind::Timeout : BackendErrorKind::Transport, std::string(post_id),
                       "request to " + config.base_url + " failed: " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError(BackendErrorKind::Transport, std::string(post_id),
                       "server returned HTTP " + std::to_string(res->status));
  }
  try {
    return completion_from_body(res->body);
  } catch (const std::exception& e) {
    throw BackendError(BackendErrorKind::Transport, std::string(post_id), e.what());
  }
}

// ---------------------------------------------------------------------------
// Mock

MockBackend::MockBackend() : MockBackend(keyword_responder()) {}

MockBackend::MockBackend(Responder responder) : responder_(std::move(responder)) {}

MockBackend::Responder MockBackend::keyword_responder() {
  return [](std::string_view, const RenderedPrompt& prompt, int) -> MockReply {
    const std::string& text = prompt.text;
    if (text.find("#offline") != std::string::npos) return MockReply::transport_failure();
    if (text.find("#noanswer") != std::string::npos) return MockReply::ok("I cannot help with that.");

    EmotionLabelSet labels;
    for (Emotion e : kEmotions) {
      if (text.find("#" + std::string(emotion_name(e))) != std::string::npos) labels.set(e);
    }
    json obj = json::object();
    for (Emotion e : kEmotions) obj[std::string(emotion_name(e))] = labels.has(e);
    if (prompt.variant == PromptVariant::Scored) obj["severity_score"] = compute_severity(labels).value;
    return MockReply::ok(obj.dump(2));
  };
}

std::string MockBackend::complete(std::string_view post_id, const RenderedPrompt& prompt, const BackendConfig&) {
  const std::size_t now = in_flight_.fetch_add(1) + 1;
  std::size_t prev = peak_.load();
  while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
  }
  calls_.fetch_add(1);

  int call = 0;
  {
    std::lock_guard lock(mu_);
    log_.emplace_back(post_id);
    auto it = per_post_.find(post_id);
    if (it == per_post_.end()) it = per_post_.emplace(std::string(post_id), 0).first;
    call = ++it->second;
  }

  struct Release {
    std::atomic<std::size_t>& counter;
    ~Release() { counter.fetch_sub(1); }
  } release{in_flight_};

  if (delay_.count() > 0) std::this_thread::sleep_for(delay_);

  MockReply reply = responder_(post_id, prompt, call);
  switch (reply.kind) {
    case MockReply::Kind::Text: return std::move(reply.text);
    case MockReply::Kind::TransportFailure:
      throw BackendError(BackendErrorKind::Transport, std::string(post_id), "mock transport failure");
    case MockReply::Kind::Timeout:
      throw BackendError(BackendErrorKind::Timeout, std::string(post_id), "mock timeout");
  }
  return {};
}

std::vector<std::string> MockBackend::call_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

void MockBackend::reset_counters() {
  std::lock_guard lock(mu_);
  calls_ = 0;
  peak_ = 0;
  log_.clear();
  per_post_.clear();
}

// ---------------------------------------------------------------------------
// Retry and batching

Sleeper real_sleeper() {
  return [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
}

RawResponse generate(TextBackend& backend, std::string_view post_id, const RenderedPrompt& prompt,
                     const BackendConfig& config, const Sleeper& sleep) {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  double backoff = config.backoff_initial_s;
  const int max_attempts = 1 + std::max(0, config.max_retries);

  for (int attempt = 1;; ++attempt) {
    const auto started = std::chrono::steady_clock::now();
    try {
      RawResponse out;
      out.text = backend.complete(post_id, prompt, config);
      out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
      out.attempt = attempt;
      return out;
    } catch (const BackendError& e) {
      if (attempt >= max_attempts) throw BackendError(e.kind(), std::string(post_id), e.what(), attempt);
    }
    if (sleep && backoff > 0.0) {
      std::uniform_real_distribution<double> jitter(1.0 - config.backoff_jitter, 1.0 + config.backoff_jitter);
      sleep(std::chrono::duration<double>(backoff * jitter(rng)));
    }
    backoff *= config.backoff_multiplier;
  }
}

void run_bounded(std::size_t n, int max_in_flight, const std::function<void(std::size_t)>& task) {
  if (n == 0) return;
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, max_in_flight)));

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto worker = [&] {
    while (!abort.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        abort = true;
      }
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
}

BatchSummary generate_batch(TextBackend& backend, const std::vector<BatchItem>& items, const BackendConfig& config,
                            const BatchSink& sink, const Sleeper& sleep) {
  BatchSummary summary;
  std::mutex sink_mu;

  run_bounded(items.size(), config.max_in_flight, [&](std::size_t i) {
    const BatchItem& item = items[i];
    BatchOutcome outcome;
    outcome.post_id = item.post_id;
    try {
      outcome.response = generate(backend, item.post_id, item.prompt, config, sleep);
    } catch (const BackendError& e) {
      outcome.error = e;
    }
    std::lock_guard lock(sink_mu);
    if (outcome.response) {
      ++summary.ok;
    } else {
      ++summary.failed;
    }
    if (sink) sink(std::move(outcome));
  });
  return summary;
}

}  // namespace moodscan
