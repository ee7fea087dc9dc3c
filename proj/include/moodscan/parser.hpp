#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "moodscan/backend.hpp"
#include "moodscan/core.hpp"
#include "moodscan/prompt.hpp"

namespace moodscan {

enum class Repair { FenceStripped, ProseStripped, KeyNormalized, ValueCoerced };

std::string_view repair_name(Repair r);  // fence_stripped, prose_stripped, ...

// Ordered, duplicate-free set of repairs.
class RepairLog {
 public:
  void add(Repair r);
  bool contains(Repair r) const;
  bool empty() const { return items_.empty(); }
  const std::vector<Repair>& items() const { return items_; }
  void merge(const RepairLog& other);
  bool operator==(const RepairLog&) const = default;

 private:
  std::vector<Repair> items_;
};

enum class ParseErrorKind { NoObjectFound, MalformedObject, MissingEmotion, InvalidValue };

std::string_view parse_error_kind_name(ParseErrorKind kind);

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::string detail);

  ParseErrorKind kind() const { return kind_; }
  // Emotion or key name for MissingEmotion / InvalidValue.
  const std::string& detail() const { return detail_; }

 private:
  ParseErrorKind kind_;
  std::string detail_;
};

struct ExtractedCandidate {
  std::string text;
  RepairLog repairs;
};

// Finds the first balanced {...} object in raw model output, stripping code
// fences and surrounding prose. Throws ParseError(NoObjectFound).
ExtractedCandidate extract_candidate(std::string_view raw);

struct ParsedClassification {
  EmotionLabelSet labels;
  std::optional<int> reported_score;
  RepairLog repairs;
};

// Validates the eight emotion keys. Keys are normalized (case, spaces,
// hyphens, `cog_dysfunction`); values may be booleans or "true"/"false"
// strings in any case. Python-style bare True/False are also accepted.
// Numbers are not booleans. Unknown keys are ignored.
ParsedClassification parse_classification(std::string_view candidate, PromptVariant variant);

// extract_candidate followed by parse_classification, with repairs merged.
ParsedClassification parse_response(std::string_view raw, PromptVariant variant);

struct RunMetadata {
  std::string model_name;
  std::string prompt_version;
  std::string timestamp;  // ISO-8601 UTC
};

struct Classification {
  std::string post_id;
  EmotionLabelSet labels;
  SeverityScore severity;
  SeverityLevel level = SeverityLevel::Minimal;
  std::optional<int> reported_score;
  bool score_mismatch = false;
  std::string model_name;
  std::string prompt_version;
  std::string timestamp;
  int attempts = 1;
  RepairLog repairs;

  bool operator==(const Classification&) const = default;
};

// Severity is always recomputed from the labels; the model's own score is kept
// only for the mismatch flag.
Classification reconcile(std::string post_id, const ParsedClassification& parsed, const RunMetadata& meta);

// Terminal failure of one post after all attempts.
struct FailureRecord {
  std::string post_id;
  std::string error_kind;  // ParseErrorKind or BackendErrorKind name
  std::string message;
  int attempts = 0;
  std::string model_name;
  std::string prompt_version;
  std::string timestamp;

  // Transport-level failures may succeed later and are not cached.
  bool transient() const { return error_kind == "Timeout" || error_kind == "TransportError"; }
  bool operator==(const FailureRecord&) const = default;
};

class ClassificationFailed : public std::runtime_error {
 public:
  explicit ClassificationFailed(FailureRecord record);
  const FailureRecord& record() const { return record_; }

 private:
  FailureRecord record_;
};

using Clock = std::function<std::string()>;  // returns an ISO-8601 UTC timestamp
Clock system_clock_iso();
Clock fixed_clock(std::string timestamp);
std::string format_iso8601(std::chrono::system_clock::time_point tp);

struct ClassifyOptions {
  PromptVariant variant = PromptVariant::Base;
  std::size_t max_chars = kDefaultMaxPostChars;
  PromptTemplate prompt_template = PromptTemplate::builtin();
  Sleeper sleep = real_sleeper();
  Clock clock = system_clock_iso();
};

// Renders, generates, parses and reconciles one post. Parse failures trigger a
// re-ask with kRepromptSuffix, up to config.max_retries times. Backend errors
// that survive generate()'s own retries are terminal. Throws EmptyPostError
// or ClassificationFailed.
Classification classify_with_retry(TextBackend& backend, std::string_view post_id, std::string_view post_text,
                                   const BackendConfig& config, const ClassifyOptions& options);

}  // namespace moodscan
