#include "moodscan/parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <ctime>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace moodscan {

using ordered_json = nlohmann::ordered_json;

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Returns the offset one past the '}' that closes the '{' at `open`, or npos.
std::size_t balanced_end(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::optional<Span> first_balanced_object(std::string_view text) {
  for (std::size_t open = text.find('{'); open != std::string_view::npos; open = text.find('{', open + 1)) {
    const std::size_t end = balanced_end(text, open);
    if (end != std::string_view::npos) return Span{open, end};
  }
  return std::nullopt;
}

struct Fence {
  Span body;         // contents between the fence lines
  Span outer;        // fence markers included
};

std::optional<Fence> find_fence(std::string_view raw) {
  constexpr std::string_view kMark = "```";
  const std::size_t open = raw.find(kMark);
  if (open == std::string_view::npos) return std::nullopt;
  // The opening line may carry a language tag ("```json").
  std::size_t body_begin = raw.find('\n', open + kMark.size());
  body_begin = body_begin == std::string_view::npos ? raw.size() : body_begin + 1;
  const std::size_t close = raw.find(kMark, body_begin);
  Fence f;
  f.body = {body_begin, close == std::string_view::npos ? raw.size() : close};
  f.outer = {open, close == std::string_view::npos ? raw.size() : close + kMark.size()};
  return f;
}

// Rewrites bare Python literals (True/False/None) outside strings.
std::string rewrite_python_literals(std::string_view text, bool* changed) {
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 3> kMap = {{
      {"True", "true"},
      {"False", "false"},
      {"None", "null"},
  }};
  auto ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; };

  std::string out;
  out.reserve(text.size());
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < text.size();) {
    const char c = text[i];
    if (in_string) {
      out.push_back(c);
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      ++i;
      continue;
    }
    if (c == '"') {
      in_string = true;
      out.push_back(c);
      ++i;
      continue;
    }
    bool replaced = false;
    if (i == 0 || !ident(text[i - 1])) {
      for (const auto& [from, to] : kMap) {
        if (text.substr(i, from.size()) == from && (i + from.size() == text.size() || !ident(text[i + from.size()]))) {
          out.append(to);
          i += from.size();
          replaced = true;
          *changed = true;
          break;
        }
      }
    }
    if (!replaced) out.push_back(text[i++]);
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::optional<int> read_reported_score(const ordered_json& v, RepairLog& repairs) {
  if (v.is_number_integer() || v.is_number_unsigned()) return v.get<int>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) < 1e6) return static_cast<int>(d);
    return std::nullopt;
  }
  if (v.is_string()) {
    const std::string_view s = trim(v.get_ref<const std::string&>());
    if (s.empty() || s.size() > 6) return std::nullopt;
    if (!std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) != 0; })) return std::nullopt;
    repairs.add(Repair::ValueCoerced);
    return std::stoi(std::string(s));
  }
  return std::nullopt;
}

}  // namespace

std::string_view repair_name(Repair r) {
  switch (r) {
    case Repair::FenceStripped: return "fence_stripped";
    case Repair::ProseStripped: return "prose_stripped";
    case Repair::KeyNormalized: return "key_normalized";
    case Repair::ValueCoerced: return "value_coerced";
  }
  return "unknown";
}

void RepairLog::add(Repair r) {
  if (!contains(r)) items_.push_back(r);
}

bool RepairLog::contains(Repair r) const { return std::find(items_.begin(), items_.end(), r) != items_.end(); }

void RepairLog::merge(const RepairLog& other) {
  for (Repair r : other.items_) add(r);
}

std::string_view parse_error_kind_name(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::NoObjectFound: return "NoObjectFound";
    case ParseErrorKind::MalformedObject: return "MalformedObject";
    case ParseErrorKind::MissingEmotion: return "MissingEmotion";
    case ParseErrorKind::InvalidValue: return "InvalidValue";
  }
  return "Unknown";
}

ParseError::ParseError(ParseErrorKind kind, std::string detail)
    : std::runtime_error(detail.empty() ? std::string(parse_error_kind_name(kind))
                                        : fmt::format("{}({})", parse_error_kind_name(kind), detail)),
      kind_(kind),
      detail_(std::move(detail)) {}

ExtractedCandidate extract_candidate(std::string_view raw) {
  ExtractedCandidate out;
  Span region{0, raw.size()};

  if (auto fence = find_fence(raw)) {
    const std::string_view body = raw.substr(fence->body.begin, fence->body.end - fence->body.begin);
    if (first_balanced_object(body)) {
      region = fence->body;
      out.repairs.add(Repair::FenceStripped);
      const bool prose_outside = !is_blank(raw.substr(0, fence->outer.begin)) || !is_blank(raw.substr(fence->outer.end));
      if (prose_outside) out.repairs.add(Repair::ProseStripped);
    }
  }

  const std::string_view scope = raw.substr(region.begin, region.end - region.begin);
  const auto obj = first_balanced_object(scope);
  if (!obj) throw ParseError(ParseErrorKind::NoObjectFound, "");

  if (!is_blank(scope.substr(0, obj->begin)) || !is_blank(scope.substr(obj->end))) {
    out.repairs.add(Repair::ProseStripped);
  }
  out.text = std::string(scope.substr(obj->begin, obj->end - obj->begin));
  return out;
}

ParsedClassification parse_classification(std::string_view candidate, PromptVariant variant) {
  ParsedClassification out;

  bool literals_rewritten = false;
  const std::string text = rewrite_python_literals(candidate, &literals_rewritten);
  if (literals_rewritten) out.repairs.add(Repair::ValueCoerced);

  const ordered_json doc = ordered_json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) throw ParseError(ParseErrorKind::MalformedObject, "");

  std::array<std::optional<bool>, kEmotionCount> seen{};
  for (const auto& [raw_key, value] : doc.items()) {
    const std::string key = normalize_label_key(raw_key);

    if (key == "severity_score") {
      if (key != raw_key) out.repairs.add(Repair::KeyNormalized);
      if (variant == PromptVariant::Scored) out.reported_score = read_reported_score(value, out.repairs);
      continue;
    }

    const auto emotion = emotion_from_key(key);
    if (!emotion) continue;
    if (key != raw_key || key != emotion_name(*emotion)) out.repairs.add(Repair::KeyNormalized);

    const std::string canonical(emotion_name(*emotion));
    bool present = false;
    if (value.is_boolean()) {
      present = value.get<bool>();
    } else if (value.is_string()) {
      const std::string v = lower(trim(value.get_ref<const std::string&>()));
      if (v == "true") {
        present = true;
      } else if (v == "false") {
        present = false;
      } else {
        throw ParseError(ParseErrorKind::InvalidValue, canonical);
      }
      out.repairs.add(Repair::ValueCoerced);
    } else {
      throw ParseError(ParseErrorKind::InvalidValue, canonical);
    }

    auto& slot = seen[index_of(*emotion)];
    if (slot && *slot != present) throw ParseError(ParseErrorKind::InvalidValue, canonical);
    slot = present;
  }

  for (Emotion e : kEmotions) {
    const auto& slot = seen[index_of(e)];
    if (!slot) throw ParseError(ParseErrorKind::MissingEmotion, std::string(emotion_name(e)));
    out.labels.set(e, *slot);
  }
  return out;
}

ParsedClassification parse_response(std::string_view raw, PromptVariant variant) {
  ExtractedCandidate candidate = extract_candidate(raw);
  ParsedClassification parsed = parse_classification(candidate.text, variant);
  RepairLog merged = candidate.repairs;
  merged.merge(parsed.repairs);
  parsed.repairs = std::move(merged);
  return parsed;
}

Classification reconcile(std::string post_id, const ParsedClassification& parsed, const RunMetadata& meta) {
  Classification c;
  c.post_id = std::move(post_id);
  c.labels = parsed.labels;
  c.severity = compute_severity(parsed.labels, default_weights());
  c.level = severity_level(c.severity);
  c.reported_score = parsed.reported_score;
  c.score_mismatch = parsed.reported_score.has_value() && *parsed.reported_score != c.severity.value;
  c.model_name = meta.model_name;
  c.prompt_version = meta.prompt_version;
  c.timestamp = meta.timestamp;
  c.repairs = parsed.repairs;
  return c;
}

ClassificationFailed::ClassificationFailed(FailureRecord record)
    : std::runtime_error(fmt::format("classification of '{}' failed after {} attempt(s): {}", record.post_id,
                                     record.attempts, record.message)),
      record_(std::move(record)) {}

std::string format_iso8601(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                     tm.tm_min, tm.tm_sec);
}

Clock system_clock_iso() {
  return [] { return format_iso8601(std::chrono::system_clock::now()); };
}

Clock fixed_clock(std::string timestamp) {
  return [ts = std::move(timestamp)] { return ts; };
}

Classification classify_with_retry(TextBackend& backend, std::string_view post_id, std::string_view post_text,
                                   const BackendConfig& config, const ClassifyOptions& options) {
  const RenderedPrompt prompt = render_prompt(post_text, options.variant, options.max_chars, options.prompt_template);
  const RenderedPrompt reprompt = with_reprompt_suffix(prompt);
  const int max_attempts = 1 + std::max(0, config.max_retries);

  auto failure = [&](std::string kind, std::string message, int attempts) {
    FailureRecord rec;
    rec.post_id = std::string(post_id);
    rec.error_kind = std::move(kind);
    rec.message = std::move(message);
    rec.attempts = attempts;
    rec.model_name = config.model_name;
    rec.prompt_version = prompt.prompt_version;
    rec.timestamp = options.clock ? options.clock() : std::string();
    return ClassificationFailed(std::move(rec));
  };

  std::optional<ParseError> last_error;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    RawResponse response;
    try {
      response = generate(backend, post_id, attempt == 1 ? prompt : reprompt, config, options.sleep);
    } catch (const BackendError& e) {
      throw failure(std::string(backend_error_kind_name(e.kind())), e.what(), attempt);
    }
    try {
      const ParsedClassification parsed = parse_response(response.text, options.variant);
      RunMetadata meta{config.model_name, prompt.prompt_version, options.clock ? options.clock() : std::string()};
      Classification c = reconcile(std::string(post_id), parsed, meta);
      c.attempts = attempt;
      return c;
    } catch (const ParseError& e) {
      last_error = e;
    }
  }
  throw failure(std::string(parse_error_kind_name(last_error->kind())), last_error->what(), max_attempts);
}

}  // namespace moodscan
