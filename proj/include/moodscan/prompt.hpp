#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace moodscan {

enum class PromptVariant { Base, Scored };

std::string_view prompt_variant_name(PromptVariant v);  // "base" | "scored"
std::optional<PromptVariant> parse_prompt_variant(std::string_view name);

inline constexpr std::size_t kDefaultMaxPostChars = 8000;
inline constexpr std::string_view kTruncationMarker = " [truncated]";
inline constexpr std::string_view kRepromptSuffix = "Respond with valid JSON only.";

// Thrown for posts that are empty after trimming. Callers skip the record.
class EmptyPostError : public std::runtime_error {
 public:
  EmptyPostError() : std::runtime_error("post text is empty") {}
};

struct RenderedPrompt {
  std::string text;
  PromptVariant variant = PromptVariant::Base;
  std::string prompt_version;
  bool truncated = false;
};

// A prompt template with {post} and {emotions} placeholders. The built-in
// template is used unless an override is loaded from a file.
class PromptTemplate {
 public:
  static PromptTemplate builtin();
  // Version tags of custom templates carry a content hash so cached results
  // are invalidated whenever the file changes.
  static PromptTemplate custom(std::string body);
  static PromptTemplate from_file(const std::string& path);

  const std::string& body() const { return body_; }
  bool is_builtin() const { return builtin_; }
  std::string version_tag(PromptVariant v) const;

 private:
  PromptTemplate(std::string body, bool builtin) : body_(std::move(body)), builtin_(builtin) {}

  std::string body_;
  bool builtin_ = true;
};

// "anger, cognitive_dysfunction, ..., worthlessness"
std::string emotion_list_text();

// Joins an optional title and a body the way posts are presented to the model.
std::string compose_post_text(std::string_view title, std::string_view body);

// Truncates to at most max_chars code points; when cut, the result is exactly
// max_chars code points and ends with kTruncationMarker.
std::string truncate_post(std::string_view text, std::size_t max_chars, bool* truncated = nullptr);

RenderedPrompt render_prompt(std::string_view post_text, PromptVariant variant,
                             std::size_t max_chars = kDefaultMaxPostChars,
                             const PromptTemplate& tmpl = PromptTemplate::builtin());

// Prompt used for a re-ask after an unparseable answer.
RenderedPrompt with_reprompt_suffix(const RenderedPrompt& prompt);

}  // namespace moodscan
