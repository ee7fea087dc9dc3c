#include "moodscan/prompt.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "moodscan/core.hpp"

namespace moodscan {

namespace {

constexpr std::string_view kBaseTemplate =
    "Analyze the sentiment of the following comment from Reddit: \"{post}\". "
    "Classify which of the following emotions apply: {emotions}. "
    "Answer with a JSON object, with True or False for each emotion.";

constexpr std::string_view kScoringInstruction =
    "Then, compute a severity score as follows: assign weights to emotions "
    "(suicide_intent=3, hopelessness=2, worthlessness=2, cognitive_dysfunction=1, "
    "sadness=1, emptiness=1, loneliness=1, anger=1). "
    "Return also the field \"severity_score\" with the sum of the weights for the "
    "emotions classified as True.";

constexpr std::string_view kTemplateRevision = "v1";

bool is_continuation(unsigned char c) { return (c & 0xC0U) == 0x80U; }

// Byte offset of the first byte after `n` code points (or text.size()).
std::size_t offset_after_code_points(std::string_view text, std::size_t n) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!is_continuation(static_cast<unsigned char>(text[i]))) {
      if (seen == n) return i;
      ++seen;
    }
  }
  return text.size();
}

std::size_t code_point_count(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) {
    if (!is_continuation(c)) ++n;
  }
  return n;
}

std::string escape_quotes(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '"') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Single pass so placeholder-like text inside the post is never expanded.
std::string substitute(std::string_view body, std::string_view post, std::string_view emotions) {
  constexpr std::string_view kPost = "{post}";
  constexpr std::string_view kEmotionsKey = "{emotions}";
  std::string out;
  out.reserve(body.size() + post.size() + emotions.size());
  std::size_t i = 0;
  while (i < body.size()) {
    if (body.substr(i, kPost.size()) == kPost) {
      out.append(post);
      i += kPost.size();
    } else if (body.substr(i, kEmotionsKey.size()) == kEmotionsKey) {
      out.append(emotions);
      i += kEmotionsKey.size();
    } else {
      out.push_back(body[i++]);
    }
  }
  return out;
}

bool blank(std::string_view s) {
  for (unsigned char c : s) {
    if (!std::isspace(c)) return false;
  }
  return true;
}

}  // namespace

std::string_view prompt_variant_name(PromptVariant v) { return v == PromptVariant::Base ? "base" : "scored"; }

std::optional<PromptVariant> parse_prompt_variant(std::string_view name) {
  if (name == "base") return PromptVariant::Base;
  if (name == "scored") return PromptVariant::Scored;
  return std::nullopt;
}

PromptTemplate PromptTemplate::builtin() { return PromptTemplate(std::string(kBaseTemplate), true); }

PromptTemplate PromptTemplate::custom(std::string body) { return PromptTemplate(std::move(body), false); }

PromptTemplate PromptTemplate::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open prompt template: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string body = ss.str();
  if (body.find("{post}") == std::string::npos) {
    throw std::runtime_error("prompt template lacks a {post} placeholder: " + path);
  }
  return custom(std::move(body));
}

std::string PromptTemplate::version_tag(PromptVariant v) const {
  if (builtin_) return fmt::format("{}-{}", kTemplateRevision, prompt_variant_name(v));
  return fmt::format("custom-{:016x}-{}", fnv1a(body_), prompt_variant_name(v));
}

std::string emotion_list_text() {
  std::string out;
  for (Emotion e : kEmotions) {
    if (!out.empty()) out += ", ";
    out += emotion_name(e);
  }
  return out;
}

std::string compose_post_text(std::string_view title, std::string_view body) {
  if (blank(title)) return std::string(body);
  if (blank(body)) return std::string(title);
  std::string out(title);
  out += "\n\n";
  out += body;
  return out;
}

std::string truncate_post(std::string_view text, std::size_t max_chars, bool* truncated) {
  const bool cut = code_point_count(text) > max_chars;
  if (truncated != nullptr) *truncated = cut;
  if (!cut) return std::string(text);

  const std::size_t marker_len = kTruncationMarker.size();
  if (max_chars <= marker_len) return std::string(text.substr(0, offset_after_code_points(text, max_chars)));

  std::string out(text.substr(0, offset_after_code_points(text, max_chars - marker_len)));
  out += kTruncationMarker;
  return out;
}

RenderedPrompt render_prompt(std::string_view post_text, PromptVariant variant, std::size_t max_chars,
                             const PromptTemplate& tmpl) {
  if (blank(post_text)) throw EmptyPostError();
  if (max_chars == 0) throw std::invalid_argument("max_chars must be positive");

  RenderedPrompt out;
  out.variant = variant;
  out.prompt_version = tmpl.version_tag(variant);

  const std::string post = escape_quotes(truncate_post(post_text, max_chars, &out.truncated));
  out.text = substitute(tmpl.body(), post, emotion_list_text());

  if (variant == PromptVariant::Scored && (tmpl.is_builtin() || out.text.find("severity_score") == std::string::npos)) {
    out.text += ' ';
    out.text += kScoringInstruction;
  }
  return out;
}

RenderedPrompt with_reprompt_suffix(const RenderedPrompt& prompt) {
  RenderedPrompt out = prompt;
  out.text += "\n";
  out.text += kRepromptSuffix;
  return out;
}

}  // namespace moodscan
