#include "moodscan/core.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace moodscan {

namespace {

constexpr std::array<std::string_view, kEmotionCount> kNames = {
    "anger",      "cognitive_dysfunction", "emptiness",      "hopelessness",
    "loneliness", "sadness",               "suicide_intent", "worthlessness",
};

}  // namespace

std::string_view emotion_name(Emotion e) { return kNames[index_of(e)]; }

std::string normalize_label_key(std::string_view raw) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!raw.empty() && is_space(raw.front())) raw.remove_prefix(1);
  while (!raw.empty() && is_space(raw.back())) raw.remove_suffix(1);

  std::string out;
  out.reserve(raw.size());
  for (unsigned char c : raw) {
    if (c == ' ' || c == '-' || c == '\t') {
      out.push_back('_');
    } else {
      out.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  return out;
}

std::optional<Emotion> emotion_from_key(std::string_view normalized) {
  if (normalized == "cog_dysfunction") return Emotion::CognitiveDysfunction;
  for (Emotion e : kEmotions) {
    if (kNames[index_of(e)] == normalized) return e;
  }
  return std::nullopt;
}

std::optional<Emotion> parse_emotion(std::string_view raw) { return emotion_from_key(normalize_label_key(raw)); }

EmotionLabelSet EmotionLabelSet::from_bits(std::uint8_t bits) {
  EmotionLabelSet s;
  for (std::size_t i = 0; i < kEmotionCount; ++i) s.present_[i] = ((bits >> i) & 1U) != 0;
  return s;
}

EmotionLabelSet EmotionLabelSet::all_present() { return from_bits(0xFF); }

std::uint8_t EmotionLabelSet::bits() const {
  std::uint8_t b = 0;
  for (std::size_t i = 0; i < kEmotionCount; ++i) {
    if (present_[i]) b = static_cast<std::uint8_t>(b | (1U << i));
  }
  return b;
}

std::size_t EmotionLabelSet::count() const {
  return static_cast<std::size_t>(std::count(present_.begin(), present_.end(), true));
}

unsigned WeightTable::total() const { return std::accumulate(weight_.begin(), weight_.end(), 0U); }

std::string_view severity_level_name(SeverityLevel level) {
  switch (level) {
    case SeverityLevel::Minimal: return "minimal";
    case SeverityLevel::Mild: return "mild";
    case SeverityLevel::Moderate: return "moderate";
    case SeverityLevel::Severe: return "severe";
  }
  return "unknown";
}

WeightTable default_weights() {
  WeightTable t;
  t.set_weight(Emotion::Anger, 1);
  t.set_weight(Emotion::CognitiveDysfunction, 1);
  t.set_weight(Emotion::Emptiness, 1);
  t.set_weight(Emotion::Hopelessness, 2);
  t.set_weight(Emotion::Loneliness, 1);
  t.set_weight(Emotion::Sadness, 1);
  t.set_weight(Emotion::SuicideIntent, 3);
  t.set_weight(Emotion::Worthlessness, 2);
  return t;
}

SeverityScore compute_severity(const EmotionLabelSet& labels, const WeightTable& weights) {
  int s = 0;
  for (Emotion e : kEmotions) {
    if (labels.has(e)) s += static_cast<int>(weights.weight(e));
  }
  return SeverityScore{s};
}

SeverityScore compute_severity(const EmotionLabelSet& labels) { return compute_severity(labels, default_weights()); }

SeverityLevel severity_level(SeverityScore score) {
  if (score.value <= 1) return SeverityLevel::Minimal;
  if (score.value <= 4) return SeverityLevel::Mild;
  if (score.value <= 6) return SeverityLevel::Moderate;
  return SeverityLevel::Severe;
}

}  // namespace moodscan
