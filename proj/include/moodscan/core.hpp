#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace moodscan {

// The eight depression-associated emotions, in canonical (alphabetical) order.
// The underlying value is the canonical index and is used for array storage.
enum class Emotion : std::uint8_t {
  Anger = 0,
  CognitiveDysfunction,
  Emptiness,
  Hopelessness,
  Loneliness,
  Sadness,
  SuicideIntent,
  Worthlessness,
};

inline constexpr std::size_t kEmotionCount = 8;

inline constexpr std::array<Emotion, kEmotionCount> kEmotions = {
    Emotion::Anger,      Emotion::CognitiveDysfunction, Emotion::Emptiness,     Emotion::Hopelessness,
    Emotion::Loneliness, Emotion::Sadness,              Emotion::SuicideIntent, Emotion::Worthlessness,
};

constexpr std::size_t index_of(Emotion e) { return static_cast<std::size_t>(e); }

// snake_case wire name, e.g. "cognitive_dysfunction".
std::string_view emotion_name(Emotion e);

// Lowercases, trims, and maps spaces/hyphens to underscores. Shared by the
// response parser and the annotated-corpus loader.
std::string normalize_label_key(std::string_view raw);

// Resolves an already-normalized key, accepting `cog_dysfunction` as an alias.
std::optional<Emotion> emotion_from_key(std::string_view normalized);

// Convenience: normalize_label_key followed by emotion_from_key.
std::optional<Emotion> parse_emotion(std::string_view raw);

// Presence flag for each of the eight emotions. Always complete by construction.
class EmotionLabelSet {
 public:
  constexpr EmotionLabelSet() = default;

  static EmotionLabelSet from_bits(std::uint8_t bits);
  static EmotionLabelSet all_present();

  bool has(Emotion e) const { return present_[index_of(e)]; }
  void set(Emotion e, bool value = true) { present_[index_of(e)] = value; }
  bool operator[](Emotion e) const { return has(e); }

  // Bit i set iff kEmotions[i] is present.
  std::uint8_t bits() const;
  std::size_t count() const;

  bool operator==(const EmotionLabelSet&) const = default;

 private:
  std::array<bool, kEmotionCount> present_{};
};

// Per-emotion integer weights of the severity index.
class WeightTable {
 public:
  constexpr WeightTable() = default;
  explicit constexpr WeightTable(std::array<unsigned, kEmotionCount> weights) : weight_(weights) {}

  unsigned weight(Emotion e) const { return weight_[index_of(e)]; }
  void set_weight(Emotion e, unsigned w) { weight_[index_of(e)] = w; }
  unsigned total() const;

  bool operator==(const WeightTable&) const = default;

 private:
  std::array<unsigned, kEmotionCount> weight_{};
};

struct SeverityScore {
  int value = 0;
  auto operator<=>(const SeverityScore&) const = default;
};

enum class SeverityLevel : std::uint8_t { Minimal, Mild, Moderate, Severe };

std::string_view severity_level_name(SeverityLevel level);

// anger=1, cognitive_dysfunction=1, emptiness=1, hopelessness=2, loneliness=1,
// sadness=1, suicide_intent=3, worthlessness=2.
WeightTable default_weights();

// Maximum score under the default weights (all emotions present).
inline constexpr int kMaxDefaultSeverity = 12;

SeverityScore compute_severity(const EmotionLabelSet& labels, const WeightTable& weights);
SeverityScore compute_severity(const EmotionLabelSet& labels);

// 0-1 Minimal, 2-4 Mild, 5-6 Moderate, >=7 Severe.
SeverityLevel severity_level(SeverityScore score);

}  // namespace moodscan
