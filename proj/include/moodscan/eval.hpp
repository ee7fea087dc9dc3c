#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "moodscan/core.hpp"
#include "moodscan/parser.hpp"

namespace moodscan {

struct AnnotatedPost {
  std::string post_id;
  std::string text;
  EmotionLabelSet gold;
  std::optional<std::string> split;
};

enum class LabelFormat {
  Auto,      // decided per record from the JSON type of the label field
  NameList,  // ["sadness", "hopelessness"]
  Booleans,  // {"sadness": true, ...}, or top-level keys when labels_field is empty
};

// Maps corpus record fields onto AnnotatedPost.
struct FieldMap {
  std::string id_field = "id";
  std::string text_field = "text";
  std::string title_field;  // optional; prepended to the text when present
  std::string labels_field = "labels";
  std::string split_field = "split";
  LabelFormat label_format = LabelFormat::Auto;
  // Extra gold-label spellings, keyed by normalized name.
  std::map<std::string, Emotion> label_aliases;

  // DepressionEmo layout: id, title, post, emotions[]. Also accepts
  // "brain dysfunction (forget)" as a spelling of cognitive dysfunction.
  static FieldMap depressionemo();
};

enum class EvalErrorKind { SchemaError, UnknownLabel };

class EvalError : public std::runtime_error {
 public:
  EvalError(EvalErrorKind kind, std::size_t record_index, std::string detail);

  EvalErrorKind kind() const { return kind_; }
  std::size_t record_index() const { return record_index_; }
  const std::string& detail() const { return detail_; }

 private:
  EvalErrorKind kind_;
  std::size_t record_index_;
  std::string detail_;
};

// Reads a line-delimited JSON corpus. Blank lines are skipped; record_index
// in errors is the 0-based index among non-blank lines.
std::vector<AnnotatedPost> load_annotated(const std::string& path, const FieldMap& field_map);
AnnotatedPost annotated_from_json_line(const std::string& line, const FieldMap& field_map, std::size_t record_index);

struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  ClassCounts& operator+=(const ClassCounts& o);
  bool operator==(const ClassCounts&) const = default;
};

struct ConfusionCounts {
  std::array<ClassCounts, kEmotionCount> per_class{};

  const ClassCounts& operator[](Emotion e) const { return per_class[index_of(e)]; }
  ClassCounts& operator[](Emotion e) { return per_class[index_of(e)]; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  std::size_t n_posts() const { return per_class[0].total(); }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts accumulate(const EmotionLabelSet& gold, const EmotionLabelSet& pred, ConfusionCounts counts);

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Precision, recall and F1 from one confusion cell; 0 when a denominator is 0.
PRF prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

struct AveragedMetrics {
  std::vector<PRF> per_class;
  PRF micro;
  PRF macro;
};

// Micro metrics from summed counts; macro metrics as the unweighted mean of
// the per-class values. Works for any number of classes.
AveragedMetrics average_metrics(std::span<const ClassCounts> classes);

struct EvalReport {
  ConfusionCounts counts;
  std::array<PRF, kEmotionCount> per_class{};
  PRF micro;
  PRF macro;
  std::size_t n_posts = 0;
  std::size_t n_failed = 0;
  std::string model_name;
  std::string prompt_version;

  double failure_rate() const;
};

EvalReport summarize(const ConfusionCounts& counts);

// Gold posts without a prediction count toward n_failed and are excluded from
// the confusion counts.
EvalReport evaluate_run(const std::vector<AnnotatedPost>& gold, const std::map<std::string, Classification>& predictions);

// Model, micro/macro P/R/F1 and failure rate on one line.
std::string summary_line(const EvalReport& report);

}  // namespace moodscan
