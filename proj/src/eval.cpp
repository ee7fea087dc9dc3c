#include "moodscan/eval.hpp"

#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace moodscan {

using json = nlohmann::json;

namespace {

std::string_view eval_error_kind_name(EvalErrorKind kind) {
  return kind == EvalErrorKind::SchemaError ? "SchemaError" : "UnknownLabel";
}

std::optional<std::string> scalar_string(const json& record, const std::string& field) {
  if (field.empty()) return std::nullopt;
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  if (it->is_number_unsigned()) return std::to_string(it->get<unsigned long long>());
  return std::nullopt;
}

Emotion resolve_label(std::string_view raw, const FieldMap& fm, std::size_t index) {
  const std::string key = normalize_label_key(raw);
  if (auto e = emotion_from_key(key)) return *e;
  if (auto it = fm.label_aliases.find(key); it != fm.label_aliases.end()) return it->second;
  throw EvalError(EvalErrorKind::UnknownLabel, index, std::string(raw));
}

bool coerce_bool(const json& v, std::size_t index, const std::string& key) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer() || v.is_number_unsigned()) {
    const auto n = v.get<long long>();
    if (n == 0 || n == 1) return n == 1;
  }
  if (v.is_string()) {
    const std::string s = normalize_label_key(v.get<std::string>());
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
  }
  throw EvalError(EvalErrorKind::SchemaError, index, "non-boolean gold value for " + key);
}

EmotionLabelSet labels_from_list(const json& list, const FieldMap& fm, std::size_t index) {
  EmotionLabelSet gold;
  for (const auto& item : list) {
    if (!item.is_string()) throw EvalError(EvalErrorKind::SchemaError, index, "label list entry is not a string");
    gold.set(resolve_label(item.get<std::string>(), fm, index));
  }
  return gold;
}

// Every emotion must be present; unrelated keys are ignored.
EmotionLabelSet labels_from_booleans(const json& obj, const FieldMap& fm, std::size_t index, bool top_level) {
  std::array<bool, kEmotionCount> seen{};
  EmotionLabelSet gold;
  for (const auto& [key, value] : obj.items()) {
    const std::string norm = normalize_label_key(key);
    std::optional<Emotion> e = emotion_from_key(norm);
    if (!e) {
      if (auto it = fm.label_aliases.find(norm); it != fm.label_aliases.end()) e = it->second;
    }
    if (!e) {
      if (top_level) continue;
      throw EvalError(EvalErrorKind::UnknownLabel, index, key);
    }
    seen[index_of(*e)] = true;
    gold.set(*e, coerce_bool(value, index, key));
  }
  for (Emotion e : kEmotions) {
    if (!seen[index_of(e)]) {
      throw EvalError(EvalErrorKind::SchemaError, index, fmt::format("missing gold value for {}", emotion_name(e)));
    }
  }
  return gold;
}

}  // namespace

FieldMap FieldMap::depressionemo() {
  FieldMap fm;
  fm.id_field = "id";
  fm.text_field = "post";
  fm.title_field = "title";
  fm.labels_field = "emotions";
  fm.label_format = LabelFormat::NameList;
  fm.label_aliases.emplace(normalize_label_key("brain dysfunction (forget)"), Emotion::CognitiveDysfunction);
  return fm;
}

EvalError::EvalError(EvalErrorKind kind, std::size_t record_index, std::string detail)
    : std::runtime_error(fmt::format("{} at record {}: {}", eval_error_kind_name(kind), record_index, detail)),
      kind_(kind),
      record_index_(record_index),
      detail_(std::move(detail)) {}

AnnotatedPost annotated_from_json_line(const std::string& line, const FieldMap& fm, std::size_t index) {
  const json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (record.is_discarded() || !record.is_object()) {
    throw EvalError(EvalErrorKind::SchemaError, index, "record is not a JSON object");
  }

  AnnotatedPost post;
  auto id = scalar_string(record, fm.id_field);
  if (!id || id->empty()) throw EvalError(EvalErrorKind::SchemaError, index, "missing id field '" + fm.id_field + "'");
  post.post_id = std::move(*id);

  auto text = scalar_string(record, fm.text_field);
  if (!text) throw EvalError(EvalErrorKind::SchemaError, index, "missing text field '" + fm.text_field + "'");
  const auto title = scalar_string(record, fm.title_field);
  post.text = compose_post_text(title.value_or(""), *text);

  post.split = scalar_string(record, fm.split_field);

  if (fm.labels_field.empty()) {
    if (fm.label_format == LabelFormat::NameList) {
      throw EvalError(EvalErrorKind::SchemaError, index, "name-list labels need a labels field");
    }
    post.gold = labels_from_booleans(record, fm, index, /*top_level=*/true);
    return post;
  }

  auto it = record.find(fm.labels_field);
  if (it == record.end()) {
    throw EvalError(EvalErrorKind::SchemaError, index, "missing labels field '" + fm.labels_field + "'");
  }
  const bool as_list = fm.label_format == LabelFormat::NameList ||
                       (fm.label_format == LabelFormat::Auto && it->is_array());
  const bool as_object = fm.label_format == LabelFormat::Booleans ||
                         (fm.label_format == LabelFormat::Auto && it->is_object());
  if (as_list && it->is_array()) {
    post.gold = labels_from_list(*it, fm, index);
  } else if (as_object && it->is_object()) {
    post.gold = labels_from_booleans(*it, fm, index, /*top_level=*/false);
  } else {
    throw EvalError(EvalErrorKind::SchemaError, index, "labels field has an unexpected type");
  }
  return post;
}

std::vector<AnnotatedPost> load_annotated(const std::string& path, const FieldMap& field_map) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open annotated corpus: " + path);

  std::vector<AnnotatedPost> out;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(annotated_from_json_line(line, field_map, index++));
  }
  return out;
}

ClassCounts& ClassCounts::operator+=(const ClassCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  for (std::size_t i = 0; i < kEmotionCount; ++i) per_class[i] += o.per_class[i];
  return *this;
}

ConfusionCounts accumulate(const EmotionLabelSet& gold, const EmotionLabelSet& pred, ConfusionCounts counts) {
  for (Emotion e : kEmotions) {
    ClassCounts& c = counts[e];
    const bool g = gold.has(e);
    const bool p = pred.has(e);
    if (g && p) {
      ++c.tp;
    } else if (!g && p) {
      ++c.fp;
    } else if (g && !p) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return counts;
}

PRF prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  PRF m;
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

AveragedMetrics average_metrics(std::span<const ClassCounts> classes) {
  AveragedMetrics out;
  ClassCounts pooled;
  for (const ClassCounts& c : classes) {
    out.per_class.push_back(prf_from_counts(c.tp, c.fp, c.fn));
    pooled += c;
  }
  out.micro = prf_from_counts(pooled.tp, pooled.fp, pooled.fn);
  if (!classes.empty()) {
    const double k = static_cast<double>(classes.size());
    for (const PRF& m : out.per_class) {
      out.macro.precision += m.precision;
      out.macro.recall += m.recall;
      out.macro.f1 += m.f1;
    }
    out.macro.precision /= k;
    out.macro.recall /= k;
    out.macro.f1 /= k;
  }
  return out;
}

double EvalReport::failure_rate() const {
  const std::size_t total = n_posts + n_failed;
  return total == 0 ? 0.0 : static_cast<double>(n_failed) / static_cast<double>(total);
}

EvalReport summarize(const ConfusionCounts& counts) {
  EvalReport r;
  r.counts = counts;
  const AveragedMetrics m = average_metrics(counts.per_class);
  std::copy(m.per_class.begin(), m.per_class.end(), r.per_class.begin());
  r.micro = m.micro;
  r.macro = m.macro;
  r.n_posts = counts.n_posts();
  return r;
}

EvalReport evaluate_run(const std::vector<AnnotatedPost>& gold, const std::map<std::string, Classification>& predictions) {
  std::string model_name;
  std::string prompt_version;
  for (const auto& [id, c] : predictions) {
    if (prompt_version.empty()) {
      model_name = c.model_name;
      prompt_version = c.prompt_version;
    } else if (c.prompt_version != prompt_version) {
      throw std::invalid_argument("predictions mix prompt versions '" + prompt_version + "' and '" +
                                  c.prompt_version + "'");
    }
  }

  ConfusionCounts counts;
  std::size_t failed = 0;
  for (const AnnotatedPost& post : gold) {
    auto it = predictions.find(post.post_id);
    if (it == predictions.end()) {
      ++failed;
      continue;
    }
    counts = accumulate(post.gold, it->second.labels, counts);
  }

  EvalReport r = summarize(counts);
  r.n_failed = failed;
  r.model_name = std::move(model_name);
  r.prompt_version = std::move(prompt_version);
  return r;
}

std::string summary_line(const EvalReport& r) {
  return fmt::format(
      "model={} prompt={} n={} failed={} ({:.1f}%) micro P/R/F1={:.4f}/{:.4f}/{:.4f} macro P/R/F1={:.4f}/{:.4f}/{:.4f}",
      r.model_name.empty() ? "-" : r.model_name, r.prompt_version.empty() ? "-" : r.prompt_version, r.n_posts,
      r.n_failed, 100.0 * r.failure_rate(), r.micro.precision, r.micro.recall, r.micro.f1, r.macro.precision,
      r.macro.recall, r.macro.f1);
}

}  // namespace moodscan
