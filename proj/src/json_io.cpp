#include "moodscan/json_io.hpp"

#include <stdexcept>

namespace moodscan {

namespace {

std::optional<Repair> repair_from_name(std::string_view name) {
  for (Repair r : {Repair::FenceStripped, Repair::ProseStripped, Repair::KeyNormalized, Repair::ValueCoerced}) {
    if (repair_name(r) == name) return r;
  }
  return std::nullopt;
}

SeverityLevel level_from_name(std::string_view name) {
  for (SeverityLevel l : {SeverityLevel::Minimal, SeverityLevel::Mild, SeverityLevel::Moderate, SeverityLevel::Severe}) {
    if (severity_level_name(l) == name) return l;
  }
  throw std::invalid_argument("unknown severity level: " + std::string(name));
}

Json prf_to_json(const PRF& m) { return Json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}}; }

}  // namespace

Json labels_to_json(const EmotionLabelSet& labels) {
  Json j = Json::object();
  for (Emotion e : kEmotions) j[std::string(emotion_name(e))] = labels.has(e);
  return j;
}

EmotionLabelSet labels_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("labels must be an object");
  EmotionLabelSet out;
  for (Emotion e : kEmotions) {
    const auto it = j.find(std::string(emotion_name(e)));
    if (it == j.end() || !it->is_boolean()) {
      throw std::invalid_argument("labels lack boolean '" + std::string(emotion_name(e)) + "'");
    }
    out.set(e, it->get<bool>());
  }
  return out;
}

Json classification_to_json(const Classification& c) {
  Json repairs = Json::array();
  for (Repair r : c.repairs.items()) repairs.push_back(std::string(repair_name(r)));
  return Json{
      {"post_id", c.post_id},
      {"labels", labels_to_json(c.labels)},
      {"severity", c.severity.value},
      {"level", std::string(severity_level_name(c.level))},
      {"reported_score", c.reported_score ? Json(*c.reported_score) : Json(nullptr)},
      {"score_mismatch", c.score_mismatch},
      {"model_name", c.model_name},
      {"prompt_version", c.prompt_version},
      {"timestamp", c.timestamp},
      {"attempts", c.attempts},
      {"repairs", std::move(repairs)},
  };
}

Classification classification_from_json(const Json& j) {
  Classification c;
  c.post_id = j.at("post_id").get<std::string>();
  c.labels = labels_from_json(j.at("labels"));
  // Severity is a function of the labels; the stored value is only checked.
  c.severity = compute_severity(c.labels, default_weights());
  if (j.contains("severity") && j.at("severity").get<int>() != c.severity.value) {
    throw std::invalid_argument("stored severity disagrees with labels for " + c.post_id);
  }
  c.level = j.contains("level") ? level_from_name(j.at("level").get<std::string>()) : severity_level(c.severity);
  if (auto it = j.find("reported_score"); it != j.end() && !it->is_null()) c.reported_score = it->get<int>();
  c.score_mismatch = c.reported_score.has_value() && *c.reported_score != c.severity.value;
  c.model_name = j.value("model_name", "");
  c.prompt_version = j.value("prompt_version", "");
  c.timestamp = j.value("timestamp", "");
  c.attempts = j.value("attempts", 1);
  if (auto it = j.find("repairs"); it != j.end()) {
    for (const auto& name : *it) {
      if (auto r = repair_from_name(name.get<std::string>())) c.repairs.add(*r);
    }
  }
  return c;
}

Json failure_to_json(const FailureRecord& f) {
  return Json{
      {"post_id", f.post_id},     {"error_kind", f.error_kind},         {"message", f.message},
      {"attempts", f.attempts},   {"model_name", f.model_name},         {"prompt_version", f.prompt_version},
      {"timestamp", f.timestamp},
  };
}

FailureRecord failure_from_json(const Json& j) {
  FailureRecord f;
  f.post_id = j.at("post_id").get<std::string>();
  f.error_kind = j.value("error_kind", "");
  f.message = j.value("message", "");
  f.attempts = j.value("attempts", 0);
  f.model_name = j.value("model_name", "");
  f.prompt_version = j.value("prompt_version", "");
  f.timestamp = j.value("timestamp", "");
  return f;
}

Json eval_report_to_json(const EvalReport& r) {
  Json per_class = Json::object();
  for (Emotion e : kEmotions) {
    const ClassCounts& c = r.counts[e];
    Json entry = prf_to_json(r.per_class[index_of(e)]);
    entry["tp"] = c.tp;
    entry["fp"] = c.fp;
    entry["fn"] = c.fn;
    entry["tn"] = c.tn;
    per_class[std::string(emotion_name(e))] = std::move(entry);
  }
  return Json{
      {"model_name", r.model_name},
      {"prompt_version", r.prompt_version},
      {"n_posts", r.n_posts},
      {"n_failed", r.n_failed},
      {"failure_rate", r.failure_rate()},
      {"micro", prf_to_json(r.micro)},
      {"macro", prf_to_json(r.macro)},
      {"per_class", std::move(per_class)},
      {"conventions",
       {{"zero_denominator", "metric is 0 when its denominator is 0"},
        {"failed_posts", "excluded from confusion counts, reported in n_failed"}}},
  };
}

std::string dump_line(const Json& j) { return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace); }

}  // namespace moodscan
