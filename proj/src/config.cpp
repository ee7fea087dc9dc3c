#include "moodscan/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace moodscan {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void read_backend(const json& j, RunConfig& cfg) {
  reject_unknown(j,
                 {"kind", "base_url", "endpoint_path", "model", "temperature", "request_timeout_s", "max_retries",
                  "max_in_flight", "backoff_initial_s", "backoff_multiplier", "backoff_jitter"},
                 "backend");
  if (j.contains("kind")) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "http") {
      cfg.backend_kind = BackendKind::Http;
    } else if (kind == "mock") {
      cfg.backend_kind = BackendKind::Mock;
    } else {
      throw ConfigError("backend.kind must be 'http' or 'mock'");
    }
  }
  BackendConfig& b = cfg.backend;
  b.base_url = j.value("base_url", b.base_url);
  b.endpoint_path = j.value("endpoint_path", b.endpoint_path);
  b.model_name = j.value("model", b.model_name);
  b.temperature = j.value("temperature", b.temperature);
  b.request_timeout_s = j.value("request_timeout_s", b.request_timeout_s);
  b.max_retries = j.value("max_retries", b.max_retries);
  b.max_in_flight = j.value("max_in_flight", b.max_in_flight);
  b.backoff_initial_s = j.value("backoff_initial_s", b.backoff_initial_s);
  b.backoff_multiplier = j.value("backoff_multiplier", b.backoff_multiplier);
  b.backoff_jitter = j.value("backoff_jitter", b.backoff_jitter);
}

void read_prompt(const json& j, const fs::path& base, RunConfig& cfg) {
  reject_unknown(j, {"variant", "max_chars", "template_file"}, "prompt");
  if (j.contains("variant")) {
    auto v = parse_prompt_variant(j.at("variant").get<std::string>());
    if (!v) throw ConfigError("prompt.variant must be 'base' or 'scored'");
    cfg.variant = *v;
  }
  if (j.contains("max_chars")) {
    const auto n = j.at("max_chars").get<long long>();
    if (n <= 0) throw ConfigError("prompt.max_chars must be positive");
    cfg.max_chars = static_cast<std::size_t>(n);
  }
  if (j.contains("template_file") && !j.at("template_file").is_null()) {
    cfg.template_file = resolve(base, j.at("template_file").get<std::string>());
  }
}

InputFieldMap read_input_fields(const json& j) {
  reject_unknown(j, {"id", "subreddit", "created_utc", "title", "text"}, "input_field_map");
  InputFieldMap m;
  m.id_field = j.value("id", m.id_field);
  m.subreddit_field = j.value("subreddit", m.subreddit_field);
  m.created_field = j.value("created_utc", m.created_field);
  m.title_field = j.value("title", m.title_field);
  m.text_field = j.value("text", m.text_field);
  return m;
}

FieldMap read_gold_fields(const json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "depressionemo") return FieldMap::depressionemo();
    if (name == "default") return FieldMap{};
    throw ConfigError("unknown gold_field_map preset '" + name + "'");
  }
  reject_unknown(j, {"preset", "id", "text", "title", "labels", "split", "label_format", "label_aliases"},
                 "gold_field_map");
  FieldMap m = j.contains("preset") ? read_gold_fields(j.at("preset")) : FieldMap{};
  m.id_field = j.value("id", m.id_field);
  m.text_field = j.value("text", m.text_field);
  m.title_field = j.value("title", m.title_field);
  m.labels_field = j.value("labels", m.labels_field);
  m.split_field = j.value("split", m.split_field);
  if (j.contains("label_format")) {
    const auto f = j.at("label_format").get<std::string>();
    if (f == "auto") {
      m.label_format = LabelFormat::Auto;
    } else if (f == "list") {
      m.label_format = LabelFormat::NameList;
    } else if (f == "booleans") {
      m.label_format = LabelFormat::Booleans;
    } else {
      throw ConfigError("gold_field_map.label_format must be auto, list, or booleans");
    }
  }
  if (j.contains("label_aliases")) {
    for (const auto& [alias, target] : j.at("label_aliases").items()) {
      auto e = parse_emotion(target.get<std::string>());
      if (!e) throw ConfigError("label alias target '" + target.get<std::string>() + "' is not an emotion");
      m.label_aliases.insert_or_assign(normalize_label_key(alias), *e);
    }
  }
  return m;
}

}  // namespace

fs::path RunConfig::cache_path() const { return cache ? *cache : output_dir / "cache.jsonl"; }

PromptTemplate RunConfig::prompt_template() const {
  return template_file ? PromptTemplate::from_file(template_file->string()) : PromptTemplate::builtin();
}

RunConfig config_from_json_text(const std::string& text, const fs::path& base) {
  const json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("config is not a JSON object");

  RunConfig cfg;
  try {
    reject_unknown(j,
                   {"backend", "prompt", "input", "input_field_map", "output_dir", "cache", "gold", "gold_field_map",
                    "gold_split", "window", "threshold_rule", "correlation_scope", "seed", "sample_size",
                    "failure_rate_ceiling"},
                   "config");
    if (j.contains("backend")) read_backend(j.at("backend"), cfg);
    if (j.contains("prompt")) read_prompt(j.at("prompt"), base, cfg);
    if (j.contains("input")) cfg.input = resolve(base, j.at("input").get<std::string>());
    if (j.contains("input_field_map")) cfg.input_fields = read_input_fields(j.at("input_field_map"));
    if (j.contains("output_dir")) cfg.output_dir = resolve(base, j.at("output_dir").get<std::string>());
    if (j.contains("cache")) cfg.cache = resolve(base, j.at("cache").get<std::string>());
    if (j.contains("gold")) cfg.gold = resolve(base, j.at("gold").get<std::string>());
    if (j.contains("gold_field_map")) cfg.gold_fields = read_gold_fields(j.at("gold_field_map"));
    if (j.contains("gold_split") && !j.at("gold_split").is_null()) cfg.gold_split = j.at("gold_split").get<std::string>();
    if (j.contains("window") && !j.at("window").is_null()) {
      cfg.window = AnalysisWindow::parse(j.at("window").get<std::string>());
    }
    if (j.contains("threshold_rule")) {
      auto rule = ThresholdRule::parse(j.at("threshold_rule").get<std::string>());
      if (!rule) throw ConfigError("threshold_rule must look like ge7 or gt7");
      cfg.threshold = *rule;
    }
    if (j.contains("correlation_scope")) {
      const auto scope = j.at("correlation_scope").get<std::string>();
      if (scope != "all" && scope != "subreddit") throw ConfigError("correlation_scope must be 'all' or 'subreddit'");
      cfg.correlation_per_subreddit = scope == "subreddit";
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.sample_size = j.value("sample_size", cfg.sample_size);
    cfg.failure_rate_ceiling = j.value("failure_rate_ceiling", cfg.failure_rate_ceiling);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str(), path.parent_path());
}

void apply_environment(RunConfig& config) {
  if (const char* url = std::getenv(kBaseUrlEnv); url != nullptr && *url != '\0') config.backend.base_url = url;
}

}  // namespace moodscan
