#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "moodscan/analytics.hpp"
#include "moodscan/backend.hpp"
#include "moodscan/corpus.hpp"
#include "moodscan/eval.hpp"
#include "moodscan/prompt.hpp"

namespace moodscan {

// Invalid or unusable run configuration; maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BackendKind { Http, Mock };

// Environment variable that overrides the backend base URL.
inline constexpr const char* kBaseUrlEnv = "MOODSCAN_BASE_URL";

struct RunConfig {
  BackendKind backend_kind = BackendKind::Http;
  BackendConfig backend;

  PromptVariant variant = PromptVariant::Base;
  std::size_t max_chars = kDefaultMaxPostChars;
  std::optional<std::filesystem::path> template_file;

  std::filesystem::path input;
  InputFieldMap input_fields;
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> cache;  // defaults to <output_dir>/cache.jsonl

  std::filesystem::path gold;
  FieldMap gold_fields;
  std::optional<std::string> gold_split;

  AnalysisWindow window;
  ThresholdRule threshold;
  bool correlation_per_subreddit = false;

  std::uint64_t seed = 42;
  std::size_t sample_size = 0;  // 0 = all posts
  double failure_rate_ceiling = 0.10;

  std::filesystem::path cache_path() const;
  std::filesystem::path results_path() const { return output_dir / "results.jsonl"; }
  std::filesystem::path manifest_path() const { return output_dir / "manifest.json"; }
  std::filesystem::path bundle_path() const { return output_dir / "analytics_bundle.json"; }
  std::filesystem::path eval_report_path() const { return output_dir / "eval_report.json"; }
  std::filesystem::path report_path() const { return output_dir / "report.md"; }

  PromptTemplate prompt_template() const;
};

// Parses a JSON config file. Relative paths are resolved against the file's
// directory. Throws ConfigError.
RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json_text(const std::string& text, const std::filesystem::path& base_dir);

// Applies the base-URL environment override, if set.
void apply_environment(RunConfig& config);

}  // namespace moodscan
