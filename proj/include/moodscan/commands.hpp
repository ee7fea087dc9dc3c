#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "moodscan/analytics.hpp"
#include "moodscan/backend.hpp"
#include "moodscan/config.hpp"
#include "moodscan/eval.hpp"
#include "moodscan/json_io.hpp"
#include "moodscan/parser.hpp"

namespace moodscan {

enum ExitCode : int {
  kExitOk = 0,
  kExitFatalConfig = 1,
  kExitPartialFailure = 2,
};

// Results and gold corpus share no post ids.
class JoinError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// cmd_report found no analytics bundle.
class MissingBundle : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One line of results.jsonl.
struct ResultRecord {
  std::string post_id;
  std::string subreddit;
  std::int64_t created_utc = 0;
  std::optional<Classification> classification;
  std::optional<FailureRecord> failure;
};

Json result_to_json(const ResultRecord& r);
ResultRecord result_from_json(const Json& j);
std::vector<ResultRecord> read_results(const std::filesystem::path& path);

struct ClassifyRun {
  std::size_t posts = 0;
  std::size_t classified = 0;
  std::size_t failed = 0;
  std::size_t cache_hits = 0;
  std::size_t backend_requests = 0;
  std::size_t score_mismatches = 0;
  int exit_code = kExitOk;
};

// Wiring for cmd_classify. The backend is owned by the caller.
struct ClassifyContext {
  TextBackend* backend = nullptr;
  Clock clock = system_clock_iso();
  Sleeper sleep = real_sleeper();
};

// Writes results.jsonl (input order) and manifest.json, appending new
// classifications to the cache as they complete. Cached keys are never sent
// to the backend. Throws ConfigError before any request on invalid config.
ClassifyRun cmd_classify(const RunConfig& config, ClassifyContext context);

// Writes eval_report.json and returns the report. Throws JoinError.
EvalReport cmd_evaluate(const RunConfig& config);

// Writes the analytics CSVs and analytics_bundle.json. Returns the bundle.
Json cmd_analyze(const RunConfig& config);

// Renders report.md from the bundle and returns its text. Throws MissingBundle.
std::string cmd_report(const RunConfig& config);

// Builds the analytics bundle in memory without touching the filesystem.
Json build_analytics_bundle(const std::vector<CorpusRecord>& records, const RunConfig& config);
std::string render_report(const Json& bundle);

// Fixed-precision number formatting shared by CSV output and the report.
std::string fmt_real(double v);
std::string fmt_pct(double fraction);

}  // namespace moodscan
