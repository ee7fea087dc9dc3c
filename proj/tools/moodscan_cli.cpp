// moodscan: classify posts for depression-associated emotions, evaluate against
// annotated corpora, and produce corpus analytics.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "moodscan/commands.hpp"
#include "moodscan/config.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string input;
  std::string output_dir;
  std::string model;
  std::string endpoint;
  std::string backend;
  std::string variant;
  int concurrency = 0;
  std::string cache;
  std::string threshold_rule;
  std::string window;
  std::string gold;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Run configuration file (JSON)");
  cmd->add_option("--output-dir", o.output_dir, "Directory for results, reports and analytics");
}

moodscan::RunConfig build_config(const Overrides& o) {
  using namespace moodscan;
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  apply_environment(cfg);

  if (!o.input.empty()) cfg.input = o.input;
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (!o.model.empty()) cfg.backend.model_name = o.model;
  if (!o.endpoint.empty()) cfg.backend.base_url = o.endpoint;
  if (!o.backend.empty()) {
    if (o.backend == "http") {
      cfg.backend_kind = BackendKind::Http;
    } else if (o.backend == "mock") {
      cfg.backend_kind = BackendKind::Mock;
    } else {
      throw ConfigError("--backend must be http or mock");
    }
  }
  if (!o.variant.empty()) {
    auto v = parse_prompt_variant(o.variant);
    if (!v) throw ConfigError("--prompt-variant must be base or scored");
    cfg.variant = *v;
  }
  if (o.concurrency != 0) cfg.backend.max_in_flight = o.concurrency;
  if (!o.cache.empty()) cfg.cache = o.cache;
  if (!o.threshold_rule.empty()) {
    auto rule = ThresholdRule::parse(o.threshold_rule);
    if (!rule) throw ConfigError("--threshold-rule must look like ge7 or gt7");
    cfg.threshold = *rule;
  }
  if (!o.window.empty()) {
    try {
      cfg.window = AnalysisWindow::parse(o.window);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (!o.gold.empty()) cfg.gold = o.gold;
  return cfg;
}

// SOURCE_DATE_EPOCH pins classification timestamps for reproducible output.
moodscan::Clock clock_from_environment() {
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde != nullptr && *sde != '\0') {
    const auto secs = std::chrono::seconds{std::strtoll(sde, nullptr, 10)};
    return moodscan::fixed_clock(moodscan::format_iso8601(std::chrono::system_clock::time_point{secs}));
  }
  return moodscan::system_clock_iso();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace moodscan;

  CLI::App app{"Zero-shot depression-emotion classification, evaluation and analytics"};
  app.require_subcommand(1);
  Overrides o;

  auto* classify = app.add_subcommand("classify", "Classify an input corpus through the text-generation backend");
  add_common(classify, o);
  classify->add_option("--input", o.input, "Line-delimited JSON posts");
  classify->add_option("--model", o.model, "Model name sent to the backend");
  classify->add_option("--endpoint", o.endpoint, "Backend base URL, e.g. http://127.0.0.1:11434");
  classify->add_option("--backend", o.backend, "http or mock")->check(CLI::IsMember({"http", "mock"}));
  classify->add_option("--prompt-variant", o.variant, "base or scored")->check(CLI::IsMember({"base", "scored"}));
  classify->add_option("--concurrency", o.concurrency, "Maximum requests in flight")->check(CLI::PositiveNumber);
  classify->add_option("--cache", o.cache, "Classification cache file");

  auto* evaluate = app.add_subcommand("evaluate", "Score classification results against a gold corpus");
  add_common(evaluate, o);
  evaluate->add_option("--gold", o.gold, "Annotated corpus (line-delimited JSON)");

  auto* analyze = app.add_subcommand("analyze", "Compute rates, correlations, distributions and trends");
  add_common(analyze, o);
  analyze->add_option("--threshold-rule", o.threshold_rule, "ge7 or gt7");
  analyze->add_option("--window", o.window, "Month window FROM..TO, e.g. 2024-01..2025-07");

  auto* report = app.add_subcommand("report", "Render a markdown digest of the analytics bundle");
  add_common(report, o);

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = build_config(o);

    if (classify->parsed()) {
      std::unique_ptr<TextBackend> backend;
      if (cfg.backend_kind == BackendKind::Mock) {
        backend = std::make_unique<MockBackend>();
      } else {
        backend = std::make_unique<HttpBackend>();
      }
      ClassifyContext ctx;
      ctx.backend = backend.get();
      ctx.clock = clock_from_environment();
      const ClassifyRun run = cmd_classify(cfg, ctx);
      fmt::print("classified={} failed={} cache_hits={} backend_requests={} score_mismatches={}\n", run.classified,
                 run.failed, run.cache_hits, run.backend_requests, run.score_mismatches);
      if (run.exit_code == kExitPartialFailure) {
        fmt::print(stderr, "failure rate above ceiling {:.2f}\n", cfg.failure_rate_ceiling);
      }
      return run.exit_code;
    }
    if (evaluate->parsed()) {
      const EvalReport r = cmd_evaluate(cfg);
      fmt::print("{}\n", summary_line(r));
      return kExitOk;
    }
    if (analyze->parsed()) {
      const Json bundle = cmd_analyze(cfg);
      fmt::print("analysed {} records into {}\n", bundle.at("n_records").get<std::size_t>(), cfg.output_dir.string());
      return kExitOk;
    }
    if (report->parsed()) {
      fmt::print("{}", cmd_report(cfg));
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitFatalConfig;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFatalConfig;
  }
  return kExitOk;
}
