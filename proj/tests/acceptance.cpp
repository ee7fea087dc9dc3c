// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails. The benchmark-reproduction check runs only when
// MOODSCAN_TABLE2_REPORT names an eval_report.json from a real model run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "moodscan/analytics.hpp"
#include "moodscan/commands.hpp"
#include "moodscan/core.hpp"
#include "moodscan/eval.hpp"
#include "moodscan/parser.hpp"
#include "oracles.hpp"
#include "perturb.hpp"

using namespace moodscan;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clk = std::chrono::steady_clock;

double seconds_since(Clk::time_point t0) { return std::chrono::duration<double>(Clk::now() - t0).count(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- severity --------------------------------------------------------------

Outcome severity_oracle() {
  const auto t0 = Clk::now();
  int mismatches = 0, out_of_range = 0;
  for (unsigned bits = 0; bits < 256; ++bits) {
    const auto labels = EmotionLabelSet::from_bits(static_cast<std::uint8_t>(bits));
    const int s = compute_severity(labels).value;
    if (s != oracle::weight_sum(static_cast<std::uint8_t>(bits))) ++mismatches;
    if (s < 0 || s > 13) ++out_of_range;
  }
  EmotionLabelSet example;
  for (Emotion e : {Emotion::CognitiveDysfunction, Emotion::Hopelessness, Emotion::Loneliness, Emotion::Sadness,
                    Emotion::Worthlessness}) {
    example.set(e);
  }
  const int worked = compute_severity(example).value;
  const double dt = seconds_since(t0);
  return {mismatches == 0 && out_of_range == 0 && worked == 7 && dt < 1.0,
          fmt::format("256 combinations, mismatches={}, out_of_range={}, worked_example={}, {:.4f}s", mismatches,
                      out_of_range, worked, dt)};
}

Outcome level_boundaries() {
  const int scores[] = {0, 1, 2, 4, 5, 6, 7, 13};
  const SeverityLevel want[] = {SeverityLevel::Minimal,  SeverityLevel::Minimal, SeverityLevel::Mild,
                                SeverityLevel::Mild,     SeverityLevel::Moderate, SeverityLevel::Moderate,
                                SeverityLevel::Severe,   SeverityLevel::Severe};
  std::string got;
  bool ok = true;
  for (std::size_t i = 0; i < 8; ++i) {
    const SeverityLevel l = severity_level(SeverityScore{scores[i]});
    ok = ok && l == want[i];
    got += fmt::format("{}{}={}", i ? " " : "", scores[i], severity_level_name(l));
  }
  return {ok, got};
}

// --- metrics ---------------------------------------------------------------

std::vector<std::vector<bool>> rows_of(const std::vector<EmotionLabelSet>& sets) {
  std::vector<std::vector<bool>> rows;
  for (const auto& s : sets) {
    std::vector<bool> r;
    for (Emotion e : kEmotions) r.push_back(s.has(e));
    rows.push_back(std::move(r));
  }
  return rows;
}

Outcome metrics_oracle() {
  const auto t0 = Clk::now();
  std::mt19937_64 rng(1000);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 20;
    std::vector<EmotionLabelSet> gold, pred;
    ConfusionCounts counts;
    for (std::size_t i = 0; i < n; ++i) {
      gold.push_back(EmotionLabelSet::from_bits(static_cast<std::uint8_t>(rng())));
      pred.push_back(EmotionLabelSet::from_bits(static_cast<std::uint8_t>(rng())));
      counts = accumulate(gold.back(), pred.back(), counts);
    }
    const EvalReport r = summarize(counts);
    const oracle::Metrics o = oracle::brute_force_metrics(rows_of(gold), rows_of(pred), 8);
    for (double d : {r.micro.precision - o.micro_p, r.micro.recall - o.micro_r, r.micro.f1 - o.micro_f1,
                     r.macro.precision - o.macro_p, r.macro.recall - o.macro_r, r.macro.f1 - o.macro_f1}) {
      worst = std::max(worst, std::abs(d));
    }
  }

  ConfusionCounts perfect, silent;
  for (unsigned bits : {0xFFu, 0x15u, 0xA2u}) {
    const auto g = EmotionLabelSet::from_bits(static_cast<std::uint8_t>(bits));
    perfect = accumulate(g, g, perfect);
    silent = accumulate(g, EmotionLabelSet{}, silent);
  }
  const EvalReport p = summarize(perfect);
  const EvalReport s = summarize(silent);
  const bool perfect_ok = p.micro.f1 == 1.0 && p.macro.f1 == 1.0 && p.micro.precision == 1.0 &&
                          p.micro.recall == 1.0 && p.macro.precision == 1.0 && p.macro.recall == 1.0;
  const bool silent_ok = s.micro.f1 == 0.0 && s.macro.f1 == 0.0 && s.micro.recall == 0.0 && s.macro.recall == 0.0;
  const double dt = seconds_since(t0);
  return {worst <= 1e-12 && perfect_ok && silent_ok && dt < 10.0,
          fmt::format("1000 instances, max_abs_diff={:.3g}, perfect={}, all_false={}, {:.3f}s", worst,
                      perfect_ok ? "1.0" : "wrong", silent_ok ? "0.0" : "wrong", dt)};
}

Outcome hand_derived_case() {
  // Classes A, B. gold: {A}, {A,B}; pred: {A,B}, {B}.
  std::vector<ClassCounts> counts(2);
  counts[0] = ClassCounts{1, 0, 1, 0};
  counts[1] = ClassCounts{1, 1, 0, 0};
  const AveragedMetrics m = average_metrics(counts);
  const oracle::Metrics o =
      oracle::brute_force_metrics({{true, false}, {true, true}}, {{true, true}, {false, true}}, 2);
  const bool ok = std::abs(m.micro.f1 - 2.0 / 3.0) < 1e-15 && m.macro.precision == 0.75 &&
                  std::abs(m.micro.f1 - o.micro_f1) < 1e-15 && m.macro.precision == o.macro_p;
  return {ok, fmt::format("micro_f1={:.15f} macro_p={:.15f}", m.micro.f1, m.macro.precision)};
}

// --- correlation -----------------------------------------------------------

Outcome spearman_oracle() {
  std::mt19937_64 rng(531);
  double worst = 0.0;
  std::size_t checked = 0, undefined_ok = 0, undefined_bad = 0, asym = 0, diag_bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng() % 198;
    std::vector<double> density(8);
    for (auto& d : density) d = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (trial % 10 == 0) density[rng() % 8] = 0.0;  // force a constant column
    std::vector<CorpusRecord> records(n);
    std::vector<std::vector<double>> cols(8, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < 8; ++c) {
        if (std::bernoulli_distribution(density[c])(rng)) {
          records[i].classification.labels.set(kEmotions[c]);
          cols[c][i] = 1.0;
        }
      }
    }
    const CorrelationMatrix m = spearman_matrix(records);
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 8; ++j) {
        const double ref = oracle::spearman(cols[i], cols[j]);
        if (std::isnan(ref)) {
          (m.rho[i][j] ? undefined_bad : undefined_ok) += 1;
          continue;
        }
        if (!m.rho[i][j]) {
          ++undefined_bad;
          continue;
        }
        worst = std::max(worst, std::abs(*m.rho[i][j] - ref));
        if (!m.rho[j][i] || *m.rho[i][j] != *m.rho[j][i]) ++asym;
        if (i == j && *m.rho[i][j] != 1.0) ++diag_bad;
        ++checked;
      }
    }
  }
  return {worst <= 1e-9 && asym == 0 && diag_bad == 0 && undefined_bad == 0 && undefined_ok > 0,
          fmt::format("200 matrices, {} defined entries, max_abs_diff={:.3g}, asymmetric={}, bad_diagonal={}, "
                      "undefined_flagged={}, undefined_wrong={}",
                      checked, worst, asym, diag_bad, undefined_ok, undefined_bad)};
}

// --- parser ----------------------------------------------------------------

Outcome parser_robustness() {
  std::size_t recovered = 0;
  const auto cases = perturb::corpus(500, 532, false);
  for (const auto& c : cases) {
    try {
      if (parse_response(c.text, PromptVariant::Base).labels.bits() == c.mask) ++recovered;
    } catch (const ParseError&) {
    }
  }
  const double rate = static_cast<double>(recovered) / static_cast<double>(cases.size());

  struct Bad {
    std::string text;
    ParseErrorKind want;
  };
  const std::string full =
      R"("anger": false, "cognitive_dysfunction": true, "emptiness": false, "hopelessness": true, )"
      R"("loneliness": true, "sadness": true, "suicide_intent": false)";
  const std::vector<Bad> malformed = {
      {"{" + full + "}", ParseErrorKind::MissingEmotion},
      {R"({"anger": false})", ParseErrorKind::MissingEmotion},
      {"```json\n{" + full + ", \"worthless\": true}\n```", ParseErrorKind::MissingEmotion},
      {"I am unable to classify this post.", ParseErrorKind::NoObjectFound},
      {"", ParseErrorKind::NoObjectFound},
      {"```json\n```", ParseErrorKind::NoObjectFound},
      {"{" + full + ", \"worthlessness\": \"maybe\"}", ParseErrorKind::InvalidValue},
      {"{" + full + ", \"worthlessness\": 1}", ParseErrorKind::InvalidValue},
      {"{" + full + ", \"worthlessness\": null}", ParseErrorKind::InvalidValue},
      {"{" + full + ", \"worthlessness\": [true]}", ParseErrorKind::InvalidValue},
      {"{" + full + R"(, "worthlessness": true, "Worthlessness": false})", ParseErrorKind::InvalidValue},
  };
  std::size_t classified_right = 0;
  for (const Bad& b : malformed) {
    try {
      parse_response(b.text, PromptVariant::Base);
    } catch (const ParseError& e) {
      if (e.kind() == b.want) ++classified_right;
    }
  }
  return {rate >= 0.95 && classified_right == malformed.size(),
          fmt::format("recovered {}/{} ({:.1f}%), malformed classified {}/{}", recovered, cases.size(), 100.0 * rate,
                      classified_right, malformed.size())};
}

// --- end to end ------------------------------------------------------------

const char* kTags[] = {"#anger",      "#cognitive_dysfunction", "#emptiness",      "#hopelessness",
                       "#loneliness", "#sadness",               "#suicide_intent", "#worthlessness"};

void write_corpus(const fs::path& path, int n) {
  std::ofstream out(path, std::ios::binary);
  for (int i = 0; i < n; ++i) {
    std::string body = "synthetic post " + std::to_string(i);
    const int mask = (i * 37 + 11) % 256;
    for (int b = 0; b < 8; ++b) {
      if ((mask >> b) & 1) body += std::string(" ") + kTags[b];
    }
    out << Json{{"id", fmt::format("s{:03}", i)},
                {"subreddit", i % 3 == 0 ? "anxiety" : (i % 3 == 1 ? "depression" : "mentalhealth")},
                {"created_utc", 1704067200 + static_cast<std::int64_t>(i) * 86400 * 11},
                {"title", "title " + std::to_string(i)},
                {"selftext", body}}
               .dump()
        << "\n";
  }
}

RunConfig e2e_config(const fs::path& dir) {
  RunConfig cfg;
  cfg.backend_kind = BackendKind::Mock;
  cfg.backend.model_name = "mock";
  cfg.backend.backoff_initial_s = 0.0;
  cfg.backend.max_in_flight = 4;
  cfg.input = dir / "input.jsonl";
  cfg.output_dir = dir / "out";
  return cfg;
}

ClassifyContext ctx_for(TextBackend& b) {
  ClassifyContext ctx;
  ctx.backend = &b;
  ctx.clock = fixed_clock("2025-01-01T00:00:00Z");
  ctx.sleep = [](std::chrono::duration<double>) {};
  return ctx;
}

fs::path fresh(const fs::path& root, const std::string& name) {
  const fs::path d = root / name;
  fs::remove_all(d);
  fs::create_directories(d);
  write_corpus(d / "input.jsonl", 50);
  return d;
}

const char* kOutputs[] = {"results.jsonl",       "analytics_bundle.json", "detection_rates.csv", "correlation.csv",
                          "score_histogram.csv", "score_summary.csv",     "high_risk.csv",       "monthly_trend.csv"};

std::string outputs_of(const RunConfig& cfg) {
  std::string all;
  for (const char* f : kOutputs) all += std::string(f) + "\n" + slurp(cfg.output_dir / f);
  return all;
}

Outcome end_to_end_determinism(const fs::path& root) {
  const RunConfig a = e2e_config(fresh(root, "run_a"));
  const RunConfig b = e2e_config(fresh(root, "run_b"));
  MockBackend ma, mb;
  cmd_classify(a, ctx_for(ma));
  cmd_analyze(a);
  cmd_classify(b, ctx_for(mb));
  cmd_analyze(b);
  const std::string out_a = outputs_of(a);
  const bool fresh_identical = out_a == outputs_of(b);

  MockBackend again;
  const ClassifyRun rerun = cmd_classify(a, ctx_for(again));
  cmd_analyze(a);
  const bool rerun_identical = outputs_of(a) == out_a;

  // Interrupted run: the backend dies after 20 requests, the cache is left
  // with a torn final line, and a second invocation resumes.
  const RunConfig c = e2e_config(fresh(root, "run_c"));
  std::atomic<int> served{0};
  const auto keyword = MockBackend::keyword_responder();
  MockBackend crashing([&](std::string_view id, const RenderedPrompt& p, int call) {
    if (served.fetch_add(1) >= 20) throw std::runtime_error("backend process died");
    return keyword(id, p, call);
  });
  bool interrupted = false;
  try {
    cmd_classify(c, ctx_for(crashing));
  } catch (const std::runtime_error&) {
    interrupted = true;
  }
  { std::ofstream(c.cache_path(), std::ios::app) << R"({"key": {"post_id": "s049", "mod)"; }
  MockBackend resume;
  const ClassifyRun resumed = cmd_classify(c, ctx_for(resume));
  cmd_analyze(c);
  const bool resumed_identical = outputs_of(c) == out_a;
  const bool resumed_partial = resumed.cache_hits >= 1 && resume.calls() < 50 && resume.calls() + resumed.cache_hits == 50;

  return {fresh_identical && rerun.backend_requests == 0 && again.calls() == 0 && rerun_identical && interrupted &&
              resumed_identical && resumed_partial,
          fmt::format("50 posts, fresh runs identical={}, rerun backend calls={}, rerun identical={}, "
                      "interrupted={}, resumed cache hits={} new calls={}, resumed identical={}",
                      fresh_identical, again.calls(), rerun_identical, interrupted, resumed.cache_hits, resume.calls(),
                      resumed_identical)};
}

Outcome concurrency_bound(const fs::path& root) {
  // Latency varies per post so completion order differs from dispatch order.
  auto jittery = [](std::size_t salt) {
    const auto keyword = MockBackend::keyword_responder();
    return [keyword, salt](std::string_view id, const RenderedPrompt& p, int call) {
      const std::size_t h = std::hash<std::string_view>{}(id) ^ salt;
      std::this_thread::sleep_for(std::chrono::microseconds(500 + h % 4000));
      return keyword(id, p, call);
    };
  };
  const RunConfig a = e2e_config(fresh(root, "conc_a"));
  RunConfig serial = e2e_config(fresh(root, "conc_serial"));
  serial.backend.max_in_flight = 1;
  const RunConfig b = e2e_config(fresh(root, "conc_b"));

  MockBackend ma(jittery(1)), ms(jittery(2)), mb(jittery(3));
  cmd_classify(a, ctx_for(ma));
  cmd_classify(serial, ctx_for(ms));
  cmd_classify(b, ctx_for(mb));
  const std::string ra = slurp(a.results_path());
  const bool same = ra == slurp(serial.results_path()) && ra == slurp(b.results_path());
  const std::size_t peak = std::max(ma.peak_in_flight(), mb.peak_in_flight());
  return {peak <= 4 && ms.peak_in_flight() == 1 && same,
          fmt::format("max_in_flight=4, observed peak={} (serial peak={}), results independent of order={}", peak,
                      ms.peak_in_flight(), same)};
}

// --- optional benchmark check ----------------------------------------------

Outcome benchmark_reproduction(const std::string& report_path) {
  const Json r = Json::parse(slurp(report_path));
  const double micro = r.at("micro").at("f1").get<double>();
  const double macro = r.at("macro").at("f1").get<double>();
  return {std::abs(micro - 0.75) <= 0.03 && std::abs(macro - 0.70) <= 0.03,
          fmt::format("micro_f1={:.4f} (target 0.75 +/- 0.03), macro_f1={:.4f} (target 0.70 +/- 0.03)", micro, macro)};
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "moodscan_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);

  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"severity-oracle", severity_oracle},
      {"level-boundaries", level_boundaries},
      {"metrics-oracle", metrics_oracle},
      {"hand-derived-case", hand_derived_case},
      {"spearman-oracle", spearman_oracle},
      {"parser-robustness", parser_robustness},
      {"end-to-end-determinism", [&] { return end_to_end_determinism(root); }},
      {"concurrency-bound", [&] { return concurrency_bound(root); }},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    fmt::print("{} {}: {}\n", o.pass ? "PASS" : "FAIL", c.name, o.detail);
  }

  if (const char* report = std::getenv("MOODSCAN_TABLE2_REPORT"); report != nullptr && *report != '\0') {
    Outcome o;
    try {
      o = benchmark_reproduction(report);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    fmt::print("{} benchmark-reproduction: {}\n", o.pass ? "PASS" : "FAIL", o.detail);
  } else {
    fmt::print("SKIP benchmark-reproduction: set MOODSCAN_TABLE2_REPORT to an eval_report.json to enable\n");
  }

  fs::remove_all(root);
  return failures == 0 ? 0 : 1;
}
