#include "moodscan/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "moodscan/cache.hpp"
#include "moodscan/corpus.hpp"

namespace moodscan {

namespace fs = std::filesystem;

namespace {

// Counts requests that reach the wrapped backend.
class CountingBackend final : public TextBackend {
 public:
  explicit CountingBackend(TextBackend& inner) : inner_(inner) {}
  std::string complete(std::string_view post_id, const RenderedPrompt& prompt, const BackendConfig& config) override {
    ++count_;
    return inner_.complete(post_id, prompt, config);
  }
  std::size_t count() const { return count_.load(); }

 private:
  TextBackend& inner_;
  std::atomic<std::size_t> count_{0};
};

void write_file_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string());
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string fmt_p(double p) { return fmt::format("{:.3g}", p); }

std::string threshold_label(const ThresholdRule& rule) {
  if (rule.op == ThresholdRule::Op::AtLeast && rule.value == 7) return "severe (high alert)";
  return fmt::format("high risk (S {} {})", rule.op == ThresholdRule::Op::AtLeast ? ">=" : ">", rule.value);
}

Json optional_matrix(const std::array<std::array<std::optional<double>, kEmotionCount>, kEmotionCount>& m) {
  Json rows = Json::array();
  for (const auto& row : m) {
    Json r = Json::array();
    for (const auto& v : row) r.push_back(v ? Json(*v) : Json(nullptr));
    rows.push_back(std::move(r));
  }
  return rows;
}

Json correlation_json(const std::vector<CorpusRecord>& records) {
  try {
    const CorrelationMatrix m = spearman_matrix(records);
    return Json{{"n", m.n}, {"rho", optional_matrix(m.rho)}, {"p_value", optional_matrix(m.p_value)},
                {"error", nullptr}};
  } catch (const AnalyticsError& e) {
    return Json{{"n", records.size()},
                {"rho", nullptr},
                {"p_value", nullptr},
                {"error", fmt::format("{}: {}", analytics_error_kind_name(e.kind()), e.what())}};
  }
}

Json emotion_names_json() {
  Json names = Json::array();
  for (Emotion e : kEmotions) names.push_back(std::string(emotion_name(e)));
  return names;
}

}  // namespace

std::string fmt_real(double v) { return fmt::format("{:.4f}", v); }
std::string fmt_pct(double fraction) { return fmt::format("{:.2f}%", 100.0 * fraction); }

// ---------------------------------------------------------------------------
// Results file

Json result_to_json(const ResultRecord& r) {
  Json j{{"post_id", r.post_id}, {"subreddit", r.subreddit}, {"created_utc", r.created_utc}};
  if (r.classification) {
    j["status"] = "ok";
    j["classification"] = classification_to_json(*r.classification);
  } else {
    j["status"] = "failed";
    j["failure"] = r.failure ? failure_to_json(*r.failure) : Json(nullptr);
  }
  return j;
}

ResultRecord result_from_json(const Json& j) {
  ResultRecord r;
  r.post_id = j.at("post_id").get<std::string>();
  r.subreddit = j.value("subreddit", "");
  r.created_utc = j.value("created_utc", std::int64_t{0});
  if (j.value("status", "") == "ok") {
    r.classification = classification_from_json(j.at("classification"));
  } else if (j.contains("failure") && !j.at("failure").is_null()) {
    r.failure = failure_from_json(j.at("failure"));
  }
  return r;
}

std::vector<ResultRecord> read_results(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read results file " + path.string());
  std::vector<ResultRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(result_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw ConfigError(fmt::format("{}:{}: bad result record: {}", path.string(), lineno, e.what()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// classify

ClassifyRun cmd_classify(const RunConfig& config, ClassifyContext context) {
  const auto started = std::chrono::steady_clock::now();

  if (context.backend == nullptr) throw ConfigError("no backend configured");
  try {
    config.backend.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (config.input.empty() || !fs::is_regular_file(config.input)) {
    throw ConfigError("input corpus not found: " + config.input.string());
  }
  PromptTemplate tmpl = PromptTemplate::builtin();
  try {
    tmpl = config.prompt_template();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  ensure_output_dir(config.output_dir);

  Corpus corpus = load_corpus(config.input.string(), config.input_fields);
  const std::vector<Post> posts = sample_posts(corpus.posts, config.sample_size, config.seed);

  ClassificationCache cache(config.cache_path());
  const std::string prompt_version = tmpl.version_tag(config.variant);
  const std::string& model = config.backend.model_name;

  ClassifyRun run;
  run.posts = posts.size();
  std::vector<std::optional<CacheValue>> slots(posts.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (auto hit = cache.find(CacheKey{posts[i].post_id, model, prompt_version})) {
      slots[i] = std::move(*hit);
      ++run.cache_hits;
    } else {
      pending.push_back(i);
    }
  }

  CountingBackend counting(*context.backend);
  ClassifyOptions options;
  options.variant = config.variant;
  options.max_chars = config.max_chars;
  options.prompt_template = tmpl;
  options.sleep = context.sleep;
  options.clock = context.clock;

  std::mutex slot_mu;
  run_bounded(pending.size(), config.backend.max_in_flight, [&](std::size_t k) {
    const std::size_t i = pending[k];
    const Post& post = posts[i];
    CacheValue value;
    bool cacheable = true;
    try {
      value = classify_with_retry(counting, post.post_id, post.text, config.backend, options);
    } catch (const ClassificationFailed& e) {
      cacheable = !e.record().transient();
      value = e.record();
    }
    if (cacheable) cache.put(CacheKey{post.post_id, model, prompt_version}, value);
    std::lock_guard lock(slot_mu);
    slots[i] = std::move(value);
  });

  std::string results;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    ResultRecord r{posts[i].post_id, posts[i].subreddit, posts[i].created_utc, std::nullopt, std::nullopt};
    if (auto* c = std::get_if<Classification>(&*slots[i])) {
      ++run.classified;
      if (c->score_mismatch) ++run.score_mismatches;
      r.classification = *c;
    } else {
      ++run.failed;
      r.failure = std::get<FailureRecord>(*slots[i]);
    }
    results += dump_line(result_to_json(r));
    results += '\n';
  }
  write_file_atomically(config.results_path(), results);

  run.backend_requests = counting.count();
  const double failure_rate = run.posts == 0 ? 0.0 : static_cast<double>(run.failed) / static_cast<double>(run.posts);
  run.exit_code = failure_rate > config.failure_rate_ceiling ? kExitPartialFailure : kExitOk;

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const IngestStats& st = corpus.stats;
  Json manifest{
      {"command", "classify"},
      {"model_name", model},
      {"prompt_version", prompt_version},
      {"prompt_variant", std::string(prompt_variant_name(config.variant))},
      {"temperature", config.backend.temperature},
      {"max_in_flight", config.backend.max_in_flight},
      {"input", config.input.string()},
      {"counts",
       {{"posts", run.posts},
        {"classified", run.classified},
        {"failed", run.failed},
        {"cache_hits", run.cache_hits},
        {"backend_requests", run.backend_requests},
        {"score_mismatches", run.score_mismatches}}},
      {"ingest",
       {{"records", st.records},
        {"kept", st.kept},
        {"sampled", posts.size()},
        {"skipped_empty", st.empty_text},
        {"skipped_removed_or_deleted", st.removed_or_deleted},
        {"dropped_duplicate_text", st.duplicate_text},
        {"dropped_duplicate_id", st.duplicate_id},
        {"schema_errors", st.schema_errors}}},
      {"skipped", Json::array()},
      {"mismatch_rate", run.classified == 0 ? 0.0 : static_cast<double>(run.score_mismatches) /
                                                        static_cast<double>(run.classified)},
      {"failure_rate", failure_rate},
      {"failure_rate_ceiling", config.failure_rate_ceiling},
      {"exit_code", run.exit_code},
      {"wall_time_s", wall},
  };
  for (const std::string& id : corpus.empty_post_ids) {
    manifest["skipped"].push_back(Json{{"post_id", id}, {"reason", "EmptyPost"}});
  }
  write_file_atomically(config.manifest_path(), manifest.dump(2) + "\n");
  return run;
}

// ---------------------------------------------------------------------------
// evaluate

EvalReport cmd_evaluate(const RunConfig& config) {
  if (config.gold.empty() || !fs::is_regular_file(config.gold)) {
    throw ConfigError("gold corpus not found: " + config.gold.string());
  }
  if (!fs::is_regular_file(config.results_path())) {
    throw ConfigError("results file not found: " + config.results_path().string());
  }

  std::vector<AnnotatedPost> gold = load_annotated(config.gold.string(), config.gold_fields);
  if (config.gold_split) {
    std::erase_if(gold, [&](const AnnotatedPost& p) { return p.split != config.gold_split; });
  }

  std::map<std::string, Classification> predictions;
  std::set<std::string> result_ids;
  for (ResultRecord& r : read_results(config.results_path())) {
    result_ids.insert(r.post_id);
    if (r.classification) predictions.emplace(r.post_id, std::move(*r.classification));
  }
  const bool overlap = std::any_of(gold.begin(), gold.end(), [&](const AnnotatedPost& p) {
    return result_ids.count(p.post_id) > 0;
  });
  if (!overlap) throw JoinError("results and gold corpus share no post ids");

  EvalReport report = evaluate_run(gold, predictions);
  ensure_output_dir(config.output_dir);
  write_file_atomically(config.eval_report_path(), eval_report_to_json(report).dump(2) + "\n");
  return report;
}

// ---------------------------------------------------------------------------
// analyze

Json build_analytics_bundle(const std::vector<CorpusRecord>& all_records, const RunConfig& config) {
  const std::vector<CorpusRecord> records = filter_window(all_records, config.window);

  Json bundle{
      {"emotions", emotion_names_json()},
      {"n_records", records.size()},
      {"n_outside_window", all_records.size() - records.size()},
      {"window",
       {{"from", config.window.from ? Json(config.window.from->to_string()) : Json(nullptr)},
        {"to", config.window.to ? Json(config.window.to->to_string()) : Json(nullptr)}}},
      {"threshold_rule", config.threshold.name()},
      {"threshold_label", threshold_label(config.threshold)},
      {"threshold_value", config.threshold.value},
      {"methods",
       {{"correlation", "Spearman rho with average-rank ties (phi on binary indicators)"},
        {"p_value", "two-sided, t = rho*sqrt((n-2)/(1-rho^2)) with n-2 degrees of freedom"},
        {"quantiles", "linear interpolation between order statistics"},
        {"months", "UTC calendar month of created_utc"}}},
      {"notes", Json::array()},
  };

  if (records.empty()) {
    bundle["notes"].push_back("no classified records to analyse");
    bundle["data_bounds"] = Json{{"first_month", nullptr}, {"last_month", nullptr}};
    bundle["groups"] = Json::array();
    bundle["detection_rates"] = Json::array();
    bundle["correlation"] = Json::object();
    bundle["distributions"] = Json::array();
    bundle["high_risk"] = Json{{"rule", config.threshold.name()}, {"error", "EmptySubset: no records"}};
    bundle["monthly"] = Json::array();
    return bundle;
  }

  auto [lo, hi] = std::minmax_element(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return a.created_utc < b.created_utc;
  });
  bundle["data_bounds"] = Json{{"first_month", YearMonth::from_epoch(lo->created_utc).to_string()},
                               {"last_month", YearMonth::from_epoch(hi->created_utc).to_string()}};

  const std::vector<std::string> groups = group_names(records, GroupBy::Subreddit);
  bundle["groups"] = groups;

  Json rates = Json::array();
  for (GroupBy by : {GroupBy::Subreddit, GroupBy::All}) {
    for (const RateRow& row : detection_rates(records, by)) {
      rates.push_back(Json{{"group", row.group}, {"emotion", std::string(emotion_name(row.emotion))},
                           {"rate", row.rate}, {"n", row.n}});
    }
  }
  bundle["detection_rates"] = std::move(rates);

  Json corr = Json::object();
  corr[std::string(kAllGroup)] = correlation_json(records);
  if (config.correlation_per_subreddit) {
    for (const std::string& g : groups) {
      std::vector<CorpusRecord> subset;
      std::copy_if(records.begin(), records.end(), std::back_inserter(subset),
                   [&](const CorpusRecord& r) { return r.subreddit == g; });
      corr[g] = correlation_json(subset);
    }
  }
  for (const auto& [scope, entry] : corr.items()) {
    if (!entry.at("error").is_null()) {
      bundle["notes"].push_back(fmt::format("correlation[{}]: {}", scope, entry.at("error").get<std::string>()));
    }
  }
  bundle["correlation"] = std::move(corr);

  Json dists = Json::array();
  for (GroupBy by : {GroupBy::Subreddit, GroupBy::All}) {
    for (const DistributionSummary& d : score_distribution(records, by, config.threshold.value)) {
      // The configured rule may be strict (gt), so the reported share follows the rule.
      const double pct = config.threshold.op == ThresholdRule::Op::AtLeast ? d.pct_at_or_above(config.threshold.value)
                                                                           : d.pct_at_or_above(config.threshold.value + 1);
      dists.push_back(Json{{"group", d.group}, {"n", d.n}, {"mean", d.mean}, {"median", d.median}, {"q1", d.q1},
                           {"q3", d.q3}, {"min", d.min}, {"max", d.max}, {"pct_passing_threshold", pct},
                           {"histogram", d.histogram}});
    }
  }
  bundle["distributions"] = std::move(dists);

  try {
    const HighRiskComparison hr = high_risk_comparison(records, config.threshold);
    Json rows = Json::array();
    for (const RiskDeltaRow& r : hr.rows) {
      rows.push_back(Json{{"emotion", std::string(emotion_name(r.emotion))}, {"rate_all", r.rate_all},
                          {"rate_high_risk", r.rate_high_risk}, {"delta", r.delta}});
    }
    bundle["high_risk"] = Json{{"rule", config.threshold.name()}, {"n_all", hr.n_all},
                               {"n_high_risk", hr.n_high_risk}, {"rows", std::move(rows)}, {"error", nullptr}};
  } catch (const AnalyticsError& e) {
    const std::string msg = fmt::format("{}: {}", analytics_error_kind_name(e.kind()), e.what());
    bundle["high_risk"] = Json{{"rule", config.threshold.name()}, {"error", msg}};
    bundle["notes"].push_back("high_risk: " + msg);
  }

  Json monthly = Json::array();
  for (GroupBy by : {GroupBy::Subreddit, GroupBy::All}) {
    for (const MonthlySeries& s : monthly_trend(records, by)) {
      Json points = Json::array();
      for (const MonthlyPoint& p : s.points) {
        points.push_back(Json{{"month", p.month.to_string()}, {"mean_score", p.mean_score}, {"n", p.n}});
      }
      monthly.push_back(Json{{"group", s.group}, {"points", std::move(points)}});
    }
  }
  bundle["monthly"] = std::move(monthly);
  return bundle;
}

namespace {

void write_analytics_csvs(const Json& bundle, const fs::path& dir) {
  std::string rates = "group,emotion,rate,n\n";
  for (const auto& r : bundle.at("detection_rates")) {
    rates += fmt::format("{},{},{},{}\n", csv_field(r.at("group").get<std::string>()),
                         r.at("emotion").get<std::string>(), fmt_real(r.at("rate").get<double>()),
                         r.at("n").get<std::size_t>());
  }
  write_file_atomically(dir / "detection_rates.csv", rates);

  std::string corr = "scope,emotion_a,emotion_b,rho,p_value,n\n";
  for (const auto& [scope, entry] : bundle.at("correlation").items()) {
    if (entry.at("rho").is_null()) continue;
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
      for (std::size_t j = 0; j < kEmotionCount; ++j) {
        const Json& rho = entry.at("rho").at(i).at(j);
        const Json& p = entry.at("p_value").at(i).at(j);
        corr += fmt::format("{},{},{},{},{},{}\n", csv_field(scope), emotion_name(kEmotions[i]),
                            emotion_name(kEmotions[j]), rho.is_null() ? "" : fmt_real(rho.get<double>()),
                            p.is_null() ? "" : fmt_p(p.get<double>()), entry.at("n").get<std::size_t>());
      }
    }
  }
  write_file_atomically(dir / "correlation.csv", corr);

  std::string hist = "group,score,count\n";
  std::string summary = "group,n,mean,median,q1,q3,min,max,threshold_rule,pct_passing_threshold\n";
  for (const auto& d : bundle.at("distributions")) {
    const std::string group = csv_field(d.at("group").get<std::string>());
    const Json& h = d.at("histogram");
    for (std::size_t s = 0; s < h.size(); ++s) hist += fmt::format("{},{},{}\n", group, s, h.at(s).get<std::size_t>());
    summary += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", group, d.at("n").get<std::size_t>(),
                           fmt_real(d.at("mean").get<double>()), fmt_real(d.at("median").get<double>()),
                           fmt_real(d.at("q1").get<double>()), fmt_real(d.at("q3").get<double>()),
                           d.at("min").get<int>(), d.at("max").get<int>(),
                           bundle.at("threshold_rule").get<std::string>(),
                           fmt_real(d.at("pct_passing_threshold").get<double>()));
  }
  write_file_atomically(dir / "score_histogram.csv", hist);
  write_file_atomically(dir / "score_summary.csv", summary);

  std::string hr = "emotion,rate_all,rate_high_risk,delta\n";
  if (const Json& h = bundle.at("high_risk"); h.contains("rows")) {
    for (const auto& r : h.at("rows")) {
      hr += fmt::format("{},{},{},{}\n", r.at("emotion").get<std::string>(), fmt_real(r.at("rate_all").get<double>()),
                        fmt_real(r.at("rate_high_risk").get<double>()), fmt_real(r.at("delta").get<double>()));
    }
  }
  write_file_atomically(dir / "high_risk.csv", hr);

  std::string monthly = "group,month,mean_score,n\n";
  for (const auto& s : bundle.at("monthly")) {
    const std::string group = csv_field(s.at("group").get<std::string>());
    for (const auto& p : s.at("points")) {
      monthly += fmt::format("{},{},{},{}\n", group, p.at("month").get<std::string>(),
                             fmt_real(p.at("mean_score").get<double>()), p.at("n").get<std::size_t>());
    }
  }
  write_file_atomically(dir / "monthly_trend.csv", monthly);
}

}  // namespace

Json cmd_analyze(const RunConfig& config) {
  const std::vector<ResultRecord> results = read_results(config.results_path());
  std::vector<CorpusRecord> records;
  std::size_t failed = 0;
  for (const ResultRecord& r : results) {
    if (!r.classification) {
      ++failed;
      continue;
    }
    records.push_back(CorpusRecord{r.post_id, r.subreddit, r.created_utc, *r.classification});
  }

  Json bundle = build_analytics_bundle(records, config);
  bundle["n_failed_results"] = failed;
  if (results.empty()) bundle["notes"].push_back("results file is empty");

  ensure_output_dir(config.output_dir);
  write_analytics_csvs(bundle, config.output_dir);
  write_file_atomically(config.bundle_path(), bundle.dump(2) + "\n");
  return bundle;
}

// ---------------------------------------------------------------------------
// report

namespace {

constexpr double kFlatTrendEpsilon = 0.05;

}  // namespace

std::string render_report(const Json& bundle) {
  std::string out = "# Depression-risk digest\n\n";
  const auto n = bundle.at("n_records").get<std::size_t>();
  const Json& bounds = bundle.at("data_bounds");
  if (bounds.at("first_month").is_null()) {
    out += fmt::format("Records analysed: {}\n", n);
  } else {
    out += fmt::format("Records analysed: {} ({} to {})\n", n, bounds.at("first_month").get<std::string>(),
                       bounds.at("last_month").get<std::string>());
  }
  out += fmt::format("Threshold rule: {}\n", bundle.at("threshold_rule").get<std::string>());
  for (const auto& note : bundle.at("notes")) out += fmt::format("Note: {}\n", note.get<std::string>());

  const Json& dists = bundle.at("distributions");
  if (!dists.empty()) {
    out += "\n## Severity by group\n\n";
    out += "| group | n | mean | median | q1 | q3 |\n|---|---|---|---|---|---|\n";
    for (const auto& d : dists) {
      out += fmt::format("| {} | {} | {} | {} | {} | {} |\n", d.at("group").get<std::string>(),
                         d.at("n").get<std::size_t>(), fmt_real(d.at("mean").get<double>()),
                         fmt_real(d.at("median").get<double>()), fmt_real(d.at("q1").get<double>()),
                         fmt_real(d.at("q3").get<double>()));
    }

    out += fmt::format("\n## Share of posts {}: {}\n\n",
                       bundle.at("threshold_rule").get<std::string>().rfind("ge", 0) == 0 ? "at or above threshold"
                                                                                           : "above threshold",
                       bundle.at("threshold_label").get<std::string>());
    for (const auto& d : dists) {
      out += fmt::format("- {}: {}\n", d.at("group").get<std::string>(),
                         fmt_pct(d.at("pct_passing_threshold").get<double>()));
    }
  }

  const auto groups = bundle.at("groups").get<std::vector<std::string>>();
  if (groups.size() > 1) {
    const Json* highest = nullptr;
    const Json* lowest = nullptr;
    for (const auto& d : dists) {
      if (d.at("group").get<std::string>() == kAllGroup &&
          std::find(groups.begin(), groups.end(), std::string(kAllGroup)) == groups.end()) {
        continue;
      }
      if (!highest || d.at("mean").get<double>() > highest->at("mean").get<double>()) highest = &d;
      if (!lowest || d.at("mean").get<double>() < lowest->at("mean").get<double>()) lowest = &d;
    }
    out += "\n## Cross-group comparison\n\n";
    out += fmt::format("- Highest mean severity: {} ({})\n", highest->at("group").get<std::string>(),
                       fmt_real(highest->at("mean").get<double>()));
    out += fmt::format("- Lowest mean severity: {} ({})\n", lowest->at("group").get<std::string>(),
                       fmt_real(lowest->at("mean").get<double>()));
    out += fmt::format("- Spread of means: {}\n",
                       fmt_real(highest->at("mean").get<double>() - lowest->at("mean").get<double>()));
  }

  const Json& corr = bundle.at("correlation");
  if (auto it = corr.find(std::string(kAllGroup)); it != corr.end()) {
    out += "\n## Top correlated emotion pairs\n\n";
    if (it->at("rho").is_null()) {
      out += fmt::format("- unavailable: {}\n", it->at("error").get<std::string>());
    } else {
      struct Pair {
        std::size_t i, j;
        double rho, p;
      };
      std::vector<Pair> pairs;
      for (std::size_t i = 0; i < kEmotionCount; ++i) {
        for (std::size_t j = i + 1; j < kEmotionCount; ++j) {
          const Json& rho = it->at("rho").at(i).at(j);
          if (rho.is_null()) continue;
          pairs.push_back({i, j, rho.get<double>(), it->at("p_value").at(i).at(j).get<double>()});
        }
      }
      std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.rho > b.rho; });
      if (pairs.size() > 5) pairs.resize(5);
      if (pairs.empty()) out += "- no defined pairs\n";
      for (const Pair& p : pairs) {
        out += fmt::format("- {} / {}: rho={} (p={})\n", emotion_name(kEmotions[p.i]), emotion_name(kEmotions[p.j]),
                           fmt_real(p.rho), fmt_p(p.p));
      }
    }
  }

  const Json& hr = bundle.at("high_risk");
  out += fmt::format("\n## High-risk subset ({})\n\n", hr.at("rule").get<std::string>());
  if (!hr.at("error").is_null()) {
    out += fmt::format("- unavailable: {}\n", hr.at("error").get<std::string>());
  } else {
    out += fmt::format("- {} of {} posts\n", hr.at("n_high_risk").get<std::size_t>(), hr.at("n_all").get<std::size_t>());
    std::vector<const Json*> rows;
    for (const auto& r : hr.at("rows")) rows.push_back(&r);
    std::stable_sort(rows.begin(), rows.end(), [](const Json* a, const Json* b) {
      return a->at("delta").get<double>() > b->at("delta").get<double>();
    });
    for (const Json* r : rows) {
      out += fmt::format("- {}: {} -> {} (delta {})\n", r->at("emotion").get<std::string>(),
                         fmt_real(r->at("rate_all").get<double>()), fmt_real(r->at("rate_high_risk").get<double>()),
                         fmt_real(r->at("delta").get<double>()));
    }
  }

  const Json& monthly = bundle.at("monthly");
  if (!monthly.empty()) {
    out += "\n## Monthly trend\n\n";
    for (const auto& s : monthly) {
      const Json& pts = s.at("points");
      if (pts.empty()) continue;
      const double first = pts.front().at("mean_score").get<double>();
      const double last = pts.back().at("mean_score").get<double>();
      const char* direction = last - first > kFlatTrendEpsilon    ? "rising"
                              : first - last > kFlatTrendEpsilon ? "falling"
                                                                  : "flat";
      out += fmt::format("- {}: {} ({} {} -> {} {}, {} months)\n", s.at("group").get<std::string>(), direction,
                         pts.front().at("month").get<std::string>(), fmt_real(first),
                         pts.back().at("month").get<std::string>(), fmt_real(last), pts.size());
    }
  }
  return out;
}

std::string cmd_report(const RunConfig& config) {
  const fs::path path = config.bundle_path();
  if (!fs::is_regular_file(path)) throw MissingBundle("analytics bundle not found: " + path.string());
  const Json bundle = Json::parse(read_file(path), nullptr, /*allow_exceptions=*/false);
  if (bundle.is_discarded() || !bundle.is_object()) throw MissingBundle("analytics bundle is unreadable: " + path.string());
  std::string text = render_report(bundle);
  write_file_atomically(config.report_path(), text);
  return text;
}

}  // namespace moodscan
