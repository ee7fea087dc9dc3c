#include "moodscan/analytics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

namespace moodscan {

namespace {

std::string group_of(const CorpusRecord& r, GroupBy by) {
  return by == GroupBy::All ? std::string(kAllGroup) : r.subreddit;
}

// Records partitioned by group name, groups sorted, record order preserved.
std::map<std::string, std::vector<const CorpusRecord*>> partition(const std::vector<CorpusRecord>& records,
                                                                  GroupBy by) {
  std::map<std::string, std::vector<const CorpusRecord*>> groups;
  for (const CorpusRecord& r : records) groups[group_of(r, by)].push_back(&r);
  return groups;
}

std::array<double, kEmotionCount> rates_of(const std::vector<const CorpusRecord*>& rows) {
  std::array<std::size_t, kEmotionCount> hits{};
  for (const CorpusRecord* r : rows) {
    for (Emotion e : kEmotions) {
      if (r->labels().has(e)) ++hits[index_of(e)];
    }
  }
  std::array<double, kEmotionCount> rates{};
  if (rows.empty()) return rates;
  for (std::size_t i = 0; i < kEmotionCount; ++i) {
    rates[i] = static_cast<double>(hits[i]) / static_cast<double>(rows.size());
  }
  return rates;
}

}  // namespace

std::string_view analytics_error_kind_name(AnalyticsErrorKind kind) {
  return kind == AnalyticsErrorKind::InsufficientData ? "InsufficientData" : "EmptySubset";
}

// ---------------------------------------------------------------------------
// Calendar helpers

YearMonth YearMonth::from_epoch(std::int64_t seconds) {
  using namespace std::chrono;
  const year_month_day ymd{floor<days>(sys_seconds{std::chrono::seconds{seconds}})};
  return YearMonth{static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month())};
}

std::optional<YearMonth> YearMonth::parse(std::string_view text) {
  if (text.size() != 7 || text[4] != '-') return std::nullopt;
  int year = 0;
  unsigned month = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (text[i] < '0' || text[i] > '9') return std::nullopt;
    year = year * 10 + (text[i] - '0');
  }
  for (std::size_t i = 5; i < 7; ++i) {
    if (text[i] < '0' || text[i] > '9') return std::nullopt;
    month = month * 10 + static_cast<unsigned>(text[i] - '0');
  }
  if (month < 1 || month > 12) return std::nullopt;
  return YearMonth{year, month};
}

std::string YearMonth::to_string() const { return fmt::format("{:04}-{:02}", year, month); }

AnalysisWindow AnalysisWindow::parse(std::string_view text) {
  const std::size_t sep = text.find("..");
  if (sep == std::string_view::npos) throw std::invalid_argument("window must look like FROM..TO (YYYY-MM)");
  AnalysisWindow w;
  const std::string_view lo = text.substr(0, sep);
  const std::string_view hi = text.substr(sep + 2);
  if (!lo.empty()) {
    w.from = YearMonth::parse(lo);
    if (!w.from) throw std::invalid_argument("bad window start: " + std::string(lo));
  }
  if (!hi.empty()) {
    w.to = YearMonth::parse(hi);
    if (!w.to) throw std::invalid_argument("bad window end: " + std::string(hi));
  }
  if (w.from && w.to && *w.to < *w.from) throw std::invalid_argument("window end precedes start");
  return w;
}

bool AnalysisWindow::contains(std::int64_t epoch_seconds) const {
  const YearMonth m = YearMonth::from_epoch(epoch_seconds);
  if (from && m < *from) return false;
  if (to && *to < m) return false;
  return true;
}

std::vector<CorpusRecord> filter_window(const std::vector<CorpusRecord>& records, const AnalysisWindow& window) {
  std::vector<CorpusRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const CorpusRecord& r) { return window.contains(r.created_utc); });
  return out;
}

std::vector<std::string> group_names(const std::vector<CorpusRecord>& records, GroupBy by) {
  std::vector<std::string> out;
  for (const auto& [name, rows] : partition(records, by)) out.push_back(name);
  return out;
}

// ---------------------------------------------------------------------------
// Detection rates

std::vector<RateRow> detection_rates(const std::vector<CorpusRecord>& records, GroupBy by) {
  std::vector<RateRow> out;
  for (const auto& [name, rows] : partition(records, by)) {
    const auto rates = rates_of(rows);
    for (Emotion e : kEmotions) out.push_back(RateRow{name, e, rates[index_of(e)], rows.size()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Correlation

void CooccurrenceCounts::add(const EmotionLabelSet& labels) {
  ++n;
  for (std::size_t i = 0; i < kEmotionCount; ++i) {
    if (!labels.has(kEmotions[i])) continue;
    for (std::size_t j = 0; j < kEmotionCount; ++j) {
      if (labels.has(kEmotions[j])) ++both[i][j];
    }
  }
}

CooccurrenceCounts& CooccurrenceCounts::operator+=(const CooccurrenceCounts& o) {
  n += o.n;
  for (std::size_t i = 0; i < kEmotionCount; ++i) {
    for (std::size_t j = 0; j < kEmotionCount; ++j) both[i][j] += o.both[i][j];
  }
  return *this;
}

double correlation_p_value(double rho, std::size_t n) {
  if (n < 3) return 1.0;
  const double r2 = rho * rho;
  if (r2 >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = std::fabs(rho) * std::sqrt(df / (1.0 - r2));
  const boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, t)), 0.0, 1.0);
}

CorrelationMatrix correlation_from_counts(const CooccurrenceCounts& counts) {
  if (counts.n < 3) {
    throw AnalyticsError(AnalyticsErrorKind::InsufficientData,
                         fmt::format("correlation needs at least 3 records, got {}", counts.n));
  }
  CorrelationMatrix m;
  m.n = counts.n;
  const auto n = static_cast<long double>(counts.n);

  auto constant = [&](std::size_t i) { return counts.both[i][i] == 0 || counts.both[i][i] == counts.n; };

  for (std::size_t i = 0; i < kEmotionCount; ++i) {
    if (constant(i)) continue;
    m.rho[i][i] = 1.0;
    m.p_value[i][i] = 0.0;
    for (std::size_t j = i + 1; j < kEmotionCount; ++j) {
      if (constant(j)) continue;
      const auto a = static_cast<long double>(counts.both[i][i]);
      const auto b = static_cast<long double>(counts.both[j][j]);
      const auto ab = static_cast<long double>(counts.both[i][j]);
      const long double num = n * ab - a * b;
      const long double den = std::sqrt(a * (n - a)) * std::sqrt(b * (n - b));
      const double rho = std::clamp(static_cast<double>(num / den), -1.0, 1.0);
      const double p = correlation_p_value(rho, counts.n);
      m.rho[i][j] = m.rho[j][i] = rho;
      m.p_value[i][j] = m.p_value[j][i] = p;
    }
  }
  return m;
}

CorrelationMatrix spearman_matrix(const std::vector<CorpusRecord>& records) {
  CooccurrenceCounts counts;
  for (const CorpusRecord& r : records) counts.add(r.labels());
  return correlation_from_counts(counts);
}

// ---------------------------------------------------------------------------
// Distributions

double DistributionSummary::pct_at_or_above(int t) const {
  if (n == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t s = 0; s < histogram.size(); ++s) {
    if (static_cast<int>(s) >= t) hits += histogram[s];
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

double quantile_sorted(const std::vector<int>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return static_cast<double>(sorted[lo]) + frac * static_cast<double>(sorted[hi] - sorted[lo]);
}

std::vector<DistributionSummary> score_distribution(const std::vector<CorpusRecord>& records, GroupBy by,
                                                    int threshold) {
  std::vector<DistributionSummary> out;
  for (const auto& [name, rows] : partition(records, by)) {
    DistributionSummary d;
    d.group = name;
    d.n = rows.size();
    d.threshold = threshold;

    std::vector<int> scores;
    scores.reserve(rows.size());
    long long sum = 0;
    for (const CorpusRecord* r : rows) {
      const int s = std::clamp(r->severity(), 0, static_cast<int>(kHistogramBins) - 1);
      ++d.histogram[static_cast<std::size_t>(s)];
      scores.push_back(r->severity());
      sum += r->severity();
    }
    std::sort(scores.begin(), scores.end());
    d.mean = static_cast<double>(sum) / static_cast<double>(d.n);
    d.median = quantile_sorted(scores, 0.5);
    d.q1 = quantile_sorted(scores, 0.25);
    d.q3 = quantile_sorted(scores, 0.75);
    d.min = scores.front();
    d.max = scores.back();
    d.pct_at_threshold = d.pct_at_or_above(threshold);
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// High-risk subset

std::string ThresholdRule::name() const { return fmt::format("{}{}", op == Op::AtLeast ? "ge" : "gt", value); }

std::optional<ThresholdRule> ThresholdRule::parse(std::string_view text) {
  if (text.size() < 3) return std::nullopt;
  ThresholdRule rule;
  const std::string_view op = text.substr(0, 2);
  if (op == "ge") {
    rule.op = Op::AtLeast;
  } else if (op == "gt") {
    rule.op = Op::Above;
  } else {
    return std::nullopt;
  }
  int v = 0;
  for (char c : text.substr(2)) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
    if (v > 1000) return std::nullopt;
  }
  rule.value = v;
  return rule;
}

HighRiskComparison high_risk_comparison(const std::vector<CorpusRecord>& records, const ThresholdRule& rule) {
  std::vector<const CorpusRecord*> all;
  std::vector<const CorpusRecord*> high;
  for (const CorpusRecord& r : records) {
    all.push_back(&r);
    if (rule.passes(r.severity())) high.push_back(&r);
  }
  if (high.empty()) {
    throw AnalyticsError(AnalyticsErrorKind::EmptySubset, "no record passes threshold rule " + rule.name());
  }
  const auto rate_all = rates_of(all);
  const auto rate_high = rates_of(high);

  HighRiskComparison out;
  out.n_all = all.size();
  out.n_high_risk = high.size();
  for (Emotion e : kEmotions) {
    const std::size_t i = index_of(e);
    out.rows.push_back(RiskDeltaRow{e, rate_all[i], rate_high[i], rate_high[i] - rate_all[i]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Monthly trend

std::vector<MonthlySeries> monthly_trend(const std::vector<CorpusRecord>& records, GroupBy by) {
  std::vector<MonthlySeries> out;
  for (const auto& [name, rows] : partition(records, by)) {
    std::map<YearMonth, std::pair<long long, std::size_t>> buckets;
    for (const CorpusRecord* r : rows) {
      auto& [sum, count] = buckets[YearMonth::from_epoch(r->created_utc)];
      sum += r->severity();
      ++count;
    }
    MonthlySeries series;
    series.group = name;
    for (const auto& [month, acc] : buckets) {
      series.points.push_back(
          MonthlyPoint{month, static_cast<double>(acc.first) / static_cast<double>(acc.second), acc.second});
    }
    out.push_back(std::move(series));
  }
  return out;
}

}  // namespace moodscan
