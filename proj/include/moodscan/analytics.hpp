#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "moodscan/core.hpp"
#include "moodscan/parser.hpp"

namespace moodscan {

struct CorpusRecord {
  std::string post_id;
  std::string subreddit;
  std::int64_t created_utc = 0;  // epoch seconds
  Classification classification;

  const EmotionLabelSet& labels() const { return classification.labels; }
  int severity() const { return classification.severity.value; }
};

enum class GroupBy { Subreddit, All };

inline constexpr std::string_view kAllGroup = "all";

enum class AnalyticsErrorKind { InsufficientData, EmptySubset };

class AnalyticsError : public std::runtime_error {
 public:
  AnalyticsError(AnalyticsErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  AnalyticsErrorKind kind() const { return kind_; }

 private:
  AnalyticsErrorKind kind_;
};

std::string_view analytics_error_kind_name(AnalyticsErrorKind kind);

// Calendar month in UTC.
struct YearMonth {
  int year = 1970;
  unsigned month = 1;  // 1..12

  static YearMonth from_epoch(std::int64_t seconds);
  static std::optional<YearMonth> parse(std::string_view text);  // "YYYY-MM"
  std::string to_string() const;
  auto operator<=>(const YearMonth&) const = default;
};

// Inclusive month range; an unset bound is open.
struct AnalysisWindow {
  std::optional<YearMonth> from;
  std::optional<YearMonth> to;

  // "YYYY-MM..YYYY-MM"; either side may be empty.
  static AnalysisWindow parse(std::string_view text);
  bool contains(std::int64_t epoch_seconds) const;
  bool unbounded() const { return !from && !to; }
};

std::vector<CorpusRecord> filter_window(const std::vector<CorpusRecord>& records, const AnalysisWindow& window);

// Group names in sorted order; GroupBy::All yields the single group "all".
std::vector<std::string> group_names(const std::vector<CorpusRecord>& records, GroupBy by);

// --- detection rates -------------------------------------------------------

struct RateRow {
  std::string group;
  Emotion emotion = Emotion::Anger;
  double rate = 0.0;
  std::size_t n = 0;
};

// Rows ordered by group, then canonical emotion order. Empty groups are omitted.
std::vector<RateRow> detection_rates(const std::vector<CorpusRecord>& records, GroupBy by);

// --- correlation -----------------------------------------------------------

// Additive sufficient statistics of the eight indicator columns: per-column
// positive counts and pairwise co-occurrence counts. Shards merge with +=.
struct CooccurrenceCounts {
  std::size_t n = 0;
  std::array<std::array<std::size_t, kEmotionCount>, kEmotionCount> both{};  // both[i][i] = positives of i

  void add(const EmotionLabelSet& labels);
  CooccurrenceCounts& operator+=(const CooccurrenceCounts& o);
  bool operator==(const CooccurrenceCounts&) const = default;
};

struct CorrelationMatrix {
  // Unset where either column is constant.
  std::array<std::array<std::optional<double>, kEmotionCount>, kEmotionCount> rho{};
  std::array<std::array<std::optional<double>, kEmotionCount>, kEmotionCount> p_value{};
  std::size_t n = 0;
};

// Spearman rho with average-rank ties over binary columns, which reduces to the
// phi coefficient of the 2x2 table. Two-sided p-value from Student's t with
// n-2 degrees of freedom. Throws AnalyticsError(InsufficientData) for n < 3.
CorrelationMatrix correlation_from_counts(const CooccurrenceCounts& counts);
CorrelationMatrix spearman_matrix(const std::vector<CorpusRecord>& records);

// Two-sided p-value of a correlation coefficient under the t approximation.
double correlation_p_value(double rho, std::size_t n);

// --- score distributions ---------------------------------------------------

// Bins for scores 0..13; the top bin stays empty under the default weights.
inline constexpr std::size_t kHistogramBins = 14;

struct DistributionSummary {
  std::string group;
  std::array<std::size_t, kHistogramBins> histogram{};
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  int min = 0;
  int max = 0;
  int threshold = 7;
  double pct_at_threshold = 0.0;  // pct_at_or_above(threshold)

  double pct_at_or_above(int t) const;
};

// Quantile by linear interpolation between order statistics at (n-1)p;
// the median of an even-length sample is the mean of the middle two.
double quantile_sorted(const std::vector<int>& sorted, double p);

std::vector<DistributionSummary> score_distribution(const std::vector<CorpusRecord>& records, GroupBy by,
                                                    int threshold);

// --- high-risk subset ------------------------------------------------------

struct ThresholdRule {
  enum class Op { AtLeast, Above };
  Op op = Op::AtLeast;
  int value = 7;

  bool passes(int score) const { return op == Op::AtLeast ? score >= value : score > value; }
  std::string name() const;  // "ge7" / "gt7"
  static std::optional<ThresholdRule> parse(std::string_view text);
};

struct RiskDeltaRow {
  Emotion emotion = Emotion::Anger;
  double rate_all = 0.0;
  double rate_high_risk = 0.0;
  double delta = 0.0;
};

struct HighRiskComparison {
  std::vector<RiskDeltaRow> rows;
  std::size_t n_all = 0;
  std::size_t n_high_risk = 0;
};

// Throws AnalyticsError(EmptySubset) when no record passes the rule.
HighRiskComparison high_risk_comparison(const std::vector<CorpusRecord>& records, const ThresholdRule& rule);

// --- monthly trend ---------------------------------------------------------

struct MonthlyPoint {
  YearMonth month;
  double mean_score = 0.0;
  std::size_t n = 0;
};

struct MonthlySeries {
  std::string group;
  std::vector<MonthlyPoint> points;  // strictly increasing months, n >= 1
};

std::vector<MonthlySeries> monthly_trend(const std::vector<CorpusRecord>& records, GroupBy by);

}  // namespace moodscan
