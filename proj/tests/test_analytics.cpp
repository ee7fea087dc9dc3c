#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "moodscan/analytics.hpp"
#include "oracles.hpp"

using namespace moodscan;

namespace {

CorpusRecord record(std::string id, std::string sub, std::int64_t t, EmotionLabelSet labels) {
  CorpusRecord r;
  r.post_id = std::move(id);
  r.subreddit = std::move(sub);
  r.created_utc = t;
  r.classification.post_id = r.post_id;
  r.classification.labels = labels;
  r.classification.severity = compute_severity(labels);
  r.classification.level = severity_level(r.classification.severity);
  return r;
}

CorpusRecord with_bits(int i, std::uint8_t bits, std::string sub = "s", std::int64_t t = 1704067200) {
  return record("p" + std::to_string(i), std::move(sub), t, EmotionLabelSet::from_bits(bits));
}

// Smallest label set whose severity equals score, built from the default weights.
EmotionLabelSet labels_for_score(int score) {
  for (unsigned bits = 0; bits < 256; ++bits) {
    auto s = EmotionLabelSet::from_bits(static_cast<std::uint8_t>(bits));
    if (compute_severity(s).value == score) return s;
  }
  throw std::logic_error("unreachable score");
}

std::vector<CorpusRecord> with_scores(const std::vector<int>& scores, const std::string& sub = "s") {
  std::vector<CorpusRecord> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.push_back(record("q" + std::to_string(i), sub, 1704067200, labels_for_score(scores[i])));
  }
  return out;
}

constexpr std::int64_t kDay = 86400;
constexpr std::int64_t kJan2024 = 1704067200;

}  // namespace

TEST_CASE("YearMonth and AnalysisWindow") {
  CHECK(YearMonth::from_epoch(kJan2024).to_string() == "2024-01");
  CHECK(YearMonth::from_epoch(kJan2024 - 1).to_string() == "2023-12");
  CHECK(YearMonth::from_epoch(0).to_string() == "1970-01");
  CHECK(YearMonth::parse("2025-07") == YearMonth{2025, 7});
  CHECK_FALSE(YearMonth::parse("2025-13"));
  CHECK_FALSE(YearMonth::parse("25-07"));

  const auto w = AnalysisWindow::parse("2024-01..2025-07");
  CHECK(w.contains(kJan2024));
  CHECK_FALSE(w.contains(kJan2024 - 1));
  CHECK(w.contains(1754006399));      // 2025-07-31T23:59:59Z
  CHECK_FALSE(w.contains(1754006400));  // 2025-08-01
  CHECK(AnalysisWindow::parse("..").unbounded());
  CHECK(AnalysisWindow::parse("2024-03..").contains(4102444800));
  CHECK_THROWS_AS(AnalysisWindow::parse("2024-05..2024-01"), std::invalid_argument);
  CHECK_THROWS_AS(AnalysisWindow::parse("2024-05"), std::invalid_argument);
}

TEST_CASE("detection rates") {
  std::vector<CorpusRecord> rs = {with_bits(0, 0b00100000, "a"), with_bits(1, 0b00100001, "a"),
                                  with_bits(2, 0b00000000, "b"), with_bits(3, 0b10100000, "b")};
  const auto rows = detection_rates(rs, GroupBy::Subreddit);
  REQUIRE(rows.size() == 16);
  CHECK(rows[0].group == "a");
  CHECK(rows[0].emotion == Emotion::Anger);
  CHECK(rows[0].rate == 0.5);
  CHECK(rows[5].emotion == Emotion::Sadness);
  CHECK(rows[5].rate == 1.0);
  CHECK(rows[8 + 7].rate == 0.5);
  for (const auto& r : rows) {
    CHECK(r.rate >= 0.0);
    CHECK(r.rate <= 1.0);
    CHECK(r.n == 2);
  }
  const auto all = detection_rates(rs, GroupBy::All);
  REQUIRE(all.size() == 8);
  CHECK(all[0].group == "all");
  CHECK(all[5].rate == 0.75);
  CHECK(detection_rates({}, GroupBy::All).empty());
}

TEST_CASE("spearman worked examples") {
  auto matrix_for = [](const std::vector<std::pair<bool, bool>>& cols) {
    std::vector<CorpusRecord> rs;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      EmotionLabelSet s;
      if (cols[i].first) s.set(Emotion::Anger);
      if (cols[i].second) s.set(Emotion::Sadness);
      rs.push_back(record("x" + std::to_string(i), "s", kJan2024, s));
    }
    return spearman_matrix(rs);
  };
  const std::size_t a = index_of(Emotion::Anger), s = index_of(Emotion::Sadness);

  auto m = matrix_for({{true, true}, {true, false}, {false, true}, {false, false}});
  CHECK(*m.rho[a][s] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(*m.p_value[a][s] == doctest::Approx(1.0));

  m = matrix_for({{true, true}, {false, false}, {true, true}, {false, false}});
  CHECK(*m.rho[a][s] == doctest::Approx(1.0));
  CHECK(*m.p_value[a][s] == 0.0);
  m = matrix_for({{true, false}, {false, true}, {true, false}, {false, true}});
  CHECK(*m.rho[a][s] == doctest::Approx(-1.0));

  // Constant columns are undefined, including their diagonal.
  const std::size_t e = index_of(Emotion::Emptiness);
  CHECK_FALSE(m.rho[a][e]);
  CHECK_FALSE(m.rho[e][e]);
  CHECK_FALSE(m.p_value[a][e]);
  CHECK(*m.rho[a][a] == 1.0);

  CHECK_THROWS_AS(matrix_for({{true, true}, {false, false}}), AnalyticsError);
  try {
    matrix_for({});
  } catch (const AnalyticsError& err) {
    CHECK(err.kind() == AnalyticsErrorKind::InsufficientData);
  }
}

TEST_CASE("spearman matches rank-then-Pearson oracle on random matrices") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng() % 198;
    std::vector<double> density(8);
    for (auto& d : density) d = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    std::vector<CorpusRecord> rs;
    std::vector<std::vector<double>> cols(8, std::vector<double>(n));
    CooccurrenceCounts shard_a, shard_b;
    for (std::size_t i = 0; i < n; ++i) {
      EmotionLabelSet s;
      for (std::size_t c = 0; c < 8; ++c) {
        if (std::bernoulli_distribution(density[c])(rng)) {
          s.set(kEmotions[c]);
          cols[c][i] = 1.0;
        }
      }
      rs.push_back(record("r" + std::to_string(i), "s", kJan2024, s));
      (i % 3 == 0 ? shard_a : shard_b).add(s);
    }
    const CorrelationMatrix m = spearman_matrix(rs);
    CooccurrenceCounts merged = shard_a;
    merged += shard_b;
    const CorrelationMatrix from_shards = correlation_from_counts(merged);
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 8; ++j) {
        const double ref = oracle::spearman(cols[i], cols[j]);
        if (std::isnan(ref)) {
          CHECK_FALSE(m.rho[i][j]);
          continue;
        }
        REQUIRE(m.rho[i][j]);
        CHECK(std::abs(*m.rho[i][j] - ref) < 1e-9);
        CHECK(*m.rho[i][j] == *m.rho[j][i]);
        CHECK(*m.rho[i][j] == *from_shards.rho[i][j]);
        CHECK(*m.rho[i][j] >= -1.0);
        CHECK(*m.rho[i][j] <= 1.0);
        CHECK(*m.p_value[i][j] >= 0.0);
        CHECK(*m.p_value[i][j] <= 1.0);
        if (i == j) CHECK(*m.rho[i][j] == 1.0);
      }
    }
  }
}

TEST_CASE("p-value reference points") {
  // scipy.stats.pearsonr-style t approximation, n = 30.
  CHECK(correlation_p_value(0.592156525464, 30) == doctest::Approx(5.662665863574e-04).epsilon(1e-6));
  CHECK(correlation_p_value(-0.2, 30) == doctest::Approx(2.893035287254e-01).epsilon(1e-6));
  CHECK(correlation_p_value(0.0, 30) == doctest::Approx(1.0));
}

TEST_CASE("score distributions") {
  auto d = score_distribution(with_scores({7, 7, 7}), GroupBy::All, 7);
  REQUIRE(d.size() == 1);
  CHECK(d[0].mean == 7.0);
  CHECK(d[0].median == 7.0);
  CHECK(d[0].q1 == 7.0);
  CHECK(d[0].q3 == 7.0);
  CHECK(d[0].pct_at_threshold == 1.0);
  CHECK(d[0].histogram[7] == 3);

  d = score_distribution(with_scores({0, 2, 4, 6}), GroupBy::All, 7);
  CHECK(d[0].median == 3.0);
  CHECK(d[0].mean == 3.0);
  CHECK(d[0].q1 == 1.5);
  CHECK(d[0].q3 == 4.5);
  CHECK(d[0].pct_at_threshold == 0.0);
  CHECK(d[0].min == 0);
  CHECK(d[0].max == 6);

  CHECK(quantile_sorted({5}, 0.25) == 5.0);
  CHECK(quantile_sorted({1, 2, 3, 4, 5}, 0.5) == 3.0);

  std::mt19937_64 rng(5);
  std::vector<int> scores;
  for (int i = 0; i < 500; ++i) scores.push_back(static_cast<int>(rng() % 13));
  d = score_distribution(with_scores(scores), GroupBy::All, 7);
  std::size_t total = 0;
  for (auto c : d[0].histogram) total += c;
  CHECK(total == 500);
  CHECK(d[0].histogram[13] == 0);
  double prev = 1.0;
  for (int t = 0; t <= 14; ++t) {
    const double p = d[0].pct_at_or_above(t);
    CHECK(p <= prev);
    prev = p;
  }
  CHECK(d[0].pct_at_or_above(0) == 1.0);
  CHECK(d[0].q1 <= d[0].median);
  CHECK(d[0].median <= d[0].q3);
}

TEST_CASE("threshold rules") {
  CHECK(ThresholdRule::parse("ge7")->passes(7));
  CHECK_FALSE(ThresholdRule::parse("gt7")->passes(7));
  CHECK(ThresholdRule::parse("gt7")->passes(8));
  CHECK(ThresholdRule::parse("ge10")->value == 10);
  CHECK(ThresholdRule::parse("gt7")->name() == "gt7");
  CHECK_FALSE(ThresholdRule::parse("eq7"));
  CHECK_FALSE(ThresholdRule::parse("ge"));
}

TEST_CASE("high-risk comparison") {
  const auto rs = with_scores({0, 3, 7, 8, 9, 12});
  const auto cmp = high_risk_comparison(rs, ThresholdRule{});
  CHECK(cmp.n_all == 6);
  CHECK(cmp.n_high_risk == 4);
  REQUIRE(cmp.rows.size() == 8);
  for (const auto& row : cmp.rows) CHECK(row.delta == doctest::Approx(row.rate_high_risk - row.rate_all));
  // Score 12 means all emotions, so suicide intent shows up among high-risk posts.
  const auto& si = cmp.rows[index_of(Emotion::SuicideIntent)];
  CHECK(si.rate_high_risk >= si.rate_all);

  const auto gt = high_risk_comparison(rs, ThresholdRule{ThresholdRule::Op::Above, 7});
  CHECK(gt.n_high_risk == 3);

  try {
    high_risk_comparison(with_scores({0, 1, 6}), ThresholdRule{});
    FAIL("expected EmptySubset");
  } catch (const AnalyticsError& e) {
    CHECK(e.kind() == AnalyticsErrorKind::EmptySubset);
  }
}

TEST_CASE("monthly trend") {
  std::vector<CorpusRecord> rs;
  rs.push_back(record("a", "x", kJan2024 + 40 * kDay, labels_for_score(4)));  // 2024-02
  rs.push_back(record("b", "x", kJan2024, labels_for_score(2)));              // 2024-01
  rs.push_back(record("c", "x", kJan2024 + 5 * kDay, labels_for_score(6)));   // 2024-01
  rs.push_back(record("d", "y", kJan2024 + 400 * kDay, labels_for_score(1)));
  const auto all = monthly_trend(rs, GroupBy::All);
  REQUIRE(all.size() == 1);
  REQUIRE(all[0].points.size() == 3);
  CHECK(all[0].points[0].month.to_string() == "2024-01");
  CHECK(all[0].points[0].mean_score == 4.0);
  CHECK(all[0].points[0].n == 2);
  CHECK(all[0].points[1].month.to_string() == "2024-02");
  CHECK(all[0].points[2].month.to_string() == "2025-02");
  for (std::size_t i = 1; i < all[0].points.size(); ++i) CHECK(all[0].points[i - 1].month < all[0].points[i].month);

  const auto by_sub = monthly_trend(rs, GroupBy::Subreddit);
  REQUIRE(by_sub.size() == 2);
  CHECK(by_sub[0].group == "x");
  CHECK(by_sub[1].points.size() == 1);

  const auto windowed = filter_window(rs, AnalysisWindow::parse("2024-01..2025-01"));
  CHECK(windowed.size() == 3);
  CHECK(monthly_trend({}, GroupBy::All).empty());
}
