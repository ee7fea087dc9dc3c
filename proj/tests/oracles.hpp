#pragma once

// Independent reference implementations used only by tests. None of these
// call into the code paths they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace oracle {

// Severity weights keyed by wire name, written out independently of core.
inline int weight_of(const std::string& name) {
  if (name == "suicide_intent") return 3;
  if (name == "hopelessness" || name == "worthlessness") return 2;
  if (name == "anger" || name == "cognitive_dysfunction" || name == "emptiness" || name == "loneliness" ||
      name == "sadness") {
    return 1;
  }
  return -1000;
}

inline const std::vector<std::string>& names() {
  static const std::vector<std::string> n = {"anger",      "cognitive_dysfunction", "emptiness",      "hopelessness",
                                             "loneliness", "sadness",               "suicide_intent", "worthlessness"};
  return n;
}

// Sum of weights over the set bits of an 8-bit mask (bit i = names()[i]).
inline int weight_sum(std::uint8_t mask) {
  int s = 0;
  for (int i = 0; i < 8; ++i) {
    if ((mask >> i) & 1) s += weight_of(names()[static_cast<std::size_t>(i)]);
  }
  return s;
}

struct Metrics {
  double micro_p = 0, micro_r = 0, micro_f1 = 0;
  double macro_p = 0, macro_r = 0, macro_f1 = 0;
};

inline double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }
inline double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

// Brute force over every (post, class) decision. gold[p][c], pred[p][c].
inline Metrics brute_force_metrics(const std::vector<std::vector<bool>>& gold,
                                   const std::vector<std::vector<bool>>& pred, std::size_t classes) {
  Metrics m;
  double all_hit = 0, all_pred = 0, all_gold = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    double hit = 0, predicted = 0, actual = 0;
    for (std::size_t p = 0; p < gold.size(); ++p) {
      if (pred[p][c]) predicted += 1;
      if (gold[p][c]) actual += 1;
      if (pred[p][c] && gold[p][c]) hit += 1;
    }
    const double prec = ratio(hit, predicted);
    const double rec = ratio(hit, actual);
    m.macro_p += prec / static_cast<double>(classes);
    m.macro_r += rec / static_cast<double>(classes);
    m.macro_f1 += harmonic(prec, rec) / static_cast<double>(classes);
    all_hit += hit;
    all_pred += predicted;
    all_gold += actual;
  }
  m.micro_p = ratio(all_hit, all_pred);
  m.micro_r = ratio(all_hit, all_gold);
  m.micro_f1 = harmonic(m.micro_p, m.micro_r);
  return m;
}

// Fractional ranks, O(n^2): rank = 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double smaller = 0, equal = 0;
    for (double x : v) {
      if (x < v[i]) smaller += 1;
      if (x == v[i]) equal += 1;
    }
    r[i] = 1.0 + smaller + (equal - 1.0) / 2.0;
  }
  return r;
}

// Two-pass Pearson; NaN when either side has zero variance.
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (a.empty() || constant(a) || constant(b)) return std::nan("");
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nan("");
  return sab / std::sqrt(saa * sbb);
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(average_ranks(a), average_ranks(b));
}

}  // namespace oracle
