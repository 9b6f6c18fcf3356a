#pragma once

// Independent reference implementations used by the unit and acceptance
// suites. They restate the formulas directly, favouring obviousness over
// speed, and share no code with the library.

#include "osa/classify.hpp"
#include "osa/combine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

namespace osa::oracle {

// ---- tachogram formulas ----

struct RrFormulas {
  double nn50_v1{0.0}, nn50_v2{0.0}, pnn50_v1{0.0}, pnn50_v2{0.0};
  double s_rr{0.0}, s_dsd{0.0}, rmssd{0.0};
  std::array<double, 4> r{};
  double nep{0.0};
};

inline RrFormulas rr_formulas(std::span<const double> rr) {
  RrFormulas f;
  const std::size_t m = rr.size();
  const double mm = static_cast<double>(m);
  double mean = 0.0;
  for (double v : rr) mean += v;
  mean /= mm;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (rr[i] - rr[i + 1] - 50.0 >= 0.0) f.nn50_v1 += 1.0;
    if (rr[i + 1] - rr[i] - 50.0 >= 0.0) f.nn50_v2 += 1.0;
  }
  f.pnn50_v1 = f.nn50_v1 / mm;
  f.pnn50_v2 = f.nn50_v2 / mm;
  double ss = 0.0;
  for (double v : rr) ss += (v - mean) * (v - mean);
  f.s_rr = std::sqrt(ss / (mm - 1.0));
  std::vector<double> rd;
  for (std::size_t i = 0; i + 1 < m; ++i) rd.push_back(rr[i + 1] - rr[i]);
  double rd_mean = 0.0;
  for (double d : rd) rd_mean += d;
  rd_mean /= static_cast<double>(rd.size());
  double dss = 0.0, dsq = 0.0;
  for (double d : rd) {
    dss += (d - rd_mean) * (d - rd_mean);
    dsq += d * d;
  }
  f.s_dsd = std::sqrt(dss / (mm - 1.0));
  f.rmssd = std::sqrt(dsq / (mm - 1.0));
  for (std::size_t k = 1; k <= 4; ++k) {
    double num = 0.0;
    for (std::size_t i = 0; i + k < m; ++i) num += (rr[i] - mean) * (rr[i + k] - mean);
    f.r[k - 1] = ss > 0.0 ? num / ss : 0.0;
  }
  double ext = 0.0;
  for (std::size_t i = 1; i + 1 < m; ++i) {
    if (!((rr[i] - rr[i - 1]) * (rr[i + 1] - rr[i]) >= 0.0)) ext += 1.0;
  }
  f.nep = ext / (mm - 2.0);
  return f;
}

// ---- desaturation counts ----

struct DesatCounts {
  std::array<double, 3> odi{};
  std::array<std::array<double, 3>, 3> grid{};
  std::array<double, 2> odis{};
  std::array<double, 5> tsa{};
};

// Number of runs with value <= level that last at least min_len samples,
// found by locating every run start and walking to its end.
inline double count_runs(std::span<const double> x, double level, std::size_t min_len) {
  double count = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool starts = x[i] <= level && (i == 0 || x[i - 1] > level);
    if (!starts) continue;
    std::size_t j = i;
    while (j < x.size() && x[j] <= level) ++j;
    if (j - i >= min_len) count += 1.0;
  }
  return count;
}

inline DesatCounts desat_counts(std::span<const double> x, double baseline) {
  DesatCounts d;
  const int depths[3] = {2, 3, 4};
  const int grid_depths[3] = {2, 3, 5};
  const std::size_t grid_secs[3] = {1, 3, 5};
  const int odis_depths[2] = {4, 5};
  const int tsa_levels[5] = {70, 80, 85, 90, 95};
  for (int i = 0; i < 3; ++i) d.odi[i] = count_runs(x, baseline - depths[i], 1);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) d.grid[i][j] = count_runs(x, baseline - grid_depths[i], grid_secs[j]);
  }
  for (int i = 0; i < 2; ++i) d.odis[i] = count_runs(x, baseline - odis_depths[i], 1);
  for (int i = 0; i < 5; ++i) {
    double below = 0.0;
    for (double v : x) below += v < tsa_levels[i] ? 1.0 : 0.0;
    d.tsa[i] = below / static_cast<double>(x.size());
  }
  return d;
}

// ---- spectra ----

// Classical periodogram (2/N)|sum (y - mean) e^{-i w t}|^2 at frequency f.
inline double classical_periodogram(std::span<const double> t, std::span<const double> y, double f) {
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t i = 0; i < y.size(); ++i) {
    acc += (y[i] - mean) * std::polar(1.0, -2.0 * std::numbers::pi * f * t[i]);
  }
  return 2.0 * std::norm(acc) / static_cast<double>(y.size());
}

inline double sample_variance(std::span<const double> y) {
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(y.size() - 1);
}

// D4 analysis by direct convolution with the Daubechies scaling filter h
// and its quadrature mirror g on a half-sample symmetric padding of two
// samples per side. Returns the detail bands finest first.
inline std::vector<std::vector<double>> d4_filter_bank(std::span<const double> x, std::size_t levels) {
  const double s3 = std::sqrt(3.0);
  const double norm = 4.0 * std::sqrt(2.0);
  const double h[4] = {(1 + s3) / norm, (3 + s3) / norm, (3 - s3) / norm, (1 - s3) / norm};
  const double g[4] = {h[3], -h[2], h[1], -h[0]};
  std::vector<std::vector<double>> bands;
  std::vector<double> a(x.begin(), x.end());
  for (std::size_t lvl = 0; lvl < levels && a.size() >= 2; ++lvl) {
    const std::size_t n = a.size();
    std::vector<double> y{a[1], a[0]};
    y.insert(y.end(), a.begin(), a.end());
    y.push_back(a[n - 1]);
    y.push_back(a[n - 2]);
    const std::size_t out_n = y.size() / 2 - 1;
    std::vector<double> approx(out_n), detail(out_n);
    for (std::size_t m = 0; m < out_n; ++m) {
      double lo = 0.0, hi = 0.0;
      for (std::size_t k = 0; k < 4; ++k) {
        lo += h[k] * y[2 * m + k];
        hi += g[k] * y[2 * m + k];
      }
      approx[m] = lo;
      detail[m] = hi;
    }
    bands.push_back(std::move(detail));
    a = std::move(approx);
  }
  return bands;
}

// ---- fusion ----

// Hand-specified fusion: weighted class scores per member, rule-specific
// aggregation, unanimous triples keep their decision.
inline Prediction fuse(const std::array<double, 3>& p, const std::array<Quality, 3>& q, FusionRule rule) {
  std::array<bool, 3> dec{};
  int votes = 0;
  for (int i = 0; i < 3; ++i) {
    dec[i] = p[i] >= 0.5;
    votes += dec[i] ? 1 : 0;
  }
  if (rule == FusionRule::majority_vote) return {votes / 3.0, votes >= 2};
  std::array<double, 3> a{}, n{};
  for (int i = 0; i < 3; ++i) {
    a[i] = q[i].sensitivity * p[i];
    n[i] = q[i].specificity * (1.0 - p[i]);
  }
  double sa = 0.0, sn = 0.0;
  bool apnoeic = false;
  if (rule == FusionRule::avg_prob) {
    sa = (a[0] + a[1] + a[2]) / 3.0;
    sn = (n[0] + n[1] + n[2]) / 3.0;
    apnoeic = !(sa < sn);
  } else if (rule == FusionRule::prod_prob) {
    const auto fl = [](double v) { return v < 1e-6 ? 1e-6 : v; };
    sa = fl(a[0]) * fl(a[1]) * fl(a[2]);
    sn = fl(n[0]) * fl(n[1]) * fl(n[2]);
    apnoeic = sa == sn ? !(a[0] * a[1] * a[2] < n[0] * n[1] * n[2]) : sa > sn;
  } else {
    // Largest single weighted score; scan order member 0 apnoeic, member 0
    // normal, member 1 apnoeic, ... and the first maximum wins.
    std::vector<std::pair<double, bool>> seq;
    for (int i = 0; i < 3; ++i) {
      seq.push_back({a[i], true});
      seq.push_back({n[i], false});
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < seq.size(); ++k) {
      if (seq[k].first > seq[best].first) best = k;
    }
    apnoeic = seq[best].second;
    sa = std::max({a[0], a[1], a[2]});
    sn = std::max({n[0], n[1], n[2]});
  }
  if (votes == 3) apnoeic = true;
  if (votes == 0) apnoeic = false;
  double prob = sa + sn > 0.0 ? sa / (sa + sn) : 0.5;
  if (!apnoeic && prob >= 0.5) prob = std::nextafter(0.5, 0.0);
  if (apnoeic && prob < 0.5) prob = 0.5;
  return {prob, apnoeic};
}

// ---- mutual information ----

inline double entropy_bits(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

// Analytic I(X;Y) of a joint table (rows X, columns Y).
inline double analytic_mi(const std::vector<std::vector<double>>& joint) {
  std::vector<double> px(joint.size(), 0.0), py(joint.front().size(), 0.0);
  for (std::size_t i = 0; i < joint.size(); ++i) {
    for (std::size_t j = 0; j < joint[i].size(); ++j) {
      px[i] += joint[i][j];
      py[j] += joint[i][j];
    }
  }
  double mi = 0.0;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    for (std::size_t j = 0; j < joint[i].size(); ++j) {
      if (joint[i][j] > 0.0) mi += joint[i][j] * std::log2(joint[i][j] / (px[i] * py[j]));
    }
  }
  return mi;
}

}  // namespace osa::oracle
