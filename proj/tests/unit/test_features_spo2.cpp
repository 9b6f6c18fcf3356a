#include "osa/error.hpp"
#include "osa/features_spo2.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace osa {
namespace {

std::vector<double> random_frame(Rng& rng, double base = 96.0) {
  std::vector<double> f(60);
  double level = base;
  for (auto& v : f) {
    level += rng.below(6) == 0 ? -3.0 * rng.uniform() : 0.5 * (base - level);
    v = std::round(level + 0.6 * rng.normal());
  }
  return f;
}

TEST(Spo2Basic, ConstantFrame) {
  const auto s = spo2_basic_stats(std::vector<double>(60, 97.0));
  EXPECT_EQ(s.min, 97.0);
  EXPECT_EQ(s.mean, 97.0);
  EXPECT_EQ(s.std, 0.0);
  EXPECT_EQ(s.mean_crossings, 0.0);
  EXPECT_EQ(s.slope, 0.0);
  EXPECT_EQ(s.intercept, 97.0);
}

TEST(Spo2Basic, ExactRamp) {
  std::vector<double> f(61);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 98.0 - 0.1 * static_cast<double>(i);
  const auto s = spo2_basic_stats(f);
  EXPECT_NEAR(s.slope, 0.1, 1e-12);
  EXPECT_NEAR(s.intercept, 98.0, 1e-10);
}

TEST(Spo2Basic, FitMatchesNormalEquations) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto f = random_frame(rng);
    double st = 0, stt = 0, sy = 0, sty = 0;
    const double n = static_cast<double>(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double t = static_cast<double>(i);
      st += t;
      stt += t * t;
      sy += f[i];
      sty += t * f[i];
    }
    const double det = n * stt - st * st;
    const double slope = (n * sty - st * sy) / det;
    const double icpt = (stt * sy - st * sty) / det;
    const auto s = spo2_basic_stats(f);
    EXPECT_NEAR(s.slope, std::abs(slope), 1e-9 * std::max(1.0, std::abs(slope)));
    EXPECT_NEAR(s.intercept, icpt, 1e-9 * std::abs(icpt));
  }
}

TEST(Spo2Basic, CrossingsIgnoreSamplesAtTheMean) {
  // Mean 2: 1, 2, 3 is one crossing; the sample at the mean does not add one.
  const auto s = spo2_basic_stats(std::vector<double>{1, 2, 3, 2, 1, 3});
  EXPECT_EQ(s.mean_crossings, 3.0);
}

TEST(Spo2Deps, ConstantFrameUsesZeroConvention) {
  const auto d = spo2_sequential_deps(std::vector<double>(60, 95.0));
  for (double r : d.r) EXPECT_EQ(r, 0.0);
  for (double m : d.mi) EXPECT_EQ(m, 0.0);
}

TEST(Spo2Deps, AlternationSigns) {
  std::vector<double> f(60);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = i % 2 == 0 ? 95.0 : 97.0;
  const auto d = spo2_sequential_deps(f);
  EXPECT_LT(d.r[0], 0.0);
  EXPECT_GT(d.r[1], 0.0);
}

TEST(Spo2Deps, ShuffledFrameHasSmallMutualInformation) {
  Rng rng(12);
  // Plug-in bias bound for a 4x4 table on ~59 pairs is (cells-1)/(2 n ln 2) ~ 0.18 bits;
  // the mean over many shuffles must sit well inside twice that.
  double sum = 0.0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    auto f = testing::uniform_vector(rng, 60, 90.0, 99.0);
    sum += spo2_sequential_deps(f).mi[0];
  }
  EXPECT_LT(sum / trials, 0.36);
}

TEST(Spo2Complexity, ConstantFrame) {
  const auto c = spo2_complexity(std::vector<double>(60, 96.0));
  EXPECT_EQ(c.apen, 0.0);
  EXPECT_EQ(c.sampen, 0.0);
  for (double v : c.ctm) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(c.delta, 0.0);
}

TEST(Spo2Complexity, CtmIsMonotoneInRadius) {
  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    const auto c = spo2_complexity(random_frame(rng));
    for (std::size_t i = 1; i < c.ctm.size(); ++i) EXPECT_LE(c.ctm[i - 1], c.ctm[i]);
  }
}

TEST(Spo2Complexity, PeriodicBinarizationIsLessComplexThanShuffles) {
  std::vector<double> f(60);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = i % 2 == 0 ? 94.0 : 97.0;
  const double periodic = spo2_complexity(f).lzc;
  Rng rng(14);
  std::vector<double> shuffled;
  for (int t = 0; t < 400; ++t) {
    auto g = f;
    rng.shuffle(std::span<double>(g));
    shuffled.push_back(spo2_complexity(g).lzc);
  }
  std::sort(shuffled.begin(), shuffled.end());
  EXPECT_LT(periodic, shuffled[shuffled.size() / 20]);
}

TEST(Spo2Complexity, LempelZivPhraseCounts) {
  // Kaspar-Schuster example: 0001101001000101 parses as 0|001|10|100|1000|101.
  const std::string s = "0001101001000101";
  std::vector<unsigned char> bits;
  for (char ch : s) bits.push_back(ch == '1' ? 1 : 0);
  EXPECT_EQ(lempel_ziv_phrases(bits), 6u);
  EXPECT_EQ(lempel_ziv_phrases(std::vector<unsigned char>(10, 0)), 2u);
}

TEST(Spo2Complexity, EntropiesAgreeWithDirectCounts) {
  // Alternating series, r = 0.5, m = 1; phi is the self-match-inclusive
  // template count average.
  const std::vector<double> x{1, 2, 1, 2, 1, 2, 1, 2};
  const auto phi = [&](int m) {
    const int count = static_cast<int>(x.size()) - m + 1;
    double acc = 0.0;
    for (int i = 0; i < count; ++i) {
      int c = 0;
      for (int j = 0; j < count; ++j) {
        bool ok = true;
        for (int k = 0; k < m; ++k) ok = ok && std::abs(x[i + k] - x[j + k]) <= 0.5;
        c += ok ? 1 : 0;
      }
      acc += std::log(static_cast<double>(c) / count);
    }
    return acc / count;
  };
  EXPECT_NEAR(approximate_entropy(x, 1, 0.5), phi(1) - phi(2), 1e-12);
  // SampEn: among pairs matching at length 1, every pair also matches at length 2.
  EXPECT_NEAR(sample_entropy(x, 1, 0.5), 0.0, 1e-12);
}

TEST(Spo2Baseline, ModeRules) {
  EXPECT_EQ(spo2_mode(std::vector<double>(400, 96.0)), 96.0);
  std::vector<double> v(600, 97.0);
  for (std::size_t i = 0; i < 60; ++i) v[i * 10] = 90.0;
  EXPECT_EQ(spo2_mode(v), 97.0);
  EXPECT_EQ(spo2_mode(std::vector<double>{95, 95, 96, 96}), 95.0);
}

TEST(Spo2Baseline, BimodalMatchesHistogramArgmax) {
  Rng rng(15);
  for (int t = 0; t < 50; ++t) {
    SignalRecord r;
    r.spo2_spec = {"spo2", 1.0, "%"};
    for (int i = 0; i < 900; ++i) {
      r.spo2.push_back(rng.below(2) == 0 ? 93.0 + 1.2 * rng.normal() : 97.0 + 0.8 * rng.normal());
    }
    r.excluded_mask.assign(r.spo2.size(), false);
    std::map<long long, int> hist;
    for (double v : r.spo2) ++hist[std::llround(v)];
    long long best = hist.begin()->first;
    for (const auto& [k, c] : hist) {
      if (c > hist[best]) best = k;
    }
    EXPECT_EQ(compute_baseline(r), static_cast<double>(best));
  }
}

TEST(Spo2Baseline, NeedsFiveMinutes) {
  SignalRecord r;
  r.spo2_spec = {"spo2", 1.0, "%"};
  r.spo2.assign(400, 96.0);
  r.excluded_mask.assign(400, false);
  for (std::size_t i = 0; i < 150; ++i) r.excluded_mask[i] = true;
  EXPECT_THROW(compute_baseline(r), InvalidArgument);
}

TEST(Spo2Desat, FrameAtBaseline) {
  const auto d = spo2_desaturation(std::vector<double>(60, 96.0), 96.0);
  for (double v : d.odi) EXPECT_EQ(v, 0.0);
  for (const auto& row : d.odi_grid) {
    for (double v : row) EXPECT_EQ(v, 0.0);
  }
  EXPECT_EQ(d.tsa[0], 0.0);
  EXPECT_EQ(d.tsa[3], 0.0);
}

TEST(Spo2Desat, TwelveSecondDip) {
  std::vector<double> f(60, 97.0);
  for (std::size_t i = 20; i < 32; ++i) f[i] = 92.0;
  const auto d = spo2_desaturation(f, 97.0);
  EXPECT_EQ(d.odi, (std::array<double, 3>{1, 1, 1}));
  for (double v : d.odi_grid[2]) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(d.odis[0], 1.0);
  EXPECT_EQ(d.odis[1], 1.0);
  EXPECT_DOUBLE_EQ(d.tsa[4], 12.0 / 60.0);
}

TEST(Spo2Desat, TwoShortDips) {
  std::vector<double> f(60, 97.0);
  for (std::size_t i : {10u, 11u, 12u, 40u, 41u, 42u}) f[i] = 94.0;
  const auto d = spo2_desaturation(f, 97.0);
  EXPECT_EQ(d.odi[1], 2.0);
  EXPECT_EQ(d.odi_grid[1][2], 0.0);
  EXPECT_EQ(d.odi_grid[1][1], 2.0);
}

TEST(Spo2Desat, MatchesRunEnumerationAndOrderings) {
  Rng rng(16);
  for (int t = 0; t < 300; ++t) {
    const auto f = random_frame(rng, 90.0 + 8.0 * rng.uniform());
    const double base = spo2_mode(f);
    const auto d = spo2_desaturation(f, base);
    const auto o = oracle::desat_counts(f, base);
    EXPECT_EQ(d.odi, o.odi);
    EXPECT_EQ(d.odi_grid, o.grid);
    EXPECT_EQ(d.odis, o.odis);
    EXPECT_EQ(d.tsa, o.tsa);
    for (std::size_t i = 1; i < 5; ++i) EXPECT_LE(d.tsa[i - 1], d.tsa[i]);
    // A longer minimum duration can only drop runs; a deeper threshold can
    // split one run into two, so depth carries no ordering.
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 1; j < 3; ++j) EXPECT_GE(d.odi_grid[i][j - 1], d.odi_grid[i][j]);
    }
  }
}

TEST(Spo2Features, NamesAndFlattenAgree) {
  Rng rng(17);
  const auto f = random_frame(rng);
  const auto all = spo2_features(f, 96.0);
  const auto flat = flatten(all);
  const auto& names = spo2_feature_names();
  ASSERT_EQ(flat.size(), names.size());
  EXPECT_EQ(names.size(), 42u);
  for (double v : flat) EXPECT_TRUE(std::isfinite(v));
  for (const char* n : {"tsa90", "CTM_0.5", "ODI55", "ODIS4", "r_spo2_2", "MI_spo2_4", "odi3"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
  }
}

}  // namespace
}  // namespace osa
