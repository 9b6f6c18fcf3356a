#include "osa/error.hpp"
#include "osa/features_ecg.hpp"
#include "osa/preprocess.hpp"
#include "osa/qrs.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace osa {
namespace {

std::vector<double> regular_beats(double period_s, double duration_s, double first = 0.5) {
  std::vector<double> b;
  for (double t = first; t < duration_s - 0.6; t += period_s) b.push_back(t);
  return b;
}

// Matched detections within 50 ms of a true beat.
std::pair<std::size_t, std::size_t> match(const std::vector<double>& truth, const std::vector<Beat>& found) {
  std::size_t tp = 0;
  for (double t : truth) {
    const bool hit = std::any_of(found.begin(), found.end(), [&](const Beat& b) { return std::abs(b.r_time_s - t) <= 0.05; });
    if (hit) ++tp;
  }
  return {tp, found.size()};
}

TEST(DetectQrs, RegularTrainGivesOneSecondIntervals) {
  const double fs = 250.0;
  const auto truth = regular_beats(1.0, 60.0);
  const auto det = detect_qrs(testing::gaussian_ecg(truth, fs, 60.0), fs);
  const auto [tp, found] = match(truth, det.beats);
  EXPECT_EQ(tp, truth.size());
  EXPECT_EQ(found, truth.size());
  const auto tach = make_tachogram(det.beats);
  for (double rr : tach.rr_ms) EXPECT_NEAR(rr, 1000.0, 4.0);
  EXPECT_TRUE(det.low_quality.empty());
}

TEST(DetectQrs, FlatSignalIsLowQuality) {
  const auto det = detect_qrs(std::vector<double>(250 * 30, 0.0), 250.0);
  EXPECT_TRUE(det.beats.empty());
  ASSERT_FALSE(det.low_quality.empty());
  EXPECT_GE(det.low_quality.front().second - det.low_quality.front().first, 10.0);
}

TEST(DetectQrs, InvariantToScaleAndOffset) {
  const double fs = 250.0;
  const auto truth = regular_beats(0.85, 60.0);
  const auto x = testing::gaussian_ecg(truth, fs, 60.0);
  auto half = x;
  for (auto& v : half) v *= 0.5;
  const auto a = detect_qrs(x, fs).beats;
  const auto b = detect_qrs(half, fs).beats;
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_DOUBLE_EQ(a[i].r_time_s, b[i].r_time_s);
  const auto d1 = wavelet_denoise(x);
  auto shifted = x;
  for (auto& v : shifted) v += 2.0;
  const auto d2 = wavelet_denoise(shifted);
  const auto c1 = detect_qrs(d1, fs).beats;
  const auto c2 = detect_qrs(d2, fs).beats;
  ASSERT_EQ(c1.size(), c2.size());
  for (std::size_t i = 0; i < c1.size(); ++i) EXPECT_NEAR(c1[i].r_time_s, c2[i].r_time_s, 1e-9);
}

TEST(DetectQrs, SensitivityAndPredictivityAtTenDecibels) {
  const double fs = 250.0;
  Rng rng(21);
  std::vector<double> truth;
  for (double t = 0.6; t < 299.0; t += 0.75 + 0.3 * rng.uniform()) truth.push_back(t);
  auto x = testing::gaussian_ecg(truth, fs, 300.0);
  double power = 0.0;
  for (double v : x) power += v * v;
  power /= static_cast<double>(x.size());
  const double sd = std::sqrt(power / 10.0);
  for (auto& v : x) v += sd * rng.normal();
  const auto det = detect_qrs(wavelet_denoise(x), fs);
  const auto [tp, found] = match(truth, det.beats);
  EXPECT_GE(static_cast<double>(tp) / static_cast<double>(truth.size()), 0.99);
  EXPECT_GE(static_cast<double>(tp) / static_cast<double>(found), 0.99);
}

TEST(DetectQrs, RefractoryPeriodHolds) {
  const double fs = 360.0;
  Rng rng(8);
  std::vector<double> truth;
  for (double t = 0.5; t < 119.0; t += 0.35 + 0.8 * rng.uniform()) truth.push_back(t);
  const auto det = detect_qrs(testing::gaussian_ecg(truth, fs, 120.0), fs);
  for (std::size_t i = 1; i < det.beats.size(); ++i) {
    EXPECT_GE(det.beats[i].r_time_s - det.beats[i - 1].r_time_s, 0.2 - 1e-9);
  }
}

TEST(Ectopic, RuleExample) {
  RRTachogram t{{1.0, 1.8, 3.0, 3.8}, {800, 800, 1200, 800}};
  std::vector<Beat> beats{{0.2, 1.0, -0.2}, {1.0, 1.0, -0.2}, {1.8, 1.0, -0.2}, {3.0, 1.0, -0.2}, {3.8, 1.0, -0.2}};
  const auto out = remove_ectopic(t, beats);
  EXPECT_EQ(out.rr_ms, (std::vector<double>{800, 800, 800}));
  EXPECT_EQ(out.times_s, (std::vector<double>{1.0, 1.8, 3.8}));
}

TEST(Ectopic, ConstantSeriesIsAFixedPoint) {
  std::vector<Beat> beats;
  for (int i = 0; i < 40; ++i) beats.push_back({0.9 * i, 1.2, -0.3});
  const auto t = make_tachogram(beats);
  const auto out = remove_ectopic(t, beats);
  EXPECT_EQ(out.rr_ms, t.rr_ms);
  EXPECT_EQ(out.times_s, t.times_s);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

// Direct restatement of the three rejection rules: negative R-S, R-S far
// from the median of accepted R-S values, and R-R far from the last
// accepted interval, repeated to a fixed point.
RRTachogram ectopic_oracle(const std::vector<Beat>& beats) {
  const std::size_t n = beats.size();
  std::vector<double> seed;
  for (std::size_t i = 0; i < n && seed.size() < 8; ++i) {
    if (beats[i].r_amp - beats[i].s_amp >= 0.0) seed.push_back(beats[i].r_amp - beats[i].s_amp);
  }
  std::vector<bool> ok(n, false);
  std::vector<double> acc;
  for (std::size_t i = 0; i < n; ++i) {
    const double rs = beats[i].r_amp - beats[i].s_amp;
    const double ref = acc.empty() ? median(seed) : median(acc);
    if (rs >= 0.0 && std::abs(rs - ref) <= 0.3 * ref) {
      ok[i] = true;
      acc.push_back(rs);
    }
  }
  std::vector<std::size_t> idx;  // closing beat index of each candidate interval
  for (std::size_t i = 1; i < n; ++i) {
    if (ok[i] && ok[i - 1]) idx.push_back(i);
  }
  const auto rr = [&](std::size_t i) { return (beats[i].r_time_s - beats[i - 1].r_time_s) * 1000.0; };
  for (bool changed = true; changed;) {
    std::vector<double> head;
    for (std::size_t k = 0; k < std::min<std::size_t>(8, idx.size()); ++k) head.push_back(rr(idx[k]));
    double last = median(head);
    std::vector<std::size_t> kept;
    for (std::size_t i : idx) {
      if (std::abs(rr(i) - last) <= 0.2 * last) {
        kept.push_back(i);
        last = rr(i);
      }
    }
    changed = kept.size() != idx.size();
    idx = kept;
  }
  RRTachogram out;
  for (std::size_t i : idx) {
    out.times_s.push_back(beats[i].r_time_s);
    out.rr_ms.push_back(rr(i));
  }
  return out;
}

TEST(Ectopic, MatchesStraightforwardScan) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Beat> beats;
    double t = 0.3;
    const auto n = 20 + rng.below(60);
    for (std::uint64_t i = 0; i < n; ++i) {
      const double r = 1.0 + 0.2 * rng.normal();
      const double s = rng.below(15) == 0 ? 1.5 : -0.3 + 0.05 * rng.normal();
      beats.push_back({t, r, s});
      t += rng.below(10) == 0 ? 0.4 + rng.uniform() : 0.8 + 0.1 * rng.normal();
    }
    const auto tach = make_tachogram(beats);
    const auto got = remove_ectopic(tach, beats);
    const auto want = ectopic_oracle(beats);
    ASSERT_EQ(got.rr_ms.size(), want.rr_ms.size()) << "trial " << trial;
    for (std::size_t i = 0; i < want.rr_ms.size(); ++i) {
      EXPECT_DOUBLE_EQ(got.rr_ms[i], want.rr_ms[i]);
      EXPECT_DOUBLE_EQ(got.times_s[i], want.times_s[i]);
    }
    const auto again = remove_ectopic(got, beats);
    EXPECT_EQ(again.rr_ms, got.rr_ms);
    EXPECT_LE(got.size(), tach.size());
  }
}

TEST(Edr, IdenticalComplexesGiveConstantSeries) {
  const double fs = 250.0;
  const auto truth = regular_beats(1.0, 30.0);
  const auto x = testing::gaussian_ecg(truth, fs, 30.0);
  const auto beats = detect_qrs(x, fs).beats;
  const auto edr = extract_edr_qrs_area(x, fs, beats);
  ASSERT_GT(edr.size(), 20u);
  for (double v : edr.values) EXPECT_NEAR(v, edr.values.front(), 1e-9);
  EXPECT_TRUE(extract_edr_qrs_area(x, fs, {}).values.empty());
}

TEST(Edr, AmplitudeModulationShowsInSpectrum) {
  const double fs = 250.0;
  Rng rng(9);
  std::vector<double> truth;
  for (double t = 0.5; t < 119.0; t += 0.8 + 0.05 * rng.uniform()) truth.push_back(t);
  std::vector<double> scale(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) scale[i] = 1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * 0.3 * truth[i]);
  const auto x = testing::gaussian_ecg(truth, fs, 120.0, scale);
  const auto edr = extract_edr_qrs_area(x, fs, detect_qrs(x, fs).beats);
  const auto s = edr_spectral_features(edr);
  EXPECT_NEAR(s.omega_resp_hz, 0.3, 0.01);
}

TEST(Edr, TWaveModulationShowsInSpectrum) {
  const double fs = 250.0;
  std::vector<double> truth = regular_beats(0.8, 120.0);
  auto x = testing::gaussian_ecg(truth, fs, 120.0);
  // Add an extra T-like bump whose width follows a 0.25 Hz sinusoid.
  for (double tb : truth) {
    const double w = 0.04 * (1.0 + 0.4 * std::sin(2.0 * std::numbers::pi * 0.25 * tb));
    for (long long i = static_cast<long long>((tb + 0.1) * fs); i < static_cast<long long>((tb + 0.45) * fs); ++i) {
      if (i < 0 || i >= static_cast<long long>(x.size())) continue;
      const double z = (static_cast<double>(i) / fs - tb - 0.26) / w;
      x[static_cast<std::size_t>(i)] += 0.3 * std::exp(-0.5 * z * z);
    }
  }
  const auto edr = extract_edr_t_wave(x, fs, detect_qrs(x, fs).beats);
  ASSERT_GT(edr.size(), 100u);
  EXPECT_NEAR(edr_spectral_features(edr).omega_resp_hz, 0.25, 0.01);

  std::vector<double> no_t(x.size(), 0.0);
  std::vector<Beat> fake;
  for (double tb : truth) fake.push_back({tb, 1.0, 0.0});
  EXPECT_TRUE(extract_edr_t_wave(no_t, fs, fake).values.empty());
}

}  // namespace
}  // namespace osa
