#include "osa/features_ecg.hpp"
#include "osa/features_spo2.hpp"
#include "osa/rng.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

namespace {

osa::RRTachogram random_tachogram(std::size_t beats) {
  osa::Rng rng(1);
  osa::RRTachogram t;
  double now = 0.0;
  for (std::size_t i = 0; i < beats; ++i) {
    const double rr = 800.0 + 60.0 * rng.normal();
    now += rr / 1000.0;
    t.times_s.push_back(now);
    t.rr_ms.push_back(rr);
  }
  return t;
}

void BM_LombPeriodogram(benchmark::State& state) {
  const auto t = random_tachogram(static_cast<std::size_t>(state.range(0)));
  const auto grid = osa::frequency_grid();
  for (auto _ : state) benchmark::DoNotOptimize(osa::lomb_periodogram(t.times_s, t.rr_ms, grid));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LombPeriodogram)->RangeMultiplier(2)->Range(32, 512)->Complexity();

void BM_EcgFrameFeatures(benchmark::State& state) {
  const auto t = random_tachogram(75);
  osa::EDRSeries edr;
  for (std::size_t i = 0; i < t.times_s.size(); ++i) {
    edr.sample_times_s.push_back(t.times_s[i]);
    edr.values.push_back(std::sin(2.0 * std::numbers::pi * 0.25 * t.times_s[i]));
  }
  for (auto _ : state) benchmark::DoNotOptimize(osa::ecg_features(t, edr));
}
BENCHMARK(BM_EcgFrameFeatures);

void BM_Spo2FrameFeatures(benchmark::State& state) {
  osa::Rng rng(2);
  std::vector<double> f(60);
  for (auto& v : f) v = std::round(95.0 + 1.5 * rng.normal());
  for (auto _ : state) benchmark::DoNotOptimize(osa::spo2_features(f, 96.0));
}
BENCHMARK(BM_Spo2FrameFeatures);

}  // namespace
