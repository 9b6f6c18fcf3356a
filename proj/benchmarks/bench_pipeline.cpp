#include "osa/eval.hpp"
#include "osa/pipeline.hpp"
#include "osa/synth.hpp"

#include <benchmark/benchmark.h>

namespace {

osa::SignalRecord eleven_minutes(double ecg_fs) {
  osa::SynthParams p;
  p.duration_s = 660.0;
  p.ecg_fs = ecg_fs;
  p.seed = 5;
  return osa::synth_generate(p);
}

void BM_FrameFeatures(benchmark::State& state) {
  const auto rec = eleven_minutes(static_cast<double>(state.range(0)));
  const osa::PipelineConfig cfg;
  const auto frames = osa::segment_frames(rec);
  const auto& fr = frames.at(1);
  osa::FrameInput in;
  in.ecg = std::span<const double>(rec.ecg).subspan(fr.ecg_slice.begin, fr.ecg_slice.size());
  in.ecg_fs = rec.ecg_spec.sampling_rate_hz;
  in.spo2 = std::span<const double>(rec.spo2).subspan(fr.spo2_slice.begin, fr.spo2_slice.size());
  in.start_s = fr.start_s;
  in.baseline = 96.0;
  for (auto _ : state) benchmark::DoNotOptimize(osa::extract_frame_features(in, cfg));
}
BENCHMARK(BM_FrameFeatures)->Arg(100)->Arg(250)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_TenFrameEnsemble(benchmark::State& state) {
  osa::SynthParams p;
  p.duration_s = 3600.0;
  p.seed = 6;
  const osa::PipelineConfig cfg;
  const auto train = osa::extract_features(osa::synth_generate(p), cfg);
  const osa::Predictor predictor(osa::train_ensemble(osa::EnsembleSpec{}, train, {}, 1));
  const auto rec = eleven_minutes(250.0);
  for (auto _ : state) {
    osa::StreamingDetector det(predictor, cfg, rec.ecg_spec.sampling_rate_hz, rec.spo2_spec.sampling_rate_hz);
    benchmark::DoNotOptimize(det.push(rec.ecg, rec.spo2));
    benchmark::DoNotOptimize(det.finish());
  }
}
BENCHMARK(BM_TenFrameEnsemble)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
