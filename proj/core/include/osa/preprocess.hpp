#pragma once

#include "osa/record_io.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace osa {

struct DenoiseConfig {
  std::size_t levels{7};
  bool detrend{true};
  // Multiplier on the universal threshold for the finest detail band;
  // 0 disables shrinkage (the transform is then linear).
  double threshold_scale{1.0};
};

// Integer-factor decimation with a windowed-sinc anti-alias filter.
// Throws InvalidArgument when fs/target_fs is not a positive integer; the
// caller should keep the native rate instead of resampling fractionally.
std::vector<double> downsample_ecg(std::span<const double> ecg, double fs, double target_fs);

// D4 wavelet de-trending and denoising. The level-`levels` approximation is
// zeroed when detrending; the finest detail band is soft-thresholded at
// scale * sigma * sqrt(2 ln n), sigma = MAD / 0.6745. Output length equals
// input length.
std::vector<double> wavelet_denoise(std::span<const double> signal, const DenoiseConfig& cfg = {});

// Per-second artifact flags: SpO2 < 50 % or a jump of more than 40 points
// between consecutive samples (both samples of the jump are flagged).
std::vector<bool> spo2_artifact_mask(std::span<const double> spo2);

// Copy of `record` with the artifact flags OR-ed into excluded_mask.
SignalRecord reject_spo2_artifacts(const SignalRecord& record);

}  // namespace osa
