#pragma once

#include "osa/qrs.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace osa {

inline constexpr std::array<int, 4> kRrLags{1, 2, 3, 4};
inline constexpr std::array<double, 4> kAllanScalesS{1.0, 2.0, 5.0, 10.0};
inline constexpr std::size_t kMaxDwtLevels = 18;

struct EcgTimeFeatures {
  double mid_time_s{0.0};
  double length_m{0.0};
  double mean_rr_ms{0.0};
  double nn50_v1{0.0};
  double nn50_v2{0.0};
  double pnn50_v1{0.0};
  double pnn50_v2{0.0};
  double sdnn_ms{0.0};
  double sdsd_ms{0.0};
  double rmssd_ms{0.0};
  std::array<double, 4> r{};
  std::array<double, 4> mi{};
  std::array<double, 4> allan{};
  double nep{0.0};
  double edr_mean{0.0};
  double edr_std{0.0};
  bool low_quality{false};
};

struct FrameWindow {
  double start_s{0.0};
  double length_s{60.0};
};

// Times in `t` are absolute; `window` locates the frame they belong to.
// Fewer than 5 intervals sets low_quality but still evaluates every formula.
EcgTimeFeatures ecg_time_features(const RRTachogram& t, const EDRSeries& edr,
                                  const FrameWindow& window = {});

struct SpectralConfig {
  std::size_t grid_size{64};
  double f_min_hz{0.04};
  double f_split_hz{0.15};
  double f_max_hz{0.4};
};

// grid_size points evenly spaced on [f_min, f_max], both ends included.
std::vector<double> frequency_grid(const SpectralConfig& cfg = {});

struct Periodogram {
  std::vector<double> power;        // normalized by twice the sample variance
  std::vector<double> false_alarm;  // 1 - (1 - exp(-power))^M, M = grid size
};

// Requires at least 4 points and positive frequencies. A zero-variance
// series gives zero power and significance 0 (false alarm 1) everywhere.
Periodogram lomb_periodogram(std::span<const double> times_s, std::span<const double> values,
                             std::span<const double> grid_hz);

struct SpectralFeatures {
  double p_lf{0.0};
  double p_hf{0.0};
  double lf_hf_ratio{0.0};
  std::vector<double> grid_samples;
  double omega_resp_hz{0.0};
  double resp_mag{0.0};
  double resp_prob{0.0};
  double omega_probmax_hz{0.0};
  double probmax{0.0};
  double probmax_mag{0.0};
  bool low_quality{false};
};

// Series with fewer than 4 points give all-zero features flagged low quality.
SpectralFeatures spectral_features(std::span<const double> times_s, std::span<const double> values,
                                   const SpectralConfig& cfg = {});
SpectralFeatures hrv_spectral_features(const RRTachogram& t, const SpectralConfig& cfg = {});
SpectralFeatures edr_spectral_features(const EDRSeries& edr, const SpectralConfig& cfg = {});

struct WaveletVariances {
  std::array<double, kMaxDwtLevels> level{};  // level[k-1] for detail level k
  std::size_t levels_used{0};
  double lf_aggregate{0.0};  // levels 5..17
  double hf_aggregate{0.0};  // levels 2..4
  bool low_quality{false};
};

// Decomposes to min(max_levels, floor(log2 n) - 1) levels; deeper levels stay 0.
WaveletVariances dwt_detail_variances(std::span<const double> series,
                                      std::size_t max_levels = kMaxDwtLevels);

struct EcgFeatures {
  EcgTimeFeatures time;
  SpectralFeatures rr_spectrum;
  SpectralFeatures edr_spectrum;
  WaveletVariances rr_dwt;
  WaveletVariances edr_dwt;

  bool low_quality() const {
    return time.low_quality || rr_spectrum.low_quality || edr_spectrum.low_quality ||
           rr_dwt.low_quality || edr_dwt.low_quality;
  }
};

EcgFeatures ecg_features(const RRTachogram& t, const EDRSeries& edr, const FrameWindow& window = {},
                         const SpectralConfig& cfg = {});

// Column names in emission order (e.g. "NN50v2", "P_rr_13", "S2_D4_rr", "LF_edr").
std::vector<std::string> ecg_feature_names(const SpectralConfig& cfg = {});
std::vector<double> flatten(const EcgFeatures& f);

}  // namespace osa
