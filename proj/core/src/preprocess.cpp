#include "osa/preprocess.hpp"

#include "osa/error.hpp"
#include "osa/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace osa {

std::vector<double> downsample_ecg(std::span<const double> ecg, double fs, double target_fs) {
  if (!(fs > 0.0) || !(target_fs > 0.0)) throw InvalidArgument("sampling rates must be positive");
  const double ratio = fs / target_fs;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9) {
    throw InvalidArgument("cannot resample " + std::to_string(fs) + " Hz to " +
                          std::to_string(target_fs) +
                          " Hz: only integer decimation is supported, keep the native rate");
  }
  const auto factor = static_cast<std::size_t>(rounded);
  if (factor == 1) return {ecg.begin(), ecg.end()};

  // Hamming-windowed sinc, cutoff at 90 % of the new Nyquist frequency.
  const std::size_t half = 8 * factor;
  const double cutoff = 0.9 * 0.5 / static_cast<double>(factor);  // cycles/sample
  std::vector<double> taps(2 * half + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const double m = static_cast<double>(i) - static_cast<double>(half);
    const double sinc = m == 0.0 ? 2.0 * cutoff
                                 : std::sin(2.0 * std::numbers::pi * cutoff * m) / (std::numbers::pi * m);
    const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                            static_cast<double>(taps.size() - 1));
    taps[i] = sinc * w;
    sum += taps[i];
  }
  for (auto& t : taps) t /= sum;

  const std::size_t n = ecg.size();
  const std::size_t out_n = n / factor;
  std::vector<double> out(out_n);
  const auto at = [&](long long i) {
    // Half-sample symmetric boundary.
    const auto len = static_cast<long long>(n);
    while (i < 0 || i >= len) i = i < 0 ? -i - 1 : 2 * len - i - 1;
    return ecg[static_cast<std::size_t>(i)];
  };
  for (std::size_t k = 0; k < out_n; ++k) {
    const auto centre = static_cast<long long>(k * factor);
    double acc = 0.0;
    for (std::size_t i = 0; i < taps.size(); ++i) {
      acc += taps[i] * at(centre + static_cast<long long>(i) - static_cast<long long>(half));
    }
    out[k] = acc;
  }
  return out;
}

namespace {

double median_abs(std::vector<double> v) {
  for (auto& x : v) x = std::abs(x);
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<double> wavelet_denoise(std::span<const double> signal, const DenoiseConfig& cfg) {
  if (cfg.levels < 1) throw InvalidArgument("wavelet levels must be >= 1");
  if (signal.size() < 4) throw InvalidArgument("signal shorter than the D4 filter support");
  for (double v : signal) {
    if (!std::isfinite(v)) throw InvalidArgument("wavelet_denoise: non-finite sample");
  }
  const auto ext = wavelet::symmetric_periodic_extension(signal, cfg.levels);
  auto dec = wavelet::forward_periodic(ext, cfg.levels);
  if (cfg.detrend) std::fill(dec.approx.begin(), dec.approx.end(), 0.0);
  if (cfg.threshold_scale > 0.0) {
    auto& finest = dec.details.front();
    const double sigma = median_abs(finest) / 0.6745;
    const double lambda =
        cfg.threshold_scale * sigma * std::sqrt(2.0 * std::log(static_cast<double>(signal.size())));
    for (auto& c : finest) {
      const double mag = std::abs(c) - lambda;
      c = mag > 0.0 ? std::copysign(mag, c) : 0.0;
    }
  }
  auto rec = wavelet::inverse_periodic(dec);
  rec.resize(signal.size());
  return rec;
}

std::vector<bool> spo2_artifact_mask(std::span<const double> spo2) {
  std::vector<bool> mask(spo2.size(), false);
  for (std::size_t i = 0; i < spo2.size(); ++i) {
    if (!std::isfinite(spo2[i]) || spo2[i] < 50.0) mask[i] = true;
    if (i > 0 && std::abs(spo2[i] - spo2[i - 1]) > 40.0) {
      mask[i - 1] = true;
      mask[i] = true;
    }
  }
  return mask;
}

SignalRecord reject_spo2_artifacts(const SignalRecord& record) {
  SignalRecord out = record;
  const auto mask = spo2_artifact_mask(record.spo2);
  out.excluded_mask.resize(record.spo2.size(), false);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.excluded_mask[i] = true;
  }
  return out;
}

}  // namespace osa
