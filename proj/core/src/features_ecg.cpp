#include "osa/features_ecg.hpp"

#include "osa/error.hpp"
#include "osa/mutual_info.hpp"
#include "osa/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace osa {

namespace {

double mean_of(std::span<const double> x) {
  return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double step(double x) { return x >= 0.0 ? 1.0 : 0.0; }

double allan_factor(std::span<const double> beat_times, const FrameWindow& w, double scale_s) {
  const auto windows = static_cast<std::size_t>(std::floor(w.length_s / scale_s + 1e-9));
  if (windows < 2) return 0.0;
  std::vector<double> counts(windows, 0.0);
  for (double t : beat_times) {
    const double rel = t - w.start_s;
    if (rel < 0.0) continue;
    const auto idx = static_cast<std::size_t>(std::floor(rel / scale_s));
    if (idx < windows) counts[idx] += 1.0;
  }
  double sq = 0.0;
  double later = 0.0;
  for (std::size_t i = 0; i + 1 < windows; ++i) {
    const double d = counts[i + 1] - counts[i];
    sq += d * d;
    later += counts[i + 1];
  }
  const double pairs = static_cast<double>(windows - 1);
  const double mean_count = later / pairs;
  if (mean_count <= 0.0) return 0.0;
  return (sq / pairs) / (2.0 * mean_count);
}

}  // namespace

EcgTimeFeatures ecg_time_features(const RRTachogram& t, const EDRSeries& edr, const FrameWindow& window) {
  EcgTimeFeatures f;
  const std::span<const double> rr = t.rr_ms;
  const std::size_t m = rr.size();
  f.low_quality = m < 5;
  f.length_m = static_cast<double>(m);
  if (m > 0) {
    double rel = 0.0;
    for (double ts : t.times_s) rel += ts - window.start_s;
    f.mid_time_s = rel / static_cast<double>(m);
    f.mean_rr_ms = mean_of(rr);
    f.sdnn_ms = std::sqrt(sample_variance(rr));
  }

  if (m >= 2) {
    std::vector<double> rd(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i) {
      rd[i] = rr[i + 1] - rr[i];
      f.nn50_v1 += step(rr[i] - rr[i + 1] - 50.0);
      f.nn50_v2 += step(rr[i + 1] - rr[i] - 50.0);
    }
    const double mm = static_cast<double>(m);
    f.pnn50_v1 = f.nn50_v1 / mm;
    f.pnn50_v2 = f.nn50_v2 / mm;
    const double rd_mean = mean_of(rd);
    double ss = 0.0;
    double sq = 0.0;
    for (double d : rd) {
      ss += (d - rd_mean) * (d - rd_mean);
      sq += d * d;
    }
    f.sdsd_ms = std::sqrt(ss / (mm - 1.0));
    f.rmssd_ms = std::sqrt(sq / (mm - 1.0));
  }

  double denom = 0.0;
  for (double v : rr) denom += (v - f.mean_rr_ms) * (v - f.mean_rr_ms);
  for (std::size_t li = 0; li < kRrLags.size(); ++li) {
    const auto k = static_cast<std::size_t>(kRrLags[li]);
    if (m <= k || denom <= 0.0) continue;
    double num = 0.0;
    for (std::size_t i = 0; i + k < m; ++i) num += (rr[i] - f.mean_rr_ms) * (rr[i + k] - f.mean_rr_ms);
    f.r[li] = num / denom;
    if (m - k >= 10) f.mi[li] = estimate_mi(rr.subspan(0, m - k), rr.subspan(k));
  }

  for (std::size_t si = 0; si < kAllanScalesS.size(); ++si) {
    f.allan[si] = allan_factor(t.times_s, window, kAllanScalesS[si]);
  }

  if (m >= 3) {
    double extrema = 0.0;
    for (std::size_t i = 1; i + 1 < m; ++i) {
      extrema += 1.0 - step((rr[i] - rr[i - 1]) * (rr[i + 1] - rr[i]));
    }
    f.nep = extrema / static_cast<double>(m - 2);
  }

  f.edr_mean = mean_of(edr.values);
  f.edr_std = std::sqrt(sample_variance(edr.values));
  return f;
}

std::vector<double> frequency_grid(const SpectralConfig& cfg) {
  if (cfg.grid_size < 2 || !(cfg.f_min_hz > 0.0) || !(cfg.f_max_hz > cfg.f_min_hz)) {
    throw InvalidArgument("frequency grid needs >= 2 points on a positive, increasing range");
  }
  std::vector<double> grid(cfg.grid_size);
  const double step_hz = (cfg.f_max_hz - cfg.f_min_hz) / static_cast<double>(cfg.grid_size - 1);
  for (std::size_t i = 0; i < cfg.grid_size; ++i) grid[i] = cfg.f_min_hz + step_hz * static_cast<double>(i);
  grid.back() = cfg.f_max_hz;
  return grid;
}

Periodogram lomb_periodogram(std::span<const double> times_s, std::span<const double> values,
                             std::span<const double> grid_hz) {
  if (times_s.size() != values.size()) throw InvalidArgument("lomb_periodogram: length mismatch");
  if (values.size() < 4) throw InvalidArgument("lomb_periodogram: at least 4 points required");
  const std::size_t n = values.size();
  const std::size_t grid_n = grid_hz.size();
  Periodogram out;
  out.power.assign(grid_n, 0.0);
  out.false_alarm.assign(grid_n, 1.0);
  const double mean = mean_of(values);
  const double var = sample_variance(values);
  if (!(var > 0.0)) return out;

  const double m_eff = static_cast<double>(grid_n);
  for (std::size_t g = 0; g < grid_n; ++g) {
    const double f = grid_hz[g];
    if (!(f > 0.0)) throw InvalidArgument("lomb_periodogram: frequencies must be positive");
    const double w = 2.0 * std::numbers::pi * f;
    double s2 = 0.0;
    double c2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s2 += std::sin(2.0 * w * times_s[i]);
      c2 += std::cos(2.0 * w * times_s[i]);
    }
    const double tau = std::atan2(s2, c2) / (2.0 * w);
    double yc = 0.0, ys = 0.0, cc = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double arg = w * (times_s[i] - tau);
      const double c = std::cos(arg);
      const double s = std::sin(arg);
      const double y = values[i] - mean;
      yc += y * c;
      ys += y * s;
      cc += c * c;
      ss += s * s;
    }
    double p = 0.0;
    if (cc > 0.0) p += yc * yc / cc;
    if (ss > 0.0) p += ys * ys / ss;
    p /= 2.0 * var;
    out.power[g] = p;
    out.false_alarm[g] = 1.0 - std::pow(1.0 - std::exp(-p), m_eff);
  }
  return out;
}

namespace {

// Integral of the linear interpolant of (x, y) over [lo, hi].
double integrate_band(std::span<const double> x, std::span<const double> y, double lo, double hi) {
  const auto value_at = [&](double q) {
    if (q <= x.front()) return y.front();
    if (q >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), q);
    const auto j = static_cast<std::size_t>(it - x.begin());
    const double frac = (q - x[j - 1]) / (x[j] - x[j - 1]);
    return y[j - 1] + frac * (y[j] - y[j - 1]);
  };
  lo = std::max(lo, x.front());
  hi = std::min(hi, x.back());
  if (!(hi > lo)) return 0.0;
  double area = 0.0;
  double px = lo;
  double py = value_at(lo);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= lo) continue;
    if (x[i] >= hi) break;
    area += 0.5 * (py + y[i]) * (x[i] - px);
    px = x[i];
    py = y[i];
  }
  area += 0.5 * (py + value_at(hi)) * (hi - px);
  return area;
}

}  // namespace

SpectralFeatures spectral_features(std::span<const double> times_s, std::span<const double> values,
                                   const SpectralConfig& cfg) {
  SpectralFeatures out;
  const auto grid = frequency_grid(cfg);
  out.grid_samples.assign(grid.size(), 0.0);
  if (values.size() < 4) {
    out.low_quality = true;
    out.omega_resp_hz = cfg.f_split_hz;
    out.omega_probmax_hz = cfg.f_min_hz;
    return out;
  }
  const auto pg = lomb_periodogram(times_s, values, grid);
  out.grid_samples = pg.power;
  out.p_lf = integrate_band(grid, pg.power, cfg.f_min_hz, cfg.f_split_hz);
  out.p_hf = integrate_band(grid, pg.power, cfg.f_split_hz, cfg.f_max_hz);
  out.lf_hf_ratio = out.p_hf > 0.0 ? out.p_lf / out.p_hf : 0.0;

  const double eps = 1e-12;
  std::size_t resp = grid.size();
  std::size_t best = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (grid[g] >= cfg.f_split_hz - eps && (resp == grid.size() || pg.power[g] > pg.power[resp])) resp = g;
    if (1.0 - pg.false_alarm[g] > 1.0 - pg.false_alarm[best]) best = g;
  }
  if (resp == grid.size()) resp = grid.size() - 1;
  out.omega_resp_hz = grid[resp];
  out.resp_mag = pg.power[resp];
  out.resp_prob = 1.0 - pg.false_alarm[resp];
  out.omega_probmax_hz = grid[best];
  out.probmax = 1.0 - pg.false_alarm[best];
  out.probmax_mag = pg.power[best];
  return out;
}

SpectralFeatures hrv_spectral_features(const RRTachogram& t, const SpectralConfig& cfg) {
  return spectral_features(t.times_s, t.rr_ms, cfg);
}

SpectralFeatures edr_spectral_features(const EDRSeries& edr, const SpectralConfig& cfg) {
  return spectral_features(edr.sample_times_s, edr.values, cfg);
}

WaveletVariances dwt_detail_variances(std::span<const double> series, std::size_t max_levels) {
  WaveletVariances out;
  max_levels = std::min(max_levels, kMaxDwtLevels);
  const std::size_t n = series.size();
  if (n < 4) {
    out.low_quality = true;
    return out;
  }
  const auto feasible = static_cast<std::size_t>(std::floor(std::log2(static_cast<double>(n)))) - 1;
  out.levels_used = std::min(max_levels, feasible);
  const auto bands = wavelet::detail_bands(series, out.levels_used);
  for (std::size_t k = 0; k < bands.size(); ++k) out.level[k] = sample_variance(bands[k]);
  for (std::size_t k = 2; k <= 4; ++k) out.hf_aggregate += out.level[k - 1];
  for (std::size_t k = 5; k <= 17; ++k) out.lf_aggregate += out.level[k - 1];
  return out;
}

EcgFeatures ecg_features(const RRTachogram& t, const EDRSeries& edr, const FrameWindow& window,
                         const SpectralConfig& cfg) {
  EcgFeatures f;
  f.time = ecg_time_features(t, edr, window);
  f.rr_spectrum = hrv_spectral_features(t, cfg);
  f.edr_spectrum = edr_spectral_features(edr, cfg);
  f.rr_dwt = dwt_detail_variances(t.rr_ms);
  f.edr_dwt = dwt_detail_variances(edr.values);
  return f;
}

namespace {

void append_spectral_names(std::vector<std::string>& v, const std::string& s, std::size_t grid) {
  v.insert(v.end(), {"LF_" + s, "HF_" + s, "LFHF_" + s});
  for (std::size_t i = 1; i <= grid; ++i) v.push_back("P_" + s + "_" + std::to_string(i));
  v.insert(v.end(), {"w_resp_" + s, "respMag_" + s, "respProb_" + s, "w_probmax_" + s, "ProbMax_" + s,
                     "ProbMaxMag_" + s});
}

void append_dwt_names(std::vector<std::string>& v, const std::string& s) {
  for (int k = 2; k <= 17; ++k) v.push_back("S2_D" + std::to_string(k) + "_" + s);
  v.insert(v.end(), {"S2_LF_" + s, "S2_HF_" + s});
}

void append_spectral(std::vector<double>& v, const SpectralFeatures& s) {
  v.insert(v.end(), {s.p_lf, s.p_hf, s.lf_hf_ratio});
  v.insert(v.end(), s.grid_samples.begin(), s.grid_samples.end());
  v.insert(v.end(), {s.omega_resp_hz, s.resp_mag, s.resp_prob, s.omega_probmax_hz, s.probmax, s.probmax_mag});
}

void append_dwt(std::vector<double>& v, const WaveletVariances& w) {
  for (std::size_t k = 2; k <= 17; ++k) v.push_back(w.level[k - 1]);
  v.insert(v.end(), {w.lf_aggregate, w.hf_aggregate});
}

}  // namespace

std::vector<std::string> ecg_feature_names(const SpectralConfig& cfg) {
  std::vector<std::string> v{"mid_time", "M",      "mean_rr", "NN50v1", "NN50v2",
                             "pNN50v1",  "pNN50v2", "S_rr",    "S_DSD",  "RMSSD"};
  for (int k : kRrLags) v.push_back("r_" + std::to_string(k));
  for (int k : kRrLags) v.push_back("MI_" + std::to_string(k));
  for (double s : kAllanScalesS) v.push_back("AT_" + std::to_string(static_cast<int>(s)));
  v.insert(v.end(), {"NEP", "edr_mean", "S_edr"});
  append_spectral_names(v, "rr", cfg.grid_size);
  append_dwt_names(v, "rr");
  append_spectral_names(v, "edr", cfg.grid_size);
  append_dwt_names(v, "edr");
  return v;
}

std::vector<double> flatten(const EcgFeatures& f) {
  const auto& t = f.time;
  std::vector<double> v{t.mid_time_s, t.length_m, t.mean_rr_ms, t.nn50_v1,  t.nn50_v2,
                        t.pnn50_v1,   t.pnn50_v2, t.sdnn_ms,    t.sdsd_ms, t.rmssd_ms};
  v.insert(v.end(), t.r.begin(), t.r.end());
  v.insert(v.end(), t.mi.begin(), t.mi.end());
  v.insert(v.end(), t.allan.begin(), t.allan.end());
  v.insert(v.end(), {t.nep, t.edr_mean, t.edr_std});
  append_spectral(v, f.rr_spectrum);
  append_dwt(v, f.rr_dwt);
  append_spectral(v, f.edr_spectrum);
  append_dwt(v, f.edr_dwt);
  return v;
}

}  // namespace osa
