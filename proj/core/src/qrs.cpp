#include "osa/qrs.hpp"

#include "osa/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <numeric>

namespace osa {

namespace {

struct Candidate {
  std::size_t index;
  double height;
  double slope;
};

// Rolling mean of the last eight entries (Hamilton's peak buffers).
class PeakBuffer {
 public:
  void fill(double v) { values_.assign(kSize, v); }
  void push(double v) {
    values_.push_back(v);
    if (values_.size() > kSize) values_.pop_front();
  }
  double mean() const {
    if (values_.empty()) return 0.0;
    return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
  }
  bool empty() const { return values_.empty(); }

 private:
  static constexpr std::size_t kSize = 8;
  std::deque<double> values_;
};

std::vector<double> slope_filter(std::span<const double> x, double fs) {
  // Five-point derivative with a tap spacing scaled to a 200 Hz design rate.
  const auto s = static_cast<std::size_t>(std::max(1.0, std::round(fs / 200.0)));
  const auto at = [&](std::size_t i, std::size_t back) { return i >= back ? x[i - back] : x[0]; };
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    d[i] = 2.0 * (x[i] - at(i, 4 * s)) + (at(i, s) - at(i, 3 * s));
  }
  return d;
}

void lowpass_inplace(std::vector<double>& v, double fs, double fc) {
  fc = std::min(fc, 0.45 * fs);
  const double k = std::tan(std::numbers::pi * fc / fs);
  const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k * k);
  const double b0 = k * k * norm;
  const double b1 = 2.0 * b0;
  const double a1 = 2.0 * (k * k - 1.0) * norm;
  const double a2 = (1.0 - std::numbers::sqrt2 * k + k * k) * norm;
  double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
  for (auto& s : v) {
    const double x0 = s;
    const double y0 = b0 * x0 + b1 * x1 + b0 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x0;
    y2 = y1;
    y1 = y0;
    s = y0;
  }
}

std::vector<double> moving_window_integral(std::span<const double> v, std::size_t w) {
  std::vector<double> out(v.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc += v[i];
    if (i >= w) acc -= v[i - w];
    out[i] = acc / static_cast<double>(w);
  }
  return out;
}

double max_abs_in(std::span<const double> v, std::size_t lo, std::size_t hi) {
  double m = 0.0;
  for (std::size_t i = lo; i < hi && i < v.size(); ++i) m = std::max(m, std::abs(v[i]));
  return m;
}

}  // namespace

QrsDetection detect_qrs(std::span<const double> ecg, double fs, const QrsConfig& cfg) {
  if (fs < 100.0) throw InvalidArgument("QRS detection needs fs >= 100 Hz");
  QrsDetection out;
  const std::size_t n = ecg.size();
  const double duration = static_cast<double>(n) / fs;
  if (n == 0) return out;

  auto slope = slope_filter(ecg, fs);
  lowpass_inplace(slope, fs, cfg.lowpass_hz);
  std::vector<double> energy(n);
  for (std::size_t i = 0; i < n; ++i) energy[i] = slope[i] * slope[i];
  const auto win = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.integration_window_s * fs)));
  const auto mwi = moving_window_integral(energy, win);
  const auto refractory = static_cast<std::size_t>(std::lround(cfg.refractory_s * fs));

  // Local maxima of the integrated signal, merged so that candidates are at
  // least one refractory period apart (the larger one survives).
  std::vector<Candidate> cands;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1]) || !(mwi[i] > 0.0)) continue;
    const std::size_t lo = i >= win ? i - win : 0;
    Candidate c{i, mwi[i], max_abs_in(slope, lo, i + 1)};
    if (!cands.empty() && i - cands.back().index < refractory) {
      if (c.height > cands.back().height) cands.back() = c;
      continue;
    }
    cands.push_back(c);
  }

  PeakBuffer qrs_peaks;
  PeakBuffer noise_peaks;
  PeakBuffer rr_buffer;
  {
    // Seed the signal buffer from the first (up to) eight one-second maxima.
    const auto sec = static_cast<std::size_t>(std::lround(fs));
    const std::size_t seconds = std::min<std::size_t>(8, std::max<std::size_t>(1, n / sec));
    PeakBuffer seed;
    for (std::size_t s = 0; s < seconds; ++s) {
      double m = 0.0;
      for (std::size_t i = s * sec; i < std::min(n, (s + 1) * sec); ++i) m = std::max(m, mwi[i]);
      seed.push(m);
    }
    qrs_peaks.fill(seed.mean());
    noise_peaks.fill(0.0);
  }

  const auto threshold = [&] {
    const double nm = noise_peaks.mean();
    return nm + cfg.threshold_coefficient * (qrs_peaks.mean() - nm);
  };

  std::vector<Candidate> detected;
  std::vector<Candidate> pending_noise;  // noise peaks since the last detection
  const auto t_window = static_cast<std::size_t>(std::lround(cfg.t_wave_window_s * fs));

  const auto accept = [&](const Candidate& c) {
    if (!detected.empty()) {
      const double rr = static_cast<double>(c.index - detected.back().index);
      rr_buffer.push(rr);
    }
    qrs_peaks.push(c.height);
    detected.push_back(c);
    pending_noise.clear();
  };

  for (const auto& c : cands) {
    // Search-back: an overdue beat is recovered from the largest noise peak
    // above half the threshold.
    if (!detected.empty() && !rr_buffer.empty()) {
      const double limit = cfg.searchback_rr_factor * rr_buffer.mean();
      if (static_cast<double>(c.index - detected.back().index) > limit && !pending_noise.empty()) {
        const auto best = std::max_element(pending_noise.begin(), pending_noise.end(),
                                           [](const Candidate& a, const Candidate& b) {
                                             return a.height < b.height;
                                           });
        if (best->height > 0.5 * threshold() && best->index - detected.back().index >= refractory) {
          const Candidate recovered = *best;
          accept(recovered);
        }
      }
    }

    bool is_qrs = c.height > threshold();
    if (is_qrs && !detected.empty() && c.index - detected.back().index < t_window &&
        c.slope < 0.5 * detected.back().slope) {
      is_qrs = false;  // T wave
    }
    if (is_qrs && !detected.empty() && c.index - detected.back().index < refractory) is_qrs = false;
    if (is_qrs) {
      accept(c);
    } else {
      noise_peaks.push(c.height);
      pending_noise.push_back(c);
    }
  }

  // Locate R at the ECG maximum preceding the integrator peak, and S at the
  // following trough.
  const auto back = win + static_cast<std::size_t>(std::lround(0.125 * fs));
  const auto fwd = static_cast<std::size_t>(std::lround(0.05 * fs));
  const auto s_win = static_cast<std::size_t>(std::lround(cfg.s_search_s * fs));
  for (const auto& c : detected) {
    const std::size_t lo = c.index >= back ? c.index - back : 0;
    const std::size_t hi = std::min(n, c.index + fwd + 1);
    std::size_t r = lo;
    for (std::size_t i = lo; i < hi; ++i) {
      if (ecg[i] > ecg[r]) r = i;
    }
    std::size_t s = r;
    for (std::size_t i = r + 1; i <= r + s_win && i < n; ++i) {
      if (ecg[i] < ecg[s]) s = i;
    }
    Beat b{static_cast<double>(r) / fs, ecg[r], ecg[s]};
    if (!out.beats.empty() && b.r_time_s - out.beats.back().r_time_s < cfg.refractory_s) {
      if (b.r_amp > out.beats.back().r_amp) out.beats.back() = b;
      continue;
    }
    out.beats.push_back(b);
  }

  double last = 0.0;
  for (const auto& b : out.beats) {
    if (b.r_time_s - last >= cfg.gap_flag_s) out.low_quality.emplace_back(last, b.r_time_s);
    last = b.r_time_s;
  }
  if (duration - last >= cfg.gap_flag_s || (out.beats.empty() && duration > 0.0)) {
    out.low_quality.emplace_back(last, duration);
  }
  return out;
}

RRTachogram make_tachogram(std::span<const Beat> beats) {
  RRTachogram t;
  for (std::size_t i = 1; i < beats.size(); ++i) {
    const double rr = (beats[i].r_time_s - beats[i - 1].r_time_s) * 1000.0;
    if (!(rr > 0.0)) throw InvalidArgument("beat times must be strictly increasing");
    t.times_s.push_back(beats[i].r_time_s);
    t.rr_ms.push_back(rr);
  }
  return t;
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

RRTachogram remove_ectopic(const RRTachogram& t, std::span<const Beat> beats,
                           const EctopicConfig& cfg) {
  if (t.times_s.size() != t.rr_ms.size()) throw InvalidArgument("malformed tachogram");

  // R-S morphology rule over the beat list.
  std::vector<bool> beat_ok(beats.size(), false);
  {
    std::vector<double> seed;
    for (const auto& b : beats) {
      if (seed.size() == cfg.seed_intervals) break;
      const double rs = b.r_amp - b.s_amp;
      if (rs >= 0.0) seed.push_back(rs);
    }
    double reference = median_of(seed);
    std::vector<double> accepted;
    for (std::size_t i = 0; i < beats.size(); ++i) {
      const double rs = beats[i].r_amp - beats[i].s_amp;
      if (rs < 0.0) continue;
      if (std::abs(rs - reference) > cfg.rs_tolerance * reference) continue;
      beat_ok[i] = true;
      accepted.insert(std::upper_bound(accepted.begin(), accepted.end(), rs), rs);
      const std::size_t m = accepted.size() / 2;
      reference = accepted.size() % 2 == 1 ? accepted[m] : 0.5 * (accepted[m - 1] + accepted[m]);
    }
  }

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto it = std::lower_bound(beats.begin(), beats.end(), t.times_s[i],
                                     [](const Beat& b, double v) { return b.r_time_s < v; });
    if (it == beats.end() || it->r_time_s != t.times_s[i] || it == beats.begin()) continue;
    const auto closing = static_cast<std::size_t>(it - beats.begin());
    if (beat_ok[closing] && beat_ok[closing - 1]) keep.push_back(i);
  }

  while (true) {
    std::vector<double> head;
    for (std::size_t k = 0; k < keep.size() && k < cfg.seed_intervals; ++k) head.push_back(t.rr_ms[keep[k]]);
    double reference = median_of(head);
    std::vector<std::size_t> next;
    for (std::size_t i : keep) {
      const double rr = t.rr_ms[i];
      if (std::abs(rr - reference) <= cfg.rr_tolerance * reference) {
        next.push_back(i);
        reference = rr;
      }
    }
    if (next.size() == keep.size()) break;
    keep = std::move(next);
  }

  RRTachogram out;
  for (std::size_t i : keep) {
    out.times_s.push_back(t.times_s[i]);
    out.rr_ms.push_back(t.rr_ms[i]);
  }
  return out;
}

EDRSeries extract_edr_qrs_area(std::span<const double> ecg, double fs, std::span<const Beat> beats,
                               const EdrConfig& cfg) {
  EDRSeries out;
  const auto h = static_cast<long long>(std::lround(cfg.qrs_half_window_s * fs));
  const auto n = static_cast<long long>(ecg.size());
  for (const auto& b : beats) {
    const auto r = static_cast<long long>(std::lround(b.r_time_s * fs));
    if (r - h < 0 || r + h >= n) continue;
    const double baseline = 0.5 * (ecg[static_cast<std::size_t>(r - h)] + ecg[static_cast<std::size_t>(r + h)]);
    double area = 0.0;
    for (long long i = r - h; i <= r + h; ++i) area += std::abs(ecg[static_cast<std::size_t>(i)] - baseline);
    out.sample_times_s.push_back(b.r_time_s);
    out.values.push_back(area / fs);
  }
  return out;
}

EDRSeries extract_edr_t_wave(std::span<const double> ecg, double fs, std::span<const Beat> beats,
                             const EdrConfig& cfg) {
  EDRSeries out;
  const auto n = static_cast<long long>(ecg.size());
  const auto b0 = static_cast<long long>(std::lround(cfg.t_window_begin_s * fs));
  const auto b1 = static_cast<long long>(std::lround(cfg.t_window_end_s * fs));
  const auto at = [&](long long i) { return ecg[static_cast<std::size_t>(i)]; };
  for (const auto& b : beats) {
    const auto r = static_cast<long long>(std::lround(b.r_time_s * fs));
    const long long lo = r + b0;
    const long long hi = r + b1;
    if (lo < 0 || hi >= n) continue;
    const double baseline = 0.5 * (at(lo) + at(hi));
    long long peak = lo;
    for (long long i = lo; i <= hi; ++i) {
      if (std::abs(at(i) - baseline) > std::abs(at(peak) - baseline)) peak = i;
    }
    const double amp = at(peak) - baseline;
    const double qrs_height = b.r_amp - b.s_amp;
    if (!(std::abs(amp) > 0.0) || std::abs(amp) < cfg.t_min_relative_amplitude * std::abs(qrs_height)) {
      continue;
    }
    const double half = 0.5 * amp;
    const auto above = [&](long long i) { return (at(i) - baseline) * (amp > 0 ? 1.0 : -1.0) >= std::abs(half); };
    long long left = peak;
    while (left > lo && above(left - 1)) --left;
    long long right = peak;
    while (right < hi && above(right + 1)) ++right;
    if (left == lo || right == hi) continue;  // crossing not inside the window
    // Linear interpolation of both half-height crossings.
    const auto crossing = [&](long long inside, long long outside) {
      const double a = at(inside) - baseline - half;
      const double c = at(outside) - baseline - half;
      const double frac = a == c ? 0.0 : a / (a - c);
      return static_cast<double>(inside) + frac * static_cast<double>(outside - inside);
    };
    const double width = (crossing(right, right + 1) - crossing(left, left - 1)) / fs;
    out.sample_times_s.push_back(b.r_time_s);
    out.values.push_back(width);
  }
  return out;
}

}  // namespace osa
