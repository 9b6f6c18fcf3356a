#include "osa/synth.hpp"

#include "osa/error.hpp"
#include "osa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace osa {

namespace {

void check_range(const char* name, double v, double lo, double hi) {
  if (!(v >= lo && v <= hi)) {
    throw InvalidArgument(std::string("synth parameter ") + name + " must lie in [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
  }
}

struct Wave {
  double offset_s;
  double amplitude;
  double width_s;
};

// P, Q, R, S and T waves relative to the R peak, in units of the R height.
constexpr Wave kPqrst[] = {
    {-0.20, 0.12, 0.025}, {-0.035, -0.12, 0.010}, {0.0, 1.0, 0.011}, {0.035, -0.25, 0.011}, {0.26, 0.30, 0.045},
};

struct Event {
  double start;
  double end;
  double depth;
};

}  // namespace

void validate(const SynthParams& p) {
  if (p.record_id.empty()) throw InvalidArgument("synth parameter record_id must be non-empty");
  check_range("duration_s", p.duration_s, 60.0, 86400.0);
  check_range("apnea_rate_per_hour", p.apnea_rate_per_hour, 0.0, 60.0);
  check_range("event_duration_s", p.event_duration_s, 10.0, 40.0);
  check_range("desat_depth", p.desat_depth, 0.0, 20.0);
  check_range("cvhr_depth", p.cvhr_depth, 0.0, 0.5);
  check_range("noise_level", p.noise_level, 0.0, 1.0);
  check_range("ecg_fs", p.ecg_fs, 100.0, 1000.0);
  check_range("baseline_spo2", p.baseline_spo2, 85.0, 99.0);
  check_range("heart_rate_bpm", p.heart_rate_bpm, 40.0, 120.0);
  check_range("resp_rate_hz", p.resp_rate_hz, 0.15, 0.4);
}

SignalRecord synth_generate(const SynthParams& p) {
  validate(p);
  Rng rng(p.seed);
  const auto minutes = static_cast<std::size_t>(std::floor(p.duration_s / 60.0));
  const double duration = static_cast<double>(minutes) * 60.0;

  // Pick distinct minutes for the events, never the first one.
  std::vector<std::size_t> eligible(minutes > 1 ? minutes - 1 : 0);
  std::iota(eligible.begin(), eligible.end(), std::size_t{1});
  rng.shuffle(std::span<std::size_t>(eligible));
  const auto wanted = static_cast<std::size_t>(std::llround(p.apnea_rate_per_hour * duration / 3600.0));
  eligible.resize(std::min(wanted, eligible.size()));
  std::sort(eligible.begin(), eligible.end());

  std::vector<Event> events;
  SignalRecord rec;
  for (std::size_t minute : eligible) {
    const double latest = std::max(5.0, 60.0 - p.event_duration_s - 15.0);
    const double offset = 5.0 + rng.uniform() * (latest - 5.0);
    const double start = static_cast<double>(minute) * 60.0 + offset;
    events.push_back({start, start + p.event_duration_s, p.desat_depth * (0.8 + 0.4 * rng.uniform())});
    rec.annotations.push_back({start, p.event_duration_s, EventKind::apnea});
  }

  const auto in_event = [&](double t) -> const Event* {
    for (const auto& e : events) {
      if (t >= e.start && t < e.end) return &e;
      if (e.start > t) break;
    }
    return nullptr;
  };
  // Relative R-R change: slow lengthening during the event, a short
  // tachycardic rebound right after it.
  const auto rr_factor = [&](double t) {
    for (const auto& e : events) {
      if (t >= e.start && t < e.end) return 1.0 + p.cvhr_depth * (t - e.start) / (e.end - e.start);
      if (t >= e.end && t < e.end + 10.0) return 1.0 - p.cvhr_depth * (1.0 - (t - e.end) / 10.0);
      if (e.start > t) break;
    }
    return 1.0;
  };
  const auto breathing = [&](double t) { return in_event(t) != nullptr ? 0.1 : 1.0; };

  const double base_rr = 60.0 / p.heart_rate_bpm;
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> beats;
  for (double t = 0.4; t < duration + 1.0;) {
    beats.push_back(t);
    const double rsa = 0.03 * breathing(t) * std::sin(two_pi * p.resp_rate_hz * t);
    t += base_rr * rr_factor(t) * (1.0 + rsa + 0.01 * rng.normal());
  }

  const auto n_ecg = static_cast<std::size_t>(std::llround(duration * p.ecg_fs));
  rec.record_id = p.record_id;
  rec.ecg_spec = ChannelSpec{"ECG", p.ecg_fs, "mV"};
  rec.ecg.assign(n_ecg, 0.0);
  for (double tb : beats) {
    const double amp = 1.0 + 0.15 * breathing(tb) * std::sin(two_pi * p.resp_rate_hz * tb);
    const auto lo = static_cast<long long>(std::floor((tb - 0.35) * p.ecg_fs));
    const auto hi = static_cast<long long>(std::ceil((tb + 0.45) * p.ecg_fs));
    for (long long i = std::max(0LL, lo); i <= hi && i < static_cast<long long>(n_ecg); ++i) {
      const double t = static_cast<double>(i) / p.ecg_fs;
      double v = 0.0;
      for (const auto& w : kPqrst) {
        const double z = (t - tb - w.offset_s) / w.width_s;
        v += w.amplitude * std::exp(-0.5 * z * z);
      }
      rec.ecg[static_cast<std::size_t>(i)] += amp * v;
    }
  }
  for (std::size_t i = 0; i < n_ecg; ++i) {
    const double t = static_cast<double>(i) / p.ecg_fs;
    rec.ecg[i] += 0.1 * std::sin(two_pi * 0.05 * t) + p.noise_level * rng.normal();
  }

  rec.spo2_spec = ChannelSpec{"SpO2", 1.0, "%"};
  rec.spo2.resize(minutes * 60);
  for (std::size_t s = 0; s < rec.spo2.size(); ++s) {
    const double t = static_cast<double>(s);
    double drop = 0.0;
    for (const auto& e : events) {
      // Delayed fall through the event, nadir 5 s after it ends, 8 s recovery.
      const double fall_start = e.start + 8.0;
      const double nadir = e.end + 5.0;
      if (t >= fall_start && t < nadir) drop = e.depth * (t - fall_start) / (nadir - fall_start);
      if (t >= nadir && t < nadir + 8.0) drop = e.depth * (1.0 - (t - nadir) / 8.0);
    }
    const double jitter = std::clamp(0.35 * rng.normal(), -1.4, 1.4);
    rec.spo2[s] = std::clamp(std::round(p.baseline_spo2 - drop + jitter), 50.0, 100.0);
  }
  rec.excluded_mask.assign(rec.spo2.size(), false);
  return rec;
}

}  // namespace osa
