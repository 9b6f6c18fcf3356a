#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace osa {

struct Beat {
  double r_time_s{0.0};
  double r_amp{0.0};
  double s_amp{0.0};
};

// One entry per R-R interval: times_s[i] is the time of the beat closing
// interval i. A freshly built tachogram has rr_ms[i] = 1000 (t[i+1] - t[i])
// over consecutive beats; after ectopic removal intervals may be missing.
struct RRTachogram {
  std::vector<double> times_s;
  std::vector<double> rr_ms;

  std::size_t size() const { return rr_ms.size(); }
  bool empty() const { return rr_ms.empty(); }
};

struct EDRSeries {
  std::vector<double> sample_times_s;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

struct QrsConfig {
  double refractory_s{0.200};
  double integration_window_s{0.150};
  double lowpass_hz{15.0};
  double threshold_coefficient{0.3125};
  double t_wave_window_s{0.360};
  double searchback_rr_factor{1.66};
  double s_search_s{0.120};
  double gap_flag_s{10.0};
};

struct QrsDetection {
  std::vector<Beat> beats;
  // [start, end) seconds of stretches >= gap_flag_s without a beat.
  std::vector<std::pair<double, double>> low_quality;
};

// Hamilton-Tompkins style detector: slope filter, squaring, moving-window
// integration, adaptive signal/noise thresholds with search-back, 200 ms
// refractory period and T-wave slope discrimination. Every decision is a
// ratio of signal-derived quantities, so detections do not depend on the
// amplitude scale. Requires fs >= 100 Hz.
QrsDetection detect_qrs(std::span<const double> ecg, double fs, const QrsConfig& cfg = {});

RRTachogram make_tachogram(std::span<const Beat> beats);

struct EctopicConfig {
  double rr_tolerance{0.20};
  double rs_tolerance{0.30};
  std::size_t seed_intervals{8};
};

// Drops intervals further than 20 % from the last accepted interval (seeded
// with the median of the first 8) and intervals touching a beat whose R-S
// difference is negative or more than 30 % from the running median of
// accepted R-S differences. The interval rule is repeated until nothing
// changes, so the result is a fixed point.
RRTachogram remove_ectopic(const RRTachogram& t, std::span<const Beat> beats,
                           const EctopicConfig& cfg = {});

struct EdrConfig {
  double qrs_half_window_s{0.050};
  double t_window_begin_s{0.120};
  double t_window_end_s{0.400};
  // T waves smaller than this fraction of the beat's R-S height are ignored.
  double t_min_relative_amplitude{0.05};
};

// QRS area above the local baseline (mean of the window endpoints).
EDRSeries extract_edr_qrs_area(std::span<const double> ecg, double fs, std::span<const Beat> beats,
                               const EdrConfig& cfg = {});

// T-wave width at half height within (R+120 ms, R+400 ms).
EDRSeries extract_edr_t_wave(std::span<const double> ecg, double fs, std::span<const Beat> beats,
                             const EdrConfig& cfg = {});

}  // namespace osa
