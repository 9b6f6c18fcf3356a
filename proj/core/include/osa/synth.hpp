#pragma once

#include "osa/record_io.hpp"

#include <cstdint>
#include <string>

namespace osa {

// Synthetic night with apnoeic minutes. Each event sits inside one minute
// and brings a delayed SpO2 desaturation, a bradycardia/tachycardia swing
// of the R-R intervals and damped respiratory modulation of the ECG.
struct SynthParams {
  std::string record_id{"synth"};
  double duration_s{3600.0};           // [60, 86400]
  double apnea_rate_per_hour{20.0};    // [0, 60]
  double event_duration_s{30.0};       // [10, 40]
  double desat_depth{5.0};             // SpO2 points, [0, 20]
  double cvhr_depth{0.15};             // relative R-R swing, [0, 0.5]
  double noise_level{0.05};            // ECG noise SD relative to the R wave, [0, 1]
  double ecg_fs{100.0};                // [100, 1000]
  double baseline_spo2{96.0};          // [85, 99]
  double heart_rate_bpm{65.0};         // [40, 120]
  double resp_rate_hz{0.25};           // [0.15, 0.4]
  std::uint64_t seed{1};
};

// Throws InvalidArgument naming the first parameter out of range.
void validate(const SynthParams& p);

SignalRecord synth_generate(const SynthParams& p);

}  // namespace osa
