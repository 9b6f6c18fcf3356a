#pragma once

#include "osa/record_io.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace osa {

inline constexpr std::array<int, 4> kSpo2Lags{1, 2, 3, 4};
inline constexpr std::array<double, 4> kCtmRadii{0.25, 0.5, 0.75, 1.0};
inline constexpr std::array<int, 3> kOdiDepths{2, 3, 4};
inline constexpr std::array<int, 3> kOdiGridDepths{2, 3, 5};
inline constexpr std::array<int, 3> kOdiGridSeconds{1, 3, 5};
inline constexpr std::array<int, 2> kOdisDepths{4, 5};
inline constexpr std::array<int, 5> kTsaLevels{70, 80, 85, 90, 95};

struct Spo2BasicStats {
  double min{0.0};
  double mean{0.0};
  double std{0.0};
  double mean_crossings{0.0};
  double slope{0.0};  // |slope| of the least-squares line, %/s
  double intercept{0.0};
};

struct Spo2SequentialDeps {
  std::array<double, 4> r{};
  std::array<double, 4> mi{};
};

struct Spo2Complexity {
  double apen{0.0};
  double sampen{0.0};
  double lzc{0.0};
  std::array<double, 4> ctm{};
  double delta{0.0};
};

struct Spo2Desaturation {
  std::array<double, 3> odi{};                  // depths 2, 3, 4
  std::array<std::array<double, 3>, 3> odi_grid{};  // [depth 2,3,5][min seconds 1,3,5]
  std::array<double, 2> odis{};                 // depths 4, 5
  std::array<double, 5> tsa{};                  // below 70, 80, 85, 90, 95 %
};

struct Spo2Features {
  Spo2BasicStats basic;
  Spo2SequentialDeps deps;
  Spo2Complexity complexity;
  double baseline{0.0};
  Spo2Desaturation desat;
};

struct EntropyParams {
  int m{1};
  double r_factor{0.25};  // tolerance = r_factor * SD of the frame
};

// Samples are 1 s apart; time runs from 0 at the first sample.
Spo2BasicStats spo2_basic_stats(std::span<const double> frame);
Spo2SequentialDeps spo2_sequential_deps(std::span<const double> frame);
Spo2Complexity spo2_complexity(std::span<const double> frame, const EntropyParams& params = {});
Spo2Desaturation spo2_desaturation(std::span<const double> frame, double baseline);

double approximate_entropy(std::span<const double> x, int m, double r);
double sample_entropy(std::span<const double> x, int m, double r);
// Lempel-Ziv (1976) phrase count of a 0/1 sequence.
std::size_t lempel_ziv_phrases(std::span<const unsigned char> bits);

// Mode of the retained SpO2 samples rounded to 1 %, lowest value on ties.
// Throws InvalidArgument with fewer than five minutes of retained data.
double compute_baseline(const SignalRecord& record);
double spo2_mode(std::span<const double> values);

Spo2Features spo2_features(std::span<const double> frame, double baseline,
                           const EntropyParams& params = {});

// Column names in emission order (e.g. "spo2_min", "CTM_0.5", "ODI55", "tsa90").
const std::vector<std::string>& spo2_feature_names();
std::vector<double> flatten(const Spo2Features& f);

}  // namespace osa
