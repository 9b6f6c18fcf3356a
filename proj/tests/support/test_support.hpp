#pragma once

#include "osa/qrs.hpp"
#include "osa/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <system_error>
#include <unistd.h>
#include <vector>

namespace osa::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "osa") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<double> uniform_vector(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

inline std::vector<double> normal_vector(Rng& rng, std::size_t n, double mean = 0.0, double sd = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = mean + sd * rng.normal();
  return v;
}

// Tachogram whose beat times accumulate the given intervals from t0.
inline RRTachogram tachogram_from_rr(const std::vector<double>& rr, double t0 = 0.0) {
  RRTachogram t;
  double now = t0;
  for (double v : rr) {
    now += v / 1000.0;
    t.times_s.push_back(now);
    t.rr_ms.push_back(v);
  }
  return t;
}

// Sum of Gaussian P, Q, R, S and T bumps around each beat time. r_scale
// (if given) holds one R-height multiplier per beat.
inline std::vector<double> gaussian_ecg(std::span<const double> beats_s, double fs, double duration_s,
                                        std::span<const double> r_scale = {}) {
  struct Bump {
    double offset, amp, width;
  };
  static constexpr Bump kBumps[] = {
      {-0.20, 0.12, 0.025}, {-0.035, -0.12, 0.010}, {0.0, 1.0, 0.011}, {0.035, -0.25, 0.011}, {0.26, 0.30, 0.045}};
  std::vector<double> x(static_cast<std::size_t>(std::llround(duration_s * fs)), 0.0);
  for (std::size_t b = 0; b < beats_s.size(); ++b) {
    const double scale = r_scale.empty() ? 1.0 : r_scale[b];
    const auto lo = std::max(0LL, static_cast<long long>((beats_s[b] - 0.4) * fs));
    const auto hi = std::min(static_cast<long long>(x.size()) - 1, static_cast<long long>((beats_s[b] + 0.5) * fs));
    for (long long i = lo; i <= hi; ++i) {
      const double t = static_cast<double>(i) / fs;
      for (const auto& k : kBumps) {
        const double z = (t - beats_s[b] - k.offset) / k.width;
        x[static_cast<std::size_t>(i)] += scale * k.amp * std::exp(-0.5 * z * z);
      }
    }
  }
  return x;
}

// Peak of the classical periodogram over integer DFT bins 1..n/2-1, in Hz.
inline double dominant_frequency(std::span<const double> x, double fs) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double best = -1.0;
  std::size_t best_k = 0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(k * i % n) / static_cast<double>(n);
      re += (x[i] - mean) * std::cos(a);
      im -= (x[i] - mean) * std::sin(a);
    }
    const double p = re * re + im * im;
    if (p > best) {
      best = p;
      best_k = k;
    }
  }
  return static_cast<double>(best_k) * fs / static_cast<double>(n);
}

}  // namespace osa::testing
