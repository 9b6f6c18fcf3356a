#include "osa/features_spo2.hpp"

#include "osa/error.hpp"
#include "osa/mutual_info.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace osa {

namespace {

double mean_of(std::span<const double> x) {
  return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double median_of(std::span<const double> x) {
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

Spo2BasicStats spo2_basic_stats(std::span<const double> frame) {
  const std::size_t n = frame.size();
  if (n < 2) throw InvalidArgument("SpO2 statistics need at least 2 samples");
  Spo2BasicStats s;
  s.min = *std::min_element(frame.begin(), frame.end());
  s.mean = mean_of(frame);
  s.std = sample_sd(frame);

  int last_sign = 0;
  for (double v : frame) {
    const double d = v - s.mean;
    const int sign = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    if (sign == 0) continue;
    if (last_sign != 0 && sign != last_sign) s.mean_crossings += 1.0;
    last_sign = sign;
  }

  const double t_mean = static_cast<double>(n - 1) / 2.0;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - t_mean;
    sxy += dt * (frame[i] - s.mean);
    sxx += dt * dt;
  }
  const double slope = sxy / sxx;
  s.slope = std::abs(slope);
  s.intercept = s.mean - slope * t_mean;
  return s;
}

Spo2SequentialDeps spo2_sequential_deps(std::span<const double> frame) {
  const std::size_t n = frame.size();
  Spo2SequentialDeps out;
  if (n <= static_cast<std::size_t>(kSpo2Lags.back())) {
    throw InvalidArgument("SpO2 frame must be longer than the largest lag");
  }
  const double m = mean_of(frame);
  double denom = 0.0;
  for (double v : frame) denom += (v - m) * (v - m);
  for (std::size_t li = 0; li < kSpo2Lags.size(); ++li) {
    const auto k = static_cast<std::size_t>(kSpo2Lags[li]);
    if (denom > 0.0) {
      double num = 0.0;
      for (std::size_t i = 0; i + k < n; ++i) num += (frame[i] - m) * (frame[i + k] - m);
      out.r[li] = num / denom;
    }
    if (n - k >= 10 && denom > 0.0) {
      out.mi[li] = estimate_mi(frame.subspan(0, n - k), frame.subspan(k));
    }
  }
  return out;
}

double approximate_entropy(std::span<const double> x, int m, double r) {
  const auto n = static_cast<long long>(x.size());
  const auto phi = [&](int len) {
    const long long count = n - len + 1;
    if (count <= 0) return 0.0;
    double acc = 0.0;
    for (long long i = 0; i < count; ++i) {
      long long matches = 0;
      for (long long j = 0; j < count; ++j) {
        bool ok = true;
        for (int k = 0; k < len && ok; ++k) ok = std::abs(x[i + k] - x[j + k]) <= r;
        if (ok) ++matches;
      }
      acc += std::log(static_cast<double>(matches) / static_cast<double>(count));
    }
    return acc / static_cast<double>(count);
  };
  return phi(m) - phi(m + 1);
}

double sample_entropy(std::span<const double> x, int m, double r) {
  const auto n = static_cast<long long>(x.size());
  const long long templates = n - m;
  if (templates < 2) return 0.0;
  long long b = 0;
  long long a = 0;
  for (long long i = 0; i < templates; ++i) {
    for (long long j = i + 1; j < templates; ++j) {
      bool ok = true;
      for (int k = 0; k < m && ok; ++k) ok = std::abs(x[i + k] - x[j + k]) <= r;
      if (!ok) continue;
      ++b;
      if (std::abs(x[i + m] - x[j + m]) <= r) ++a;
    }
  }
  if (a == 0 || b == 0) {
    // No matches: report the largest value the estimator can take.
    const double pairs = static_cast<double>(templates - 1) * static_cast<double>(templates);
    return -std::log(2.0 / pairs);
  }
  return -std::log(static_cast<double>(a) / static_cast<double>(b));
}

std::size_t lempel_ziv_phrases(std::span<const unsigned char> s) {
  // Kaspar & Schuster's scan of the LZ76 production history.
  const std::size_t n = s.size();
  if (n == 0) return 0;
  if (n == 1) return 1;
  std::size_t c = 1, l = 1, i = 0, k = 1, k_max = 1;
  while (true) {
    if (s[i + k - 1] == s[l + k - 1]) {
      ++k;
      if (l + k > n) {
        ++c;
        break;
      }
    } else {
      k_max = std::max(k, k_max);
      ++i;
      if (i == l) {
        ++c;
        l += k_max;
        if (l + 1 > n) break;
        i = 0;
        k = 1;
        k_max = 1;
      } else {
        k = 1;
      }
    }
  }
  return c;
}

Spo2Complexity spo2_complexity(std::span<const double> frame, const EntropyParams& params) {
  const std::size_t n = frame.size();
  if (n < 10) throw InvalidArgument("SpO2 complexity needs at least 10 samples");
  Spo2Complexity out;
  const double r = params.r_factor * sample_sd(frame);
  out.apen = approximate_entropy(frame, params.m, r);
  out.sampen = sample_entropy(frame, params.m, r);

  const double med = median_of(frame);
  std::vector<unsigned char> bits(n);
  for (std::size_t i = 0; i < n; ++i) bits[i] = frame[i] > med ? 1 : 0;
  const double nn = static_cast<double>(n);
  out.lzc = static_cast<double>(lempel_ziv_phrases(bits)) * std::log2(nn) / nn;

  std::vector<double> diff(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) diff[i] = frame[i + 1] - frame[i];
  const std::size_t pairs = diff.size() - 1;
  for (std::size_t ri = 0; ri < kCtmRadii.size(); ++ri) {
    std::size_t inside = 0;
    for (std::size_t i = 0; i < pairs; ++i) {
      if (std::hypot(diff[i], diff[i + 1]) <= kCtmRadii[ri]) ++inside;
    }
    out.ctm[ri] = static_cast<double>(inside) / static_cast<double>(pairs);
  }
  double abs_sum = 0.0;
  for (double d : diff) abs_sum += std::abs(d);
  out.delta = abs_sum / static_cast<double>(diff.size());
  return out;
}

namespace {

// Lengths (in samples) of maximal runs with value <= level.
std::vector<std::size_t> runs_at_or_below(std::span<const double> x, double level) {
  std::vector<std::size_t> runs;
  std::size_t len = 0;
  for (double v : x) {
    if (v <= level) {
      ++len;
    } else if (len > 0) {
      runs.push_back(len);
      len = 0;
    }
  }
  if (len > 0) runs.push_back(len);
  return runs;
}

}  // namespace

Spo2Desaturation spo2_desaturation(std::span<const double> frame, double baseline) {
  if (!std::isfinite(baseline)) throw InvalidArgument("SpO2 baseline must be finite");
  Spo2Desaturation out;
  for (std::size_t i = 0; i < kOdiDepths.size(); ++i) {
    out.odi[i] = static_cast<double>(runs_at_or_below(frame, baseline - kOdiDepths[i]).size());
  }
  for (std::size_t i = 0; i < kOdiGridDepths.size(); ++i) {
    const auto runs = runs_at_or_below(frame, baseline - kOdiGridDepths[i]);
    for (std::size_t j = 0; j < kOdiGridSeconds.size(); ++j) {
      const auto min_len = static_cast<std::size_t>(kOdiGridSeconds[j]);
      out.odi_grid[i][j] = static_cast<double>(
          std::count_if(runs.begin(), runs.end(), [&](std::size_t len) { return len >= min_len; }));
    }
  }
  for (std::size_t i = 0; i < kOdisDepths.size(); ++i) {
    out.odis[i] = static_cast<double>(runs_at_or_below(frame, baseline - kOdisDepths[i]).size());
  }
  for (std::size_t i = 0; i < kTsaLevels.size(); ++i) {
    const auto below = std::count_if(frame.begin(), frame.end(),
                                     [&](double v) { return v < static_cast<double>(kTsaLevels[i]); });
    out.tsa[i] = frame.empty() ? 0.0 : static_cast<double>(below) / static_cast<double>(frame.size());
  }
  return out;
}

double spo2_mode(std::span<const double> values) {
  std::map<long long, std::size_t> hist;
  for (double v : values) {
    if (std::isfinite(v)) ++hist[std::llround(v)];
  }
  if (hist.empty()) throw InvalidArgument("no SpO2 samples to take a mode of");
  auto best = hist.begin();
  for (auto it = hist.begin(); it != hist.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return static_cast<double>(best->first);
}

double compute_baseline(const SignalRecord& record) {
  std::vector<double> retained;
  retained.reserve(record.spo2.size());
  for (std::size_t i = 0; i < record.spo2.size(); ++i) {
    if (i < record.excluded_mask.size() && record.excluded_mask[i]) continue;
    retained.push_back(record.spo2[i]);
  }
  const double needed = 5.0 * 60.0 * record.spo2_spec.sampling_rate_hz;
  if (static_cast<double>(retained.size()) < needed) {
    throw InvalidArgument("SpO2 baseline needs at least five minutes of retained data");
  }
  return spo2_mode(retained);
}

Spo2Features spo2_features(std::span<const double> frame, double baseline, const EntropyParams& params) {
  Spo2Features f;
  f.basic = spo2_basic_stats(frame);
  f.deps = spo2_sequential_deps(frame);
  f.complexity = spo2_complexity(frame, params);
  f.baseline = baseline;
  f.desat = spo2_desaturation(frame, baseline);
  return f;
}

const std::vector<std::string>& spo2_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v{"spo2_min", "spo2_mean", "S_spo2", "ZC", "spo2_slope", "spo2_intercept"};
    for (int k : kSpo2Lags) v.push_back("r_spo2_" + std::to_string(k));
    for (int k : kSpo2Lags) v.push_back("MI_spo2_" + std::to_string(k));
    v.insert(v.end(), {"ApEn", "SampEn", "LZC", "CTM_0.25", "CTM_0.5", "CTM_0.75", "CTM_1", "Delta",
                       "baseline"});
    for (int d : kOdiDepths) v.push_back("odi" + std::to_string(d));
    for (int d : kOdiGridDepths) {
      for (int s : kOdiGridSeconds) v.push_back("ODI" + std::to_string(d) + std::to_string(s));
    }
    for (int d : kOdisDepths) v.push_back("ODIS" + std::to_string(d));
    for (int l : kTsaLevels) v.push_back("tsa" + std::to_string(l));
    return v;
  }();
  return names;
}

std::vector<double> flatten(const Spo2Features& f) {
  std::vector<double> v{f.basic.min,   f.basic.mean,  f.basic.std,
                        f.basic.mean_crossings, f.basic.slope, f.basic.intercept};
  v.insert(v.end(), f.deps.r.begin(), f.deps.r.end());
  v.insert(v.end(), f.deps.mi.begin(), f.deps.mi.end());
  v.insert(v.end(), {f.complexity.apen, f.complexity.sampen, f.complexity.lzc});
  v.insert(v.end(), f.complexity.ctm.begin(), f.complexity.ctm.end());
  v.push_back(f.complexity.delta);
  v.push_back(f.baseline);
  v.insert(v.end(), f.desat.odi.begin(), f.desat.odi.end());
  for (const auto& row : f.desat.odi_grid) v.insert(v.end(), row.begin(), row.end());
  v.insert(v.end(), f.desat.odis.begin(), f.desat.odis.end());
  v.insert(v.end(), f.desat.tsa.begin(), f.desat.tsa.end());
  return v;
}

}  // namespace osa
