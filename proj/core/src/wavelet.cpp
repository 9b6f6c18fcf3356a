#include "osa/wavelet.hpp"

#include "osa/error.hpp"

#include <cmath>

namespace osa::wavelet {

namespace {

const double kSqrt3 = std::sqrt(3.0);
const double kScaleApprox = (std::sqrt(3.0) - 1.0) / std::sqrt(2.0);
const double kScaleDetail = (std::sqrt(3.0) + 1.0) / std::sqrt(2.0);
const double kPredictCur = std::sqrt(3.0) / 4.0;
const double kPredictPrev = (std::sqrt(3.0) - 2.0) / 4.0;

}  // namespace

Level analyze_symmetric(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw InvalidArgument("wavelet analysis needs at least 2 samples");
  std::vector<double> y;
  y.reserve(n + 4);
  y.push_back(x[1]);
  y.push_back(x[0]);
  y.insert(y.end(), x.begin(), x.end());
  y.push_back(x[n - 1]);
  y.push_back(x[n - 2]);

  const std::size_t pairs = y.size() / 2;
  std::vector<double> s1(pairs);
  std::vector<double> d1(pairs, 0.0);
  for (std::size_t j = 0; j < pairs; ++j) s1[j] = y[2 * j] + kSqrt3 * y[2 * j + 1];
  for (std::size_t j = 1; j < pairs; ++j) {
    d1[j] = y[2 * j + 1] - kPredictCur * s1[j] - kPredictPrev * s1[j - 1];
  }
  Level out;
  out.approx.resize(pairs - 1);
  out.detail.resize(pairs - 1);
  for (std::size_t m = 0; m + 1 < pairs; ++m) {
    out.approx[m] = kScaleApprox * (s1[m] - d1[m + 1]);
    out.detail[m] = kScaleDetail * d1[m + 1];
  }
  return out;
}

std::vector<std::vector<double>> detail_bands(std::span<const double> x, std::size_t levels) {
  std::vector<std::vector<double>> bands;
  std::vector<double> approx(x.begin(), x.end());
  for (std::size_t k = 0; k < levels && approx.size() >= 2; ++k) {
    auto level = analyze_symmetric(approx);
    bands.push_back(std::move(level.detail));
    approx = std::move(level.approx);
  }
  return bands;
}

Decomposition forward_periodic(std::span<const double> x, std::size_t levels) {
  const std::size_t n = x.size();
  if (levels == 0 || n == 0 || n % (std::size_t{1} << levels) != 0) {
    throw InvalidArgument("periodic transform needs a length divisible by 2^levels");
  }
  Decomposition out;
  std::vector<double> cur(x.begin(), x.end());
  for (std::size_t k = 0; k < levels; ++k) {
    const std::size_t half = cur.size() / 2;
    std::vector<double> s1(half);
    std::vector<double> d1(half);
    for (std::size_t j = 0; j < half; ++j) s1[j] = cur[2 * j] + kSqrt3 * cur[2 * j + 1];
    for (std::size_t j = 0; j < half; ++j) {
      const double prev = s1[(j + half - 1) % half];
      d1[j] = cur[2 * j + 1] - kPredictCur * s1[j] - kPredictPrev * prev;
    }
    std::vector<double> approx(half);
    std::vector<double> detail(half);
    for (std::size_t j = 0; j < half; ++j) {
      approx[j] = kScaleApprox * (s1[j] - d1[(j + 1) % half]);
      detail[j] = kScaleDetail * d1[j];
    }
    out.details.push_back(std::move(detail));
    cur = std::move(approx);
  }
  out.approx = std::move(cur);
  return out;
}

std::vector<double> inverse_periodic(const Decomposition& d) {
  std::vector<double> cur = d.approx;
  for (std::size_t k = d.details.size(); k-- > 0;) {
    const auto& detail = d.details[k];
    const std::size_t half = cur.size();
    if (detail.size() != half) throw InvalidArgument("inconsistent decomposition band sizes");
    std::vector<double> s1(half);
    std::vector<double> d1(half);
    for (std::size_t j = 0; j < half; ++j) d1[j] = detail[j] / kScaleDetail;
    for (std::size_t j = 0; j < half; ++j) s1[j] = cur[j] / kScaleApprox + d1[(j + 1) % half];
    std::vector<double> next(2 * half);
    for (std::size_t j = 0; j < half; ++j) {
      const double prev = s1[(j + half - 1) % half];
      const double odd = d1[j] + kPredictCur * s1[j] + kPredictPrev * prev;
      next[2 * j + 1] = odd;
      next[2 * j] = s1[j] - kSqrt3 * odd;
    }
    cur = std::move(next);
  }
  return cur;
}

std::vector<double> symmetric_periodic_extension(std::span<const double> x, std::size_t levels) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t block = levels == 0 ? 1 : (std::size_t{1} << (levels - 1));
  const std::size_t half = ((n + block - 1) / block) * block;
  std::vector<double> y(2 * half);
  for (std::size_t i = 0; i < half; ++i) {
    std::size_t r = i % (2 * n);
    if (r >= n) r = 2 * n - 1 - r;
    y[i] = x[r];
    y[2 * half - 1 - i] = x[r];
  }
  return y;
}

}  // namespace osa::wavelet
