#include "osa/error.hpp"
#include "osa/mutual_info.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace osa {
namespace {

// Draws n pairs from a discrete joint table (rows X, columns Y).
std::pair<std::vector<double>, std::vector<double>> sample_joint(Rng& rng, const std::vector<std::vector<double>>& joint,
                                                                 std::size_t n) {
  std::vector<double> x, y;
  for (std::size_t k = 0; k < n; ++k) {
    double u = rng.uniform();
    std::size_t i = 0, j = 0;
    for (bool done = false; !done && i < joint.size(); ++i) {
      for (j = 0; j < joint[i].size(); ++j) {
        u -= joint[i][j];
        if (u < 0.0) {
          done = true;
          break;
        }
      }
      if (done) break;
    }
    if (i == joint.size()) {
      i = joint.size() - 1;
      j = joint[i].size() - 1;
    }
    x.push_back(static_cast<double>(i));
    y.push_back(static_cast<double>(j));
  }
  return {x, y};
}

TEST(MutualInfo, CopyOfBalancedBinaryIsOneBit) {
  std::vector<double> x;
  for (int i = 0; i < 1000; ++i) x.push_back(i % 2);
  EXPECT_NEAR(estimate_mi(x, x, 2), 1.0, 1e-12);
}

TEST(MutualInfo, IndependentCoins) {
  Rng rng(31);
  std::vector<double> a, b;
  for (int i = 0; i < 20000; ++i) {
    a.push_back(static_cast<double>(rng.below(2)));
    b.push_back(static_cast<double>(rng.below(2)));
  }
  EXPECT_LE(estimate_mi(a, b), 0.02);
  EXPECT_GE(estimate_mi(a, b), 0.0);
}

TEST(MutualInfo, AnalyticJoint) {
  const std::vector<std::vector<double>> joint{{0.4, 0.1}, {0.1, 0.4}};
  const double want = oracle::analytic_mi(joint);
  EXPECT_NEAR(want, 0.278, 5e-4);
  Rng rng(32);
  const auto [x, y] = sample_joint(rng, joint, 100000);
  EXPECT_NEAR(estimate_mi(x, y), want, 0.02);
}

TEST(MutualInfo, SymmetricAndEntropyConsistent) {
  Rng rng(33);
  for (int t = 0; t < 50; ++t) {
    const auto x = testing::normal_vector(rng, 300);
    auto y = x;
    for (auto& v : y) v = v * v + rng.normal();
    EXPECT_EQ(estimate_mi(x, y), estimate_mi(y, x));
    const auto p = equal_frequency_partition(x);
    EXPECT_EQ(entropy_bits(p), mutual_information_bits(p, p));
  }
}

TEST(MutualInfo, InvariantUnderMonotoneMaps) {
  Rng rng(34);
  const auto x = testing::normal_vector(rng, 500);
  std::vector<double> y(x.size()), fx(x.size()), gy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::sin(x[i]) + 0.3 * rng.normal();
    fx[i] = std::exp(x[i]);
    gy[i] = 3.0 * y[i] * y[i] * y[i] - 7.0;
  }
  EXPECT_EQ(estimate_mi(x, y), estimate_mi(fx, gy));
}

TEST(MutualInfo, PartitionKeepsTiesTogether) {
  const std::vector<double> v{3, 1, 1, 1, 2, 2, 3, 3, 1, 2, 5, 5};
  const auto p = equal_frequency_partition(v, 3);
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[i] == v[j]) {
        EXPECT_EQ(p.cell[i], p.cell[j]);
      }
      if (v[i] < v[j]) {
        EXPECT_LE(p.cell[i], p.cell[j]);
      }
    }
  }
}

TEST(MutualInfo, AutoBinsAndErrors) {
  EXPECT_EQ(auto_bin_count(10), 2u);
  EXPECT_EQ(auto_bin_count(500), 10u);
  EXPECT_EQ(auto_bin_count(501), 11u);
  std::vector<double> a(9, 1.0), b(9, 2.0);
  EXPECT_THROW(estimate_mi(a, b), InvalidArgument);
  std::vector<double> c(12, 1.0), d(11, 1.0);
  EXPECT_THROW(estimate_mi(c, d), InvalidArgument);
  EXPECT_EQ(estimate_mi(c, c), 0.0);
}

}  // namespace
}  // namespace osa
