#include "osa/error.hpp"
#include "osa/mi_select.hpp"
#include "osa/mutual_info.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>

namespace osa {
namespace {

// Random matrix with one informative column, noise, and optional copies.
FeatureMatrix make_matrix(Rng& rng, std::size_t rows, std::size_t noise, bool with_copy) {
  std::vector<std::string> names{"signal"};
  for (std::size_t j = 0; j < noise; ++j) names.push_back("noise" + std::to_string(j));
  if (with_copy) names.push_back("signal_copy");
  FeatureMatrix m(names);
  for (std::size_t i = 0; i < rows; ++i) {
    const int label = i % 2 == 0 ? kLabelApnoeic : kLabelNormal;
    std::vector<double> row;
    const double s = (label == kLabelApnoeic ? 1.5 : 0.0) + rng.normal();
    row.push_back(s);
    for (std::size_t j = 0; j < noise; ++j) row.push_back(rng.normal());
    if (with_copy) row.push_back(2.0 * s + 1.0);
    m.add_row(row, label);
  }
  return m;
}

// Greedy restatement: relevance minus mean NMI, ties to the smaller name,
// redundant (NMI = 1) candidates dropped, stop when the score is not positive.
std::vector<std::string> greedy_oracle(const FeatureMatrix& m, std::size_t k_max) {
  std::vector<double> lab;
  for (int l : m.labels()) lab.push_back(l);
  const std::size_t d = m.cols();
  std::vector<Partition> parts;
  for (std::size_t j = 0; j < d; ++j) parts.push_back(equal_frequency_partition(m.column(j)));
  std::vector<std::size_t> chosen;
  std::vector<bool> dropped(d, false);
  while (chosen.size() < k_max) {
    std::size_t best = d;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d; ++j) {
      if (dropped[j] || std::find(chosen.begin(), chosen.end(), j) != chosen.end()) continue;
      double score = estimate_mi(m.column(j), lab);
      if (!chosen.empty()) {
        double sum = 0.0;
        for (std::size_t s : chosen) {
          const double h = std::min(entropy_bits(parts[j]), entropy_bits(parts[s]));
          sum += h > 0.0 ? mutual_information_bits(parts[j], parts[s]) / h : 0.0;
        }
        score -= sum / static_cast<double>(chosen.size());
      }
      if (best == d || score > best_score + 1e-12 ||
          (std::abs(score - best_score) <= 1e-12 && m.names()[j] < m.names()[best])) {
        best = j;
        best_score = score;
      }
    }
    if (best == d || best_score <= 1e-12) break;
    chosen.push_back(best);
    for (std::size_t j = 0; j < d; ++j) {
      const double h = std::min(entropy_bits(parts[j]), entropy_bits(parts[best]));
      if (j != best && h > 0.0 && mutual_information_bits(parts[j], parts[best]) / h >= 1.0 - 1e-12) dropped[j] = true;
    }
  }
  std::vector<std::string> out;
  for (std::size_t j : chosen) out.push_back(m.names()[j]);
  return out;
}

TEST(ForwardSelect, LabelCopyComesFirst) {
  Rng rng(41);
  FeatureMatrix m({"a_noise", "label_copy", "z_noise"});
  for (int i = 0; i < 200; ++i) {
    const int label = static_cast<int>(rng.below(2));
    const std::vector<double> row{rng.normal(), static_cast<double>(label), rng.normal()};
    m.add_row(row, label);
  }
  const auto s = forward_select(m, 3);
  ASSERT_FALSE(s.features.empty());
  EXPECT_EQ(s.features.front().name, "label_copy");
  EXPECT_NEAR(s.features.front().score, 1.0, 0.01);
}

TEST(ForwardSelect, DuplicateIsNeverSelected) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const auto m = make_matrix(rng, 300, 6, true);
    const auto names = forward_select(m, m.cols()).names();
    const bool has_signal = std::find(names.begin(), names.end(), "signal") != names.end();
    const bool has_copy = std::find(names.begin(), names.end(), "signal_copy") != names.end();
    EXPECT_TRUE(has_signal || has_copy);
    EXPECT_FALSE(has_signal && has_copy) << "seed " << seed;
  }
}

TEST(ForwardSelect, FirstPickIsExhaustiveArgmax) {
  Rng rng(42);
  for (int t = 0; t < 20; ++t) {
    const auto m = make_matrix(rng, 200, 8, false);
    std::vector<double> lab;
    for (int l : m.labels()) lab.push_back(l);
    std::size_t best = 0;
    for (std::size_t j = 1; j < m.cols(); ++j) {
      const double a = estimate_mi(m.column(j), lab);
      const double b = estimate_mi(m.column(best), lab);
      if (a > b || (a == b && m.names()[j] < m.names()[best])) best = j;
    }
    EXPECT_EQ(forward_select(m, 1).features.at(0).name, m.names()[best]);
  }
}

TEST(ForwardSelect, MatchesGreedyRestatement) {
  Rng rng(43);
  for (int t = 0; t < 15; ++t) {
    const auto m = make_matrix(rng, 150 + 10 * t, 7, t % 2 == 0);
    EXPECT_EQ(forward_select(m, 6).names(), greedy_oracle(m, 6)) << "trial " << t;
  }
}

TEST(ForwardSelect, DeterministicAndPrefixStable) {
  Rng rng(44);
  const auto m = make_matrix(rng, 250, 10, false);
  const auto a = forward_select(m, 8);
  const auto b = forward_select(m, 8);
  EXPECT_EQ(to_csv(a), to_csv(b));
  const auto shorter = forward_select(m, 3).names();
  const auto longer = a.names();
  ASSERT_LE(shorter.size(), longer.size());
  EXPECT_TRUE(std::equal(shorter.begin(), shorter.end(), longer.begin()));
}

TEST(ForwardSelect, IgnoresUnlabeledRows) {
  Rng rng(45);
  auto m = make_matrix(rng, 200, 4, false);
  const auto before = forward_select(m, 4);
  const std::vector<double> junk{100.0, -5.0, 3.0, 7.0, 1.0};
  for (int i = 0; i < 30; ++i) m.add_row(junk, kLabelUnlabeled);
  EXPECT_EQ(to_csv(forward_select(m, 4)), to_csv(before));
}

TEST(ForwardSelect, Errors) {
  FeatureMatrix m({"a", "b"});
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> row{static_cast<double>(i), 1.0};
    m.add_row(row, kLabelNormal);
  }
  EXPECT_THROW(forward_select(m, 1), InvalidArgument);
  const std::vector<double> row{3.0, 2.0};
  m.add_row(row, kLabelApnoeic);
  EXPECT_THROW(forward_select(m, 3), InvalidArgument);
}

TEST(ForwardSelect, CsvRoundTrip) {
  Rng rng(46);
  auto m = make_matrix(rng, 200, 5, false);
  m.config_hash = "00ff00ff00ff00ff";
  const auto s = forward_select(m, 4);
  const auto back = selection_from_csv(to_csv(s));
  EXPECT_EQ(back.config_hash, s.config_hash);
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(back.features[i].name, s.features[i].name);
    EXPECT_EQ(back.features[i].score, s.features[i].score);
  }
  testing::TempDir dir;
  write_selection(s, dir / "sel.csv");
  EXPECT_EQ(to_csv(read_selection(dir / "sel.csv")), to_csv(s));
  EXPECT_THROW(selection_from_csv("rank,name,score\n2,a,0.1\n"), FormatError);
  EXPECT_THROW(selection_from_csv("nope\n"), FormatError);
}

}  // namespace
}  // namespace osa
