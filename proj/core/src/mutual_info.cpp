#include "osa/mutual_info.hpp"

#include "osa/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace osa {

std::size_t auto_bin_count(std::size_t n) {
  const auto b = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n) / 5.0)));
  return std::max<std::size_t>(2, b);
}

Partition equal_frequency_partition(std::span<const double> x, std::size_t bins) {
  const std::size_t n = x.size();
  if (bins == 0) bins = auto_bin_count(n);
  Partition p;
  p.cell.assign(n, 0);
  if (n == 0) return p;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::size_t rank = 0;
  int last_cell = -1;
  while (rank < n) {
    std::size_t end = rank + 1;
    while (end < n && x[order[end]] == x[order[rank]]) ++end;
    const auto cell = static_cast<int>((rank * bins) / n);
    for (std::size_t k = rank; k < end; ++k) p.cell[order[k]] = cell;
    if (cell != last_cell) {
      ++p.occupied;
      last_cell = cell;
    }
    rank = end;
  }
  p.cell_count = last_cell + 1;
  return p;
}

namespace {

// Sum of c * log2(c) over counts, accumulated in sorted order so the
// result does not depend on how the counts were enumerated.
double sum_c_log_c(std::vector<double> counts) {
  std::sort(counts.begin(), counts.end());
  double s = 0.0;
  for (double c : counts) {
    if (c > 0.0) s += c * std::log2(c);
  }
  return s;
}

std::vector<double> marginal_counts(const Partition& p) {
  std::vector<double> counts(static_cast<std::size_t>(p.cell_count), 0.0);
  for (int c : p.cell) counts[static_cast<std::size_t>(c)] += 1.0;
  return counts;
}

}  // namespace

double mutual_information_bits(const Partition& a, const Partition& b) {
  if (a.cell.size() != b.cell.size()) throw InvalidArgument("partitions differ in length");
  const std::size_t n = a.cell.size();
  if (n == 0 || a.occupied <= 1 || b.occupied <= 1) return 0.0;
  const auto nb = static_cast<std::size_t>(b.cell_count);
  const auto na = static_cast<std::size_t>(a.cell_count);
  std::vector<double> joint(na * nb, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    joint[static_cast<std::size_t>(a.cell[i]) * nb + static_cast<std::size_t>(b.cell[i])] += 1.0;
  }
  const double s_joint = sum_c_log_c(std::move(joint));
  const double s_a = sum_c_log_c(marginal_counts(a));
  const double s_b = sum_c_log_c(marginal_counts(b));
  const double nn = static_cast<double>(n);
  const double mi = std::log2(nn) + (s_joint - (s_a + s_b)) / nn;
  return std::max(0.0, mi);
}

double entropy_bits(const Partition& a) {
  const std::size_t n = a.cell.size();
  if (n == 0 || a.occupied <= 1) return 0.0;
  const double s_a = sum_c_log_c(marginal_counts(a));
  const double nn = static_cast<double>(n);
  return std::max(0.0, std::log2(nn) + (s_a - (s_a + s_a)) / nn);
}

double estimate_mi(std::span<const double> x, std::span<const double> y, std::size_t bins) {
  if (x.size() != y.size()) throw InvalidArgument("estimate_mi: series differ in length");
  if (x.size() < 10) throw InvalidArgument("estimate_mi: at least 10 observations required");
  return mutual_information_bits(equal_frequency_partition(x, bins), equal_frequency_partition(y, bins));
}

}  // namespace osa
