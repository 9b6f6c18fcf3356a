#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace osa {

// Equal-frequency (rank) partition of one variable. Tied values always
// share a cell, so discrete variables keep their natural categories.
struct Partition {
  std::vector<int> cell;   // cell index per observation
  int cell_count{0};       // highest index + 1
  int occupied{0};         // non-empty cells
};

// ceil(sqrt(n / 5)) cells per axis, at least 2.
std::size_t auto_bin_count(std::size_t n);

// bins == 0 selects auto_bin_count(x.size()).
Partition equal_frequency_partition(std::span<const double> x, std::size_t bins = 0);

// Plug-in mutual information (bits) of two partitions over the same
// observations. Exactly symmetric; 0 when either side has one cell.
double mutual_information_bits(const Partition& a, const Partition& b);

// Plug-in entropy (bits). Bitwise equal to mutual_information_bits(a, a).
double entropy_bits(const Partition& a);

// MI between two series. Requires |x| = |y| >= 10.
double estimate_mi(std::span<const double> x, std::span<const double> y, std::size_t bins = 0);

}  // namespace osa
