#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace osa::wavelet {

// Daubechies D4 (two vanishing moments) computed with the lifting scheme.

struct Level {
  std::vector<double> approx;
  std::vector<double> detail;
};

// One analysis step on a symmetrically padded signal (two mirrored samples
// each side, half-sample symmetry). Produces floor(n/2)+1 coefficients per
// band. Requires n >= 2.
Level analyze_symmetric(std::span<const double> x);

// Detail bands d[0] (finest) .. d[levels-1] from repeated symmetric
// analysis of the approximation.
std::vector<std::vector<double>> detail_bands(std::span<const double> x, std::size_t levels);

// Periodic transform, exactly invertible. x.size() must be a multiple of
// 2^levels.
struct Decomposition {
  std::vector<double> approx;               // coarsest approximation
  std::vector<std::vector<double>> details;  // details[0] finest
};

Decomposition forward_periodic(std::span<const double> x, std::size_t levels);
std::vector<double> inverse_periodic(const Decomposition& d);

// Symmetric extension to an even-symmetric sequence of length M, where
// M is the smallest multiple of 2^levels with M >= 2*n. The sequence is
// continuous across the periodic wrap, so periodic analysis of it behaves
// like a symmetric-boundary transform of x. The first n samples equal x.
std::vector<double> symmetric_periodic_extension(std::span<const double> x, std::size_t levels);

}  // namespace osa::wavelet
