#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace osa {

// Deterministic 64-bit generator (splitmix64 seeding a xoshiro256**).
// The standard <random> distributions are implementation-defined, so all
// sampling used for training and synthesis goes through this type to keep
// artifacts byte-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  double normal();

  template <typename T>
  void shuffle(std::span<T> v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent stream seed, e.g. for the i-th bagging member.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace osa
