#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include "mnemoseq/matrix.hpp"

namespace mnemoseq {

// splitmix64 step; used to derive independent sub-seeds (per epoch, per batch)
// from one master seed without correlated streams.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return mix_seed(a ^ mix_seed(b));
}

// mt19937 engine with hand-rolled output mapping. The standard distributions
// are implementation-defined, so sampling goes through fixed arithmetic here
// to keep runs byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed)
      : engine_(static_cast<std::uint32_t>(mix_seed(seed) & 0xffffffffull)) {}

  std::uint32_t next_u32() { return engine_(); }

  std::uint64_t next_u64() {
    std::uint64_t hi = engine_();
    std::uint64_t lo = engine_();
    return (hi << 32) | lo;
  }

  // [0, 1) with 53 random bits
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // [0, n); n must be positive
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(next_u64() % n);
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Fisher-Yates
  template <typename It>
  void shuffle(It begin, It end) {
    const auto n = static_cast<std::size_t>(end - begin);
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = index(i);
      using std::swap;
      swap(begin[i - 1], begin[j]);
    }
  }

  // Fills row by row, matching storage order.
  template <typename Scalar>
  void fill_uniform(Mat<Scalar>& m, double lo, double hi) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        m(i, j) = static_cast<Scalar>(uniform(lo, hi));
  }

 private:
  std::mt19937 engine_;
};

}  // namespace mnemoseq
