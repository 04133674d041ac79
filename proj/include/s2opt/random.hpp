#pragma once

#include <cstdint>

#include "s2opt/vector.hpp"

namespace s2opt {

/// Counter-based generator: draw k of stream s under seed is
/// splitmix64(seed ^ mix(s) + k). Streams are stable across platforms and
/// standard libraries, unlike std::normal_distribution.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  /// Uniform on (0, 1), never exactly 0.
  double uniform();
  double normal();
  /// Circular complex normal with E|z|^2 = 1.
  Complex complex_normal();

  /// Derive an independent stream, e.g. per realization or per purpose.
  CounterRng fork(std::uint64_t stream) const;

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

CVec random_complex_vector(std::size_t n, std::uint64_t seed);
CVec random_real_vector(std::size_t n, std::uint64_t seed);

}  // namespace s2opt
