#include "s2opt/random.hpp"

#include <cmath>
#include <numbers>

namespace s2opt {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(splitmix64(seed) ^ splitmix64(stream * 0xD1B54A32D192ED03ULL + 1)) {}

std::uint64_t CounterRng::next_u64() { return splitmix64(key_ + 0x632BE59BD9B4E019ULL * counter_++); }

double CounterRng::uniform() {
  // 53 random mantissa bits, shifted off zero.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

Complex CounterRng::complex_normal() {
  const double re = normal();
  const double im = normal();
  return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
}

CounterRng CounterRng::fork(std::uint64_t stream) const {
  CounterRng child(key_, stream);
  return child;
}

CVec random_complex_vector(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  CVec v(n);
  for (auto& z : v) z = rng.complex_normal();
  return v;
}

CVec random_real_vector(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  CVec v(n);
  for (auto& z : v) z = rng.normal();
  return v;
}

}  // namespace s2opt
