#include "s2opt/vector.hpp"

#include <cmath>

#include "s2opt/error.hpp"

namespace s2opt {

Complex dot(std::span<const Complex> a, std::span<const Complex> b) {
  require(a.size() == b.size(), ErrorCode::dimension_error, "dot: length mismatch");
  Complex acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

double norm2_squared(std::span<const Complex> a) {
  double acc = 0.0;
  for (const auto& v : a) acc += std::norm(v);
  return acc;
}

double norm2(std::span<const Complex> a) { return std::sqrt(norm2_squared(a)); }

double max_abs(std::span<const Complex> a) {
  double m = 0.0;
  for (const auto& v : a) m = std::max(m, std::abs(v));
  return m;
}

void axpy(Complex alpha, std::span<const Complex> x, std::span<Complex> y) {
  require(x.size() == y.size(), ErrorCode::dimension_error, "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

CVec scaled(std::span<const Complex> x, Complex alpha) {
  CVec out(x.begin(), x.end());
  for (auto& v : out) v *= alpha;
  return out;
}

CVec add(std::span<const Complex> a, std::span<const Complex> b) {
  require(a.size() == b.size(), ErrorCode::dimension_error, "add: length mismatch");
  CVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

CVec subtract(std::span<const Complex> a, std::span<const Complex> b) {
  require(a.size() == b.size(), ErrorCode::dimension_error, "subtract: length mismatch");
  CVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

}  // namespace s2opt
