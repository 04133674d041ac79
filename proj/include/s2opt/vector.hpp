#pragma once

// Dense complex vectors and the handful of BLAS-1 style helpers the
// operators and solvers share. Reductions run serially in index order so
// results do not depend on the thread count.

#include <complex>
#include <span>
#include <vector>

namespace s2opt {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;
using RVec = std::vector<double>;

/// Euclidean inner product <a, b> = sum conj(a_i) b_i.
Complex dot(std::span<const Complex> a, std::span<const Complex> b);
double norm2_squared(std::span<const Complex> a);
double norm2(std::span<const Complex> a);
double max_abs(std::span<const Complex> a);

/// y += alpha * x
void axpy(Complex alpha, std::span<const Complex> x, std::span<Complex> y);
CVec scaled(std::span<const Complex> x, Complex alpha);
CVec add(std::span<const Complex> a, std::span<const Complex> b);
CVec subtract(std::span<const Complex> a, std::span<const Complex> b);

}  // namespace s2opt
