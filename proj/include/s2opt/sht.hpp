#pragma once

// Spin-s spherical harmonic transforms on SphGrid.
//
// Harmonics follow the Condon-Shortley convention
//   sY_lm(theta, phi) = (-1)^s sqrt((2l+1)/4pi) d^l_{m,-s}(theta) e^{i m phi}.
//
// The four operators and their relations, with q_t the ring quadrature
// weight:
//   Y       (sht_forward):          f_lm = sum_tp q_t f(t,p) conj(Y_lm(t,p))
//   Y^-1    (sht_inverse):          f(t,p) = sum_lm f_lm Y_lm(t,p)
//   Y^dag   (sht_forward_adjoint):  q_t * (Y^-1 c)(t,p)
//   Y^-dag  (sht_inverse_adjoint):  sum_tp conj(Y_lm(t,p)) f(t,p)
// Y Y^-1 = I on bandlimited coefficients, but Y^dag != Y^-1 because the
// sampling is not orthogonal.
//
// The kernels separate the longitude sum (FFT per ring) from the colatitude
// sum (Wigner recursion per (ring, m)), for O(L^3) total work. Rings are
// distributed over OpenMP threads; every output element is accumulated in
// a fixed order, so results do not depend on the thread count.

#include <span>

#include "s2opt/grid.hpp"

namespace s2opt {

HarmonicCoeffs sht_forward(const SphMap& map);
SphMap sht_inverse(const HarmonicCoeffs& coeffs, const GridPtr& grid);
SphMap sht_forward_adjoint(const HarmonicCoeffs& coeffs, const GridPtr& grid);
HarmonicCoeffs sht_inverse_adjoint(const SphMap& map);

/// Raw kernels on flat buffers (map: grid.size(), coeffs: L^2).
void sht_synthesize(const SphGrid& grid, int spin, std::span<const Complex> coeffs, std::span<Complex> map);
/// weighted = true applies the quadrature (Y); false gives the adjoint of Y^-1.
void sht_analyze(const SphGrid& grid, int spin, std::span<const Complex> map, bool weighted,
                 std::span<Complex> coeffs);

/// Evaluate sY_lm at an arbitrary point.
Complex spin_harmonic(int s, int l, int m, double theta, double phi);

/// Throws spin-exceeds-bandlimit unless |s| < L.
void check_spin(int spin, int L);

namespace reference {

// Serial direct-summation transforms, O(L^4). Kept as an independent check
// on the factorized kernels and as the benchmark baseline.
void sht_synthesize(const SphGrid& grid, int spin, std::span<const Complex> coeffs, std::span<Complex> map);
void sht_analyze(const SphGrid& grid, int spin, std::span<const Complex> map, bool weighted,
                 std::span<Complex> coeffs);

/// Pointwise synthesis sum_lm f_lm sY_lm(theta, phi).
Complex evaluate(const HarmonicCoeffs& coeffs, double theta, double phi);

}  // namespace reference

}  // namespace s2opt
