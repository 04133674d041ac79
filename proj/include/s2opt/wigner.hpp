#pragma once

#include <vector>

namespace s2opt {

/// Closed form for d^l_{mn}(beta) at the lowest admissible degree
/// l = max(|m|, |n|), evaluated in log space so large degrees do not overflow.
double wigner_d_seed(int m, int n, double beta);

/// Fill out[l] = d^l_{mn}(beta) for 0 <= l < L (zero below max(|m|, |n|))
/// using the three-term recursion in l.
void wigner_d_column(int L, int m, int n, double beta, double* out);

/// Full (2l+1)x(2l+1) matrix, row-major, entry (m, n) at (m+l)*(2l+1) + (n+l).
/// Throws invalid-parameter for l < 0 or beta outside [0, pi].
std::vector<double> wigner_d(int l, double beta);

/// d^l(beta) for every l < L, each laid out as wigner_d(l, beta).
std::vector<std::vector<double>> wigner_d_all(int L, double beta);

}  // namespace s2opt
