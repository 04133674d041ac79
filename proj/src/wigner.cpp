#include "s2opt/wigner.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>

#include "s2opt/error.hpp"

namespace s2opt {
namespace {

// d^j_{jm}(beta) = sqrt(C(2j, j+m)) cos(b/2)^{j+m} (-sin(b/2))^{j-m}
double top_row(int j, int m, double beta) {
  const double c = std::cos(0.5 * beta);
  const double s = std::sin(0.5 * beta);
  const int pc = j + m;
  const int ps = j - m;
  if ((pc > 0 && c == 0.0) || (ps > 0 && s == 0.0)) return 0.0;
  double log_mag = 0.5 * (std::lgamma(2.0 * j + 1.0) - std::lgamma(pc + 1.0) - std::lgamma(ps + 1.0));
  if (pc > 0) log_mag += pc * std::log(std::abs(c));
  if (ps > 0) log_mag += ps * std::log(std::abs(s));
  double sign = 1.0;
  if (c < 0.0 && (pc % 2) != 0) sign = -sign;
  if ((ps % 2) != 0 && s > 0.0) sign = -sign;
  return sign * std::exp(log_mag);
}

double parity(int k) { return (std::abs(k) % 2 == 0) ? 1.0 : -1.0; }

}  // namespace

double wigner_d_seed(int m, int n, double beta) {
  const int j = std::max(std::abs(m), std::abs(n));
  // Reduce to the top row with d_{mn} = (-1)^{m-n} d_{nm} = d_{-n,-m}.
  if (m == j) return top_row(j, n, beta);
  if (m == -j) return parity(n + j) * top_row(j, -n, beta);
  if (n == j) return parity(m - j) * top_row(j, m, beta);
  return top_row(j, -m, beta);  // n == -j
}

void wigner_d_column(int L, int m, int n, double beta, double* out) {
  const int l0 = std::max(std::abs(m), std::abs(n));
  for (int l = 0; l < std::min(l0, L); ++l) out[l] = 0.0;
  if (l0 >= L) return;
  const double cb = std::cos(beta);
  const double mn = static_cast<double>(m) * n;
  const double m2 = static_cast<double>(m) * m;
  const double n2 = static_cast<double>(n) * n;
  double prev = 0.0;
  double cur = wigner_d_seed(m, n, beta);
  out[l0] = cur;
  for (int j = l0; j + 1 < L; ++j) {
    const double jp = j + 1.0;
    const double denom = std::sqrt((jp * jp - m2) * (jp * jp - n2));
    const double a = jp * (2.0 * j + 1.0) / denom;
    const double shift = (j == 0) ? 0.0 : mn / (static_cast<double>(j) * jp);
    double next = a * (cb - shift) * cur;
    if (j > l0) {
      const double jj = static_cast<double>(j) * j;
      next -= jp * std::sqrt((jj - m2) * (jj - n2)) / (j * denom) * prev;
    }
    prev = cur;
    cur = next;
    out[j + 1] = cur;
  }
}

std::vector<std::vector<double>> wigner_d_all(int L, double beta) {
  require(L >= 0, ErrorCode::invalid_parameter, "wigner_d_all: negative bandlimit");
  require(beta >= 0.0 && beta <= std::numbers::pi + 1e-14, ErrorCode::invalid_parameter,
          "wigner_d: beta outside [0, pi]");
  std::vector<std::vector<double>> out(L);
  for (int l = 0; l < L; ++l) out[l].assign(static_cast<std::size_t>(2 * l + 1) * (2 * l + 1), 0.0);
  std::vector<double> col(L);
  for (int m = -(L - 1); m <= L - 1; ++m) {
    for (int n = -(L - 1); n <= L - 1; ++n) {
      wigner_d_column(L, m, n, beta, col.data());
      for (int l = std::max(std::abs(m), std::abs(n)); l < L; ++l) {
        out[l][static_cast<std::size_t>(m + l) * (2 * l + 1) + (n + l)] = col[l];
      }
    }
  }
  return out;
}

std::vector<double> wigner_d(int l, double beta) {
  require(l >= 0, ErrorCode::invalid_parameter, "wigner_d: negative degree " + std::to_string(l));
  require(beta >= 0.0 && beta <= std::numbers::pi + 1e-14, ErrorCode::invalid_parameter,
          "wigner_d: beta outside [0, pi]");
  const int dim = 2 * l + 1;
  std::vector<double> d(static_cast<std::size_t>(dim) * dim);
  std::vector<double> col(l + 1);
  for (int m = -l; m <= l; ++m) {
    for (int n = -l; n <= l; ++n) {
      wigner_d_column(l + 1, m, n, beta, col.data());
      d[static_cast<std::size_t>(m + l) * dim + (n + l)] = col[l];
    }
  }
  return d;
}

}  // namespace s2opt
