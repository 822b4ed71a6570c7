#include "heomfcs/special.hpp"

#include <cmath>
#include <stdexcept>

namespace heomfcs {

namespace {

// coth(y) = 1/y + sum_m a_m y^(2m-1), a_m = 2^(2m) B_{2m} / (2m)!.
constexpr double kCothSeries[] = {
    1.0 / 3.0,       -1.0 / 45.0,          2.0 / 945.0,         -1.0 / 4725.0,
    2.0 / 93555.0,   -1382.0 / 638512875.0, 4.0 / 18243225.0,
    -3617.0 / 162820783125.0};
constexpr int kCothSeriesTerms = 8;

double coth_derivative_series(int p, double y) {
  // d^p/dy^p [1/y] = (-1)^p p! y^{-(p+1)}
  double sign = (p % 2 == 0) ? 1.0 : -1.0;
  double pf = 1.0;
  for (int i = 2; i <= p; ++i) pf *= i;
  double out = sign * pf / std::pow(y, p + 1);
  for (int m = 1; m <= kCothSeriesTerms; ++m) {
    int e = 2 * m - 1;  // exponent of the series term
    if (e < p) continue;
    double c = kCothSeries[m - 1];
    for (int i = 0; i < p; ++i) c *= (e - i);
    out += c * std::pow(y, e - p);
  }
  return out;
}

double coth_derivative_poly(int p, double y) {
  // f_0 = coth, f' relation coth' = 1 - coth^2 closes derivatives as
  // polynomials in coth.  poly[k] multiplies coth^k.
  std::vector<double> poly(p + 2, 0.0);
  poly[1] = 1.0;
  for (int d = 0; d < p; ++d) {
    std::vector<double> next(p + 2, 0.0);
    for (int k = 0; k <= p + 1; ++k) {
      if (poly[k] == 0.0 || k == 0) continue;
      // d/dy coth^k = k coth^{k-1} (1 - coth^2)
      next[k - 1] += k * poly[k];
      next[k + 1] -= k * poly[k];
    }
    poly.swap(next);
  }
  double c = 1.0 / std::tanh(y);
  double out = 0.0;
  for (int k = p + 1; k >= 0; --k) out = out * c + poly[k];
  return out;
}

double coth_derivative_exp(int p, double y) {
  // coth(y) = 1 + 2 sum_{j>=1} exp(-2jy); term j contributes (-2j)^p.
  double out = (p == 0) ? 1.0 : 0.0;
  for (int j = 1; j <= 40; ++j) {
    double t = 2.0 * std::exp(-2.0 * j * y) * std::pow(-2.0 * j, p);
    out += t;
    if (std::abs(t) < 1e-300) break;
  }
  return out;
}

}  // namespace

double coth_derivative(int p, double y) {
  if (p < 0) throw std::invalid_argument("coth_derivative: p < 0");
  if (!(y > 0.0)) throw std::invalid_argument("coth_derivative: y <= 0");
  if (y < 0.5) return coth_derivative_series(p, y);
  if (y > 12.0) return coth_derivative_exp(p, y);
  return coth_derivative_poly(p, y);
}

double bose_occupation(double beta, double omega) {
  return 1.0 / std::expm1(beta * omega);
}

double bose_occupation_derivative(int p, double beta, double omega) {
  if (p == 0) return bose_occupation(beta, omega);
  // n = (coth(beta*omega/2) - 1)/2, so d^p/dbeta^p n = (omega/2)^p f_p / 2.
  return 0.5 * std::pow(0.5 * omega, p) * coth_derivative(p, 0.5 * beta * omega);
}

std::complex<double> bose_occupation(std::complex<double> beta, double omega) {
  return 1.0 / (std::exp(beta * omega) - 1.0);
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return std::round(out);
}

double stirling2(int n, int k) {
  if (n == 0 && k == 0) return 1.0;
  if (n <= 0 || k <= 0 || k > n) return 0.0;
  // S(n,k) = k S(n-1,k) + S(n-1,k-1)
  std::vector<double> row(n + 1, 0.0);
  row[0] = 1.0;  // S(0,0)
  for (int i = 1; i <= n; ++i) {
    for (int j = i; j >= 1; --j) row[j] = j * row[j] + row[j - 1];
    row[0] = 0.0;
  }
  return row[k];
}

double bell_number(int n) {
  double out = 0.0;
  for (int k = 0; k <= n; ++k) out += stirling2(n, k);
  return n == 0 ? 1.0 : out;
}

double factorial(int n) {
  double out = 1.0;
  for (int i = 2; i <= n; ++i) out *= i;
  return out;
}

}  // namespace heomfcs
