#ifndef HEOMFCS_SPECIAL_HPP
#define HEOMFCS_SPECIAL_HPP

#include <complex>
#include <cstdint>
#include <vector>

namespace heomfcs {

// p-th derivative of coth(y) with respect to y, p >= 0, y > 0.
// Three branches keep relative accuracy ~1e-12 across the whole axis:
// Laurent series near 0, polynomial-in-coth recursion in the middle,
// exponential series for large y where the polynomial form cancels badly.
double coth_derivative(int p, double y);

// p-th derivative of the Bose occupation n(beta) = 1/(exp(beta*omega)-1)
// with respect to beta.  n = (coth(beta*omega/2) - 1)/2.
double bose_occupation(double beta, double omega);
double bose_occupation_derivative(int p, double beta, double omega);

// Bose occupation continued to complex inverse temperature (single-measurement
// tilts evaluate thermal weights at beta - i*chi).
std::complex<double> bose_occupation(std::complex<double> beta, double omega);

// Exact binomial coefficients as double (n <= 60 fits without rounding).
double binomial(int n, int k);

// Stirling numbers of the second kind S(n, k), exact in double for n <= 20.
double stirling2(int n, int k);

// Bell number B(n) = sum_k S(n, k).
double bell_number(int n);

double factorial(int n);

}  // namespace heomfcs

#endif
