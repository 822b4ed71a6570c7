#ifndef HEOMFCS_QUADRATURE_HPP
#define HEOMFCS_QUADRATURE_HPP

#include <functional>

#include "heomfcs/types.hpp"

namespace heomfcs {

// Composite 16-point Gauss-Legendre with panel doubling until the value
// stabilizes.  min_panels should resolve the fastest oscillation of the
// integrand (roughly one period per panel is already very accurate).
// Throws numerical_error when doubling stops converging.
Complex integrate_composite(const std::function<Complex(double)>& f, double a,
                            double b, double rel_tol = 1e-11,
                            double abs_tol = 1e-14, int min_panels = 16);

// integral_a^infinity f(w) exp(-i w t) dw for smooth, slowly decaying f and
// t > 0.  Half-period panels summed with an Euler transform; requires the
// caller to choose `a` large enough that f is monotone-ish beyond it
// (a * t >= ~6 keeps panel widths small relative to a).
Complex integrate_oscillatory_tail(const std::function<Complex(double)>& f,
                                   double a, double t, double rel_tol = 1e-11,
                                   double abs_tol = 1e-14);

}  // namespace heomfcs

#endif
