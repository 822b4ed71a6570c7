#ifndef HEOMFCS_EXPFIT_HPP
#define HEOMFCS_EXPFIT_HPP

#include <vector>

#include "heomfcs/types.hpp"

namespace heomfcs {

// Pole estimation for f(t) ~ sum_r c_r exp(g_r t) from uniform samples
// f(k dt), k = 0..N-1, via the matrix pencil method.  Real and imaginary
// channels are stacked so the pencil matrix is real and the recovered pole
// set is closed under conjugation.  Poles are clamped to Re g <= 0 and
// |unit-step growth| <= 1.  Returns at most max_terms poles; fewer when the
// singular value spectrum collapses earlier (rank cut at 1e-12 of the top
// singular value).
std::vector<Complex> estimate_poles(const std::vector<Complex>& samples,
                                    double dt, int max_terms);

// Least squares amplitudes for fixed poles on the same sample grid.
std::vector<Complex> fit_coefficients(const std::vector<Complex>& samples,
                                      double dt,
                                      const std::vector<Complex>& poles);

// max_k |f_k - sum_r c_r exp(g_r t_k)|
double fit_residual(const std::vector<Complex>& samples, double dt,
                    const std::vector<Complex>& poles,
                    const std::vector<Complex>& coeffs);

// Sorts poles into a canonical order (by Re descending, then |Im|, then
// Im >= 0 before Im < 0) and pairs each pole with its conjugate partner.
// Nearly-real poles (|Im| below tol * scale) are snapped onto the real axis
// and become their own partner.  Complex poles lacking a partner get one
// appended.  Returns the pairing permutation: pair[r] = index of conj pole.
std::vector<int> symmetrize_poles(std::vector<Complex>& poles,
                                  double imag_snap_tol = 1e-8);

}  // namespace heomfcs

#endif
