#ifndef HEOMFCS_CORRELATION_HPP
#define HEOMFCS_CORRELATION_HPP

#include <array>
#include <iosfwd>
#include <vector>

#include "heomfcs/model.hpp"
#include "heomfcs/types.hpp"

namespace heomfcs {

// Bath autocorrelation C(t) = <B(t) B(0)> in the bath's own thermal state,
// B = sum_k gamma_k (a_k + a_k^dag).  Continuum families integrate
// J(w) [coth(beta w / 2) cos(w t) - i sin(w t)]; the Drude-Lorentz C(0) is
// log-divergent and rejected.
Complex bare_correlation(const BathModel& bath, double t);

// p-th derivative of C(t) with respect to inverse temperature (p >= 0).
Complex bare_correlation_dbeta(const BathModel& bath, int p, double t);

// C evaluated in a thermal state at complex inverse temperature beta_arg
// (occupations n(beta_arg, w)); Re beta_arg > 0.
Complex bare_correlation_tilted(const BathModel& bath, Complex beta_arg,
                                double t);

struct DecomposeOptions {
  int max_terms = 6;    // pole budget (Drude-Lorentz: Matsubara count + 1)
  double window = 0.0;  // fit window; <= 0 selects from bath scales
  int samples = 0;      // sample count; <= 0 selects from bath scales
  int deriv_orders = 3; // beta-derivative stacks kept for the cascade
  double warn_rel_residual = 1e-3;
};

// One bath's frozen expansion C(t) ~ sum_r c_r exp(g_r t), t >= 0, with the
// pole set closed under conjugation and beta-derivative coefficient stacks
// projected onto the same (frozen) poles.
struct BathBasis {
  BathFamily family = BathFamily::Discrete;
  std::vector<Complex> exponents;
  std::vector<int> conj_pair;
  // dbeta_c00[p][r]: coefficients of d^p/d beta^p C(t); p = 0 is C itself.
  std::vector<std::vector<Complex>> dbeta_c00;
  double fit_residual = 0.0;
  double fit_scale = 0.0;
  double grid_t0 = 0.0, grid_dt = 0.0;
  int grid_samples = 0;

  int terms() const { return static_cast<int>(exponents.size()); }
};

BathBasis decompose(const BathModel& bath, const DecomposeOptions& opts);

struct ExpansionBasis {
  std::vector<BathBasis> baths;
  std::vector<int> slot_base;  // slot offset per bath; 2 slots per term

  int total_slots() const;
  int slot(int nu, int r, int k) const { return slot_base[nu] + 2 * r + k; }
  int bath_of_slot(int s) const;
};

ExpansionBasis build_basis(const SystemModel& model,
                           const DecomposeOptions& opts);

// sum_r coeffs[r] exp(g_r t)
Complex basis_eval(const BathBasis& basis, const std::vector<Complex>& coeffs,
                   double t);

// Coefficients of the two same-side correlator components on the frozen
// poles, with thermal occupations taken at (complex) inverse temperature
// beta_arg: c00 expands C_A(t), c11 expands C_A(-t).  At real beta_arg = beta
// these obey c11[r] = conj(c00[conj_pair[r]]).
struct ComponentCoeffs {
  std::vector<Complex> c00, c11;
};
ComponentCoeffs component_coefficients(const BathModel& bath,
                                       const BathBasis& basis,
                                       Complex beta_arg);

// Beta-derivative stacks re-projected at a shifted real inverse temperature
// (frozen poles).  Result[p][r], p = 0..p_max.
std::vector<std::vector<Complex>> projected_dbeta_stacks(const BathModel& bath,
                                                         const BathBasis& basis,
                                                         double beta_arg,
                                                         int p_max);

// Raise-term operator weights per slot.  alpha[q] multiplies V sigma',
// beta[q] multiplies sigma' V; q = 0 is the ordinary raise and q >= 1 the
// moment-cascade stack (counting-derivative order).  Uncounted baths carry
// zeros for q >= 1.
struct CoeffTables {
  struct Slot {
    std::vector<Complex> alpha, beta;
  };
  std::vector<std::vector<std::array<Slot, 2>>> slots;  // [nu][r][k]
  int q_max = 0;
};

// Tables for the moment cascade (chi = 0).  counted_beta overrides the
// counted bath's inverse temperature when > 0 (coefficients re-projected on
// the frozen poles; exponents unchanged), which keeps a finite-difference
// beta stencil inside one simulated bath family.
CoeffTables cascade_coefficients(const SystemModel& model,
                                 const ExpansionBasis& basis, int q_max,
                                 double counted_beta = 0.0);

// Tables at finite counting field chi (complex allowed).  TwoPoint scheme
// takes the counted bath at thermal argument beta + beta_shift; Single
// scheme tilts it to beta - i chi internally (beta_shift must then be 0).
CoeffTables chi_coefficients(const SystemModel& model,
                             const ExpansionBasis& basis, Complex chi,
                             Complex beta_shift = Complex{0.0, 0.0});

void dump_basis(const ExpansionBasis& basis, std::ostream& os);
ExpansionBasis restore_basis(std::istream& is);

}  // namespace heomfcs

#endif
