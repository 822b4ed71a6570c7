#ifndef HEOMFCS_ORACLE_HPP
#define HEOMFCS_ORACLE_HPP

#include <vector>

#include "heomfcs/model.hpp"
#include "heomfcs/types.hpp"

namespace heomfcs {

// Exact reference for models whose baths are all Discrete: the closed
// system + truncated Fock modes are diagonalized once and every generating
// function is evaluated in the eigenbasis.  Truncation is controlled by the
// per-mode Fock cutoff; top_level_weight measures its adequacy.
class FiniteModeSystem {
 public:
  FiniteModeSystem(const SystemModel& model, int fock_cutoff);

  int dim() const { return dim_; }
  int fock_cutoff() const { return cutoff_; }

  // Counting-field generating function on a uniform time grid.
  //   TwoPoint: G = ln tr[U^dag e^{i chi O} U e^{-i chi O} pi(A)]
  //   Single:   G = ln tr[U^dag e^{i chi O} U pi] - ln tr[e^{i chi O} pi]
  // O is the counted bath's energy; A = counted_beta (complex allowed)
  // replaces the counted bath's inverse temperature inside pi.  The log is
  // branch-tracked along the grid.
  std::vector<Complex> exact_cgf(MeasurementScheme scheme, Complex chi,
                                 const std::vector<double>& ts,
                                 Complex counted_beta) const;
  std::vector<Complex> exact_cgf(MeasurementScheme scheme, Complex chi,
                                 const std::vector<double>& ts) const;

  // First two moments of the two-measurement distribution, assembled from
  // the projector algebra (no counting field involved).
  struct ProjectiveMoments {
    double mu1 = 0.0, mu2 = 0.0;
  };
  ProjectiveMoments projective_moments(double t) const;

  // Same moments from chi finite differences of exp(G); h is the stencil
  // step.  Agreement with projective_moments validates the generating
  // function end to end.
  ProjectiveMoments fd_moments(double t, double h) const;

  // max over the grid of the population carried by states with any mode at
  // the highest retained Fock level
  double top_level_weight(const std::vector<double>& ts) const;

  // max_t | G_single(chi, t) - G_twopoint(chi, t; beta - i chi) |
  double scheme_identity_residual(Complex chi,
                                  const std::vector<double>& ts) const;

 private:
  ComplexMatrix assemble_pi(Complex counted_beta) const;
  std::vector<Complex> trace_series(const ComplexMatrix& m1,
                                    const ComplexMatrix& m2,
                                    const std::vector<double>& ts) const;

  int dim_ = 0, sys_dim_ = 0, cutoff_ = 0;
  std::vector<double> mode_omega_;
  std::vector<int> mode_bath_;
  int counted_bath_ = -1;
  double counted_beta_ = 0.0;
  std::vector<double> bath_beta_;
  std::vector<double> observable_;  // counted-bath energy, product diagonal
  ComplexMatrix rho0_;
  RealVector energies_;
  ComplexMatrix evecs_;
};

// Born-Markov secular reference for a two-level system coupled to continuum
// baths: golden-rule rates at the system gap, steady current into the
// counted bath, and its thermal linear-response coefficient
// kappa = beta^2 dI/d beta_counted at the equal-temperature point.
struct WeakCouplingReference {
  double gap = 0.0;
  double rate_up = 0.0, rate_down = 0.0;
  double current = 0.0;  // at the model's own temperatures
  double kappa = 0.0;
};

WeakCouplingReference weak_coupling_reference(const SystemModel& model);

}  // namespace heomfcs

#endif
