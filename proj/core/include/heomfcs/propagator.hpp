#ifndef HEOMFCS_PROPAGATOR_HPP
#define HEOMFCS_PROPAGATOR_HPP

#include <iosfwd>
#include <vector>

#include "heomfcs/correlation.hpp"
#include "heomfcs/hierarchy.hpp"
#include "heomfcs/model.hpp"
#include "heomfcs/types.hpp"

namespace heomfcs {

enum class PropagationMode { MomentCascade, ChiResolved };

struct IntegratorOptions {
  double dt = 0.002;
  double t_end = 10.0;
  int output_stride = 5;  // snapshot every stride steps
  bool adaptive = false;  // step-halving error control around RK4
  double adaptive_tol = 1e-8;
  int workers = 1;
};

struct Snapshot {
  double t = 0.0;
  // n = 0 field of every derivative sector, sector-ordered
  std::vector<ComplexMatrix> top;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  std::vector<Complex> cgf;  // ChiResolved only: branch-tracked log trace
  int steps_taken = 0;
  int rhs_evaluations = 0;
};

// Right-hand side and integrator for the coupled auxiliary fields.  State
// layout is a flat complex array, field (sector, off) at
// (sector * n_count + off) * d^2, row-major d x d inside.
//
// d sigma/dt = -i [H, sigma]
//              + sum_s n_s g_s sigma                       (damping)
//              - sum_s (alpha_s V sigma^+s + beta_s sigma^+s V)
//              + sum_s n_s (side_s V) sigma^-s             (lowering)
//              - sum_q m_q sum_s (alpha_s^(q) V sigma'^+s + ...)
// where sigma^+s / sigma^-s raise / lower slot s and sigma' lives in the
// sector with one size-q block removed.  Basis functions are exponentials,
// so the damping matrix is diagonal.
class Propagator {
 public:
  Propagator(const SystemModel& model, const ExpansionBasis& basis,
             const CoeffTables& tables, const IndexSpace& space,
             PropagationMode mode);

  std::vector<Complex> initial_state() const;
  void rhs(const std::vector<Complex>& state, std::vector<Complex>& out,
           int workers = 1) const;

  // Advances `state` in place from t_start, collecting snapshots on the
  // stride grid (snapshot 0 is the initial state).  Throws numerical_error
  // when non-finite values appear or adaptive stepping stalls.
  Trajectory integrate(std::vector<Complex>& state, double t_start,
                       const IntegratorOptions& opts) const;

  void save_checkpoint(std::ostream& os, const std::vector<Complex>& state,
                       double t) const;
  double load_checkpoint(std::istream& is, std::vector<Complex>& state) const;

  const IndexSpace& space() const { return space_; }
  int dim() const { return d_; }
  size_t state_size() const;
  Complex top_trace(const std::vector<Complex>& state, int sector) const;

 private:
  void rhs_range(const Complex* state, Complex* out, int field_begin,
                 int field_end) const;
  void collect(const std::vector<Complex>& state, double t,
               Trajectory& traj) const;

  const IndexSpace& space_;
  PropagationMode mode_;
  int d_ = 0;
  int q_max_ = 0;
  bool fast_two_level_ = false;
  ComplexMatrix h_sys_;
  std::vector<ComplexMatrix> couplings_;  // per slot, the bath's V
  ComplexMatrix rho0_;
  std::vector<Complex> damp_;              // per n-offset
  std::vector<Complex> slot_g_;            // per slot
  std::vector<int> slot_side_;             // k of each slot
  std::vector<int> slot_bath_;
  // raise weights per (q, slot): alpha multiplies V sigma', beta sigma' V;
  // fast path keeps alpha+beta and alpha-beta instead.
  std::vector<Complex> alpha_, beta_, sum_, diff_;
  // per sector: flattened (q, m_q, target sector) triples
  std::vector<std::vector<int>> cascade_q_, cascade_mq_, cascade_sec_;
};

}  // namespace heomfcs

#endif
