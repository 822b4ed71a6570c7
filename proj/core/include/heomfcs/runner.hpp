#ifndef HEOMFCS_RUNNER_HPP
#define HEOMFCS_RUNNER_HPP

#include <string>
#include <vector>

#include "heomfcs/config.hpp"
#include "heomfcs/correlation.hpp"
#include "heomfcs/statistics.hpp"

namespace heomfcs {

// One cascade propagation at a fixed truncation, post-processed to moment
// and cumulant series on the output grid.
struct TransientResult {
  MomentSeries moments;
  CumulantSeries cumulants;
  int n_max_used = 0;
  bool converged = true;
  double worst_rel_change = 0.0;  // escalation metric of the last rung
};

TransientResult run_transient_fixed(const SystemModel& model,
                                    const ExpansionBasis& basis,
                                    const NumericsConfig& num, int n_max,
                                    int m_max, double counted_beta = 0.0);

// Escalates the truncation by n_max_step until every cumulant order moves
// by less than escalation_tol (relative, over the whole series) or the cap
// is hit; converged=false on a capped run.
TransientResult run_transient(const SystemModel& model,
                              const ExpansionBasis& basis,
                              const NumericsConfig& num, int m_max,
                              double counted_beta = 0.0);

// Cumulant series at counted-bath inverse temperatures beta + mult * delta
// on a shared frozen basis, all at the same fixed truncation.  Multiples
// are {0, +-1/2, +-1} and, when m_hi >= 3, {+-2}.
BetaFamily build_beta_family(const SystemModel& model,
                             const ExpansionBasis& basis,
                             const NumericsConfig& num, int n_max, int n_hi,
                             int m_hi);

// Counting-field-resolved CGF at one real chi, escalated like the cascade.
struct ChiResult {
  double chi = 0.0;
  std::vector<double> t;
  std::vector<Complex> g;
  int n_max_used = 0;
  bool converged = true;
};

ChiResult run_chi_point(const SystemModel& model, const ExpansionBasis& basis,
                        const NumericsConfig& num, double chi);

struct ConductancePoint {
  double parameter = 0.0;
  double kappa_bias = 0.0;   // beta^2 d/dt d_beta kappa_1, trailing plateau
  double kappa_fluct = 0.0;  // (beta^2/2) d/dt (kappa_2 - kappa_S2), plateau
  double kappa_weak = 0.0;   // golden-rule reference (0 for discrete baths)
  double plateau_wobble_bias = 0.0;
  double plateau_wobble_fluct = 0.0;
  bool plateau_bias = false;
  bool plateau_fluct = false;
  int n_max_used = 0;
  bool converged = true;
};

ConductancePoint conductance_point(const SystemModel& model,
                                   const NumericsConfig& num);

// Full-mode entry point: runs the configured mode and writes its artifacts
// (CSV + JSON sidecar carrying the config hash and convergence status) into
// cfg.out_dir.  Non-convergence is reported, not thrown, so partial results
// reach disk.
struct RunReport {
  std::vector<std::string> artifacts;
  bool converged = true;
  nlohmann::json summary;
};

RunReport run(const RunConfig& cfg);

// Tolerance judgement between two CSV reports sharing a column layout.
struct CompareVerdict {
  bool pass = true;
  struct Row {
    std::string column;
    double max_abs_dev = 0.0;
    double max_rel_dev = 0.0;
    bool pass = true;
  };
  std::vector<Row> rows;
};

CompareVerdict compare_reports(const std::string& csv_a,
                               const std::string& csv_b, double rtol,
                               double atol);

}  // namespace heomfcs

#endif
