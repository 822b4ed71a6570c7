#ifndef HEOMFCS_STATISTICS_HPP
#define HEOMFCS_STATISTICS_HPP

#include <array>
#include <map>
#include <string>
#include <vector>

#include "heomfcs/hierarchy.hpp"
#include "heomfcs/propagator.hpp"
#include "heomfcs/types.hpp"

#include <nlohmann/json.hpp>

namespace heomfcs {

// Moments of the counted observable change, assembled from the derivative
// sectors: mu_m(t) = sum over weight-m partitions of a_partition * tr top.
// Moments are real up to integrator noise; the worst imaginary part and the
// worst deviation of tr sigma_0 from 1 are kept as diagnostics.
struct MomentSeries {
  std::vector<double> t;
  std::vector<std::vector<double>> mu;  // mu[n-1][ti], n = 1..order
  double max_imag = 0.0;
  double max_trace_defect = 0.0;

  int order() const { return static_cast<int>(mu.size()); }
};

MomentSeries moments_from_fields(const Trajectory& traj,
                                 const IndexSpace& space);

// order-preserving transforms between raw moments, cumulants, and factorial
// cumulants (all 1-indexed by order; input size = highest order)
std::vector<double> cumulants_from_moments(const std::vector<double>& mu);
std::vector<double> moments_from_cumulants(const std::vector<double>& kappa);
std::vector<double> factorial_cumulants_from_cumulants(
    const std::vector<double>& kappa);
std::vector<double> cumulants_from_factorial_cumulants(
    const std::vector<double>& fc);

struct CumulantSeries {
  std::vector<double> t;
  std::vector<std::vector<double>> kappa;  // kappa[n-1][ti]

  int order() const { return static_cast<int>(kappa.size()); }
};

CumulantSeries cumulants_from_moment_series(const MomentSeries& m);

// Cumulants at one time from a field-resolved scan: g = {G(-2h), G(-h),
// G(h), G(2h)} with G(0) = 0; returns orders 1..order (order <= 4).
std::vector<double> cumulants_from_chi_stencil(const std::array<Complex, 4>& g,
                                               double h, int order);

// A family of cumulant series at inverse temperatures beta + mult * delta of
// the counted bath, all sharing one frozen decomposition basis.
struct BetaFamily {
  double beta = 0.0;
  double delta = 0.0;
  std::map<double, CumulantSeries> runs;  // key: offset multiple of delta
};

struct FdEstimate {
  double value = 0.0;
  double error = 0.0;  // Richardson truncation estimate + roundoff floor
};

// m-th derivative in beta by symmetric differences at step delta/2 and
// delta, Richardson-combined.  Offsets required: m<=2 need {0,+-1/2,+-1},
// m=3 additionally {+-2}.
FdEstimate beta_derivative(const std::map<double, double>& values, int m,
                           double delta);

// Bias-expansion coefficient table J[m][n](t) = d^m/d beta^m kappa_n(t) with
// finite-difference error estimates.
struct JTable {
  std::vector<double> t;
  std::vector<std::vector<std::vector<double>>> value;  // [m][n-1][ti]
  std::vector<std::vector<std::vector<double>>> error;
  int m_hi = 0, n_hi = 0;
};

JTable j_coefficients(const BetaFamily& family, int n_hi, int m_hi);

// Residual of the scheme-change relation
//   JS_m^n = sum_{j=0}^{n-1} binom(n,j) (-1)^j J_{m+j}^{n-j}
// (the j = n term carries the order-zero cumulant and vanishes), with the
// accumulated finite-difference budget it must be judged against.
struct RelationResidual {
  std::vector<double> t, residual, budget, scale;
  double max_residual = 0.0;
  double max_residual_over_budget = 0.0;
};

RelationResidual transient_relation_residual(const JTable& two_point,
                                             const JTable& single, int n,
                                             int m);

// time derivative on the reporting grid, centered, one-sided at the ends
std::vector<double> time_derivative(const std::vector<double>& t,
                                    const std::vector<double>& f);

// kappa(t) = beta^2 d/dt J_1^1(t)
std::vector<double> conductance_from_bias(const JTable& two_point,
                                          double beta);
// kappa(t) = (beta^2/2) d/dt [kappa_2(t) - kappa_S_2(t)]
std::vector<double> conductance_from_fluctuations(
    const CumulantSeries& two_point, const CumulantSeries& single,
    double beta);

struct PlateauCheck {
  bool reached = false;
  double level = 0.0;     // trailing-window mean
  double wobble = 0.0;    // trailing-window spread / scale
  double t_window = 0.0;  // window start
};

PlateauCheck detect_plateau(const std::vector<double>& t,
                            const std::vector<double>& series,
                            double rel_tol = 0.02);

// report/output helpers
struct Column {
  std::string name;
  const std::vector<double>* data;
};

void write_csv(const std::string& path, const std::vector<Column>& cols);
void write_json_file(const std::string& path, const nlohmann::json& j);
uint64_t fnv1a(const std::string& s);

}  // namespace heomfcs

#endif
