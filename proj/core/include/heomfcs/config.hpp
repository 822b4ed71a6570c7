#ifndef HEOMFCS_CONFIG_HPP
#define HEOMFCS_CONFIG_HPP

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "heomfcs/model.hpp"
#include "heomfcs/types.hpp"

namespace heomfcs {

enum class RunMode { Transient, ConductanceScan, ChiScan, OracleCompare };

const char* to_string(RunMode m);
RunMode run_mode_from_string(const std::string& s);  // throws config_error

struct NumericsConfig {
  int n_max = 4;        // initial hierarchy truncation
  int n_max_step = 2;   // escalation increment
  int n_max_cap = 12;   // escalation ceiling
  double dt = 0.005;
  double t_end = 10.0;
  int m_max = 1;  // moment orders carried by the cascade (transient mode)
  int fit_terms = 6;
  double fit_window = 0.0;  // <= 0: chosen from bath time scales
  int fit_samples = 0;      // <= 0: chosen from fit_terms
  double escalation_tol = 1e-3;
  bool adaptive = false;
  double adaptive_tol = 1e-8;
  double beta_delta_rel = 0.01;  // bias stencil step as a fraction of beta
  int output_stride = 5;
  int workers = 1;
};

// conductance_scan: one parameter swept over explicit values, applied to
// every bath (lambda, omega_c) or every bath temperature
struct ScanConfig {
  std::string parameter = "lambda";  // lambda | omega_c | temperature
  std::vector<double> values;
};

struct ChiScanConfig {
  std::vector<double> values;  // real counting-field samples
};

struct OracleCompareConfig {
  int fock_cutoff = 5;
  std::vector<double> chi_values;
  unsigned seed = 1;  // reserved for randomized draws
};

struct RunConfig {
  SystemModel model;
  RunMode mode = RunMode::Transient;
  NumericsConfig numerics;
  std::string out_dir = "out";
  ScanConfig scan;
  ChiScanConfig chi;
  OracleCompareConfig oracle;
  // optional I/O: reuse a frozen decomposition basis across runs, or dump /
  // resume propagation state.  Checkpoints pin the truncation, so they
  // require n_max_cap == n_max and transient mode.
  std::string basis_in, basis_out;
  std::string checkpoint_in, checkpoint_out;

  // Effective configuration (file + overrides) in canonical key order; the
  // run hash is taken over its serialization, so equivalent configs hash
  // equal regardless of input formatting.
  nlohmann::json canonical() const;
  uint64_t hash() const;
};

// Shape errors (bad JSON, wrong types, unknown enum strings, missing
// required keys) throw config_error.  Value errors are deferred to
// validate_config.
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

struct CliOverrides {
  std::optional<std::string> mode;
  std::optional<int> nmax;
  std::optional<double> dt;
  std::optional<double> tmax;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<unsigned> seed;
  std::optional<std::string> basis_in, basis_out;
  std::optional<std::string> checkpoint_in, checkpoint_out;
};

void apply_overrides(RunConfig& cfg, const CliOverrides& o);

// Semantic checks: positive steps and tolerances, sane escalation ladder,
// non-empty grids for the active mode, model invariants.  Throws
// validation_error.
void validate_config(const RunConfig& cfg);

}  // namespace heomfcs

#endif
