#ifndef HEOMFCS_MODEL_HPP
#define HEOMFCS_MODEL_HPP

#include <string>
#include <vector>

#include "heomfcs/types.hpp"

namespace heomfcs {

enum class BathFamily { OhmicExpCutoff, DrudeLorentz, Discrete };
enum class MeasurementScheme { TwoPoint, Single };

const char* to_string(BathFamily f);
const char* to_string(MeasurementScheme s);

struct DiscreteMode {
  double omega = 0.0;  // mode frequency, > 0
  double gamma = 0.0;  // linear coupling amplitude
};

struct SpectralDensity {
  BathFamily family = BathFamily::OhmicExpCutoff;
  // OhmicExpCutoff: J(w) = (lambda / omega_c) w exp(-w / omega_c)
  // DrudeLorentz:   J(w) = (2 lambda / pi) omega_c w / (w^2 + omega_c^2),
  //                 omega_c doubles as the Drude relaxation rate.
  double lambda = 0.0;
  double omega_c = 0.0;
  std::vector<DiscreteMode> modes;  // Discrete only
};

struct BathModel {
  std::string name;
  SpectralDensity density;
  double temperature = 1.0;  // k_B = 1
  bool counted = false;      // energy of this bath is the counted observable

  double beta() const { return 1.0 / temperature; }
};

struct SystemModel {
  ComplexMatrix h_sys;
  std::vector<ComplexMatrix> couplings;  // one Hermitian V per bath
  ComplexMatrix rho0;
  std::vector<BathModel> baths;
  MeasurementScheme scheme = MeasurementScheme::TwoPoint;

  int dim() const { return static_cast<int>(h_sys.rows()); }
};

// Two-level default: H = omega0 sigma_x + tunneling sigma_z, V = sigma_z per
// bath, rho0 = (1 + sigma_x)/2 (ground state of the omega0 term's pointer
// basis, deliberately not an H eigenstate so transients are nontrivial).
SystemModel build_two_level_model(double omega0, double tunneling,
                                  std::vector<BathModel> baths,
                                  MeasurementScheme scheme);

// J(w) for continuum families; discrete baths have no density and return 0.
double spectral_value(const SpectralDensity& sd, double omega);

// integral J(w)/w dw (closed form per family; sum gamma_k^2/omega_k discrete)
double reorganization_energy(const SpectralDensity& sd);

// Throws validation_error on: non-Hermitian h_sys/V/rho0, tr rho0 != 1,
// negative rho0 eigenvalues, dimension mismatches, non-positive temperature,
// negative lambda, non-positive omega_c, non-positive discrete frequencies,
// or a counted-bath count != 1.
void validate(const SystemModel& model);

int counted_bath_index(const SystemModel& model);  // -1 when none

}  // namespace heomfcs

#endif
