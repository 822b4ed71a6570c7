#include "heomfcs/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace heomfcs {

const char* to_string(BathFamily f) {
  switch (f) {
    case BathFamily::OhmicExpCutoff: return "ohmic_exp";
    case BathFamily::DrudeLorentz: return "drude_lorentz";
    case BathFamily::Discrete: return "discrete";
  }
  return "?";
}

const char* to_string(MeasurementScheme s) {
  return s == MeasurementScheme::TwoPoint ? "two_point" : "single";
}

SystemModel build_two_level_model(double omega0, double tunneling,
                                  std::vector<BathModel> baths,
                                  MeasurementScheme scheme) {
  if (!(omega0 > 0.0)) {
    throw validation_error("two-level model requires omega0 > 0");
  }
  SystemModel m;
  m.h_sys = ComplexMatrix::Zero(2, 2);
  m.h_sys(0, 1) = omega0;
  m.h_sys(1, 0) = omega0;
  m.h_sys(0, 0) = tunneling;
  m.h_sys(1, 1) = -tunneling;
  ComplexMatrix v = ComplexMatrix::Zero(2, 2);
  v(0, 0) = 1.0;
  v(1, 1) = -1.0;
  m.couplings.assign(baths.size(), v);
  m.rho0 = ComplexMatrix::Zero(2, 2);
  m.rho0(0, 0) = 0.5;
  m.rho0(0, 1) = 0.5;
  m.rho0(1, 0) = 0.5;
  m.rho0(1, 1) = 0.5;
  m.baths = std::move(baths);
  m.scheme = scheme;
  return m;
}

double spectral_value(const SpectralDensity& sd, double omega) {
  switch (sd.family) {
    case BathFamily::OhmicExpCutoff:
      return sd.lambda / sd.omega_c * omega * std::exp(-omega / sd.omega_c);
    case BathFamily::DrudeLorentz:
      return 2.0 * sd.lambda / M_PI * sd.omega_c * omega /
             (omega * omega + sd.omega_c * sd.omega_c);
    case BathFamily::Discrete:
      return 0.0;
  }
  return 0.0;
}

double reorganization_energy(const SpectralDensity& sd) {
  switch (sd.family) {
    case BathFamily::OhmicExpCutoff:
      return sd.lambda;
    case BathFamily::DrudeLorentz:
      return sd.lambda;
    case BathFamily::Discrete: {
      double acc = 0.0;
      for (const auto& mode : sd.modes) {
        acc += mode.gamma * mode.gamma / mode.omega;
      }
      return acc;
    }
  }
  return 0.0;
}

namespace {

bool is_hermitian(const ComplexMatrix& a, double tol) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

void validate_density(const SpectralDensity& sd, const std::string& name) {
  if (sd.family == BathFamily::Discrete) {
    if (sd.modes.empty()) {
      throw validation_error("bath '" + name + "': discrete bath needs modes");
    }
    for (const auto& mode : sd.modes) {
      if (!(mode.omega > 0.0)) {
        throw validation_error("bath '" + name +
                               "': discrete mode frequency must be > 0");
      }
    }
    return;
  }
  if (sd.lambda < 0.0) {
    throw validation_error("bath '" + name + "': lambda must be >= 0");
  }
  if (!(sd.omega_c > 0.0)) {
    throw validation_error("bath '" + name + "': omega_c must be > 0");
  }
}

}  // namespace

void validate(const SystemModel& model) {
  const int d = model.dim();
  if (d < 2) throw validation_error("system dimension must be >= 2");
  if (model.h_sys.cols() != d) throw validation_error("h_sys must be square");
  if (!is_hermitian(model.h_sys, 1e-12)) {
    throw validation_error("h_sys must be Hermitian");
  }
  if (model.rho0.rows() != d || model.rho0.cols() != d) {
    throw validation_error("rho0 dimension mismatch");
  }
  if (!is_hermitian(model.rho0, 1e-12)) {
    throw validation_error("rho0 must be Hermitian");
  }
  if (std::abs(model.rho0.trace() - Complex{1.0, 0.0}) > 1e-12) {
    throw validation_error("rho0 must have unit trace");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(model.rho0);
  if (es.eigenvalues().minCoeff() < -1e-12) {
    throw validation_error("rho0 must be positive semidefinite");
  }
  if (model.couplings.size() != model.baths.size()) {
    throw validation_error("one coupling operator per bath required");
  }
  if (model.baths.empty()) throw validation_error("at least one bath required");
  for (size_t nu = 0; nu < model.baths.size(); ++nu) {
    const auto& bath = model.baths[nu];
    if (!(bath.temperature > 0.0)) {
      throw validation_error("bath '" + bath.name +
                             "': temperature must be > 0");
    }
    validate_density(bath.density, bath.name);
    const auto& v = model.couplings[nu];
    if (v.rows() != d || v.cols() != d) {
      throw validation_error("coupling dimension mismatch for bath '" +
                             bath.name + "'");
    }
    if (!is_hermitian(v, 1e-12)) {
      throw validation_error("coupling for bath '" + bath.name +
                             "' must be Hermitian");
    }
  }
  int counted = 0;
  for (const auto& bath : model.baths) counted += bath.counted ? 1 : 0;
  if (counted != 1) {
    throw validation_error("exactly one bath must carry the counted flag");
  }
}

int counted_bath_index(const SystemModel& model) {
  for (size_t nu = 0; nu < model.baths.size(); ++nu) {
    if (model.baths[nu].counted) return static_cast<int>(nu);
  }
  return -1;
}

}  // namespace heomfcs
