#include <doctest/doctest.h>

#include <cmath>
#include <string>

#include "heomfcs/model.hpp"
#include "heomfcs/types.hpp"

using namespace heomfcs;

namespace {

BathModel plain_bath(bool counted = true) {
  BathModel b;
  b.name = "b";
  b.density.family = BathFamily::OhmicExpCutoff;
  b.density.lambda = 0.2;
  b.density.omega_c = 2.0;
  b.temperature = 1.0;
  b.counted = counted;
  return b;
}

}  // namespace

TEST_CASE("two-level builder wires splitting, tunneling and pointer state") {
  auto m = build_two_level_model(1.0, 0.0, {plain_bath()},
                                 MeasurementScheme::TwoPoint);
  CHECK(m.dim() == 2);
  CHECK(m.h_sys(0, 0) == Complex{0.0, 0.0});
  CHECK(m.h_sys(0, 1) == Complex{1.0, 0.0});
  CHECK(m.h_sys(1, 0) == Complex{1.0, 0.0});
  CHECK(m.h_sys(1, 1) == Complex{0.0, 0.0});
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(m.rho0(i, j) == Complex{0.5, 0.0});
    }
  }
  REQUIRE(m.couplings.size() == 1);
  CHECK(m.couplings[0](0, 0) == Complex{1.0, 0.0});
  CHECK(m.couplings[0](1, 1) == Complex{-1.0, 0.0});
  CHECK(m.couplings[0](0, 1) == Complex{0.0, 0.0});
  CHECK(m.scheme == MeasurementScheme::TwoPoint);
  CHECK_NOTHROW(validate(m));

  auto tilted = build_two_level_model(1.0, 1.0, {plain_bath()},
                                      MeasurementScheme::Single);
  CHECK(tilted.h_sys(0, 0) == Complex{1.0, 0.0});
  CHECK(tilted.h_sys(1, 1) == Complex{-1.0, 0.0});
  CHECK(tilted.h_sys(0, 1) == Complex{1.0, 0.0});
  CHECK(tilted.scheme == MeasurementScheme::Single);

  CHECK_THROWS_AS((void)build_two_level_model(0.0, 1.0, {plain_bath()},
                                              MeasurementScheme::TwoPoint),
                  validation_error);
  CHECK_THROWS_AS((void)build_two_level_model(-1.0, 1.0, {plain_bath()},
                                              MeasurementScheme::TwoPoint),
                  validation_error);
}

TEST_CASE("spectral density values and reorganization energies") {
  SpectralDensity ohmic;
  ohmic.family = BathFamily::OhmicExpCutoff;
  ohmic.lambda = 1.0;
  ohmic.omega_c = 3.0;
  CHECK(spectral_value(ohmic, 1.0) ==
        doctest::Approx(std::exp(-1.0 / 3.0) / 3.0).epsilon(1e-14));
  // single maximum at the cutoff frequency
  const double peak = spectral_value(ohmic, 3.0);
  CHECK(spectral_value(ohmic, 3.0 - 1e-3) < peak);
  CHECK(spectral_value(ohmic, 3.0 + 1e-3) < peak);
  CHECK(reorganization_energy(ohmic) == doctest::Approx(1.0));

  SpectralDensity dl;
  dl.family = BathFamily::DrudeLorentz;
  dl.lambda = 0.7;
  dl.omega_c = 2.0;
  CHECK(spectral_value(dl, 2.0) ==
        doctest::Approx(2.0 * 0.7 / M_PI * 0.5).epsilon(1e-14));
  CHECK(spectral_value(dl, 2.0 - 1e-3) < spectral_value(dl, 2.0));
  CHECK(spectral_value(dl, 2.0 + 1e-3) < spectral_value(dl, 2.0));
  CHECK(reorganization_energy(dl) == doctest::Approx(0.7));

  SpectralDensity disc;
  disc.family = BathFamily::Discrete;
  disc.modes = {{1.0, 0.1}, {2.0, 0.3}};
  CHECK(spectral_value(disc, 1.0) == 0.0);
  CHECK(reorganization_energy(disc) ==
        doctest::Approx(0.01 / 1.0 + 0.09 / 2.0).epsilon(1e-14));
}

TEST_CASE("name round trips for families and schemes") {
  CHECK(std::string(to_string(BathFamily::OhmicExpCutoff)) == "ohmic_exp");
  CHECK(std::string(to_string(BathFamily::DrudeLorentz)) == "drude_lorentz");
  CHECK(std::string(to_string(BathFamily::Discrete)) == "discrete");
  CHECK(std::string(to_string(MeasurementScheme::TwoPoint)) == "two_point");
  CHECK(std::string(to_string(MeasurementScheme::Single)) == "single");
}

TEST_CASE("validation rejects malformed models") {
  const auto good = build_two_level_model(1.0, 0.5, {plain_bath()},
                                          MeasurementScheme::TwoPoint);
  CHECK_NOTHROW(validate(good));

  auto bad = good;
  bad.rho0(0, 0) = 0.4;  // trace 0.9
  CHECK_THROWS_AS(validate(bad), validation_error);

  bad = good;
  bad.rho0(0, 1) = Complex{0.5, 0.2};  // not Hermitian
  CHECK_THROWS_AS(validate(bad), validation_error);

  bad = good;
  bad.rho0 = ComplexMatrix::Zero(2, 2);
  bad.rho0(0, 0) = 1.5;
  bad.rho0(1, 1) = -0.5;  // negative population
  CHECK_THROWS_AS(validate(bad), validation_error);

  bad = good;
  bad.h_sys(0, 1) = Complex{1.0, 0.3};
  CHECK_THROWS_AS(validate(bad), validation_error);

  bad = good;
  bad.couplings[0](0, 1) = Complex{0.0, 1.0};
  CHECK_THROWS_AS(validate(bad), validation_error);

  bad = good;
  bad.couplings[0] = ComplexMatrix::Zero(3, 3);
  CHECK_THROWS_AS(validate(bad), validation_error);

  bad = good;
  bad.couplings.clear();
  CHECK_THROWS_AS(validate(bad), validation_error);

  bad = good;
  bad.baths[0].temperature = 0.0;
  CHECK_THROWS_AS(validate(bad), validation_error);

  bad = good;
  bad.baths[0].density.lambda = -0.1;
  CHECK_THROWS_AS(validate(bad), validation_error);

  bad = good;
  bad.baths[0].density.omega_c = 0.0;
  CHECK_THROWS_AS(validate(bad), validation_error);

  bad = good;
  bad.baths[0].density.family = BathFamily::Discrete;
  bad.baths[0].density.modes = {};
  CHECK_THROWS_AS(validate(bad), validation_error);

  bad = good;
  bad.baths[0].density.family = BathFamily::Discrete;
  bad.baths[0].density.modes = {{-1.0, 0.1}};
  CHECK_THROWS_AS(validate(bad), validation_error);

  bad = good;
  bad.baths[0].counted = false;  // nothing counted
  CHECK_THROWS_AS(validate(bad), validation_error);
  CHECK(counted_bath_index(bad) == -1);

  bad = good;
  bad.baths.push_back(plain_bath(true));  // two counted
  bad.couplings.push_back(good.couplings[0]);
  CHECK_THROWS_AS(validate(bad), validation_error);

  CHECK(counted_bath_index(good) == 0);
  auto second = good;
  second.baths[0].counted = false;
  second.baths.push_back(plain_bath(true));
  second.couplings.push_back(good.couplings[0]);
  CHECK(counted_bath_index(second) == 1);
  CHECK_NOTHROW(validate(second));
}
