#include <doctest/doctest.h>

#include <cmath>
#include <vector>

#include "heomfcs/correlation.hpp"
#include "heomfcs/hierarchy.hpp"
#include "heomfcs/model.hpp"
#include "heomfcs/oracle.hpp"
#include "heomfcs/propagator.hpp"
#include "heomfcs/statistics.hpp"
#include "heomfcs/types.hpp"

using namespace heomfcs;

namespace {

BathModel mode_bath(double omega, double gamma, double temperature,
                    bool counted) {
  BathModel b;
  b.name = counted ? "meter" : "load";
  b.density.family = BathFamily::Discrete;
  b.density.modes = {{omega, gamma}};
  b.temperature = temperature;
  b.counted = counted;
  return b;
}

BathModel ohmic_bath(double lambda, double omega_c, double temperature,
                     bool counted) {
  BathModel b;
  b.name = counted ? "meter" : "load";
  b.density.family = BathFamily::OhmicExpCutoff;
  b.density.lambda = lambda;
  b.density.omega_c = omega_c;
  b.temperature = temperature;
  b.counted = counted;
  return b;
}

SystemModel reference_model(MeasurementScheme scheme, double gamma = 0.2) {
  return build_two_level_model(1.0, 0.5, {mode_bath(1.3, gamma, 0.7, true)},
                               scheme);
}

struct Pipe {
  SystemModel model;
  ExpansionBasis basis;
  IndexSpace space;
};

Pipe make_pipe(const SystemModel& model, int n_max, int m_max) {
  Pipe p{model, build_basis(model, DecomposeOptions{}), {}};
  std::vector<int> terms;
  for (const auto& bb : p.basis.baths) terms.push_back(bb.terms());
  p.space = IndexSpace::enumerate(terms, n_max, m_max);
  return p;
}

std::vector<double> grid(double t_end, double step) {
  std::vector<double> ts;
  for (int i = 0; t_end - i * step > -1e-12; ++i) ts.push_back(i * step);
  return ts;
}

MomentSeries run_cascade(const SystemModel& model, int n_max, int m_max) {
  auto p = make_pipe(model, n_max, m_max);
  const auto tables = cascade_coefficients(p.model, p.basis, m_max);
  Propagator prop(p.model, p.basis, tables, p.space,
                  PropagationMode::MomentCascade);
  auto state = prop.initial_state();
  IntegratorOptions opts;
  opts.dt = 0.005;
  opts.t_end = 3.0;
  opts.output_stride = 40;
  const auto traj = prop.integrate(state, 0.0, opts);
  return moments_from_fields(traj, p.space);
}

std::vector<Complex> run_chi(const SystemModel& model, int n_max,
                             Complex chi) {
  auto p = make_pipe(model, n_max, 0);
  const auto tables = chi_coefficients(p.model, p.basis, chi);
  Propagator prop(p.model, p.basis, tables, p.space,
                  PropagationMode::ChiResolved);
  auto state = prop.initial_state();
  IntegratorOptions opts;
  opts.dt = 0.005;
  opts.t_end = 3.0;
  opts.output_stride = 40;
  return prop.integrate(state, 0.0, opts).cgf;
}

}  // namespace

TEST_CASE("cascade moments track the projective reference, sign included") {
  const auto model = reference_model(MeasurementScheme::TwoPoint);
  FiniteModeSystem oracle(model, 14);
  const auto ts = grid(3.0, 0.2);
  REQUIRE(oracle.top_level_weight(ts) < 1e-8);

  const auto mom = run_cascade(model, 6, 2);
  REQUIRE(mom.t.size() == ts.size());
  REQUIRE(mom.order() == 2);
  CHECK(mom.max_trace_defect < 1e-9);
  CHECK(mom.max_imag < 1e-9);
  for (size_t i = 0; i < ts.size(); ++i) {
    const auto ref = oracle.projective_moments(ts[i]);
    CAPTURE(ts[i]);
    CHECK(std::abs(mom.mu[0][i] - ref.mu1) < 1e-8);
    CHECK(std::abs(mom.mu[1][i] - ref.mu2) < 1e-7);
  }
  // energy flows into the bath from the excited-leaning start; a flipped
  // counting orientation would negate this
  CHECK(mom.mu[0].back() > 0.05);
  CHECK(oracle.projective_moments(3.0).mu1 > 0.05);
}

TEST_CASE("field-resolved runs reproduce the exact generating function") {
  const auto model = reference_model(MeasurementScheme::TwoPoint);
  FiniteModeSystem oracle(model, 14);
  const auto ts = grid(3.0, 0.2);

  for (double chi : {0.3, -0.45}) {
    const auto ref =
        oracle.exact_cgf(MeasurementScheme::TwoPoint, Complex{chi, 0.0}, ts);
    const auto got = run_chi(model, 6, Complex{chi, 0.0});
    REQUIRE(got.size() == ref.size());
    for (size_t i = 0; i < ts.size(); ++i) {
      CAPTURE(chi);
      CAPTURE(ts[i]);
      CHECK(std::abs(got[i] - ref[i]) < 1e-8);
    }
  }

  const auto model_s = reference_model(MeasurementScheme::Single);
  FiniteModeSystem oracle_s(model_s, 14);
  const auto ref =
      oracle_s.exact_cgf(MeasurementScheme::Single, Complex{0.35, 0.0}, ts);
  const auto got = run_chi(model_s, 6, Complex{0.35, 0.0});
  for (size_t i = 0; i < ts.size(); ++i) {
    CAPTURE(ts[i]);
    CHECK(std::abs(got[i] - ref[i]) < 1e-8);
  }
}

TEST_CASE("zero field or zero coupling counts nothing") {
  const auto model = reference_model(MeasurementScheme::TwoPoint);
  FiniteModeSystem oracle(model, 10);
  const auto ts = grid(3.0, 0.5);
  for (auto scheme : {MeasurementScheme::TwoPoint, MeasurementScheme::Single}) {
    const auto g = oracle.exact_cgf(scheme, Complex{0.0, 0.0}, ts);
    for (const auto& v : g) CHECK(std::abs(v) < 1e-12);
  }
  const auto g0 = run_chi(model, 5, Complex{0.0, 0.0});
  for (const auto& v : g0) CHECK(std::abs(v) < 1e-10);

  const auto decoupled = reference_model(MeasurementScheme::TwoPoint, 0.0);
  FiniteModeSystem oracle_dec(decoupled, 6);
  for (double t : ts) {
    const auto ref = oracle_dec.projective_moments(t);
    CHECK(std::abs(ref.mu1) < 1e-12);
    CHECK(std::abs(ref.mu2) < 1e-12);
  }
  const auto mom = run_cascade(decoupled, 4, 2);
  for (const auto& series : mom.mu) {
    for (double v : series) CHECK(std::abs(v) < 1e-12);
  }
}

TEST_CASE("stencil moments agree with the projector algebra") {
  const auto model = reference_model(MeasurementScheme::TwoPoint);
  FiniteModeSystem oracle(model, 12);
  for (double t : {0.8, 2.0, 3.0}) {
    const auto proj = oracle.projective_moments(t);
    const auto fd = oracle.fd_moments(t, 1e-3);
    CAPTURE(t);
    CHECK(std::abs(fd.mu1 - proj.mu1) < 1e-10);
    CHECK(std::abs(fd.mu2 - proj.mu2) < 1e-7);
  }
}

TEST_CASE("tilting the thermal argument converts between schemes exactly") {
  const auto model = reference_model(MeasurementScheme::TwoPoint);
  FiniteModeSystem oracle(model, 12);
  const auto ts = grid(3.0, 0.25);
  CHECK(oracle.scheme_identity_residual(Complex{0.7, 0.0}, ts) < 1e-10);
  CHECK(oracle.scheme_identity_residual(Complex{0.4, -0.2}, ts) < 1e-10);
}

TEST_CASE("fock truncation diagnostic decays with the cutoff") {
  const auto model = reference_model(MeasurementScheme::TwoPoint);
  const auto ts = grid(3.0, 0.5);
  FiniteModeSystem coarse(model, 4);
  FiniteModeSystem fine(model, 14);
  const double w_coarse = coarse.top_level_weight(ts);
  const double w_fine = fine.top_level_weight(ts);
  CHECK(w_coarse > 1e-3);
  CHECK(w_fine < 1e-8);
  CHECK(w_fine < 1e-4 * w_coarse);
}

TEST_CASE("golden-rule reference matches a first-principles evaluation") {
  // gap-2 system (H = sigma_x), counted ohmic bath at T = 1 plus a hotter
  // uncounted one; sigma_z couples the eigenstates with unit matrix element
  auto model = build_two_level_model(
      1.0, 0.0,
      {ohmic_bath(0.1, 3.0, 1.0, true), ohmic_bath(0.05, 3.0, 2.0, false)},
      MeasurementScheme::TwoPoint);
  const auto ref = weak_coupling_reference(model);
  CHECK(ref.gap == doctest::Approx(2.0).epsilon(1e-12));

  const double j_r = 0.1 * (2.0 / 3.0) * std::exp(-2.0 / 3.0);
  const double j_o = 0.05 * (2.0 / 3.0) * std::exp(-2.0 / 3.0);
  const double n_r = 1.0 / std::expm1(2.0);
  const double n_o = 1.0 / std::expm1(1.0);
  CHECK(ref.rate_up == doctest::Approx(2.0 * M_PI * j_r * n_r).epsilon(1e-12));
  CHECK(ref.rate_down ==
        doctest::Approx(2.0 * M_PI * j_r * (n_r + 1.0)).epsilon(1e-12));

  auto current = [&](double beta_r) {
    const double nr = 1.0 / std::expm1(2.0 * beta_r);
    const double up_r = 2.0 * M_PI * j_r * nr;
    const double down_r = 2.0 * M_PI * j_r * (nr + 1.0);
    const double up = up_r + 2.0 * M_PI * j_o * n_o;
    const double down = down_r + 2.0 * M_PI * j_o * (n_o + 1.0);
    const double p1 = up / (up + down);
    return 2.0 * ((p1 * down_r) - (1.0 - p1) * up_r);
  };
  CHECK(ref.current == doctest::Approx(current(1.0)).epsilon(1e-10));
  // hot uncounted bath feeds energy through the system into the cold meter
  CHECK(ref.current > 0.0);
  const double h = 2e-5;
  const double kappa_fd = (current(1.0 + h) - current(1.0 - h)) / (2.0 * h);
  CHECK(ref.kappa == doctest::Approx(kappa_fd).epsilon(1e-5));

  // all baths at one temperature: detailed balance stalls the current
  auto balanced = build_two_level_model(
      1.0, 0.0,
      {ohmic_bath(0.1, 3.0, 1.0, true), ohmic_bath(0.05, 3.0, 1.0, false)},
      MeasurementScheme::TwoPoint);
  CHECK(std::abs(weak_coupling_reference(balanced).current) < 1e-15);

  SystemModel flat = model;
  flat.h_sys = ComplexMatrix::Identity(2, 2) * 0.3;
  CHECK_THROWS_AS((void)weak_coupling_reference(flat), validation_error);
}

TEST_CASE("finite-mode reference rejects what it cannot represent") {
  const auto continuum = build_two_level_model(
      1.0, 0.5, {ohmic_bath(0.1, 2.0, 1.0, true)}, MeasurementScheme::TwoPoint);
  CHECK_THROWS_AS(FiniteModeSystem(continuum, 8), validation_error);

  const auto model = reference_model(MeasurementScheme::TwoPoint);
  CHECK_THROWS_AS(FiniteModeSystem(model, 1), validation_error);
  CHECK_THROWS_AS(FiniteModeSystem(model, 3500), validation_error);
}
