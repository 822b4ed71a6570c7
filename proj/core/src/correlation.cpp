#include "heomfcs/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "heomfcs/expfit.hpp"
#include "heomfcs/quadrature.hpp"
#include "heomfcs/special.hpp"

namespace heomfcs {

namespace {

// Orientation of the counting shift on the cross-side components, pinned
// against the finite-mode reference: energy counted into the bath must give
// a positive first moment when the system relaxes.
constexpr double kCrossShift10 = -1.0;
constexpr double kCrossShift01 = -kCrossShift10;

double decay_scale(const SpectralDensity& sd) {
  return sd.omega_c;  // continuum families only
}

// beta-independent part integral J(w) exp(-i w t) dw, extended to t < 0 by
// conjugation.
Complex part_a(const BathModel& bath, double t) {
  const auto& sd = bath.density;
  if (t < 0.0) return std::conj(part_a(bath, -t));
  switch (sd.family) {
    case BathFamily::OhmicExpCutoff: {
      const Complex a{1.0 / sd.omega_c, t};
      return sd.lambda / sd.omega_c / (a * a);
    }
    case BathFamily::DrudeLorentz: {
      const double g = sd.omega_c;
      const double scale = 2.0 * sd.lambda * g / M_PI;
      const auto f = [&](double w) {
        return Complex{scale * w / (w * w + g * g), 0.0};
      };
      const double abs_tol = 1e-14 * std::max(1.0, sd.lambda * g);
      if (t == 0.0) {
        throw numerical_error(
            "Drude-Lorentz correlation diverges at t = 0; sample t > 0");
      }
      const double split = std::max(8.0 / t, 6.0 * g);
      const int panels = std::max(16, static_cast<int>(split * t / 4.0) + 1);
      const auto osc = [&](double w) {
        return f(w) * std::exp(Complex{0.0, -w * t});
      };
      return integrate_composite(osc, 0.0, split, 1e-10, abs_tol, panels) +
             integrate_oscillatory_tail(f, split, t, 1e-10, abs_tol);
    }
    case BathFamily::Discrete: {
      Complex acc{0.0, 0.0};
      for (const auto& m : sd.modes) {
        acc += m.gamma * m.gamma * std::exp(Complex{0.0, -m.omega * t});
      }
      return acc;
    }
  }
  return {};
}

// Thermal part: integral J(w) 2 n(A, w) cos(w t) dw at (complex) inverse
// temperature A; even in t.
Complex part_b(const BathModel& bath, Complex a_arg, double t) {
  const auto& sd = bath.density;
  const double re_a = a_arg.real();
  if (!(re_a > 0.0)) {
    throw validation_error("thermal argument needs positive real part");
  }
  const double inv_cut =
      sd.family == BathFamily::OhmicExpCutoff ? 1.0 / sd.omega_c : 0.0;
  const double w_max = 48.0 / (re_a + inv_cut) + 6.0 * decay_scale(sd);
  const double osc = std::abs(t) + std::abs(a_arg.imag());
  const int panels = std::max(24, static_cast<int>(w_max * osc / 4.0) + 1);
  const auto f = [&](double w) {
    return spectral_value(sd, w) * 2.0 * bose_occupation(a_arg, w) *
           std::cos(w * t);
  };
  const double abs_tol =
      1e-14 * std::max(1.0, sd.lambda * decay_scale(sd));
  return integrate_composite(f, 0.0, w_max, 1e-10, abs_tol, panels);
}

// integral J(w) d^p/d beta^p [2 n(beta, w)] cos(w t) dw, p >= 1 (real).
double part_b_dbeta(const BathModel& bath, int p, double beta, double t) {
  const auto& sd = bath.density;
  const double inv_cut =
      sd.family == BathFamily::OhmicExpCutoff ? 1.0 / sd.omega_c : 0.0;
  const double w_max = (48.0 + 9.0 * p) / (beta + inv_cut) + 6.0 * decay_scale(sd);
  const int panels = std::max(24, static_cast<int>(w_max * std::abs(t) / 4.0) + 1);
  const auto f = [&](double w) {
    return Complex{spectral_value(sd, w) * 2.0 *
                       bose_occupation_derivative(p, beta, w) * std::cos(w * t),
                   0.0};
  };
  const double abs_tol =
      1e-14 * std::max(1.0, sd.lambda * decay_scale(sd));
  return integrate_composite(f, 0.0, w_max, 1e-10, abs_tol, panels).real();
}

struct FitGrid {
  double t0 = 0.0, dt = 0.0;
  int n = 0;
};

FitGrid select_grid(const BathModel& bath, const DecomposeOptions& opts) {
  const auto& sd = bath.density;
  const double beta = bath.beta();
  const double scale = decay_scale(sd);
  const double rate_fast = 4.0 * scale + 2.0 * M_PI / beta;
  const double rate_slow = 0.4 * std::min(scale, 2.0 * M_PI / beta);
  FitGrid g;
  g.dt = 0.3 / rate_fast;
  double span = 9.0 / rate_slow;
  if (opts.window > 0.0) span = opts.window;
  int n = static_cast<int>(span / g.dt) + 1;
  n = std::clamp(n, 240, 1400);
  if (opts.samples > 0) n = std::max(opts.samples, 16);
  if (opts.window > 0.0) g.dt = span / (n - 1);
  g.n = n;
  g.t0 = sd.family == BathFamily::DrudeLorentz ? g.dt : 0.0;
  return g;
}

// Least squares on the basis grid, mapped back through the t0 offset.
// Poles that die within a couple of nodes cannot be resolved; leaving them
// in trades first-node residual for huge cancelling amplitudes, so they
// take zero weight instead.
std::vector<Complex> project_on_poles(const BathBasis& basis,
                                      const std::vector<Complex>& samples) {
  const double decay_budget = 1.5;  // per-node e-folds a pole may lose
  std::vector<int> keep;
  for (int r = 0; r < basis.terms(); ++r) {
    if (-basis.exponents[r].real() * basis.grid_dt <= decay_budget) {
      keep.push_back(r);
    }
  }
  std::vector<Complex> out(basis.terms(), Complex{0.0, 0.0});
  if (keep.empty()) return out;
  std::vector<Complex> sub;
  sub.reserve(keep.size());
  for (int r : keep) sub.push_back(basis.exponents[r]);
  const auto coeffs = fit_coefficients(samples, basis.grid_dt, sub);
  for (size_t i = 0; i < keep.size(); ++i) {
    out[keep[i]] = coeffs[i] * std::exp(-sub[i] * basis.grid_t0);
  }
  return out;
}

std::vector<Complex> sample_grid(const BathBasis& basis,
                                 const std::function<Complex(double)>& f) {
  std::vector<Complex> out(basis.grid_samples);
  for (int k = 0; k < basis.grid_samples; ++k) {
    out[k] = f(basis.grid_t0 + k * basis.grid_dt);
  }
  return out;
}

BathBasis decompose_discrete(const BathModel& bath,
                             const DecomposeOptions& opts) {
  const auto& modes = bath.density.modes;
  const double beta = bath.beta();
  BathBasis b;
  b.family = BathFamily::Discrete;
  b.dbeta_c00.assign(opts.deriv_orders + 1, {});
  for (const auto& m : modes) {
    const double g2 = m.gamma * m.gamma;
    const double occ = bose_occupation(beta, m.omega);
    b.exponents.push_back(Complex{0.0, -m.omega});
    b.exponents.push_back(Complex{0.0, m.omega});
    const int r = static_cast<int>(b.exponents.size()) - 2;
    b.conj_pair.push_back(r + 1);
    b.conj_pair.push_back(r);
    b.dbeta_c00[0].push_back(g2 * (occ + 1.0));
    b.dbeta_c00[0].push_back(g2 * occ);
    for (int p = 1; p <= opts.deriv_orders; ++p) {
      const double dp = g2 * bose_occupation_derivative(p, beta, m.omega);
      b.dbeta_c00[p].push_back(dp);
      b.dbeta_c00[p].push_back(dp);
    }
  }
  b.fit_scale = std::abs(bare_correlation(bath, 0.0));
  return b;
}

BathBasis decompose_drude(const BathModel& bath, const DecomposeOptions& opts) {
  const auto& sd = bath.density;
  const double beta = bath.beta();
  const double g = sd.omega_c;
  const int n_matsubara = std::max(0, opts.max_terms - 1);

  BathBasis b;
  b.family = BathFamily::DrudeLorentz;
  const double half = 0.5 * beta * g;
  if (std::abs(std::sin(half)) < 1e-8) {
    throw validation_error(
        "Drude-Lorentz: beta*omega_c/2 sits on a cotangent pole");
  }
  b.exponents.push_back(Complex{-g, 0.0});
  b.conj_pair.push_back(0);
  b.dbeta_c00.assign(opts.deriv_orders + 1, {});
  b.dbeta_c00[0].push_back(
      Complex{sd.lambda * g / std::tan(half), -sd.lambda * g});
  for (int k = 1; k <= n_matsubara; ++k) {
    const double nu = 2.0 * M_PI * k / beta;
    if (std::abs(nu - g) < 1e-8 * g) {
      throw validation_error(
          "Drude-Lorentz: Matsubara frequency degenerate with omega_c");
    }
    b.exponents.push_back(Complex{-nu, 0.0});
    b.conj_pair.push_back(k);
    b.dbeta_c00[0].push_back(
        Complex{4.0 * sd.lambda * g / beta * nu / (nu * nu - g * g), 0.0});
  }

  const FitGrid grid = select_grid(bath, opts);
  b.grid_t0 = grid.t0;
  b.grid_dt = grid.dt;
  b.grid_samples = grid.n;

  for (int p = 1; p <= opts.deriv_orders; ++p) {
    auto samples = sample_grid(b, [&](double t) {
      return Complex{part_b_dbeta(bath, p, beta, t), 0.0};
    });
    b.dbeta_c00[p] = project_on_poles(b, samples);
  }

  // Matsubara truncation diagnostic on a thin subgrid.
  b.fit_scale = std::abs(bare_correlation(bath, b.grid_t0));
  double worst = 0.0;
  for (int k = 0; k < grid.n; k += std::max(1, grid.n / 48)) {
    const double t = grid.t0 + k * grid.dt;
    worst = std::max(worst, std::abs(bare_correlation(bath, t) -
                                     basis_eval(b, b.dbeta_c00[0], t)));
  }
  b.fit_residual = worst;
  return b;
}

BathBasis decompose_ohmic(const BathModel& bath, const DecomposeOptions& opts) {
  const double beta = bath.beta();
  const FitGrid grid = select_grid(bath, opts);

  BathBasis b;
  b.family = BathFamily::OhmicExpCutoff;
  b.grid_t0 = grid.t0;
  b.grid_dt = grid.dt;
  b.grid_samples = grid.n;

  auto samples = sample_grid(b, [&](double t) {
    return part_a(bath, t) + part_b(bath, Complex{beta, 0.0}, t);
  });
  b.fit_scale = std::abs(samples[0]);

  auto poles = estimate_poles(samples, grid.dt, opts.max_terms);
  b.conj_pair = symmetrize_poles(poles);
  b.exponents = poles;
  b.dbeta_c00.assign(opts.deriv_orders + 1, {});
  if (!poles.empty()) {
    b.dbeta_c00[0] = project_on_poles(b, samples);
    b.fit_residual = fit_residual(samples, grid.dt, poles, b.dbeta_c00[0]);
    for (int p = 1; p <= opts.deriv_orders; ++p) {
      auto dsamples = sample_grid(b, [&](double t) {
        return Complex{part_b_dbeta(bath, p, beta, t), 0.0};
      });
      b.dbeta_c00[p] = project_on_poles(b, dsamples);
    }
  } else {
    for (auto& stack : b.dbeta_c00) stack.clear();
  }
  return b;
}

}  // namespace

Complex bare_correlation(const BathModel& bath, double t) {
  const auto& sd = bath.density;
  if (sd.family == BathFamily::Discrete) {
    Complex acc{0.0, 0.0};
    for (const auto& m : sd.modes) {
      const double occ = bose_occupation(bath.beta(), m.omega);
      acc += m.gamma * m.gamma *
             ((occ + 1.0) * std::exp(Complex{0.0, -m.omega * t}) +
              occ * std::exp(Complex{0.0, m.omega * t}));
    }
    return acc;
  }
  return part_a(bath, t) + part_b(bath, Complex{bath.beta(), 0.0}, t);
}

Complex bare_correlation_dbeta(const BathModel& bath, int p, double t) {
  if (p == 0) return bare_correlation(bath, t);
  const auto& sd = bath.density;
  if (sd.family == BathFamily::Discrete) {
    double acc = 0.0;
    for (const auto& m : sd.modes) {
      acc += m.gamma * m.gamma * 2.0 *
             bose_occupation_derivative(p, bath.beta(), m.omega) *
             std::cos(m.omega * t);
    }
    return Complex{acc, 0.0};
  }
  return Complex{part_b_dbeta(bath, p, bath.beta(), t), 0.0};
}

Complex bare_correlation_tilted(const BathModel& bath, Complex beta_arg,
                                double t) {
  const auto& sd = bath.density;
  if (sd.family == BathFamily::Discrete) {
    Complex acc{0.0, 0.0};
    for (const auto& m : sd.modes) {
      const Complex occ = bose_occupation(beta_arg, m.omega);
      acc += m.gamma * m.gamma *
             ((occ + 1.0) * std::exp(Complex{0.0, -m.omega * t}) +
              occ * std::exp(Complex{0.0, m.omega * t}));
    }
    return acc;
  }
  return part_a(bath, t) + part_b(bath, beta_arg, t);
}

BathBasis decompose(const BathModel& bath, const DecomposeOptions& opts) {
  if (opts.deriv_orders < 0) {
    throw validation_error("deriv_orders must be >= 0");
  }
  switch (bath.density.family) {
    case BathFamily::Discrete: return decompose_discrete(bath, opts);
    case BathFamily::DrudeLorentz: return decompose_drude(bath, opts);
    case BathFamily::OhmicExpCutoff: return decompose_ohmic(bath, opts);
  }
  throw validation_error("unknown bath family");
}

int ExpansionBasis::total_slots() const {
  int acc = 0;
  for (const auto& b : baths) acc += 2 * b.terms();
  return acc;
}

int ExpansionBasis::bath_of_slot(int s) const {
  for (size_t nu = 1; nu < slot_base.size(); ++nu) {
    if (s < slot_base[nu]) return static_cast<int>(nu) - 1;
  }
  return static_cast<int>(slot_base.size()) - 1;
}

ExpansionBasis build_basis(const SystemModel& model,
                           const DecomposeOptions& opts) {
  ExpansionBasis basis;
  int base = 0;
  for (const auto& bath : model.baths) {
    basis.slot_base.push_back(base);
    basis.baths.push_back(decompose(bath, opts));
    base += 2 * basis.baths.back().terms();
  }
  return basis;
}

Complex basis_eval(const BathBasis& basis, const std::vector<Complex>& coeffs,
                   double t) {
  Complex acc{0.0, 0.0};
  for (int r = 0; r < basis.terms(); ++r) {
    acc += coeffs[r] * std::exp(basis.exponents[r] * t);
  }
  return acc;
}

ComponentCoeffs component_coefficients(const BathModel& bath,
                                       const BathBasis& basis,
                                       Complex beta_arg) {
  ComponentCoeffs out;
  const int nterms = basis.terms();
  if (bath.density.family == BathFamily::Discrete) {
    out.c00.resize(nterms);
    out.c11.resize(nterms);
    for (size_t k = 0; k < bath.density.modes.size(); ++k) {
      const auto& m = bath.density.modes[k];
      const double g2 = m.gamma * m.gamma;
      const Complex occ = bose_occupation(beta_arg, m.omega);
      out.c00[2 * k] = g2 * (occ + 1.0);
      out.c00[2 * k + 1] = g2 * occ;
      out.c11[2 * k] = g2 * occ;
      out.c11[2 * k + 1] = g2 * (occ + 1.0);
    }
    return out;
  }
  const bool at_native =
      beta_arg.imag() == 0.0 && beta_arg.real() == bath.beta();
  if (at_native) {
    out.c00 = basis.dbeta_c00[0];
  } else {
    std::vector<Complex> s1(basis.grid_samples);
    for (int k = 0; k < basis.grid_samples; ++k) {
      const double t = basis.grid_t0 + k * basis.grid_dt;
      s1[k] = part_a(bath, t) + part_b(bath, beta_arg, t);
    }
    out.c00 = project_on_poles(basis, s1);
  }
  out.c11.resize(nterms);
  if (beta_arg.imag() == 0.0) {
    for (int r = 0; r < nterms; ++r) {
      out.c11[r] = std::conj(out.c00[basis.conj_pair[r]]);
    }
  } else {
    // C_A(-t) needs its own projection once A leaves the real axis.
    std::vector<Complex> s2(basis.grid_samples);
    for (int k = 0; k < basis.grid_samples; ++k) {
      const double t = basis.grid_t0 + k * basis.grid_dt;
      s2[k] = std::conj(part_a(bath, t)) + part_b(bath, beta_arg, t);
    }
    out.c11 = project_on_poles(basis, s2);
  }
  return out;
}

std::vector<std::vector<Complex>> projected_dbeta_stacks(const BathModel& bath,
                                                         const BathBasis& basis,
                                                         double beta_arg,
                                                         int p_max) {
  std::vector<std::vector<Complex>> stacks(p_max + 1);
  if (bath.density.family == BathFamily::Discrete) {
    const auto& modes = bath.density.modes;
    for (int p = 0; p <= p_max; ++p) {
      stacks[p].resize(basis.terms());
      for (size_t k = 0; k < modes.size(); ++k) {
        const double g2 = modes[k].gamma * modes[k].gamma;
        if (p == 0) {
          const double occ = bose_occupation(beta_arg, modes[k].omega);
          stacks[0][2 * k] = g2 * (occ + 1.0);
          stacks[0][2 * k + 1] = g2 * occ;
        } else {
          const double dp =
              g2 * bose_occupation_derivative(p, beta_arg, modes[k].omega);
          stacks[p][2 * k] = dp;
          stacks[p][2 * k + 1] = dp;
        }
      }
    }
    return stacks;
  }
  const bool at_native = beta_arg == bath.beta();
  for (int p = 0; p <= p_max; ++p) {
    if (at_native && p < static_cast<int>(basis.dbeta_c00.size())) {
      stacks[p] = basis.dbeta_c00[p];
      continue;
    }
    std::vector<Complex> samples(basis.grid_samples);
    for (int k = 0; k < basis.grid_samples; ++k) {
      const double t = basis.grid_t0 + k * basis.grid_dt;
      samples[k] = p == 0 ? part_a(bath, t) +
                                part_b(bath, Complex{beta_arg, 0.0}, t)
                          : Complex{part_b_dbeta(bath, p, beta_arg, t), 0.0};
    }
    stacks[p] = project_on_poles(basis, samples);
  }
  return stacks;
}

namespace {

CoeffTables::Slot make_slot(int q_max) {
  CoeffTables::Slot s;
  s.alpha.assign(q_max + 1, Complex{0.0, 0.0});
  s.beta.assign(q_max + 1, Complex{0.0, 0.0});
  return s;
}

}  // namespace

CoeffTables cascade_coefficients(const SystemModel& model,
                                 const ExpansionBasis& basis, int q_max,
                                 double counted_beta) {
  const int counted = counted_bath_index(model);
  CoeffTables tables;
  tables.q_max = q_max;
  tables.slots.resize(model.baths.size());
  for (size_t nu = 0; nu < model.baths.size(); ++nu) {
    const auto& bath = model.baths[nu];
    const auto& bb = basis.baths[nu];
    const bool is_counted = static_cast<int>(nu) == counted;
    const double beta_here =
        is_counted && counted_beta > 0.0 ? counted_beta : bath.beta();
    // TwoPoint tables only consume the p = 0 stack (the thermal argument
    // carries no counting field); Single needs the full derivative stacks
    const int p_max =
        is_counted && model.scheme == MeasurementScheme::Single ? q_max : 0;

    std::vector<std::vector<Complex>> stacks;
    if (beta_here == bath.beta() &&
        p_max < static_cast<int>(bb.dbeta_c00.size())) {
      stacks.assign(bb.dbeta_c00.begin(), bb.dbeta_c00.begin() + p_max + 1);
    } else {
      stacks = projected_dbeta_stacks(bath, bb, beta_here, p_max);
    }

    tables.slots[nu].resize(bb.terms());
    for (int r = 0; r < bb.terms(); ++r) {
      const Complex g = bb.exponents[r];
      const int pr = bb.conj_pair[r];
      auto& k0 = tables.slots[nu][r][0];
      auto& k1 = tables.slots[nu][r][1];
      k0 = make_slot(q_max);
      k1 = make_slot(q_max);
      // shift generators per component: d/d(i chi) of exp(s g chi) = -i s g
      const Complex shift10 = -im_unit * kCrossShift10 * g;
      const Complex shift01 = -im_unit * kCrossShift01 * g;
      for (int q = 0; q <= (is_counted ? q_max : 0); ++q) {
        Complex c00_q{0.0, 0.0}, c11_q{0.0, 0.0};
        Complex c10_q{0.0, 0.0}, c01_q{0.0, 0.0};
        for (int p = 0; p <= q; ++p) {
          // Single scheme: product rule over the thermal tilt (beta - i chi)
          // and the branch shift; TwoPoint keeps only the p = 0 term.
          if (model.scheme == MeasurementScheme::TwoPoint && p > 0) break;
          const double binom = binomial(q, p);
          const double tilt_sign = p % 2 == 0 ? 1.0 : -1.0;
          const Complex base00 = stacks[p][r];
          const Complex base11 = std::conj(stacks[p][pr]);
          const int rem = q - p;
          const Complex f10 = std::pow(shift10, rem);
          const Complex f01 = std::pow(shift01, rem);
          const Complex common = binom * tilt_sign;
          if (rem == 0) {
            c00_q += common * base00;
            c11_q += common * base11;
          }
          c10_q += common * (-base00) * f10;
          c01_q += common * (-base11) * f01;
        }
        k0.alpha[q] = c00_q;
        k0.beta[q] = c10_q;
        k1.alpha[q] = c01_q;
        k1.beta[q] = c11_q;
      }
    }
  }
  return tables;
}

CoeffTables chi_coefficients(const SystemModel& model,
                             const ExpansionBasis& basis, Complex chi,
                             Complex beta_shift) {
  const int counted = counted_bath_index(model);
  if (model.scheme == MeasurementScheme::Single &&
      beta_shift != Complex{0.0, 0.0}) {
    throw validation_error(
        "beta_shift only applies to the two-point scheme");
  }
  CoeffTables tables;
  tables.q_max = 0;
  tables.slots.resize(model.baths.size());
  for (size_t nu = 0; nu < model.baths.size(); ++nu) {
    const auto& bath = model.baths[nu];
    const auto& bb = basis.baths[nu];
    const bool is_counted = static_cast<int>(nu) == counted;
    Complex a_arg{bath.beta(), 0.0};
    if (is_counted) {
      a_arg = model.scheme == MeasurementScheme::Single
                  ? Complex{bath.beta(), 0.0} - im_unit * chi
                  : Complex{bath.beta(), 0.0} + beta_shift;
    }
    const auto comps = component_coefficients(bath, bb, a_arg);
    tables.slots[nu].resize(bb.terms());
    for (int r = 0; r < bb.terms(); ++r) {
      const Complex g = bb.exponents[r];
      auto& k0 = tables.slots[nu][r][0];
      auto& k1 = tables.slots[nu][r][1];
      k0 = make_slot(0);
      k1 = make_slot(0);
      Complex f10{1.0, 0.0}, f01{1.0, 0.0};
      if (is_counted) {
        f10 = std::exp(kCrossShift10 * g * chi);
        f01 = std::exp(kCrossShift01 * g * chi);
      }
      k0.alpha[0] = comps.c00[r];
      k0.beta[0] = -comps.c00[r] * f10;
      k1.alpha[0] = -comps.c11[r] * f01;
      k1.beta[0] = comps.c11[r];
    }
  }
  return tables;
}

void dump_basis(const ExpansionBasis& basis, std::ostream& os) {
  os.precision(17);
  os << "heomfcs-basis 1\n";
  os << "baths " << basis.baths.size() << "\n";
  for (size_t nu = 0; nu < basis.baths.size(); ++nu) {
    const auto& b = basis.baths[nu];
    os << "bath " << nu << " family " << to_string(b.family) << " terms "
       << b.terms() << " stacks " << b.dbeta_c00.size() << " scale "
       << b.fit_scale << " residual " << b.fit_residual << " grid "
       << b.grid_t0 << " " << b.grid_dt << " " << b.grid_samples << "\n";
    for (int r = 0; r < b.terms(); ++r) {
      os << "pole " << b.exponents[r].real() << " " << b.exponents[r].imag()
         << " pair " << b.conj_pair[r] << "\n";
    }
    for (size_t p = 0; p < b.dbeta_c00.size(); ++p) {
      for (size_t r = 0; r < b.dbeta_c00[p].size(); ++r) {
        os << "stack " << p << " " << r << " " << b.dbeta_c00[p][r].real()
           << " " << b.dbeta_c00[p][r].imag() << "\n";
      }
    }
  }
  os << "end\n";
}

ExpansionBasis restore_basis(std::istream& is) {
  auto fail = [](const std::string& what) -> ExpansionBasis {
    throw config_error("basis file: " + what);
  };
  std::string tok;
  int version = 0;
  if (!(is >> tok >> version) || tok != "heomfcs-basis" || version != 1) {
    return fail("bad header");
  }
  size_t nbaths = 0;
  if (!(is >> tok >> nbaths) || tok != "baths") return fail("bath count");
  ExpansionBasis basis;
  int base = 0;
  for (size_t nu = 0; nu < nbaths; ++nu) {
    BathBasis b;
    size_t idx = 0, nterms = 0, nstacks = 0;
    std::string fam;
    if (!(is >> tok >> idx) || tok != "bath") return fail("bath record");
    if (!(is >> tok >> fam) || tok != "family") return fail("family");
    if (fam == "discrete") b.family = BathFamily::Discrete;
    else if (fam == "drude_lorentz") b.family = BathFamily::DrudeLorentz;
    else if (fam == "ohmic_exp") b.family = BathFamily::OhmicExpCutoff;
    else return fail("unknown family " + fam);
    if (!(is >> tok >> nterms) || tok != "terms") return fail("terms");
    if (!(is >> tok >> nstacks) || tok != "stacks") return fail("stacks");
    if (!(is >> tok >> b.fit_scale) || tok != "scale") return fail("scale");
    if (!(is >> tok >> b.fit_residual) || tok != "residual") {
      return fail("residual");
    }
    if (!(is >> tok >> b.grid_t0 >> b.grid_dt >> b.grid_samples) ||
        tok != "grid") {
      return fail("grid");
    }
    for (size_t r = 0; r < nterms; ++r) {
      double re = 0, imv = 0;
      int pair = 0;
      if (!(is >> tok >> re >> imv) || tok != "pole") return fail("pole");
      if (!(is >> tok >> pair) || tok != "pair") return fail("pair");
      b.exponents.emplace_back(re, imv);
      b.conj_pair.push_back(pair);
    }
    b.dbeta_c00.assign(nstacks, std::vector<Complex>(nterms));
    for (size_t p = 0; p < nstacks; ++p) {
      for (size_t r = 0; r < nterms; ++r) {
        size_t pi = 0, ri = 0;
        double re = 0, imv = 0;
        if (!(is >> tok >> pi >> ri >> re >> imv) || tok != "stack" ||
            pi != p || ri != r) {
          return fail("stack entry");
        }
        b.dbeta_c00[p][r] = Complex{re, imv};
      }
    }
    basis.slot_base.push_back(base);
    base += 2 * static_cast<int>(nterms);
    basis.baths.push_back(std::move(b));
  }
  if (!(is >> tok) || tok != "end") return fail("missing end marker");
  return basis;
}

}  // namespace heomfcs
