#include "heomfcs/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "heomfcs/special.hpp"

namespace heomfcs {

namespace {

constexpr int kMaxOracleDim = 6000;

std::vector<int> decode_occ(int b, int modes, int cutoff) {
  std::vector<int> occ(modes);
  for (int k = modes - 1; k >= 0; --k) {
    occ[k] = b % cutoff;
    b /= cutoff;
  }
  return occ;
}

}  // namespace

FiniteModeSystem::FiniteModeSystem(const SystemModel& model, int fock_cutoff)
    : cutoff_(fock_cutoff) {
  validate(model);
  if (fock_cutoff < 2) throw validation_error("fock cutoff must be >= 2");
  counted_bath_ = counted_bath_index(model);
  counted_beta_ = model.baths[counted_bath_].beta();
  sys_dim_ = model.dim();
  rho0_ = model.rho0;
  for (size_t nu = 0; nu < model.baths.size(); ++nu) {
    const auto& bath = model.baths[nu];
    if (bath.density.family != BathFamily::Discrete) {
      throw validation_error("finite-mode reference needs discrete baths");
    }
    bath_beta_.push_back(bath.beta());
    for (const auto& m : bath.density.modes) {
      mode_omega_.push_back(m.omega);
      mode_bath_.push_back(static_cast<int>(nu));
    }
  }
  const int modes = static_cast<int>(mode_omega_.size());
  long long md = 1;
  for (int k = 0; k < modes; ++k) {
    md *= cutoff_;
    if (md * sys_dim_ > kMaxOracleDim) {
      throw validation_error("finite-mode dimension exceeds the cap");
    }
  }
  const int modes_dim = static_cast<int>(md);
  dim_ = sys_dim_ * modes_dim;

  observable_.assign(dim_, 0.0);
  ComplexMatrix h = ComplexMatrix::Zero(dim_, dim_);
  std::vector<double> gamma_of_mode;
  {
    for (const auto& bath : model.baths) {
      for (const auto& m : bath.density.modes) {
        gamma_of_mode.push_back(m.gamma);
      }
    }
  }
  for (int b = 0; b < modes_dim; ++b) {
    const auto occ = decode_occ(b, modes, cutoff_);
    double mode_energy = 0.0, counted_energy = 0.0;
    for (int k = 0; k < modes; ++k) {
      mode_energy += mode_omega_[k] * occ[k];
      if (mode_bath_[k] == counted_bath_) {
        counted_energy += mode_omega_[k] * occ[k];
      }
    }
    for (int s = 0; s < sys_dim_; ++s) {
      const int i = s * modes_dim + b;
      observable_[i] = counted_energy;
      h(i, i) += mode_energy;
      for (int sp = 0; sp < sys_dim_; ++sp) {
        h(sp * modes_dim + b, i) += model.h_sys(sp, s);
      }
    }
    // displacement couplings: V (x) gamma (a + a^dag) per mode
    int stride = modes_dim;
    for (int k = 0; k < modes; ++k) {
      stride /= cutoff_;
      if (occ[k] == 0) continue;
      const int b_low = b - stride;  // occ[k] - 1
      const double amp = gamma_of_mode[k] * std::sqrt(static_cast<double>(occ[k]));
      const auto& v = model.couplings[mode_bath_[k]];
      for (int s = 0; s < sys_dim_; ++s) {
        for (int sp = 0; sp < sys_dim_; ++sp) {
          h(sp * modes_dim + b_low, s * modes_dim + b) += amp * v(sp, s);
          h(sp * modes_dim + b, s * modes_dim + b_low) += amp * v(sp, s);
        }
      }
    }
  }

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  if (es.info() != Eigen::Success) {
    throw numerical_error("finite-mode diagonalization failed");
  }
  energies_ = es.eigenvalues();
  evecs_ = es.eigenvectors();
}

ComplexMatrix FiniteModeSystem::assemble_pi(Complex counted_beta) const {
  const int modes = static_cast<int>(mode_omega_.size());
  const int modes_dim = dim_ / sys_dim_;
  std::vector<Complex> weight(modes_dim);
  std::vector<Complex> z_mode(modes, Complex{0.0, 0.0});
  for (int k = 0; k < modes; ++k) {
    const Complex beta = mode_bath_[k] == counted_bath_
                             ? counted_beta
                             : Complex{bath_beta_[mode_bath_[k]], 0.0};
    Complex z{0.0, 0.0};
    for (int n = 0; n < cutoff_; ++n) {
      z += std::exp(-beta * mode_omega_[k] * static_cast<double>(n));
    }
    z_mode[k] = z;
  }
  for (int b = 0; b < modes_dim; ++b) {
    const auto occ = decode_occ(b, modes, cutoff_);
    Complex w{1.0, 0.0};
    for (int k = 0; k < modes; ++k) {
      const Complex beta = mode_bath_[k] == counted_bath_
                               ? counted_beta
                               : Complex{bath_beta_[mode_bath_[k]], 0.0};
      w *= std::exp(-beta * mode_omega_[k] * static_cast<double>(occ[k])) /
           z_mode[k];
    }
    weight[b] = w;
  }
  ComplexMatrix pi = ComplexMatrix::Zero(dim_, dim_);
  for (int s = 0; s < sys_dim_; ++s) {
    for (int sp = 0; sp < sys_dim_; ++sp) {
      if (rho0_(s, sp) == Complex{0.0, 0.0}) continue;
      for (int b = 0; b < modes_dim; ++b) {
        pi(s * modes_dim + b, sp * modes_dim + b) = rho0_(s, sp) * weight[b];
      }
    }
  }
  return pi;
}

std::vector<Complex> FiniteModeSystem::trace_series(
    const ComplexMatrix& m1, const ComplexMatrix& m2,
    const std::vector<double>& ts) const {
  // value(t) = sum_ij m1_ij m2_ji exp(i (E_i - E_j) t)
  ComplexMatrix w(dim_, dim_);
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) {
      w(i, j) = m1(i, j) * m2(j, i);
    }
  }
  std::vector<Complex> out(ts.size());
  const bool uniform =
      ts.size() >= 3 &&
      [&] {
        const double dt = ts[1] - ts[0];
        for (size_t k = 2; k < ts.size(); ++k) {
          if (std::abs(ts[k] - ts[k - 1] - dt) > 1e-12 * std::max(1.0, dt)) {
            return false;
          }
        }
        return true;
      }();
  if (uniform) {
    const double dt = ts[1] - ts[0];
    ComplexMatrix phase(dim_, dim_), step(dim_, dim_);
    for (int i = 0; i < dim_; ++i) {
      for (int j = 0; j < dim_; ++j) {
        const double de = energies_(i) - energies_(j);
        phase(i, j) = std::exp(Complex{0.0, de * ts[0]});
        step(i, j) = std::exp(Complex{0.0, de * dt});
      }
    }
    for (size_t k = 0; k < ts.size(); ++k) {
      Complex acc{0.0, 0.0};
      const Complex* wp = w.data();
      Complex* pp = phase.data();
      const Complex* sp = step.data();
      const size_t nn = static_cast<size_t>(dim_) * dim_;
      for (size_t e = 0; e < nn; ++e) {
        acc += wp[e] * pp[e];
        pp[e] *= sp[e];
      }
      out[k] = acc;
    }
    return out;
  }
  for (size_t k = 0; k < ts.size(); ++k) {
    Complex acc{0.0, 0.0};
    for (int i = 0; i < dim_; ++i) {
      for (int j = 0; j < dim_; ++j) {
        acc += w(i, j) *
               std::exp(Complex{0.0, (energies_(i) - energies_(j)) * ts[k]});
      }
    }
    out[k] = acc;
  }
  return out;
}

std::vector<Complex> FiniteModeSystem::exact_cgf(
    MeasurementScheme scheme, Complex chi, const std::vector<double>& ts,
    Complex counted_beta) const {
  ComplexMatrix d1q = evecs_;
  for (int i = 0; i < dim_; ++i) {
    d1q.row(i) *= std::exp(im_unit * chi * observable_[i]);
  }
  const ComplexMatrix m1 = evecs_.adjoint() * d1q;

  const ComplexMatrix pi = assemble_pi(counted_beta);
  ComplexMatrix weighted = pi;
  Complex value0{0.0, 0.0};
  if (scheme == MeasurementScheme::TwoPoint) {
    for (int i = 0; i < dim_; ++i) {
      weighted.row(i) *= std::exp(-im_unit * chi * observable_[i]);
    }
    value0 = Complex{1.0, 0.0};
  } else {
    for (int i = 0; i < dim_; ++i) {
      value0 += std::exp(im_unit * chi * observable_[i]) * pi(i, i);
    }
  }
  const ComplexMatrix m2 = evecs_.adjoint() * weighted * evecs_;
  const auto values = trace_series(m1, m2, ts);

  std::vector<Complex> g(values.size());
  const Complex ref = std::log(value0);
  for (size_t k = 0; k < values.size(); ++k) {
    Complex lg = std::log(values[k]);
    if (k > 0) {
      const double prev = (g[k - 1] + ref).imag();
      lg += Complex{0.0,
                    2.0 * M_PI * std::round((prev - lg.imag()) / (2.0 * M_PI))};
    }
    g[k] = lg - ref;
  }
  return g;
}

std::vector<Complex> FiniteModeSystem::exact_cgf(
    MeasurementScheme scheme, Complex chi,
    const std::vector<double>& ts) const {
  return exact_cgf(scheme, chi, ts, Complex{counted_beta_, 0.0});
}

FiniteModeSystem::ProjectiveMoments FiniteModeSystem::projective_moments(
    double t) const {
  const ComplexMatrix pi = assemble_pi(Complex{counted_beta_, 0.0});
  ComplexMatrix oq = evecs_, o2q = evecs_, opi = pi;
  for (int i = 0; i < dim_; ++i) {
    oq.row(i) *= observable_[i];
    o2q.row(i) *= observable_[i] * observable_[i];
    opi.row(i) *= observable_[i];
  }
  const ComplexMatrix o_hat = evecs_.adjoint() * oq;
  const ComplexMatrix o2_hat = evecs_.adjoint() * o2q;
  const ComplexMatrix pi_hat = evecs_.adjoint() * pi * evecs_;
  const ComplexMatrix opi_hat = evecs_.adjoint() * opi * evecs_;

  Complex t0{0.0, 0.0}, t0b{0.0, 0.0};
  for (int i = 0; i < dim_; ++i) {
    t0 += observable_[i] * pi(i, i);
    t0b += observable_[i] * observable_[i] * pi(i, i);
  }
  Complex heis_o{0.0, 0.0}, heis_o2{0.0, 0.0}, heis_cross{0.0, 0.0};
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) {
      const Complex ph =
          std::exp(Complex{0.0, (energies_(i) - energies_(j)) * t});
      heis_o += o_hat(i, j) * ph * pi_hat(j, i);
      heis_o2 += o2_hat(i, j) * ph * pi_hat(j, i);
      heis_cross += o_hat(i, j) * ph * opi_hat(j, i);
    }
  }
  ProjectiveMoments out;
  out.mu1 = (heis_o - t0).real();
  out.mu2 = (heis_o2 - 2.0 * heis_cross + t0b).real();
  return out;
}

FiniteModeSystem::ProjectiveMoments FiniteModeSystem::fd_moments(
    double t, double h) const {
  const std::vector<double> ts{t};
  auto value_at = [&](double chi) {
    const auto g =
        exact_cgf(MeasurementScheme::TwoPoint, Complex{chi, 0.0}, ts,
                  Complex{counted_beta_, 0.0});
    return std::exp(g[0]);
  };
  const Complex mp1 = value_at(h), mm1 = value_at(-h);
  const Complex mp2 = value_at(2.0 * h), mm2 = value_at(-2.0 * h);
  const Complex d1 = (8.0 * (mp1 - mm1) - (mp2 - mm2)) / (12.0 * h);
  const Complex d2 =
      (16.0 * (mp1 + mm1) - (mp2 + mm2) - Complex{30.0, 0.0}) / (12.0 * h * h);
  ProjectiveMoments out;
  out.mu1 = (-im_unit * d1).real();
  out.mu2 = (-d2).real();
  return out;
}

double FiniteModeSystem::top_level_weight(const std::vector<double>& ts) const {
  const int modes = static_cast<int>(mode_omega_.size());
  const int modes_dim = dim_ / sys_dim_;
  ComplexMatrix proj_q = evecs_;
  for (int s = 0; s < sys_dim_; ++s) {
    for (int b = 0; b < modes_dim; ++b) {
      const auto occ = decode_occ(b, modes, cutoff_);
      bool top = false;
      for (int k = 0; k < modes; ++k) top = top || occ[k] == cutoff_ - 1;
      if (!top) proj_q.row(s * modes_dim + b).setZero();
    }
  }
  const ComplexMatrix proj_hat = evecs_.adjoint() * proj_q;
  const ComplexMatrix pi_hat =
      evecs_.adjoint() * assemble_pi(Complex{counted_beta_, 0.0}) * evecs_;
  const auto series = trace_series(proj_hat, pi_hat, ts);
  double worst = 0.0;
  for (const Complex& v : series) worst = std::max(worst, std::abs(v));
  return worst;
}

double FiniteModeSystem::scheme_identity_residual(
    Complex chi, const std::vector<double>& ts) const {
  const auto g_single = exact_cgf(MeasurementScheme::Single, chi, ts,
                                  Complex{counted_beta_, 0.0});
  const auto g_two = exact_cgf(MeasurementScheme::TwoPoint, chi, ts,
                               Complex{counted_beta_, 0.0} - im_unit * chi);
  double worst = 0.0;
  for (size_t k = 0; k < ts.size(); ++k) {
    worst = std::max(worst, std::abs(g_single[k] - g_two[k]));
  }
  return worst;
}

WeakCouplingReference weak_coupling_reference(const SystemModel& model) {
  validate(model);
  if (model.dim() != 2) {
    throw validation_error("weak-coupling reference covers two-level systems");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(model.h_sys);
  const double gap = es.eigenvalues()(1) - es.eigenvalues()(0);
  if (!(gap > 0.0)) {
    throw validation_error("weak-coupling reference needs a nonzero gap");
  }
  const auto ground = es.eigenvectors().col(0);
  const auto excited = es.eigenvectors().col(1);
  const int counted = counted_bath_index(model);

  auto current_at = [&](double beta_counted) {
    double up = 0.0, down = 0.0, up_r = 0.0, down_r = 0.0;
    for (size_t nu = 0; nu < model.baths.size(); ++nu) {
      const auto& bath = model.baths[nu];
      const double beta =
          static_cast<int>(nu) == counted ? beta_counted : bath.beta();
      const double j = spectral_value(bath.density, gap);
      const double me =
          std::norm((excited.adjoint() * model.couplings[nu] * ground)(0, 0));
      const double occ = bose_occupation(beta, gap);
      const double u = 2.0 * M_PI * j * occ * me;
      const double d = 2.0 * M_PI * j * (occ + 1.0) * me;
      up += u;
      down += d;
      if (static_cast<int>(nu) == counted) {
        up_r = u;
        down_r = d;
      }
    }
    if (up + down <= 0.0) return 0.0;
    const double p1 = up / (up + down);
    const double p0 = 1.0 - p1;
    return gap * (p1 * down_r - p0 * up_r);
  };

  WeakCouplingReference out;
  out.gap = gap;
  const double beta_r = model.baths[counted].beta();
  out.current = current_at(beta_r);
  const double h = 1e-6 * beta_r;
  out.kappa =
      beta_r * beta_r * (current_at(beta_r + h) - current_at(beta_r - h)) /
      (2.0 * h);
  out.rate_up = 0.0;
  out.rate_down = 0.0;
  {
    const auto& bath = model.baths[counted];
    const double j = spectral_value(bath.density, gap);
    const double me =
        std::norm((excited.adjoint() * model.couplings[counted] * ground)(0, 0));
    const double occ = bose_occupation(beta_r, gap);
    out.rate_up = 2.0 * M_PI * j * occ * me;
    out.rate_down = 2.0 * M_PI * j * (occ + 1.0) * me;
  }
  return out;
}

}  // namespace heomfcs
