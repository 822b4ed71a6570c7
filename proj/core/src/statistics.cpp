#include "heomfcs/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "heomfcs/special.hpp"

namespace heomfcs {

MomentSeries moments_from_fields(const Trajectory& traj,
                                 const IndexSpace& space) {
  MomentSeries out;
  const int m_max = space.derivative_order();
  out.mu.assign(m_max, {});
  for (const auto& snap : traj.snapshots) {
    out.t.push_back(snap.t);
    std::vector<Complex> mu(m_max + 1, Complex{0.0, 0.0});
    for (int sec = 0; sec < space.sector_count(); ++sec) {
      const int w = space.weight(sec);
      mu[w] += space.sector_coefficient(sec) * snap.top[sec].trace();
    }
    out.max_trace_defect =
        std::max(out.max_trace_defect, std::abs(mu[0] - Complex{1.0, 0.0}));
    for (int n = 1; n <= m_max; ++n) {
      out.max_imag = std::max(out.max_imag, std::abs(mu[n].imag()));
      out.mu[n - 1].push_back(mu[n].real());
    }
  }
  return out;
}

std::vector<double> cumulants_from_moments(const std::vector<double>& mu) {
  const int n_hi = static_cast<int>(mu.size());
  std::vector<double> kappa(n_hi);
  for (int n = 1; n <= n_hi; ++n) {
    double acc = mu[n - 1];
    for (int m = 1; m < n; ++m) {
      acc -= binomial(n - 1, m - 1) * kappa[m - 1] * mu[n - m - 1];
    }
    kappa[n - 1] = acc;
  }
  return kappa;
}

std::vector<double> moments_from_cumulants(const std::vector<double>& kappa) {
  const int n_hi = static_cast<int>(kappa.size());
  std::vector<double> mu(n_hi);
  for (int n = 1; n <= n_hi; ++n) {
    double acc = kappa[n - 1];
    for (int m = 1; m < n; ++m) {
      acc += binomial(n - 1, m - 1) * kappa[m - 1] * mu[n - m - 1];
    }
    mu[n - 1] = acc;
  }
  return mu;
}

std::vector<double> factorial_cumulants_from_cumulants(
    const std::vector<double>& kappa) {
  const int n_hi = static_cast<int>(kappa.size());
  std::vector<double> fc(n_hi);
  for (int n = 1; n <= n_hi; ++n) {
    double acc = kappa[n - 1];
    for (int m = 1; m < n; ++m) {
      acc -= stirling2(n, m) * fc[m - 1];
    }
    fc[n - 1] = acc;
  }
  return fc;
}

std::vector<double> cumulants_from_factorial_cumulants(
    const std::vector<double>& fc) {
  const int n_hi = static_cast<int>(fc.size());
  std::vector<double> kappa(n_hi);
  for (int n = 1; n <= n_hi; ++n) {
    double acc = 0.0;
    for (int m = 1; m <= n; ++m) acc += stirling2(n, m) * fc[m - 1];
    kappa[n - 1] = acc;
  }
  return kappa;
}

CumulantSeries cumulants_from_moment_series(const MomentSeries& m) {
  CumulantSeries out;
  out.t = m.t;
  const int n_hi = m.order();
  out.kappa.assign(n_hi, std::vector<double>(m.t.size()));
  std::vector<double> mu(n_hi);
  for (size_t ti = 0; ti < m.t.size(); ++ti) {
    for (int n = 0; n < n_hi; ++n) mu[n] = m.mu[n][ti];
    const auto kappa = cumulants_from_moments(mu);
    for (int n = 0; n < n_hi; ++n) out.kappa[n][ti] = kappa[n];
  }
  return out;
}

std::vector<double> cumulants_from_chi_stencil(const std::array<Complex, 4>& g,
                                               double h, int order) {
  if (order < 1 || order > 4) {
    throw validation_error("chi stencil supports orders 1..4");
  }
  const Complex gm2 = g[0], gm1 = g[1], gp1 = g[2], gp2 = g[3];
  std::vector<Complex> d(5);
  d[1] = (8.0 * (gp1 - gm1) - (gp2 - gm2)) / (12.0 * h);
  d[2] = (16.0 * (gp1 + gm1) - (gp2 + gm2)) / (12.0 * h * h);
  d[3] = (gp2 - 2.0 * gp1 + 2.0 * gm1 - gm2) / (2.0 * h * h * h);
  d[4] = (gp2 - 4.0 * gp1 - 4.0 * gm1 + gm2) / (h * h * h * h);
  std::vector<double> kappa(order);
  Complex mi{1.0, 0.0};
  for (int n = 1; n <= order; ++n) {
    mi *= -im_unit;  // d/d(i chi) = -i d/d chi
    kappa[n - 1] = (mi * d[n]).real();
  }
  return kappa;
}

FdEstimate beta_derivative(const std::map<double, double>& values, int m,
                           double delta) {
  auto at = [&](double mult) {
    auto it = values.find(mult);
    if (it == values.end()) {
      throw validation_error("beta stencil is missing offset " +
                             std::to_string(mult));
    }
    return it->second;
  };
  FdEstimate est;
  double scale = 0.0;
  for (const auto& [k, v] : values) scale = std::max(scale, std::abs(v));
  if (m == 0) {
    est.value = at(0.0);
    est.error = 0.0;
    return est;
  }
  auto diff = [&](int order, double h_mult) -> double {
    const double h = h_mult * delta;
    switch (order) {
      case 1:
        return (at(h_mult) - at(-h_mult)) / (2.0 * h);
      case 2:
        return (at(h_mult) - 2.0 * at(0.0) + at(-h_mult)) / (h * h);
      case 3:
        return (at(2.0 * h_mult) - 2.0 * at(h_mult) + 2.0 * at(-h_mult) -
                at(-2.0 * h_mult)) /
               (2.0 * h * h * h);
      default:
        throw validation_error("beta stencil supports m <= 3");
    }
  };
  const double coarse = diff(m, 1.0);
  const double fine = diff(m, 0.5);
  est.value = (4.0 * fine - coarse) / 3.0;
  const double h_fine = 0.5 * delta;
  est.error = std::abs(fine - coarse) / 3.0 +
              1e-12 * scale / std::pow(h_fine, m);
  return est;
}

JTable j_coefficients(const BetaFamily& family, int n_hi, int m_hi) {
  if (family.runs.count(0.0) == 0) {
    throw validation_error("beta family needs the central run");
  }
  const auto& central = family.runs.at(0.0);
  if (central.order() < n_hi) {
    throw validation_error("beta family cumulant order too low");
  }
  JTable table;
  table.t = central.t;
  table.m_hi = m_hi;
  table.n_hi = n_hi;
  const size_t nt = table.t.size();
  for (const auto& [mult, run] : family.runs) {
    if (run.t.size() != nt) {
      throw validation_error("beta family runs disagree on the time grid");
    }
  }
  table.value.assign(m_hi + 1,
                     std::vector<std::vector<double>>(
                         n_hi, std::vector<double>(nt, 0.0)));
  table.error = table.value;
  std::map<double, double> stencil;
  for (int n = 1; n <= n_hi; ++n) {
    for (size_t ti = 0; ti < nt; ++ti) {
      stencil.clear();
      for (const auto& [mult, run] : family.runs) {
        stencil[mult] = run.kappa[n - 1][ti];
      }
      for (int m = 0; m <= m_hi; ++m) {
        const auto est = beta_derivative(stencil, m, family.delta);
        table.value[m][n - 1][ti] = est.value;
        table.error[m][n - 1][ti] = est.error;
      }
    }
  }
  return table;
}

RelationResidual transient_relation_residual(const JTable& two_point,
                                             const JTable& single, int n,
                                             int m) {
  if (n < 1 || n > single.n_hi || m > single.m_hi) {
    throw validation_error("requested relation order outside the table");
  }
  if (m + n - 1 > two_point.m_hi || n > two_point.n_hi) {
    throw validation_error("two-point table too shallow for the relation");
  }
  RelationResidual out;
  out.t = single.t;
  const size_t nt = out.t.size();
  out.residual.resize(nt);
  out.budget.resize(nt);
  out.scale.resize(nt);
  for (size_t ti = 0; ti < nt; ++ti) {
    double rhs = 0.0;
    double budget = single.error[m][n - 1][ti];
    double scale = std::abs(single.value[m][n - 1][ti]);
    for (int j = 0; j < n; ++j) {
      const double w = binomial(n, j) * (j % 2 == 0 ? 1.0 : -1.0);
      const double term = two_point.value[m + j][n - j - 1][ti];
      rhs += w * term;
      budget += binomial(n, j) * two_point.error[m + j][n - j - 1][ti];
      scale = std::max(scale, std::abs(term));
    }
    out.residual[ti] = single.value[m][n - 1][ti] - rhs;
    out.budget[ti] = budget;
    out.scale[ti] = scale;
    out.max_residual = std::max(out.max_residual, std::abs(out.residual[ti]));
    if (budget > 0.0) {
      out.max_residual_over_budget = std::max(
          out.max_residual_over_budget, std::abs(out.residual[ti]) / budget);
    }
  }
  return out;
}

std::vector<double> time_derivative(const std::vector<double>& t,
                                    const std::vector<double>& f) {
  const size_t n = t.size();
  std::vector<double> d(n, 0.0);
  if (n < 3) return d;
  for (size_t i = 1; i + 1 < n; ++i) {
    d[i] = (f[i + 1] - f[i - 1]) / (t[i + 1] - t[i - 1]);
  }
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (t[2] - t[0]);
  d[n - 1] =
      (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (t[n - 1] - t[n - 3]);
  return d;
}

std::vector<double> conductance_from_bias(const JTable& two_point,
                                          double beta) {
  if (two_point.m_hi < 1 || two_point.n_hi < 1) {
    throw validation_error("bias route needs J_1^1");
  }
  auto d = time_derivative(two_point.t, two_point.value[1][0]);
  for (double& x : d) x *= beta * beta;
  return d;
}

std::vector<double> conductance_from_fluctuations(
    const CumulantSeries& two_point, const CumulantSeries& single,
    double beta) {
  if (two_point.order() < 2 || single.order() < 2) {
    throw validation_error("fluctuation route needs second cumulants");
  }
  if (two_point.t.size() != single.t.size()) {
    throw validation_error("fluctuation route: time grids disagree");
  }
  std::vector<double> diff(two_point.t.size());
  for (size_t i = 0; i < diff.size(); ++i) {
    diff[i] = two_point.kappa[1][i] - single.kappa[1][i];
  }
  auto d = time_derivative(two_point.t, diff);
  for (double& x : d) x *= 0.5 * beta * beta;
  return d;
}

PlateauCheck detect_plateau(const std::vector<double>& t,
                            const std::vector<double>& series,
                            double rel_tol) {
  PlateauCheck out;
  const size_t n = t.size();
  if (n < 8) return out;
  const size_t w0 = n - std::max<size_t>(4, n / 5);
  double lo = series[w0], hi = series[w0], mean = 0.0;
  for (size_t i = w0; i < n; ++i) {
    lo = std::min(lo, series[i]);
    hi = std::max(hi, series[i]);
    mean += series[i];
  }
  mean /= static_cast<double>(n - w0);
  double scale = std::abs(mean);
  for (size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(series[i]) * 0.05);
  out.level = mean;
  out.t_window = t[w0];
  out.wobble = scale > 0.0 ? (hi - lo) / scale : 0.0;
  out.reached = out.wobble <= rel_tol;
  return out;
}

void write_csv(const std::string& path, const std::vector<Column>& cols) {
  if (cols.empty()) throw validation_error("csv writer needs columns");
  const size_t rows = cols[0].data->size();
  for (const auto& c : cols) {
    if (c.data->size() != rows) {
      throw validation_error("csv writer: ragged columns");
    }
  }
  std::ofstream os(path);
  if (!os) throw numerical_error("cannot open " + path + " for writing");
  for (size_t c = 0; c < cols.size(); ++c) {
    os << (c ? "," : "") << cols[c].name;
  }
  os << "\n";
  char buf[40];
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < cols.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", (*cols[c].data)[r]);
      os << (c ? "," : "") << buf;
    }
    os << "\n";
  }
  if (!os) throw numerical_error("write failed: " + path);
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw numerical_error("cannot open " + path + " for writing");
  os << j.dump(2) << "\n";
  if (!os) throw numerical_error("write failed: " + path);
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace heomfcs
