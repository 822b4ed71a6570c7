#include "heomfcs/expfit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>

namespace heomfcs {

std::vector<Complex> estimate_poles(const std::vector<Complex>& samples,
                                    double dt, int max_terms) {
  const int n = static_cast<int>(samples.size());
  if (n < 8) throw validation_error("pole estimation needs >= 8 samples");
  if (max_terms < 1) return {};
  const int window = std::min((n - 1) / 2, 2 * std::max(8, max_terms) + n / 4);
  const int rows = n - window;

  // Re and Im channels share poles; stacking them keeps the pencil real so
  // eigenvalues come out in exact conjugate pairs.
  Eigen::MatrixXd hank(2 * rows, window + 1);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j <= window; ++j) {
      hank(i, j) = samples[i + j].real();
      hank(rows + i, j) = samples[i + j].imag();
    }
  }
  const Eigen::MatrixXd y0 = hank.leftCols(window);
  const Eigen::MatrixXd y1 = hank.rightCols(window);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      y0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) < 1e-280) return {};
  int rank = 0;
  while (rank < sv.size() && sv(rank) > 1e-12 * sv(0)) ++rank;
  rank = std::min(rank, max_terms);
  if (rank == 0) return {};

  const Eigen::MatrixXd ur = svd.matrixU().leftCols(rank);
  const Eigen::MatrixXd vr = svd.matrixV().leftCols(rank);
  const Eigen::VectorXd sr = sv.head(rank);
  Eigen::MatrixXd pencil =
      sr.asDiagonal().inverse() * (ur.transpose() * y1 * vr);

  Eigen::EigenSolver<Eigen::MatrixXd> eig(pencil);
  std::vector<Complex> poles;
  poles.reserve(rank);
  for (int i = 0; i < rank; ++i) {
    Complex z = eig.eigenvalues()(i);
    if (std::abs(z) < 1e-12) continue;  // spurious zero mode
    if (std::abs(z) > 1.0) z /= std::abs(z);
    Complex g = std::log(z) / dt;
    if (g.real() > 0.0) g = Complex{0.0, g.imag()};
    poles.push_back(g);
  }
  return poles;
}

std::vector<Complex> fit_coefficients(const std::vector<Complex>& samples,
                                      double dt,
                                      const std::vector<Complex>& poles) {
  const int n = static_cast<int>(samples.size());
  const int r = static_cast<int>(poles.size());
  if (r == 0) return {};
  Eigen::MatrixXcd vand(n, r);
  Eigen::VectorXcd rhs(n);
  for (int k = 0; k < n; ++k) {
    const double t = k * dt;
    for (int j = 0; j < r; ++j) vand(k, j) = std::exp(poles[j] * t);
    rhs(k) = samples[k];
  }
  // Column equilibration plus a small Tikhonov step.  Fast poles the grid
  // barely resolves give near-null directions, and a plain pseudo-inverse
  // loads huge cancelling amplitudes onto them; the ridge pins those to
  // zero while leaving resolved directions untouched to ~1e-16 relative.
  Eigen::VectorXd colnorm(r);
  for (int j = 0; j < r; ++j) {
    colnorm(j) = vand.col(j).norm();
    if (colnorm(j) < 1e-300) colnorm(j) = 1.0;
    vand.col(j) /= colnorm(j);
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
      vand, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double mu = 1e-8 * sv(0);
  const Eigen::VectorXcd proj = svd.matrixU().adjoint() * rhs;
  Eigen::VectorXcd damped = Eigen::VectorXcd::Zero(sv.size());
  for (int i = 0; i < sv.size(); ++i) {
    damped(i) = sv(i) * proj(i) / (sv(i) * sv(i) + mu * mu);
  }
  const Eigen::VectorXcd sol = svd.matrixV() * damped;
  std::vector<Complex> out(r);
  for (int j = 0; j < r; ++j) out[j] = sol(j) / colnorm(j);
  return out;
}

double fit_residual(const std::vector<Complex>& samples, double dt,
                    const std::vector<Complex>& poles,
                    const std::vector<Complex>& coeffs) {
  double worst = 0.0;
  for (size_t k = 0; k < samples.size(); ++k) {
    const double t = static_cast<double>(k) * dt;
    Complex fit{0.0, 0.0};
    for (size_t j = 0; j < poles.size(); ++j) {
      fit += coeffs[j] * std::exp(poles[j] * t);
    }
    worst = std::max(worst, std::abs(fit - samples[k]));
  }
  return worst;
}

std::vector<int> symmetrize_poles(std::vector<Complex>& poles,
                                  double imag_snap_tol) {
  std::vector<Complex> reals, upper, lower;
  for (Complex g : poles) {
    const double scale = std::max(1.0, std::abs(g));
    if (std::abs(g.imag()) <= imag_snap_tol * scale) {
      reals.emplace_back(g.real(), 0.0);
    } else if (g.imag() > 0.0) {
      upper.push_back(g);
    } else {
      lower.push_back(g);
    }
  }

  std::vector<std::pair<Complex, Complex>> pairs;
  std::vector<bool> used(lower.size(), false);
  for (Complex u : upper) {
    int match = -1;
    double best = 1e-6 * (1.0 + std::abs(u));
    for (size_t i = 0; i < lower.size(); ++i) {
      if (used[i]) continue;
      const double d = std::abs(std::conj(u) - lower[i]);
      if (d < best) {
        best = d;
        match = static_cast<int>(i);
      }
    }
    Complex merged = u;
    if (match >= 0) {
      used[match] = true;
      merged = 0.5 * (u + std::conj(lower[match]));
    }
    pairs.emplace_back(merged, std::conj(merged));
  }
  for (size_t i = 0; i < lower.size(); ++i) {
    if (used[i]) continue;
    pairs.emplace_back(std::conj(lower[i]), lower[i]);
  }

  std::sort(reals.begin(), reals.end(),
            [](Complex a, Complex b) { return a.real() > b.real(); });
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (a.first.real() != b.first.real()) {
      return a.first.real() > b.first.real();
    }
    return std::abs(a.first.imag()) < std::abs(b.first.imag());
  });

  poles.clear();
  std::vector<int> pair_of;
  for (Complex g : reals) {
    pair_of.push_back(static_cast<int>(poles.size()));
    poles.push_back(g);
  }
  for (const auto& [gp, gm] : pairs) {
    const int base = static_cast<int>(poles.size());
    poles.push_back(gp);
    poles.push_back(gm);
    pair_of.push_back(base + 1);
    pair_of.push_back(base);
  }
  return pair_of;
}

}  // namespace heomfcs
