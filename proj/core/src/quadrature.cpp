#include "heomfcs/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace heomfcs {

namespace {

// 16-point Gauss-Legendre nodes (positive half) and weights on [-1, 1].
constexpr int kGlPoints = 8;
constexpr double kGlNode[kGlPoints] = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
    0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
    0.9445750230732326, 0.9894009349916499};
constexpr double kGlWeight[kGlPoints] = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
    0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
    0.0622535239386479, 0.0271524594117541};

Complex gauss16(const std::function<Complex(double)>& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  Complex acc{0.0, 0.0};
  for (int i = 0; i < kGlPoints; ++i) {
    const double d = half * kGlNode[i];
    acc += kGlWeight[i] * (f(mid + d) + f(mid - d));
  }
  return half * acc;
}

Complex composite(const std::function<Complex(double)>& f, double a, double b,
                  int panels) {
  const double h = (b - a) / panels;
  Complex acc{0.0, 0.0};
  for (int p = 0; p < panels; ++p) {
    acc += gauss16(f, a + p * h, a + (p + 1) * h);
  }
  return acc;
}

}  // namespace

Complex integrate_composite(const std::function<Complex(double)>& f, double a,
                            double b, double rel_tol, double abs_tol,
                            int min_panels) {
  if (!(b > a)) return Complex{0.0, 0.0};
  int panels = std::max(1, min_panels);
  Complex prev = composite(f, a, b, panels);
  for (int round = 0; round < 12; ++round) {
    panels *= 2;
    const Complex cur = composite(f, a, b, panels);
    const double diff = std::abs(cur - prev);
    if (diff <= abs_tol + rel_tol * std::abs(cur)) return cur;
    prev = cur;
  }
  throw numerical_error("quadrature on [" + std::to_string(a) + ", " +
                        std::to_string(b) + "] did not converge");
}

Complex integrate_oscillatory_tail(const std::function<Complex(double)>& f,
                                   double a, double t, double rel_tol,
                                   double abs_tol) {
  if (!(t > 0.0)) {
    throw numerical_error("oscillatory tail requires t > 0");
  }
  const double period = M_PI / t;
  const auto g = [&](double w) {
    return f(w) * std::exp(Complex{0.0, -w * t});
  };

  // Partial sums of half-period panels, condensed by repeated averaging.
  // Successive panels pick up a phase of pi, so the sequence behaves like an
  // alternating series and the averaging table converges geometrically.
  constexpr int kMaxPanels = 64;
  std::vector<Complex> row;
  row.reserve(kMaxPanels);
  Complex partial{0.0, 0.0};
  Complex best{0.0, 0.0};
  Complex last{0.0, 0.0};
  double best_err = HUGE_VAL;
  for (int k = 0; k < kMaxPanels; ++k) {
    partial += gauss16(g, a + k * period, a + (k + 1) * period);
    row.push_back(partial);
    std::vector<Complex> tab = row;
    while (tab.size() > 1) {
      for (size_t i = 0; i + 1 < tab.size(); ++i) {
        tab[i] = 0.5 * (tab[i] + tab[i + 1]);
      }
      tab.pop_back();
    }
    if (k > 2) {
      const double err = std::abs(tab[0] - last);
      if (err < best_err) {
        best_err = err;
        best = tab[0];
      }
      if (best_err <= abs_tol + rel_tol * std::abs(best)) return best;
    }
    last = tab[0];
  }
  if (best_err <= 1e3 * (abs_tol + rel_tol * std::abs(best))) return best;
  throw numerical_error("oscillatory tail did not converge (a=" +
                        std::to_string(a) + ", t=" + std::to_string(t) + ")");
}

}  // namespace heomfcs
