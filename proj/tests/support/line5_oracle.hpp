#pragma once

#include <cmath>
#include <vector>

namespace saddlesvm::testing {

/// Numeric minimizer of the per-class dual subproblem
///   F(x) = sum_i [ c_i x_i + (gamma/d) x_i ln x_i + (1/tau) x_i ln(x_i / prev_i) ]
/// over the probability simplex, by equality-constrained Newton steps with
/// backtracking. Only F, its gradient and its (diagonal) Hessian are used.
struct Line5Problem {
  std::vector<double> c;     // linear coefficients: label * <w_bar, X_i> / d
  std::vector<double> prev;  // previous iterate, strictly positive
  double gamma = 0.0;
  double d = 1.0;
  double tau = 1.0;

  double value(const std::vector<double>& x) const {
    double f = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      f += c[i] * x[i] + gamma / d * x[i] * std::log(x[i]) +
           x[i] * std::log(x[i] / prev[i]) / tau;
    return f;
  }
};

inline std::vector<double> line5_newton(const Line5Problem& p, int max_iterations = 500) {
  const std::size_t n = p.c.size();
  std::vector<double> x(n, 1.0 / static_cast<double>(n));
  const double curv = p.gamma / p.d + 1.0 / p.tau;
  std::vector<double> g(n), h(n), step(n), trial(n);
  for (int it = 0; it < max_iterations; ++it) {
    double sum_gh = 0.0, sum_ih = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = p.c[i] + p.gamma / p.d * (std::log(x[i]) + 1.0) +
             (std::log(x[i] / p.prev[i]) + 1.0) / p.tau;
      h[i] = curv / x[i];
      sum_gh += g[i] / h[i];
      sum_ih += 1.0 / h[i];
    }
    const double mu = -sum_gh / sum_ih;
    double decrement = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      step[i] = -(g[i] + mu) / h[i];
      decrement += step[i] * step[i] * h[i];
    }
    if (decrement < 1e-28) break;
    const double f0 = p.value(x);
    double t = 1.0;
    while (true) {
      bool positive = true;
      for (std::size_t i = 0; i < n; ++i) {
        trial[i] = x[i] + t * step[i];
        if (!(trial[i] > 0.0)) positive = false;
      }
      if (positive && p.value(trial) <= f0 - 0.25 * t * decrement) break;
      t *= 0.5;
      if (t < 1e-20) return x;
    }
    // Re-project onto sum = 1 to stop drift from accumulating.
    double s = 0.0;
    for (double v : trial) s += v;
    for (std::size_t i = 0; i < n; ++i) x[i] = trial[i] / s;
  }
  return x;
}

}  // namespace saddlesvm::testing
