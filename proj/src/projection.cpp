#include "saddlesvm/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "saddlesvm/error.hpp"

namespace saddlesvm {

std::vector<double> project_simplex_normalize(std::span<const double> weights) {
  double z = 0.0;
  for (double w : weights) z += w;
  if (!(z > 0.0) || !std::isfinite(z))
    throw NumericalError("cannot normalize weights with sum " + std::to_string(z));
  std::vector<double> out(weights.begin(), weights.end());
  for (double& w : out) w /= z;
  return out;
}

void check_cap_feasible(double nu, std::size_t n) {
  if (!(nu > 0.0) || nu > 1.0)
    throw ConfigError("nu must lie in (0, 1], got " + std::to_string(nu));
  // A hair of slack so that nu computed as 1/n in floating point is accepted.
  if (nu * static_cast<double>(n) < 1.0 - 1e-12)
    throw ConfigError("infeasible nu = " + std::to_string(nu) + ": need nu >= 1/" +
                      std::to_string(n) + " = " + std::to_string(1.0 / static_cast<double>(n)));
}

ClipStats clip_stats(std::span<const double> weights, double nu) {
  ClipStats s;
  for (double w : weights) {
    if (w > nu)
      s.excess += w - nu;
    else if (w < nu)
      s.below += w;
  }
  return s;
}

double apply_clip_pass(std::span<double> weights, double nu, const ClipStats& stats) {
  if (!(stats.below > 0.0))
    throw NumericalError("capped projection: no uncapped mass left to rescale");
  const double factor = 1.0 + stats.excess / stats.below;
  for (double& w : weights) {
    if (w >= nu)
      w = nu;
    else
      w *= factor;
  }
  return std::log(factor);
}

CappedProjection project_capped_loop(std::span<const double> weights, double nu) {
  check_cap_feasible(nu, weights.size());
  CappedProjection out{std::vector<double>(weights.begin(), weights.end()), 0};
  // Each pass pins at least one more entry to nu, so 1/nu passes suffice; the
  // hard stop guards against pathological rounding only.
  const auto max_passes = static_cast<std::size_t>(std::ceil(1.0 / nu)) + 2;
  while (true) {
    const auto stats = clip_stats(out.weights, nu);
    if (stats.excess <= kClipTolerance) break;
    if (out.passes == max_passes)
      throw NumericalError("capped projection did not settle within 1/nu passes");
    apply_clip_pass(out.weights, nu, stats);
    ++out.passes;
  }
  return out;
}

std::vector<double> project_capped_sorted(std::span<const double> weights, double nu) {
  return project_capped_sorted_detail(weights, nu).weights;
}

SortedCap project_capped_sorted_detail(std::span<const double> weights, double nu) {
  const std::size_t n = weights.size();
  check_cap_feasible(nu, n);
  if (static_cast<double>(n) * nu <= 1.0 + 1e-15)
    return {std::vector<double>(n, 1.0 / static_cast<double>(n)), n, 0.0};

  // order[0] is the largest weight; ties broken by original index.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return weights[a] > weights[b];
  });
  // tail[m] = sum of all but the m largest weights, accumulated smallest first.
  std::vector<double> tail(n + 1, 0.0);
  for (std::size_t m = n; m-- > 0;) tail[m] = tail[m + 1] + weights[order[m]];

  // With the m largest pinned to nu, the rest scale by c_m = (1 - m nu) / tail[m].
  // The projection uses the smallest m whose largest unpinned entry stays below
  // the cap; that predicate is monotone in m on [0, m_max].
  const auto fits = [&](std::size_t m) {
    return (1.0 - static_cast<double>(m) * nu) * weights[order[m]] < nu * tail[m];
  };
  std::size_t lo = 0;
  std::size_t hi = std::min(n - 1, static_cast<std::size_t>(std::floor(1.0 / nu)));
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (fits(mid))
      hi = mid;
    else
      lo = mid + 1;
  }
  const std::size_t m = lo;
  if (m == 0) return {std::vector<double>(weights.begin(), weights.end()), 0, 1.0};  // cap inactive
  SortedCap out{std::vector<double>(n), m, (1.0 - static_cast<double>(m) * nu) / tail[m]};
  for (std::size_t r = 0; r < n; ++r)
    out.weights[order[r]] = r < m ? nu : weights[order[r]] * out.scale;
  return out;
}

}  // namespace saddlesvm
