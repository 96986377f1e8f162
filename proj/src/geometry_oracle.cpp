#include "saddlesvm/geometry_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "saddlesvm/error.hpp"
#include "saddlesvm/projection.hpp"

namespace saddlesvm {

namespace {

void finish(OracleResult& r, const Eigen::VectorXd& z) {
  r.half_sq = 0.5 * z.squaredNorm();
  r.distance = z.norm();
}

Eigen::VectorXd difference(const TransformedData& data, const std::vector<double>& eta,
                           const std::vector<double>& xi) {
  return data.positive * Eigen::Map<const Eigen::VectorXd>(eta.data(), eta.size()) -
         data.negative * Eigen::Map<const Eigen::VectorXd>(xi.data(), xi.size());
}

}  // namespace

OracleResult gilbert_solve(const TransformedData& data, double epsilon,
                           std::size_t max_iterations) {
  const auto n1 = data.n_positive();
  const auto n2 = data.n_negative();
  OracleResult r;
  r.eta.assign(n1, 0.0);
  r.xi.assign(n2, 0.0);
  r.eta[0] = 1.0;
  r.xi[0] = 1.0;
  Eigen::VectorXd z = data.positive.col(0) - data.negative.col(0);

  for (r.iterations = 0; r.iterations < max_iterations; ++r.iterations) {
    const double zz = z.squaredNorm();
    if (zz <= 1e-24) {  // origin reached: hulls touch
      r.separable = false;
      break;
    }
    Eigen::Index ip = 0, in = 0;
    (data.positive.transpose() * z).minCoeff(&ip);
    (data.negative.transpose() * z).maxCoeff(&in);
    const Eigen::VectorXd v = data.positive.col(ip) - data.negative.col(in);
    const double progress = z.dot(z - v);
    r.gap_certificate = progress;
    if (progress <= epsilon * zz) break;
    const double t = std::clamp(progress / (z - v).squaredNorm(), 0.0, 1.0);
    z += t * (v - z);
    for (double& e : r.eta) e *= 1.0 - t;
    for (double& x : r.xi) x *= 1.0 - t;
    r.eta[static_cast<std::size_t>(ip)] += t;
    r.xi[static_cast<std::size_t>(in)] += t;
  }
  finish(r, z);
  // Hulls that overlap leave z wandering near zero without meeting the
  // relative stopping test; flag that instead of returning noise.
  if (r.iterations == max_iterations) r.separable = r.distance > 1e-6;
  return r;
}

double capped_linear_min(const std::vector<double>& gradient, double nu) {
  std::vector<std::size_t> order(gradient.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return gradient[a] < gradient[b]; });
  double remaining = 1.0;
  double value = 0.0;
  for (std::size_t k = 0; k < order.size() && remaining > 0.0; ++k) {
    const double take = std::min(nu, remaining);
    value += take * gradient[order[k]];
    remaining -= take;
  }
  return value;
}

namespace {

// One block of the product domain: weights, gradient, and the pairwise move.
struct PairChoice {
  std::size_t from = 0;  // loses mass (largest gradient among entries with mass)
  std::size_t to = 0;    // gains mass (smallest gradient among entries below cap)
  double violation = -1.0;
};

PairChoice choose_pair(const std::vector<double>& x, const std::vector<double>& g, double cap) {
  PairChoice c;
  double gmax = -std::numeric_limits<double>::infinity();
  double gmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && g[i] > gmax) {
      gmax = g[i];
      c.from = i;
    }
    if (x[i] < cap && g[i] < gmin) {
      gmin = g[i];
      c.to = i;
    }
  }
  if (std::isfinite(gmax) && std::isfinite(gmin)) c.violation = gmax - gmin;
  return c;
}

double block_gap(const std::vector<double>& x, const std::vector<double>& g, double cap) {
  double current = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) current += x[i] * g[i];
  return current - capped_linear_min(g, cap);
}

std::vector<double> start_point(const std::optional<std::vector<double>>& given, std::size_t n,
                                double cap) {
  if (!given) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  if (given->size() != n) throw std::invalid_argument("oracle start has the wrong length");
  double sum = 0.0;
  for (double v : *given) {
    if (v < 0.0 || v > cap + 1e-12) throw std::invalid_argument("oracle start outside the domain");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("oracle start does not sum to 1");
  return *given;
}

}  // namespace

OracleResult fw_oracle(const TransformedData& data, std::optional<double> nu,
                       const OracleOptions& options) {
  if (!(options.tolerance > 0.0)) throw ConfigError("oracle tolerance must be positive");
  const auto n1 = data.n_positive();
  const auto n2 = data.n_negative();
  const double cap = nu.value_or(1.0);
  if (nu) {
    check_cap_feasible(cap, n1);
    check_cap_feasible(cap, n2);
  }

  OracleResult r;
  r.eta = start_point(options.eta0, n1, cap);
  r.xi = start_point(options.xi0, n2, cap);
  Eigen::VectorXd z = difference(data, r.eta, r.xi);

  // Gradients: d/d eta_i = <X+_i, z>, d/d xi_j = -<X-_j, z>.
  std::vector<double> gp(n1), gn(n2);
  const auto refresh_gradients = [&] {
    Eigen::VectorXd a = data.positive.transpose() * z;
    Eigen::VectorXd b = data.negative.transpose() * z;
    for (std::size_t i = 0; i < n1; ++i) gp[i] = a[static_cast<Eigen::Index>(i)];
    for (std::size_t j = 0; j < n2; ++j) gn[j] = -b[static_cast<Eigen::Index>(j)];
  };

  for (r.iterations = 0;; ++r.iterations) {
    refresh_gradients();
    r.gap_certificate = block_gap(r.eta, gp, cap) + block_gap(r.xi, gn, cap);
    if (r.gap_certificate <= options.tolerance) break;
    if (r.iterations == options.max_iterations) {
      finish(r, z);
      throw OracleIterationLimit(r);
    }

    const auto pp = choose_pair(r.eta, gp, cap);
    const auto pn = choose_pair(r.xi, gn, cap);
    const bool positive_side = pp.violation >= pn.violation;
    auto& x = positive_side ? r.eta : r.xi;
    const auto& pick = positive_side ? pp : pn;
    const auto& g = positive_side ? gp : gn;
    if (pick.violation <= 0.0) break;  // KKT holds; gap is rounding noise

    // Moving t units from `from` to `to` shifts z by t * dir.
    Eigen::VectorXd dir =
        positive_side ? Eigen::VectorXd(data.positive.col(static_cast<Eigen::Index>(pick.to)) -
                                        data.positive.col(static_cast<Eigen::Index>(pick.from)))
                      : Eigen::VectorXd(data.negative.col(static_cast<Eigen::Index>(pick.from)) -
                                        data.negative.col(static_cast<Eigen::Index>(pick.to)));
    const double limit = std::min(x[pick.from], cap - x[pick.to]);
    const double curvature = dir.squaredNorm();
    const double slope = g[pick.to] - g[pick.from];  // < 0
    double t = curvature > 0.0 ? -slope / curvature : limit;
    t = std::clamp(t, 0.0, limit);
    x[pick.from] -= t;
    x[pick.to] += t;
    if (x[pick.from] < 0.0) x[pick.from] = 0.0;
    z += t * dir;
    // Re-anchor z now and then so rank-one drift never exceeds the tolerance.
    if (r.iterations % 1000 == 999) z = difference(data, r.eta, r.xi);
  }
  z = difference(data, r.eta, r.xi);
  finish(r, z);
  r.separable = r.distance > std::sqrt(2.0 * options.tolerance);
  return r;
}

}  // namespace saddlesvm
