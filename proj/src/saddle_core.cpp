#include "saddlesvm/saddle_core.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "saddlesvm/error.hpp"

namespace saddlesvm {

std::size_t SolverParams::block_length() const {
  const double d = static_cast<double>(dim);
  return static_cast<std::size_t>(std::ceil(d + std::sqrt(d / (epsilon * beta))));
}

SolverParams derive_params_log(double epsilon, double beta, double nu, double log_n,
                               std::size_t n1, std::size_t n2, std::size_t dim, Mode mode) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ConfigError("epsilon must lie in (0, 1), got " + std::to_string(epsilon));
  if (!(beta > 0.0 && beta <= 1.0))
    throw ConfigError("beta must lie in (0, 1], got " + std::to_string(beta));
  if (!is_power_of_two(dim))
    throw ConfigError("padded dimension must be a power of two, got " + std::to_string(dim));
  if (!(log_n > 0.0)) throw ConfigError("need at least two points (ln n > 0)");
  if (n1 == 0 || n2 == 0) throw ConfigError("both classes must be present");

  SolverParams p;
  p.mode = mode;
  p.epsilon = epsilon;
  p.beta = beta;
  p.dim = dim;
  if (mode == Mode::Nu) {
    const auto smaller = std::min(n1, n2);
    if (!(nu > 0.0 && nu <= 1.0))
      throw ConfigError("nu must lie in (0, 1], got " + std::to_string(nu));
    if (nu * static_cast<double>(smaller) < 1.0 - 1e-12)
      throw ConfigError("infeasible nu = " + std::to_string(nu) + ": nu must be at least 1/min(n1, n2) = " +
                        std::to_string(1.0 / static_cast<double>(smaller)));
    p.nu = nu;
  } else {
    p.nu = 1.0;
  }
  const double d = static_cast<double>(dim);
  p.gamma = epsilon * beta / (2.0 * log_n);
  p.q = std::max(1.0, std::ceil(std::sqrt(log_n)));
  p.tau = std::sqrt(d / p.gamma) / (2.0 * p.q);
  p.sigma = std::sqrt(d * p.gamma) / (2.0 * p.q);
  p.theta = 1.0 - 1.0 / (d + p.q * std::sqrt(d / p.gamma));
  p.cache_refresh = 10 * dim;
  return p;
}

SolverParams derive_params(double epsilon, double beta, double nu, std::size_t n, std::size_t n1,
                           std::size_t n2, std::size_t dim, Mode mode) {
  return derive_params_log(epsilon, beta, nu, std::log(static_cast<double>(n)), n1, n2, dim, mode);
}

// ---------------------------------------------------------------------------
// DualBlock

DualBlock::DualBlock(const Eigen::MatrixXd& columns, double initial_weight)
    : coords_(columns.transpose()),
      weights_(static_cast<std::size_t>(columns.cols()), initial_weight),
      previous_(weights_),
      log_weights_(weights_.size(), std::log(initial_weight)),
      inner_(weights_.size(), 0.0) {}

double DualBlock::momentum_dot(std::size_t row, double theta) const {
  const double* x = coords_.col(static_cast<Eigen::Index>(row)).data();
  double acc = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i)
    acc += x[i] * (weights_[i] + theta * (weights_[i] - previous_[i]));
  return acc;
}

double DualBlock::exponentiate(int label, std::size_t row, double delta, double dim,
                               double inertia, double gamma, double shift) {
  const double* x = coords_.col(static_cast<Eigen::Index>(row)).data();
  const double denom = gamma + inertia;
  const double jump = dim * delta;
  const double y = static_cast<double>(label);
  previous_.swap(weights_);
  double total = 0.0;
  for (std::size_t i = 0; i < previous_.size(); ++i) {
    const double u = inner_[i] + jump * x[i];
    const double lg = (inertia * log_weights_[i] - y * u) / denom - shift;
    log_weights_[i] = lg;
    weights_[i] = std::exp(lg);
    total += weights_[i];
    inner_[i] += delta * x[i];
  }
  return total;
}

void DualBlock::normalize(double total) {
  if (!(total > 0.0) || !std::isfinite(total))
    throw NumericalError("dual normalizer is " + std::to_string(total));
  const double log_total = std::log(total);
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    weights_[i] /= total;
    log_weights_[i] -= log_total;
  }
}

void DualBlock::apply_clip(double nu, const ClipStats& stats) {
  if (!(stats.below > 0.0))
    throw NumericalError("capped projection: no uncapped mass left to rescale");
  const double factor = 1.0 + stats.excess / stats.below;
  const double log_factor = std::log(factor);
  const double log_nu = std::log(nu);
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] >= nu) {
      weights_[i] = nu;
      log_weights_[i] = log_nu;
    } else {
      weights_[i] *= factor;
      log_weights_[i] += log_factor;
    }
  }
}

void DualBlock::apply_sorted_cap(double nu) {
  auto cap = project_capped_sorted_detail(weights_, nu);
  if (cap.capped == 0) return;
  const double log_scale = std::log(cap.scale);
  const double log_nu = std::log(nu);
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    // The rule writes nu verbatim into capped slots and scales the rest
    // strictly below it.
    log_weights_[i] = cap.weights[i] == nu ? log_nu : log_weights_[i] + log_scale;
  }
  weights_ = std::move(cap.weights);
}

std::vector<double> DualBlock::fresh_inner_products(const Eigen::VectorXd& w) const {
  std::vector<double> out(weights_.size(), 0.0);
  for (Eigen::Index r = 0; r < coords_.cols(); ++r) {
    const double wr = w[r];
    const double* x = coords_.col(r).data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += wr * x[i];
  }
  return out;
}

double DualBlock::refresh_inner_products(const Eigen::VectorXd& w) {
  auto fresh = fresh_inner_products(w);
  double drift = 0.0;
  for (std::size_t i = 0; i < fresh.size(); ++i) drift = std::max(drift, std::abs(fresh[i] - inner_[i]));
  inner_ = std::move(fresh);
  return drift;
}

Eigen::VectorXd DualBlock::combination() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(coords_.cols());
  for (Eigen::Index r = 0; r < coords_.cols(); ++r) {
    const double* x = coords_.col(r).data();
    double acc = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) acc += weights_[i] * x[i];
    out[r] = acc;
  }
  return out;
}

void DualBlock::set_weights(std::span<const double> weights) {
  if (weights.size() != weights_.size()) throw std::invalid_argument("weight length mismatch");
  weights_.assign(weights.begin(), weights.end());
  previous_ = weights_;
  for (std::size_t i = 0; i < weights_.size(); ++i) log_weights_[i] = std::log(weights_[i]);
}

// ---------------------------------------------------------------------------
// Iteration

SaddleState init_state(const TransformedData& data, const SolverParams& params) {
  if (data.dim() != params.dim) throw ConfigError("parameters were derived for another dimension");
  SaddleState s;
  s.w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.dim));
  s.positive = DualBlock(data.positive, 1.0 / static_cast<double>(data.n_positive()));
  s.negative = DualBlock(data.negative, 1.0 / static_cast<double>(data.n_negative()));
  return s;
}

double coordinate_update(double w_i, double delta_plus, double delta_minus, double sigma) {
  return (w_i + sigma * (delta_plus - delta_minus)) / (sigma + 1.0);
}

double exponent_shift(const Eigen::VectorXd& w_old, std::size_t row, double delta,
                      const SolverParams& params) {
  const double jump = static_cast<double>(params.dim) * delta;
  double sq = 0.0;
  for (Eigen::Index r = 0; r < w_old.size(); ++r) {
    const double v = static_cast<std::size_t>(r) == row ? w_old[r] + jump : w_old[r];
    sq += v * v;
  }
  return std::sqrt(sq) / (params.gamma + params.dual_inertia());
}

std::size_t clip_both(DualBlock& positive, DualBlock& negative, double nu) {
  const auto max_passes = static_cast<std::size_t>(std::ceil(1.0 / nu)) + 2;
  std::size_t passes = 0;
  while (true) {
    const auto sp = positive.clip_stats(nu);
    const auto sn = negative.clip_stats(nu);
    const bool move_p = sp.excess > kClipTolerance;
    const bool move_n = sn.excess > kClipTolerance;
    if (!move_p && !move_n) break;
    if (passes == max_passes)
      throw NumericalError("capped projection did not settle within 1/nu passes");
    if (move_p) positive.apply_clip(nu, sp);
    if (move_n) negative.apply_clip(nu, sn);
    ++passes;
  }
  return passes;
}

IterationRecord iterate(SaddleState& s, const SolverParams& params, Rng& rng, CapRule rule) {
  IterationRecord rec;
  const std::size_t i = uniform_index(rng, params.dim);
  rec.index = i;
  rec.delta_positive = s.positive.momentum_dot(i, params.theta);
  rec.delta_negative = s.negative.momentum_dot(i, params.theta);
  const double w_new = coordinate_update(s.w[static_cast<Eigen::Index>(i)], rec.delta_positive,
                                         rec.delta_negative, params.sigma);
  const double delta = w_new - s.w[static_cast<Eigen::Index>(i)];
  rec.w_change = delta;

  const double shift = exponent_shift(s.w, i, delta, params);
  const double d = static_cast<double>(params.dim);
  const double a = params.dual_inertia();
  const double zp = s.positive.exponentiate(+1, i, delta, d, a, params.gamma, shift);
  const double zn = s.negative.exponentiate(-1, i, delta, d, a, params.gamma, shift);
  s.positive.normalize(zp);
  s.negative.normalize(zn);

  if (params.mode == Mode::Nu) {
    const bool sorted = rule == CapRule::Sorted || (rule == CapRule::Auto && params.nu < 1e-3);
    if (sorted) {
      s.positive.apply_sorted_cap(params.nu);
      s.negative.apply_sorted_cap(params.nu);
    } else {
      rec.clip_passes = clip_both(s.positive, s.negative, params.nu);
    }
  }

  s.w[static_cast<Eigen::Index>(i)] = w_new;
  ++s.t;
  if (params.cache_refresh != 0 && s.t % params.cache_refresh == 0) {
    s.positive.refresh_inner_products(s.w);
    s.negative.refresh_inner_products(s.w);
  }
  return rec;
}

std::vector<double> phi_update(std::span<const double> log_weights,
                               std::span<const double> inner_products,
                               std::span<const double> row_values, int label, double delta,
                               const SolverParams& params) {
  const double a = params.dual_inertia();
  const double denom = params.gamma + a;
  const double jump = static_cast<double>(params.dim) * delta;
  std::vector<double> logits(log_weights.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double u = inner_products[i] + jump * row_values[i];
    logits[i] = (a * log_weights[i] - static_cast<double>(label) * u) / denom;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  for (double& l : logits) l = std::exp(l - top);
  return logits;
}

// ---------------------------------------------------------------------------
// Objectives

std::size_t capped_support(double nu) {
  const double full = std::floor(1.0 / nu + 1e-9);
  const double rest = 1.0 - full * nu;
  return static_cast<std::size_t>(full) + (rest > 1e-12 ? 1 : 0);
}

double capped_min(std::vector<double> values, double nu) {
  const std::size_t k = std::min(capped_support(nu), values.size());
  std::partial_sort(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  double remaining = 1.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < k && remaining > 0.0; ++i) {
    const double take = std::min(nu, remaining);
    acc += take * values[i];
    remaining -= take;
  }
  return acc;
}

double capped_max(std::vector<double> values, double nu) {
  for (double& v : values) v = -v;
  return -capped_min(std::move(values), nu);
}

namespace {
double half_sq_norm(const Eigen::VectorXd& w) {
  double sq = 0.0;
  for (Eigen::Index r = 0; r < w.size(); ++r) sq += w[r] * w[r];
  return 0.5 * sq;
}

std::vector<double> column_dots(const Eigen::MatrixXd& m, const Eigen::VectorXd& w) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.cols(); ++i) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) acc += w[r] * m(r, i);
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}
}  // namespace

double dual_objective(const Eigen::VectorXd& w, const TransformedData& data, double nu) {
  return capped_min(column_dots(data.positive, w), nu) -
         capped_max(column_dots(data.negative, w), nu) - half_sq_norm(w);
}

double dual_objective(const Eigen::VectorXd& w, const DualBlock& positive,
                      const DualBlock& negative, double nu) {
  return capped_min(positive.fresh_inner_products(w), nu) -
         capped_max(negative.fresh_inner_products(w), nu) - half_sq_norm(w);
}

Eigen::VectorXd hull_difference(const DualBlock& positive, const DualBlock& negative) {
  return positive.combination() - negative.combination();
}

Eigen::VectorXd hull_difference(std::span<const double> eta, std::span<const double> xi,
                                const TransformedData& data) {
  if (eta.size() != data.n_positive() || xi.size() != data.n_negative())
    throw std::invalid_argument("dual weight lengths do not match the data");
  Eigen::VectorXd z = Eigen::VectorXd::Zero(data.positive.rows());
  for (Eigen::Index i = 0; i < data.positive.cols(); ++i)
    z += eta[static_cast<std::size_t>(i)] * data.positive.col(i);
  for (Eigen::Index j = 0; j < data.negative.cols(); ++j)
    z -= xi[static_cast<std::size_t>(j)] * data.negative.col(j);
  return z;
}

double primal_objective(std::span<const double> eta, std::span<const double> xi,
                        const TransformedData& data) {
  return 0.5 * hull_difference(eta, xi, data).squaredNorm();
}

double saddle_value(const Eigen::VectorXd& w, std::span<const double> eta,
                    std::span<const double> xi, const TransformedData& data) {
  return w.dot(hull_difference(eta, xi, data)) - 0.5 * w.squaredNorm();
}

// ---------------------------------------------------------------------------
// Hyperplane

double Hyperplane::decision(std::span<const double> x) const { return w.dot(spec.apply(x)) - b; }

double Hyperplane::accuracy(const Dataset& data) const {
  std::size_t hits = 0;
  for (const auto& p : data.points())
    if (classify(p.features) == sign_of(p.label)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

Hyperplane recover_hyperplane(const Eigen::VectorXd& w, std::span<const double> eta,
                              std::span<const double> xi, const TransformedData& data) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(data.positive.rows());
  for (Eigen::Index i = 0; i < data.positive.cols(); ++i)
    sum += eta[static_cast<std::size_t>(i)] * data.positive.col(i);
  for (Eigen::Index j = 0; j < data.negative.cols(); ++j)
    sum += xi[static_cast<std::size_t>(j)] * data.negative.col(j);
  Hyperplane h;
  h.w = w;
  h.b = 0.5 * w.dot(sum);
  h.margin = 0.5 * hull_difference(eta, xi, data).norm();
  h.spec = data.spec;
  return h;
}

// ---------------------------------------------------------------------------
// Driver

double resolve_nu(const SolverConfig& config, std::size_t n1, std::size_t n2) {
  if (config.mode == Mode::HardMargin) return 1.0;
  if (config.nu) return *config.nu;
  if (config.alpha) {
    if (!(*config.alpha > 0.0)) throw ConfigError("alpha must be positive");
    return 1.0 / (*config.alpha * static_cast<double>(std::min(n1, n2)));
  }
  throw ConfigError("nu mode needs either nu or alpha");
}

SolverParams params_for(const SolverConfig& config, const TransformedData& data) {
  const double nu = resolve_nu(config, data.n_positive(), data.n_negative());
  auto p = derive_params(config.epsilon, config.beta, nu, data.size(), data.n_positive(),
                         data.n_negative(), data.dim(), config.mode);
  if (config.cache_refresh != 0) p.cache_refresh = config.cache_refresh;
  return p;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxBlocks: return "max_blocks";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::NonSeparable: return "non_separable";
  }
  return "unknown";
}

std::optional<SolveStatus> StoppingRule::update(const Checkpoint& c, std::size_t blocks,
                                                std::size_t iters) {
  best_dual_ = std::max(best_dual_, c.dual);
  const bool certified = gap_tolerance_ <= 0.0 || c.primal - c.dual <= gap_tolerance_ * c.primal;
  const bool settled = previous_ && std::abs(c.primal - *previous_) < epsilon_ && certified;
  previous_ = c.primal;
  if (settled) return SolveStatus::Converged;
  if (max_iterations_ != 0 && iters >= max_iterations_) return SolveStatus::MaxIterations;
  if (blocks >= max_blocks_) return SolveStatus::MaxBlocks;
  return std::nullopt;
}

SolveStatus StoppingRule::finalize(SolveStatus s, const Checkpoint& last) const {
  // A positive g(w) certifies a positive hull distance. Without one, a primal
  // that has collapsed to within a few stopping thresholds of zero means the
  // hulls overlap (or are too close to tell apart at this accuracy).
  if (best_dual_ <= 0.0 && last.primal <= 10.0 * epsilon_) return SolveStatus::NonSeparable;
  return s;
}

namespace {
using Clock = std::chrono::steady_clock;
double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}
}  // namespace

Solution solve(const TransformedData& data, const SolverConfig& config) {
  const auto t0 = Clock::now();
  Solution sol;
  sol.params = params_for(config, data);
  const auto& params = sol.params;
  auto state = init_state(data, params);
  auto rng = make_rng(config.seed, streams::kIndex);
  StoppingRule rule(params.epsilon, config.max_blocks, config.max_iterations,
                    config.gap_tolerance);

  const auto evaluate = [&] {
    Checkpoint c;
    c.primal = 0.5 * hull_difference(state.positive, state.negative).squaredNorm();
    c.dual = dual_objective(state.w, state.positive, state.negative, params.nu);
    sol.trace.push_back({state.t, c.primal, c.dual, c.primal - c.dual,
                         0.5 * std::sqrt(2.0 * c.primal), ms_since(t0), 0, 0});
    return c;
  };

  auto last = evaluate();
  rule.update(last, 0, 0);
  const std::size_t block = params.block_length();
  SolveStatus status = SolveStatus::MaxBlocks;
  for (std::size_t b = 1;; ++b) {
    for (std::size_t j = 0; j < block; ++j) {
      if (config.max_iterations != 0 && state.t >= config.max_iterations) break;
      iterate(state, params, rng, config.cap_rule);
    }
    sol.blocks = b;
    last = evaluate();
    if (auto st = rule.update(last, b, state.t)) {
      status = *st;
      break;
    }
  }

  sol.status = rule.finalize(status, last);
  sol.iterations = state.t;
  sol.w = state.w;
  sol.eta = state.positive.weights();
  sol.xi = state.negative.weights();
  sol.primal = last.primal;
  sol.dual = last.dual;
  sol.gap = last.primal - last.dual;
  sol.distance = std::sqrt(2.0 * last.primal);
  sol.saddle = saddle_value(sol.w, sol.eta, sol.xi, data);
  sol.hyperplane = recover_hyperplane(sol.w, sol.eta, sol.xi, data);
  sol.b = sol.hyperplane.b;
  sol.wall_time_ms = ms_since(t0);
  return sol;
}

Solution solve(const Dataset& data, const SolverConfig& config) {
  return solve(apply_transform(data, config.seed), config);
}

}  // namespace saddlesvm
