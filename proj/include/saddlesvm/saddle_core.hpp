#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "saddlesvm/data_model.hpp"
#include "saddlesvm/preprocess.hpp"
#include "saddlesvm/projection.hpp"
#include "saddlesvm/rng.hpp"

namespace saddlesvm {

enum class Mode { HardMargin, Nu };

/// Which capped-simplex projection the Nu-mode dual update uses.
enum class CapRule { Auto, Loop, Sorted };

/// Step sizes and regularization weights of the accelerated primal-dual method.
struct SolverParams {
  Mode mode = Mode::HardMargin;
  double epsilon = 1e-3;
  double beta = 0.1;
  double nu = 1.0;  // cap on each dual weight; 1 means uncapped
  double gamma = 0.0;
  double q = 1.0;
  double tau = 0.0;
  double sigma = 0.0;
  double theta = 0.0;
  std::size_t dim = 1;  // padded dimension
  std::size_t cache_refresh = 0;  // iterations between cache rebuilds; 0 = never

  /// d / tau, the weight of the previous iterate in the dual update.
  double dual_inertia() const { return static_cast<double>(dim) / tau; }
  /// Iterations between two objective checks.
  std::size_t block_length() const;
};

/// gamma = eps*beta/(2 ln n), q = max(1, ceil(sqrt(ln n))),
/// tau = sqrt(d/gamma)/(2q), sigma = sqrt(d*gamma)/(2q),
/// theta = 1 - 1/(d + q sqrt(d/gamma)).
/// Throws ConfigError for eps outside (0,1), beta outside (0,1], a
/// non-power-of-two d, or (Nu mode) nu < 1/min(n1, n2).
SolverParams derive_params(double epsilon, double beta, double nu, std::size_t n, std::size_t n1,
                           std::size_t n2, std::size_t dim, Mode mode);
/// Same, with ln n given directly.
SolverParams derive_params_log(double epsilon, double beta, double nu, double log_n,
                               std::size_t n1, std::size_t n2, std::size_t dim, Mode mode);

/// Dual weights over one class (or one client's share of a class), together
/// with the columns they weight. Both the centralized solver and every
/// simulated client run their dual updates through this type, so a
/// single-client simulation reproduces the centralized arithmetic exactly.
class DualBlock {
 public:
  DualBlock() = default;
  /// `columns` is dim x m; every weight starts at `initial_weight`.
  DualBlock(const Eigen::MatrixXd& columns, double initial_weight);

  std::size_t size() const { return weights_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(coords_.cols()); }

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& previous() const { return previous_; }
  const std::vector<double>& log_weights() const { return log_weights_; }
  const std::vector<double>& inner_products() const { return inner_; }
  double coordinate(std::size_t row, std::size_t point) const {
    return coords_(static_cast<Eigen::Index>(point), static_cast<Eigen::Index>(row));
  }

  /// sum_i X[row, i] * (w_i + theta (w_i - w_prev_i)).
  double momentum_dot(std::size_t row, double theta) const;

  /// Multiplicative-weights step. For each point i, with
  ///   u_i = <w_old + d (w_new - w_old), X_i> = ip_i + d * delta * X[row, i],
  /// sets the unnormalized weight exp((a ln w_i - label * u_i) / (gamma + a) - shift),
  /// advances the inner-product cache by delta * X[row, i], and rotates the
  /// current weights into the history. Returns the local sum of new weights.
  double exponentiate(int label, std::size_t row, double delta, double dim, double inertia,
                      double gamma, double shift);
  void normalize(double total);

  ClipStats clip_stats(double nu) const { return saddlesvm::clip_stats(weights_, nu); }
  void apply_clip(double nu, const ClipStats& stats);
  void apply_sorted_cap(double nu);

  /// Recomputes the inner-product cache from scratch; returns the largest
  /// change to any entry.
  double refresh_inner_products(const Eigen::VectorXd& w);
  std::vector<double> fresh_inner_products(const Eigen::VectorXd& w) const;

  /// sum_i w_i X_i.
  Eigen::VectorXd combination() const;

  /// Overrides the weights (current and previous); for tests and warm starts.
  void set_weights(std::span<const double> weights);

 private:
  Eigen::MatrixXd coords_;  // m x dim, row i = point i; column r contiguous
  std::vector<double> weights_;
  std::vector<double> previous_;
  std::vector<double> log_weights_;
  std::vector<double> inner_;
};

struct SaddleState {
  std::size_t t = 0;
  Eigen::VectorXd w;
  DualBlock positive;
  DualBlock negative;
};

SaddleState init_state(const TransformedData& data, const SolverParams& params);

/// What one iteration did; used by tests and by the simulator cross-checks.
struct IterationRecord {
  std::size_t index = 0;
  double delta_positive = 0.0;
  double delta_negative = 0.0;
  double w_change = 0.0;
  std::size_t clip_passes = 0;  // Nu mode, loop rule: passes that moved mass
};

/// Primal coordinate step: (w_i + sigma (delta_plus - delta_minus)) / (sigma + 1).
double coordinate_update(double w_i, double delta_plus, double delta_minus, double sigma);

/// Shared exponent offset for the dual update: ||w_old + d*delta*e_row|| / (gamma + a).
/// Columns have norm <= 1 and log-weights are <= 0, so every exponent minus this
/// offset is <= 0; the offset depends only on replicated state.
double exponent_shift(const Eigen::VectorXd& w_old, std::size_t row, double delta,
                      const SolverParams& params);

/// One full iteration of the method (coordinate step on w, dual updates with
/// normalization and, in Nu mode, the capped projection).
IterationRecord iterate(SaddleState& state, const SolverParams& params, Rng& rng,
                        CapRule rule = CapRule::Auto);

/// Runs the Nu-mode loop-rule projection on both classes in lock step. Each
/// side is clipped only while its excess exceeds kClipTolerance. Returns the
/// number of passes in which at least one side moved mass.
std::size_t clip_both(DualBlock& positive, DualBlock& negative, double nu);

/// Unnormalized dual weights of the multiplicative step for one class, given
/// the pre-step log weights and inner products; label +1 for the positive class.
std::vector<double> phi_update(std::span<const double> log_weights,
                               std::span<const double> inner_products,
                               std::span<const double> row_values, int label, double delta,
                               const SolverParams& params);

/// min over the (capped) simplex of <lambda, values>: the nu-weighted average of
/// the smallest entries, the last one fractionally weighted.
double capped_min(std::vector<double> values, double nu);
/// Number of smallest entries capped_min actually weights (1 when nu = 1).
std::size_t capped_support(double nu);
double capped_max(std::vector<double> values, double nu);

/// g(w) = min_{eta,xi} w'X+ eta - w'X- xi - |w|^2/2 over the mode's domain.
double dual_objective(const Eigen::VectorXd& w, const TransformedData& data, double nu);
double dual_objective(const Eigen::VectorXd& w, const DualBlock& positive,
                      const DualBlock& negative, double nu);

/// X+ eta - X- xi.
Eigen::VectorXd hull_difference(const DualBlock& positive, const DualBlock& negative);
Eigen::VectorXd hull_difference(std::span<const double> eta, std::span<const double> xi,
                                const TransformedData& data);

/// 1/2 ||X+ eta - X- xi||^2.
double primal_objective(std::span<const double> eta, std::span<const double> xi,
                        const TransformedData& data);

/// w'(X+ eta - X- xi) - |w|^2/2, the unregularized saddle function.
double saddle_value(const Eigen::VectorXd& w, std::span<const double> eta,
                    std::span<const double> xi, const TransformedData& data);

/// Separating hyperplane in transformed coordinates; classify() applies the
/// stored transform to raw points first.
struct Hyperplane {
  Eigen::VectorXd w;
  double b = 0.0;
  double margin = 0.0;  // half the (reduced) hull distance, transformed units
  TransformSpec spec;

  /// Margin in the units of the raw input features.
  double margin_input_units() const { return margin / spec.scale; }
  double decision(std::span<const double> x) const;
  int classify(std::span<const double> x) const { return decision(x) >= 0.0 ? 1 : -1; }
  double accuracy(const Dataset& data) const;
};

Hyperplane recover_hyperplane(const Eigen::VectorXd& w, std::span<const double> eta,
                              std::span<const double> xi, const TransformedData& data);

struct SolverConfig {
  Mode mode = Mode::HardMargin;
  double epsilon = 1e-3;
  double beta = 0.1;
  std::optional<double> nu;     // Nu mode: cap directly ...
  std::optional<double> alpha;  // ... or via nu = 1 / (alpha * min(n1, n2))
  std::uint64_t seed = 0;
  std::size_t max_blocks = 200;
  std::size_t max_iterations = 0;  // 0: no cap beyond max_blocks
  std::size_t cache_refresh = 0;   // 0: every 10 * padded dimension iterations
  CapRule cap_rule = CapRule::Auto;
  /// When positive, convergence additionally requires primal - dual <=
  /// gap_tolerance * primal, i.e. a certified relative accuracy for w.
  double gap_tolerance = 0.0;
};

/// Effective cap for the configuration (1 in hard-margin mode).
double resolve_nu(const SolverConfig& config, std::size_t n1, std::size_t n2);
SolverParams params_for(const SolverConfig& config, const TransformedData& data);

enum class SolveStatus { Converged, MaxBlocks, MaxIterations, NonSeparable };
std::string to_string(SolveStatus s);

struct TraceRow {
  std::size_t iter = 0;
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  double margin = 0.0;
  double elapsed_ms = 0.0;
  std::uint64_t scalars_up = 0;
  std::uint64_t scalars_down = 0;
};

struct Solution {
  Eigen::VectorXd w;  // transformed coordinates; see hyperplane.spec
  double b = 0.0;
  std::vector<double> eta;
  std::vector<double> xi;
  double primal = 0.0;    // 1/2 |X+ eta - X- xi|^2
  double dual = 0.0;      // g(w)
  double gap = 0.0;       // primal - dual
  double distance = 0.0;  // |X+ eta - X- xi| = sqrt(2 primal)
  double saddle = 0.0;    // saddle function at (w, eta, xi)
  std::size_t iterations = 0;
  std::size_t blocks = 0;
  double wall_time_ms = 0.0;
  SolveStatus status = SolveStatus::MaxBlocks;
  SolverParams params;
  Hyperplane hyperplane;
  std::vector<TraceRow> trace;

  /// Hull distance in raw input units (undoes the norm scaling).
  double distance_input_units() const { return distance / hyperplane.spec.scale; }
};

/// Checkpoint evaluation shared by the centralized and distributed drivers.
struct Checkpoint {
  double primal = 0.0;
  double dual = 0.0;
};

/// Runs blocks of params.block_length() iterations until the primal changes
/// by less than epsilon between consecutive checks.
Solution solve(const TransformedData& data, const SolverConfig& config);
Solution solve(const Dataset& data, const SolverConfig& config);

/// Shared stopping logic: decides after each checkpoint whether to stop.
class StoppingRule {
 public:
  StoppingRule(double epsilon, std::size_t max_blocks, std::size_t max_iterations,
               double gap_tolerance = 0.0)
      : epsilon_(epsilon),
        max_blocks_(max_blocks),
        max_iterations_(max_iterations),
        gap_tolerance_(gap_tolerance) {}
  /// Records a checkpoint taken after `blocks` completed blocks; returns the
  /// terminal status or nullopt to keep going.
  std::optional<SolveStatus> update(const Checkpoint& c, std::size_t blocks, std::size_t iters);
  /// Reclassifies a terminal status when the run never certified separation.
  SolveStatus finalize(SolveStatus s, const Checkpoint& last) const;

 private:
  double epsilon_;
  std::size_t max_blocks_;
  std::size_t max_iterations_;
  double gap_tolerance_;
  std::optional<double> previous_;
  double best_dual_ = -std::numeric_limits<double>::infinity();
};

}  // namespace saddlesvm
