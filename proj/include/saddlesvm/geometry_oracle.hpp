#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "saddlesvm/preprocess.hpp"

namespace saddlesvm {

struct OracleResult {
  std::vector<double> eta;
  std::vector<double> xi;
  double distance = 0.0;         // |X+ eta - X- xi|
  double half_sq = 0.0;          // distance^2 / 2
  double gap_certificate = 0.0;  // Frank-Wolfe gap at the returned point
  std::size_t iterations = 0;
  bool separable = true;  // false when the hulls were found to overlap
};

/// Thrown when the iteration cap is hit; carries the best point found.
class OracleIterationLimit : public std::runtime_error {
 public:
  OracleIterationLimit(OracleResult best)
      : std::runtime_error("oracle iteration cap exceeded"), best_(std::move(best)) {}
  const OracleResult& best() const { return best_; }

 private:
  OracleResult best_;
};

/// Gilbert's algorithm on the Minkowski difference of the two hulls. Each step
/// takes the difference vertex minimizing <z, v> and does an exact line search
/// on [z, v]; stops once <z, z - v> <= epsilon |z|^2. Overlapping hulls are
/// reported through `separable = false` rather than an exception.
OracleResult gilbert_solve(const TransformedData& data, double epsilon,
                           std::size_t max_iterations = 10'000'000);

struct OracleOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 10'000'000;
  /// Optional interior starting point; defaults to uniform weights.
  std::optional<std::vector<double>> eta0;
  std::optional<std::vector<double>> xi0;
};

/// Minimizes 1/2 |X+ eta - X- xi|^2 over simplices (nu absent) or nu-capped
/// simplices with pairwise Frank-Wolfe steps: mass moves from the active
/// coordinate with the largest gradient (away vertex) to the admissible one
/// with the smallest, with exact line search. Stops when the Frank-Wolfe gap,
/// a certified bound on the suboptimality, drops to `tolerance`.
OracleResult fw_oracle(const TransformedData& data, std::optional<double> nu,
                       const OracleOptions& options = {});

/// Linear minimization over the capped simplex: nu on the entries with the
/// smallest gradient, the remainder on the next one. Returns the minimizing
/// value <g, s>.
double capped_linear_min(const std::vector<double>& gradient, double nu);

}  // namespace saddlesvm
