#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace saddlesvm {

/// Divides positive weights by their sum. Throws NumericalError when the sum is
/// zero or not finite.
std::vector<double> project_simplex_normalize(std::span<const double> weights);

/// Clip-mass statistics of one pass of the iterative capping rule:
/// excess = sum over entries above nu of (w_i - nu); below = sum of entries under nu.
struct ClipStats {
  double excess = 0.0;
  double below = 0.0;
};

/// |excess| at or below this counts as "no mass left to redistribute".
inline constexpr double kClipTolerance = 1e-12;

ClipStats clip_stats(std::span<const double> weights, double nu);

/// One redistribution pass: entries >= nu are set to nu, entries < nu scaled by
/// (1 + excess / below). Returns ln of the scale factor so callers can keep a
/// log-domain copy in sync.
double apply_clip_pass(std::span<double> weights, double nu, const ClipStats& stats);

struct CappedProjection {
  std::vector<double> weights;
  std::size_t passes = 0;  // passes that moved mass (loop rule only)
};

/// KL projection onto {w : sum w = 1, 0 <= w_i <= nu} by repeated clipping and
/// rescaling. Terminates after at most ceil(1/nu) passes.
CappedProjection project_capped_loop(std::span<const double> weights, double nu);

/// Same projection via one ascending sort and a binary search for the smallest
/// capped rank; O(n log n) regardless of nu.
std::vector<double> project_capped_sorted(std::span<const double> weights, double nu);

/// The sorted rule with its structure exposed: `capped` entries were set to nu
/// and every other entry was multiplied by `scale`.
struct SortedCap {
  std::vector<double> weights;
  std::size_t capped = 0;
  double scale = 1.0;
};
SortedCap project_capped_sorted_detail(std::span<const double> weights, double nu);

/// Throws ConfigError unless nu >= 1/n (a capped simplex of length n is
/// nonempty only then) and nu <= 1.
void check_cap_feasible(double nu, std::size_t n);

}  // namespace saddlesvm
