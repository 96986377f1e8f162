#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "saddlesvm/saddle_core.hpp"

namespace saddlesvm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;      // bad flags, unreadable input, infeasible config
inline constexpr int kExitNumerical = 3;  // numerical or simulation faults

/// Environment variable naming the directory for relative output paths.
inline constexpr const char* kOutDirEnv = "SADDLESVM_OUT_DIR";

struct RunConfig {
  std::string command;
  std::string input;
  std::optional<std::string> test;
  double epsilon = 1e-3;
  double beta = 0.1;
  std::optional<double> nu;
  std::optional<double> alpha;
  std::uint64_t seed = 0;
  std::size_t clients = 1;
  std::optional<std::string> output;
  std::optional<std::string> trace;
  std::string format = "csv";
  std::size_t max_blocks = 200;
  std::size_t max_iterations = 0;
  double gap_tolerance = 0.0;
  double tolerance = 1e-10;
  std::string mode = "hm";
  std::string partition = "round-robin";
  std::string cap_rule = "auto";
  std::vector<double> betas{1e-1, 1e-2, 1e-3, 1e-4};
  std::size_t budget = 20000;
  bool accept_zero_two = false;
};

/// Parses argv (program name first), runs the command, prints the JSON
/// summary to `out` and diagnostics to `err`. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Relative paths resolve against $SADDLESVM_OUT_DIR when it is set.
std::filesystem::path resolve_output_path(const std::string& path);

struct SweepRun {
  double beta = 0.0;
  Solution solution;
};

struct SweepResult {
  std::vector<SweepRun> runs;
  std::size_t best = 0;  // index into runs
};

/// Solves once per beta with the same iteration budget (max_iterations) and
/// picks the run with the smallest final primal objective; ties keep the
/// earlier beta.
SweepResult sweep_beta(const TransformedData& data, const SolverConfig& base,
                       const std::vector<double>& betas, std::size_t budget);

/// Summary record of a solve, without command-specific fields.
nlohmann::json solution_summary(const Solution& sol);

}  // namespace saddlesvm
