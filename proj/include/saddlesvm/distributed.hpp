#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "saddlesvm/preprocess.hpp"
#include "saddlesvm/saddle_core.hpp"

namespace saddlesvm {

// ---------------------------------------------------------------------------
// Protocol messages

enum class MessageKind {
  PickIndex,       // server -> client: i*
  ClientDelta,     // client -> server: local delta+, delta-
  DeltaBroadcast,  // server -> client: summed delta+, delta-
  ClientNorm,      // client -> server: local Z+, Z-
  NormBroadcast,   // server -> client: summed Z+, Z-
  ClientClip,      // client -> server: excess+, excess-, below+, below-
  ClipBroadcast,   // server -> client: summed clip statistics
  Stop,
  // Outside the per-iteration protocol; metered separately.
  CheckpointReport,  // client -> server: local hull difference + extreme inner products
  FinalWeights,      // first client -> server: w
  FinalOffset,       // client -> server: local share of the offset
};

/// Fixed scalar payload of the per-iteration variants; -1 for variable-length ones.
int payload_size(MessageKind kind);
const char* to_string(MessageKind kind);

inline constexpr int kServer = -1;

struct Message {
  MessageKind kind = MessageKind::Stop;
  int sender = kServer;
  int receiver = kServer;
  std::vector<double> payload;
};

struct CommStats {
  // Per-iteration protocol traffic (rounds 1-4).
  std::uint64_t scalars_up = 0;
  std::uint64_t scalars_down = 0;
  std::uint64_t rounds = 0;
  std::uint64_t iterations = 0;
  std::uint64_t clip_passes = 0;  // round-4 exchanges, including each closing zero check
  std::uint64_t messages = 0;
  // Stopping-rule checkpoints and the final offset recovery.
  std::uint64_t checkpoint_up = 0;
  std::uint64_t checkpoint_down = 0;
  std::uint64_t finalize_up = 0;

  std::uint64_t total_scalars() const {
    return scalars_up + scalars_down + checkpoint_up + checkpoint_down + finalize_up;
  }
};

/// Synchronous, lossless, in-order channel that meters every message. The
/// log is optional because long runs would otherwise hold every message.
class Network {
 public:
  explicit Network(bool keep_log = false) : keep_log_(keep_log) {}

  /// Meters and (optionally) logs a message. Per-iteration variants must carry
  /// exactly payload_size(kind) scalars.
  void send(Message m);
  void count_round() { ++stats_.rounds; }
  void count_iteration() { ++stats_.iterations; }
  void count_clip_pass() { ++stats_.clip_passes; }

  const CommStats& stats() const { return stats_; }
  const std::vector<Message>& log() const { return log_; }
  void clear_log() { log_.clear(); }

 private:
  bool keep_log_;
  CommStats stats_;
  std::vector<Message> log_;
};

// ---------------------------------------------------------------------------
// Partitioning

enum class PartitionScheme { RoundRobin, Contiguous, Shuffled };

/// One client's share: column blocks of each class plus the global column
/// index of every local column.
struct ClientData {
  Eigen::MatrixXd positive;
  Eigen::MatrixXd negative;
  std::vector<std::size_t> positive_index;
  std::vector<std::size_t> negative_index;
};

/// Deals each class's columns to k clients: round-robin, contiguous blocks, or
/// round-robin over a seeded permutation. Throws ConfigError when k == 0 or
/// k exceeds the number of points.
std::vector<ClientData> partition(const TransformedData& data, std::size_t k,
                                  PartitionScheme scheme = PartitionScheme::RoundRobin,
                                  std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Participants

class ClientState {
 public:
  ClientState(ClientData data, std::size_t n1, std::size_t n2, const SolverParams& params);

  const SolverParams& params() const { return params_; }
  const Eigen::VectorXd& w() const { return w_; }
  const DualBlock& positive() const { return positive_; }
  const DualBlock& negative() const { return negative_; }
  const std::vector<std::size_t>& positive_index() const { return data_.positive_index; }
  const std::vector<std::size_t>& negative_index() const { return data_.negative_index; }

  /// Round 2: local momentum inner products for row i.
  std::array<double, 2> local_delta(std::size_t i) const;
  /// Round 3: w step from the summed deltas, then the unnormalized dual
  /// update. Returns the local normalizers.
  std::array<double, 2> exponentiate(std::size_t i, double delta_plus, double delta_minus);
  void normalize(double z_plus, double z_minus);
  /// Round 4: excess and uncapped mass of each class.
  std::array<double, 4> clip_report() const;
  /// Clips a class only when its global excess is above the tolerance.
  void apply_clip(const std::array<double, 4>& global);
  /// Commits the pending w coordinate and refreshes caches on schedule.
  void finish_iteration();

  /// Checkpoint contribution: X+ eta - X- xi restricted to local columns.
  Eigen::VectorXd local_difference() const;
  /// The smallest positive-class and largest negative-class inner products
  /// with w, at most `count` of each, in ascending / descending order.
  std::vector<double> extreme_positive(std::size_t count) const;
  std::vector<double> extreme_negative(std::size_t count) const;
  /// w' (local X+ eta + local X- xi), this client's share of 2b.
  double offset_share() const;

  /// Test hook for fault injection.
  Eigen::VectorXd& mutable_w() { return w_; }

 private:
  ClientData data_;
  SolverParams params_;
  Eigen::VectorXd w_;
  DualBlock positive_;
  DualBlock negative_;
  std::size_t t_ = 0;
  std::size_t pending_row_ = 0;
  double pending_value_ = 0.0;
};

// ---------------------------------------------------------------------------
// Simulation

struct SimulationOptions {
  std::size_t clients = 1;
  PartitionScheme scheme = PartitionScheme::RoundRobin;
  std::uint64_t partition_seed = 0;
  bool keep_log = false;
  double divergence_tolerance = 1e-12;
};

/// Server plus clients of the distributed protocol, driven in process. Every
/// Nu-mode iteration uses the loop projection rule: the sort-based rule needs
/// a global order statistic that the protocol does not exchange.
class Simulation {
 public:
  Simulation(const TransformedData& data, const SolverConfig& config,
             const SimulationOptions& options);

  /// One protocol iteration: index pick, delta aggregation, normalization and
  /// (Nu mode) clip passes. Throws SimulationFault when the client w
  /// replicas disagree afterwards.
  IterationRecord run_iteration();
  /// Gathers the stopping-rule quantities from the clients (metered).
  Checkpoint checkpoint();
  /// Offset recovery: the first client sends w, every client its offset share.
  double recover_offset();

  std::size_t iterations() const { return t_; }
  const SolverParams& params() const { return params_; }
  const CommStats& stats() const { return network_.stats(); }
  const Network& network() const { return network_; }
  Network& network() { return network_; }
  const std::vector<ClientState>& clients() const { return clients_; }
  std::vector<ClientState>& clients() { return clients_; }
  const Eigen::VectorXd& server_w() const { return w_; }

  /// Global eta / xi assembled from the client slices (observer view, unmetered).
  std::vector<double> gathered_eta() const;
  std::vector<double> gathered_xi() const;

 private:
  void check_replicas() const;

  SolverParams params_;
  SimulationOptions options_;
  std::size_t n1_;
  std::size_t n2_;
  std::vector<ClientState> clients_;
  Network network_;
  Rng rng_;
  Eigen::VectorXd w_;
  std::size_t t_ = 0;
};

struct SimulationResult {
  Solution solution;
  CommStats stats;
};

/// Runs the distributed protocol under the centralized stopping rule. With a
/// single client the returned Solution matches solve() bit for bit.
SimulationResult run_simulation(const TransformedData& data, const SolverConfig& config,
                                const SimulationOptions& options);

}  // namespace saddlesvm
