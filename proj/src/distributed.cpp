#include "saddlesvm/distributed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "saddlesvm/error.hpp"

namespace saddlesvm {

int payload_size(MessageKind kind) {
  switch (kind) {
    case MessageKind::PickIndex: return 1;
    case MessageKind::ClientDelta:
    case MessageKind::DeltaBroadcast:
    case MessageKind::ClientNorm:
    case MessageKind::NormBroadcast: return 2;
    case MessageKind::ClientClip:
    case MessageKind::ClipBroadcast: return 4;
    case MessageKind::Stop: return 0;
    case MessageKind::CheckpointReport:
    case MessageKind::FinalWeights:
    case MessageKind::FinalOffset: return -1;
  }
  return -1;
}

const char* to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::PickIndex: return "PickIndex";
    case MessageKind::ClientDelta: return "ClientDelta";
    case MessageKind::DeltaBroadcast: return "DeltaBroadcast";
    case MessageKind::ClientNorm: return "ClientNorm";
    case MessageKind::NormBroadcast: return "NormBroadcast";
    case MessageKind::ClientClip: return "ClientClip";
    case MessageKind::ClipBroadcast: return "ClipBroadcast";
    case MessageKind::Stop: return "Stop";
    case MessageKind::CheckpointReport: return "CheckpointReport";
    case MessageKind::FinalWeights: return "FinalWeights";
    case MessageKind::FinalOffset: return "FinalOffset";
  }
  return "?";
}

void Network::send(Message m) {
  const int fixed = payload_size(m.kind);
  if (fixed >= 0 && m.payload.size() != static_cast<std::size_t>(fixed))
    throw SimulationFault(std::string(to_string(m.kind)) + " carries " +
                          std::to_string(m.payload.size()) + " scalars, expected " +
                          std::to_string(fixed));
  const auto n = static_cast<std::uint64_t>(m.payload.size());
  const bool up = m.receiver == kServer;
  switch (m.kind) {
    case MessageKind::CheckpointReport:
      (up ? stats_.checkpoint_up : stats_.checkpoint_down) += n;
      break;
    case MessageKind::FinalWeights:
    case MessageKind::FinalOffset:
      stats_.finalize_up += n;
      break;
    default:
      (up ? stats_.scalars_up : stats_.scalars_down) += n;
  }
  ++stats_.messages;
  if (keep_log_) log_.push_back(std::move(m));
}

// ---------------------------------------------------------------------------
// Partitioning

namespace {

std::vector<std::size_t> owners(std::size_t count, std::size_t k, PartitionScheme scheme,
                                const std::vector<std::size_t>& order) {
  std::vector<std::size_t> owner(count);
  for (std::size_t pos = 0; pos < count; ++pos) {
    const std::size_t col = order[pos];
    owner[col] = scheme == PartitionScheme::Contiguous ? pos * k / count : pos % k;
  }
  return owner;
}

void deal(const Eigen::MatrixXd& cols, const std::vector<std::size_t>& owner,
          std::vector<ClientData>& out, bool positive) {
  const std::size_t k = out.size();
  std::vector<std::vector<std::size_t>> idx(k);
  for (std::size_t c = 0; c < owner.size(); ++c) idx[owner[c]].push_back(c);
  for (std::size_t j = 0; j < k; ++j) {
    Eigen::MatrixXd block(cols.rows(), static_cast<Eigen::Index>(idx[j].size()));
    for (std::size_t i = 0; i < idx[j].size(); ++i)
      block.col(static_cast<Eigen::Index>(i)) = cols.col(static_cast<Eigen::Index>(idx[j][i]));
    if (positive) {
      out[j].positive = std::move(block);
      out[j].positive_index = std::move(idx[j]);
    } else {
      out[j].negative = std::move(block);
      out[j].negative_index = std::move(idx[j]);
    }
  }
}

std::vector<std::size_t> column_order(std::size_t count, PartitionScheme scheme, Rng& rng) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  if (scheme == PartitionScheme::Shuffled) {
    for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
  return order;
}

}  // namespace

std::vector<ClientData> partition(const TransformedData& data, std::size_t k,
                                  PartitionScheme scheme, std::uint64_t seed) {
  if (k == 0) throw ConfigError("need at least one client");
  if (k > data.size())
    throw ConfigError("more clients (" + std::to_string(k) + ") than points (" +
                      std::to_string(data.size()) + ")");
  auto rng = make_rng(seed, streams::kPartition);
  std::vector<ClientData> out(k);
  const auto n1 = data.n_positive();
  const auto n2 = data.n_negative();
  deal(data.positive, owners(n1, k, scheme, column_order(n1, scheme, rng)), out, true);
  deal(data.negative, owners(n2, k, scheme, column_order(n2, scheme, rng)), out, false);
  return out;
}

// ---------------------------------------------------------------------------
// Client

ClientState::ClientState(ClientData data, std::size_t n1, std::size_t n2,
                         const SolverParams& params)
    : data_(std::move(data)),
      params_(params),
      w_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.dim))),
      positive_(data_.positive, 1.0 / static_cast<double>(n1)),
      negative_(data_.negative, 1.0 / static_cast<double>(n2)) {}

std::array<double, 2> ClientState::local_delta(std::size_t i) const {
  return {positive_.momentum_dot(i, params_.theta), negative_.momentum_dot(i, params_.theta)};
}

std::array<double, 2> ClientState::exponentiate(std::size_t i, double delta_plus,
                                                double delta_minus) {
  const auto r = static_cast<Eigen::Index>(i);
  const double w_new = coordinate_update(w_[r], delta_plus, delta_minus, params_.sigma);
  const double delta = w_new - w_[r];
  const double shift = exponent_shift(w_, i, delta, params_);
  const double d = static_cast<double>(params_.dim);
  const double a = params_.dual_inertia();
  pending_row_ = i;
  pending_value_ = w_new;
  return {positive_.exponentiate(+1, i, delta, d, a, params_.gamma, shift),
          negative_.exponentiate(-1, i, delta, d, a, params_.gamma, shift)};
}

void ClientState::normalize(double z_plus, double z_minus) {
  positive_.normalize(z_plus);
  negative_.normalize(z_minus);
}

std::array<double, 4> ClientState::clip_report() const {
  const auto p = positive_.clip_stats(params_.nu);
  const auto n = negative_.clip_stats(params_.nu);
  return {p.excess, n.excess, p.below, n.below};
}

void ClientState::apply_clip(const std::array<double, 4>& global) {
  if (global[0] > kClipTolerance) positive_.apply_clip(params_.nu, {global[0], global[2]});
  if (global[1] > kClipTolerance) negative_.apply_clip(params_.nu, {global[1], global[3]});
}

void ClientState::finish_iteration() {
  w_[static_cast<Eigen::Index>(pending_row_)] = pending_value_;
  ++t_;
  if (params_.cache_refresh != 0 && t_ % params_.cache_refresh == 0) {
    positive_.refresh_inner_products(w_);
    negative_.refresh_inner_products(w_);
  }
}

Eigen::VectorXd ClientState::local_difference() const {
  return positive_.combination() - negative_.combination();
}

std::vector<double> ClientState::extreme_positive(std::size_t count) const {
  auto v = positive_.fresh_inner_products(w_);
  count = std::min(count, v.size());
  std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(count), v.end());
  v.resize(count);
  return v;
}

std::vector<double> ClientState::extreme_negative(std::size_t count) const {
  auto v = negative_.fresh_inner_products(w_);
  count = std::min(count, v.size());
  std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(count), v.end(),
                    std::greater<>());
  v.resize(count);
  return v;
}

double ClientState::offset_share() const {
  return w_.dot(positive_.combination() + negative_.combination());
}

// ---------------------------------------------------------------------------
// Simulation

Simulation::Simulation(const TransformedData& data, const SolverConfig& config,
                       const SimulationOptions& options)
    : params_(params_for(config, data)),
      options_(options),
      n1_(data.n_positive()),
      n2_(data.n_negative()),
      network_(options.keep_log),
      rng_(make_rng(config.seed, streams::kIndex)),
      w_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params_.dim))) {
  auto shares = partition(data, options.clients, options.scheme, options.partition_seed);
  clients_.reserve(shares.size());
  for (auto& s : shares) clients_.emplace_back(std::move(s), n1_, n2_, params_);
}

IterationRecord Simulation::run_iteration() {
  const int k = static_cast<int>(clients_.size());
  IterationRecord rec;

  // Round 1: the server picks the coordinate.
  const std::size_t i = uniform_index(rng_, params_.dim);
  rec.index = i;
  for (int c = 0; c < k; ++c)
    network_.send({MessageKind::PickIndex, kServer, c, {static_cast<double>(i)}});
  network_.count_round();

  // Round 2: momentum inner products, summed in ascending client order.
  double dp = 0.0, dn = 0.0;
  for (int c = 0; c < k; ++c) {
    const auto d = clients_[static_cast<std::size_t>(c)].local_delta(i);
    network_.send({MessageKind::ClientDelta, c, kServer, {d[0], d[1]}});
    dp += d[0];
    dn += d[1];
  }
  for (int c = 0; c < k; ++c) network_.send({MessageKind::DeltaBroadcast, kServer, c, {dp, dn}});
  network_.count_round();
  rec.delta_positive = dp;
  rec.delta_negative = dn;

  // Round 3: every replica takes the same w step; normalizers are summed.
  double zp = 0.0, zn = 0.0;
  for (int c = 0; c < k; ++c) {
    const auto z = clients_[static_cast<std::size_t>(c)].exponentiate(i, dp, dn);
    network_.send({MessageKind::ClientNorm, c, kServer, {z[0], z[1]}});
    zp += z[0];
    zn += z[1];
  }
  for (int c = 0; c < k; ++c) network_.send({MessageKind::NormBroadcast, kServer, c, {zp, zn}});
  for (auto& client : clients_) client.normalize(zp, zn);
  network_.count_round();

  // Round 4 (Nu): clip passes until both global excesses vanish.
  if (params_.mode == Mode::Nu) {
    const auto max_passes = static_cast<std::size_t>(std::ceil(1.0 / params_.nu)) + 2;
    std::size_t moved = 0;
    while (true) {
      std::array<double, 4> global{0.0, 0.0, 0.0, 0.0};
      for (int c = 0; c < k; ++c) {
        const auto s = clients_[static_cast<std::size_t>(c)].clip_report();
        network_.send({MessageKind::ClientClip, c, kServer, {s[0], s[1], s[2], s[3]}});
        for (std::size_t j = 0; j < 4; ++j) global[j] += s[j];
      }
      for (int c = 0; c < k; ++c)
        network_.send({MessageKind::ClipBroadcast, kServer, c,
                       {global[0], global[1], global[2], global[3]}});
      network_.count_round();
      network_.count_clip_pass();
      if (!(global[0] > kClipTolerance) && !(global[1] > kClipTolerance)) break;
      if (moved == max_passes)
        throw NumericalError("capped projection did not settle within 1/nu passes");
      for (auto& client : clients_) client.apply_clip(global);
      ++moved;
    }
    rec.clip_passes = moved;
  }

  const auto r = static_cast<Eigen::Index>(i);
  const double w_new = coordinate_update(w_[r], dp, dn, params_.sigma);
  rec.w_change = w_new - w_[r];
  w_[r] = w_new;
  for (auto& client : clients_) client.finish_iteration();
  ++t_;
  network_.count_iteration();
  check_replicas();
  return rec;
}

void Simulation::check_replicas() const {
  for (std::size_t c = 0; c < clients_.size(); ++c) {
    const double gap = (clients_[c].w() - w_).cwiseAbs().maxCoeff();
    if (!(gap <= options_.divergence_tolerance))
      throw SimulationFault("client " + std::to_string(c) + " w replica diverged by " +
                            std::to_string(gap) + " at iteration " + std::to_string(t_));
  }
}

Checkpoint Simulation::checkpoint() {
  const std::size_t support = capped_support(params_.nu);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params_.dim));
  std::vector<double> low, high;
  for (std::size_t c = 0; c < clients_.size(); ++c) {
    const auto& client = clients_[c];
    const Eigen::VectorXd diff = client.local_difference();
    const auto lo = client.extreme_positive(support);
    const auto hi = client.extreme_negative(support);
    Message m{MessageKind::CheckpointReport, static_cast<int>(c), kServer, {}};
    m.payload.assign(diff.data(), diff.data() + diff.size());
    m.payload.insert(m.payload.end(), lo.begin(), lo.end());
    m.payload.insert(m.payload.end(), hi.begin(), hi.end());
    network_.send(std::move(m));
    z += diff;
    low.insert(low.end(), lo.begin(), lo.end());
    high.insert(high.end(), hi.begin(), hi.end());
  }
  double sq = 0.0;
  for (Eigen::Index r = 0; r < w_.size(); ++r) sq += w_[r] * w_[r];
  Checkpoint cp;
  cp.primal = 0.5 * z.squaredNorm();
  cp.dual = capped_min(std::move(low), params_.nu) - capped_max(std::move(high), params_.nu) -
            0.5 * sq;
  return cp;
}

double Simulation::recover_offset() {
  const auto& w0 = clients_.front().w();
  network_.send({MessageKind::FinalWeights, 0, kServer,
                 std::vector<double>(w0.data(), w0.data() + w0.size())});
  double twice = 0.0;
  for (std::size_t c = 0; c < clients_.size(); ++c) {
    const double share = clients_[c].offset_share();
    network_.send({MessageKind::FinalOffset, static_cast<int>(c), kServer, {share}});
    twice += share;
  }
  return 0.5 * twice;
}

std::vector<double> Simulation::gathered_eta() const {
  std::vector<double> out(n1_, 0.0);
  for (const auto& c : clients_)
    for (std::size_t i = 0; i < c.positive_index().size(); ++i)
      out[c.positive_index()[i]] = c.positive().weights()[i];
  return out;
}

std::vector<double> Simulation::gathered_xi() const {
  std::vector<double> out(n2_, 0.0);
  for (const auto& c : clients_)
    for (std::size_t i = 0; i < c.negative_index().size(); ++i)
      out[c.negative_index()[i]] = c.negative().weights()[i];
  return out;
}

namespace {
using Clock = std::chrono::steady_clock;
double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}
}  // namespace

SimulationResult run_simulation(const TransformedData& data, const SolverConfig& config,
                                const SimulationOptions& options) {
  const auto t0 = Clock::now();
  Simulation sim(data, config, options);
  const auto& params = sim.params();
  Solution sol;
  sol.params = params;
  StoppingRule rule(params.epsilon, config.max_blocks, config.max_iterations,
                    config.gap_tolerance);

  const auto evaluate = [&] {
    const auto c = sim.checkpoint();
    const auto& s = sim.stats();
    sol.trace.push_back({sim.iterations(), c.primal, c.dual, c.primal - c.dual,
                         0.5 * std::sqrt(2.0 * c.primal), ms_since(t0),
                         s.scalars_up + s.checkpoint_up, s.scalars_down + s.checkpoint_down});
    return c;
  };

  auto last = evaluate();
  rule.update(last, 0, 0);
  const std::size_t block = params.block_length();
  SolveStatus status = SolveStatus::MaxBlocks;
  for (std::size_t b = 1;; ++b) {
    for (std::size_t j = 0; j < block; ++j) {
      if (config.max_iterations != 0 && sim.iterations() >= config.max_iterations) break;
      sim.run_iteration();
    }
    sol.blocks = b;
    last = evaluate();
    if (auto st = rule.update(last, b, sim.iterations())) {
      status = *st;
      break;
    }
  }
  const int k = static_cast<int>(sim.clients().size());
  for (int c = 0; c < k; ++c) sim.network().send({MessageKind::Stop, kServer, c, {}});
  const double b_protocol = sim.recover_offset();

  sol.status = rule.finalize(status, last);
  sol.iterations = sim.iterations();
  sol.w = sim.clients().front().w();
  sol.eta = sim.gathered_eta();
  sol.xi = sim.gathered_xi();
  sol.primal = last.primal;
  sol.dual = last.dual;
  sol.gap = last.primal - last.dual;
  sol.distance = std::sqrt(2.0 * last.primal);
  sol.saddle = saddle_value(sol.w, sol.eta, sol.xi, data);
  sol.hyperplane = recover_hyperplane(sol.w, sol.eta, sol.xi, data);
  sol.b = sol.hyperplane.b;
  if (!(std::abs(b_protocol - sol.b) <= 1e-9 * std::max(1.0, std::abs(sol.b))))
    throw SimulationFault("offset recovered over the protocol disagrees with the gathered one");
  sol.wall_time_ms = ms_since(t0);
  return {std::move(sol), sim.stats()};
}

}  // namespace saddlesvm
