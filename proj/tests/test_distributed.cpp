#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "saddlesvm/distributed.hpp"
#include "saddlesvm/error.hpp"
#include "saddlesvm/saddle_core.hpp"
#include "support/instances.hpp"

using namespace saddlesvm;

namespace {

TransformedData instance(std::uint64_t seed, std::size_t n1, std::size_t n2, std::size_t dim,
                         bool overlap = false) {
  return apply_transform(testing::gaussian_instance(seed, {n1, n2, dim}, 0.3, overlap), seed);
}

SolverConfig nu_config(double alpha, std::uint64_t seed) {
  SolverConfig c;
  c.mode = Mode::Nu;
  c.alpha = alpha;
  c.seed = seed;
  c.cap_rule = CapRule::Loop;
  return c;
}

double max_abs(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Steps the centralized solver and the simulation side by side and returns
// the worst per-iteration deviation of eta, xi and w.
double lockstep(const TransformedData& data, const SolverConfig& config, std::size_t k,
                std::size_t iterations, PartitionScheme scheme = PartitionScheme::RoundRobin) {
  const auto params = params_for(config, data);
  auto state = init_state(data, params);
  auto rng = make_rng(config.seed, streams::kIndex);
  SimulationOptions opts;
  opts.clients = k;
  opts.scheme = scheme;
  opts.partition_seed = 11;
  Simulation sim(data, config, opts);
  double worst = 0.0;
  for (std::size_t t = 0; t < iterations; ++t) {
    const auto a = iterate(state, params, rng, CapRule::Loop);
    const auto b = sim.run_iteration();
    REQUIRE(a.index == b.index);
    worst = std::max(worst, max_abs(state.positive.weights(), sim.gathered_eta()));
    worst = std::max(worst, max_abs(state.negative.weights(), sim.gathered_xi()));
    worst = std::max(worst, (state.w - sim.server_w()).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

TEST_CASE("partition examples") {
  auto data = instance(1, 4, 3, 4);
  auto one = partition(data, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].positive_index == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(one[0].negative_index == std::vector<std::size_t>{0, 1, 2});

  auto two = partition(data, 2);
  CHECK(two[0].positive_index == std::vector<std::size_t>{0, 2});
  CHECK(two[1].positive_index == std::vector<std::size_t>{1, 3});
  CHECK(two[0].negative_index == std::vector<std::size_t>{0, 2});
  CHECK(two[1].negative_index == std::vector<std::size_t>{1});
  CHECK(two[1].positive.col(0) == data.positive.col(1));

  auto blocks = partition(data, 2, PartitionScheme::Contiguous);
  CHECK(blocks[0].positive_index == std::vector<std::size_t>{0, 1});
  CHECK(blocks[1].positive_index == std::vector<std::size_t>{2, 3});

  CHECK_THROWS_AS(partition(data, 0), ConfigError);
  CHECK_THROWS_AS(partition(data, 8), ConfigError);
  CHECK_NOTHROW(partition(data, 7));
}

TEST_CASE("partitions preserve the multiset of columns") {
  auto data = instance(2, 9, 6, 5);
  for (auto scheme : {PartitionScheme::RoundRobin, PartitionScheme::Contiguous,
                      PartitionScheme::Shuffled}) {
    for (std::size_t k : {1u, 2u, 4u, 15u}) {
      auto parts = partition(data, k, scheme, 3);
      std::vector<std::size_t> pos, neg;
      for (const auto& p : parts) {
        REQUIRE(static_cast<std::size_t>(p.positive.cols()) == p.positive_index.size());
        for (std::size_t j = 0; j < p.positive_index.size(); ++j)
          CHECK(p.positive.col(static_cast<Eigen::Index>(j)) ==
                data.positive.col(static_cast<Eigen::Index>(p.positive_index[j])));
        pos.insert(pos.end(), p.positive_index.begin(), p.positive_index.end());
        neg.insert(neg.end(), p.negative_index.begin(), p.negative_index.end());
      }
      std::sort(pos.begin(), pos.end());
      std::sort(neg.begin(), neg.end());
      for (std::size_t i = 0; i < pos.size(); ++i) CHECK(pos[i] == i);
      for (std::size_t i = 0; i < neg.size(); ++i) CHECK(neg[i] == i);
      CHECK(pos.size() == 9);
      CHECK(neg.size() == 6);
    }
  }
}

TEST_CASE("message payload sizes") {
  CHECK(payload_size(MessageKind::PickIndex) == 1);
  CHECK(payload_size(MessageKind::ClientDelta) == 2);
  CHECK(payload_size(MessageKind::DeltaBroadcast) == 2);
  CHECK(payload_size(MessageKind::ClientNorm) == 2);
  CHECK(payload_size(MessageKind::NormBroadcast) == 2);
  CHECK(payload_size(MessageKind::ClientClip) == 4);
  CHECK(payload_size(MessageKind::ClipBroadcast) == 4);
  CHECK(payload_size(MessageKind::Stop) == 0);
  CHECK(payload_size(MessageKind::CheckpointReport) == -1);

  Network net(true);
  CHECK_THROWS_AS(net.send({MessageKind::ClientDelta, 0, kServer, {1.0}}), SimulationFault);
  net.send({MessageKind::ClientDelta, 0, kServer, {1.0, 2.0}});
  net.send({MessageKind::DeltaBroadcast, kServer, 0, {3.0, 4.0}});
  CHECK(net.stats().scalars_up == 2);
  CHECK(net.stats().scalars_down == 2);
  CHECK(net.log().size() == 2);
}

TEST_CASE("one client reproduces the centralized solver exactly") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto data = instance(seed, 12, 9, 6);
    SolverConfig hm;
    hm.seed = seed;
    CHECK(lockstep(data, hm, 1, 300) == 0.0);
    CHECK(lockstep(data, nu_config(0.8, seed), 1, 300) == 0.0);

    auto central = solve(data, hm);
    auto dist = run_simulation(data, hm, SimulationOptions{});
    CHECK(dist.solution.iterations == central.iterations);
    CHECK(dist.solution.primal == central.primal);
    CHECK(dist.solution.dual == central.dual);
    CHECK(dist.solution.b == central.b);
    CHECK(dist.solution.w == central.w);
    CHECK(dist.solution.status == central.status);
  }
}

TEST_CASE("several clients track the centralized iterates") {
  auto data = instance(5, 22, 18, 8);
  SolverConfig hm;
  hm.seed = 9;
  auto nu = nu_config(0.7, 9);
  for (std::size_t k : {2u, 5u, 20u}) {
    CAPTURE(k);
    CHECK(lockstep(data, hm, k, 400) <= 1e-12);
    CHECK(lockstep(data, nu, k, 400) <= 1e-12);
  }
  CHECK(lockstep(data, hm, 3, 200, PartitionScheme::Contiguous) <= 1e-12);
  CHECK(lockstep(data, nu, 3, 200, PartitionScheme::Shuffled) <= 1e-12);
}

TEST_CASE("gathered duals stay on the simplex") {
  auto data = instance(6, 15, 15, 6);
  SimulationOptions opts;
  opts.clients = 4;
  Simulation sim(data, nu_config(0.75, 1), opts);
  for (int t = 0; t < 200; ++t) {
    sim.run_iteration();
    double s1 = 0.0, s2 = 0.0;
    for (double v : sim.gathered_eta()) s1 += v;
    for (double v : sim.gathered_xi()) s2 += v;
    CHECK(std::abs(s1 - 1.0) <= 1e-9);
    CHECK(std::abs(s2 - 1.0) <= 1e-9);
  }
}

TEST_CASE("communication per iteration") {
  auto data = instance(7, 14, 10, 6);
  for (std::size_t k : {1u, 3u, 7u}) {
    SimulationOptions opts;
    opts.clients = k;
    SolverConfig hm;
    Simulation a(data, hm, opts);
    for (int t = 0; t < 50; ++t) a.run_iteration();
    CHECK(a.stats().scalars_up == 50 * 4 * k);
    CHECK(a.stats().scalars_down == 50 * 5 * k);
    CHECK(a.stats().rounds == 50 * 3);
    CHECK(a.stats().clip_passes == 0);

    Simulation b(data, nu_config(0.6, 0), opts);
    const auto bound = static_cast<std::size_t>(std::ceil(1.0 / b.params().nu)) + 1;
    std::uint64_t exchanges = 0;
    for (int t = 0; t < 50; ++t) {
      const auto before = b.stats().clip_passes;
      const auto rec = b.run_iteration();
      const auto now = b.stats().clip_passes - before;
      CHECK(now == rec.clip_passes + 1);
      CHECK(now <= bound);
      exchanges += now;
    }
    CHECK(exchanges > 50);
    CHECK(b.stats().scalars_up == 50 * 4 * k + 4 * k * exchanges);
    CHECK(b.stats().scalars_down == 50 * 5 * k + 4 * k * exchanges);
  }
}

TEST_CASE("checkpoint and finalize traffic is metered separately") {
  auto data = instance(8, 10, 8, 6);
  SimulationOptions opts;
  opts.clients = 3;
  Simulation sim(data, SolverConfig{}, opts);
  for (int t = 0; t < 20; ++t) sim.run_iteration();
  const auto up = sim.stats().scalars_up;
  sim.checkpoint();
  CHECK(sim.stats().scalars_up == up);
  // Hard margin: one extreme inner product per class and client.
  CHECK(sim.stats().checkpoint_up == 3 * (sim.params().dim + 2));
  sim.recover_offset();
  CHECK(sim.stats().finalize_up == sim.params().dim + 3);
}

TEST_CASE("checkpoint matches the centralized objectives") {
  auto data = instance(9, 12, 12, 5);
  SolverConfig hm;
  const auto params = params_for(hm, data);
  auto state = init_state(data, params);
  auto rng = make_rng(hm.seed, streams::kIndex);
  SimulationOptions opts;
  opts.clients = 4;
  Simulation sim(data, hm, opts);
  for (int t = 0; t < 100; ++t) {
    iterate(state, params, rng);
    sim.run_iteration();
  }
  const auto cp = sim.checkpoint();
  CHECK(cp.primal == doctest::Approx(primal_objective(state.positive.weights(),
                                                      state.negative.weights(), data))
                         .epsilon(1e-12));
  CHECK(cp.dual == doctest::Approx(dual_objective(state.w, data, 1.0)).epsilon(1e-12));
  CHECK(cp.dual <= cp.primal);
}

TEST_CASE("replica divergence is detected") {
  auto data = instance(10, 8, 8, 4);
  SimulationOptions opts;
  opts.clients = 3;
  Simulation sim(data, SolverConfig{}, opts);
  sim.run_iteration();
  sim.clients()[1].mutable_w()[0] += 1e-6;
  CHECK_THROWS_AS(sim.run_iteration(), SimulationFault);
}

TEST_CASE("distributed runs agree with the centralized solver") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto data = instance(seed + 20, 16, 14, 6);
    SolverConfig hm;
    hm.seed = seed;
    auto central = solve(data, hm);
    SimulationOptions opts;
    opts.clients = 4;
    auto dist = run_simulation(data, hm, opts);
    CHECK(dist.solution.iterations == central.iterations);
    CHECK(dist.solution.status == central.status);
    CHECK(std::abs(dist.solution.primal - central.primal) <= 1e-9);
    CHECK(std::abs(dist.solution.b - central.b) <= 1e-9);
    CHECK((dist.solution.w - central.w).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(dist.stats.iterations == dist.solution.iterations);
    CHECK(dist.stats.scalars_up == 4 * 4 * dist.solution.iterations);
    CHECK(dist.solution.trace.back().scalars_up ==
          dist.stats.scalars_up + dist.stats.checkpoint_up);
  }
}
