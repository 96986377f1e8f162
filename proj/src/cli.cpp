#include "saddlesvm/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "saddlesvm/data_model.hpp"
#include "saddlesvm/distributed.hpp"
#include "saddlesvm/error.hpp"
#include "saddlesvm/geometry_oracle.hpp"
#include "saddlesvm/preprocess.hpp"
#include "saddlesvm/trace.hpp"

namespace saddlesvm {

using nlohmann::json;

std::filesystem::path resolve_output_path(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kOutDirEnv); dir && *dir) p = std::filesystem::path(dir) / p;
  }
  return p;
}

namespace {

void write_file(const std::string& path, const std::string& text) {
  const auto p = resolve_output_path(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw ValidationError("cannot write '" + p.string() + "'");
  f << text;
}

json params_json(const SolverParams& p) {
  return {{"epsilon", p.epsilon}, {"beta", p.beta},   {"nu", p.nu},
          {"gamma", p.gamma},     {"q", p.q},         {"tau", p.tau},
          {"sigma", p.sigma},     {"theta", p.theta}, {"padded_dim", p.dim},
          {"block_length", p.block_length()}};
}

json data_json(const Dataset& d) {
  return {{"n", d.size()}, {"n_positive", d.n_positive()}, {"n_negative", d.n_negative()},
          {"dim", d.dim()}};
}

Mode parse_mode(const std::string& m) {
  if (m == "hm") return Mode::HardMargin;
  if (m == "nu") return Mode::Nu;
  throw ConfigError("unknown mode '" + m + "'");
}

CapRule parse_cap_rule(const std::string& r) {
  if (r == "auto") return CapRule::Auto;
  if (r == "loop") return CapRule::Loop;
  if (r == "sorted") return CapRule::Sorted;
  throw ConfigError("unknown cap rule '" + r + "'");
}

PartitionScheme parse_partition(const std::string& s) {
  if (s == "round-robin") return PartitionScheme::RoundRobin;
  if (s == "contiguous") return PartitionScheme::Contiguous;
  if (s == "shuffled") return PartitionScheme::Shuffled;
  throw ConfigError("unknown partition scheme '" + s + "'");
}

SolverConfig solver_config(const RunConfig& rc, Mode mode) {
  SolverConfig c;
  c.mode = mode;
  c.epsilon = rc.epsilon;
  c.beta = rc.beta;
  c.nu = rc.nu;
  c.alpha = rc.alpha;
  c.seed = rc.seed;
  c.max_blocks = rc.max_blocks;
  c.max_iterations = rc.max_iterations;
  c.gap_tolerance = rc.gap_tolerance;
  c.cap_rule = parse_cap_rule(rc.cap_rule);
  if (mode == Mode::Nu && !rc.nu && !rc.alpha) throw ConfigError("nu mode needs --nu or --alpha");
  if (rc.nu && rc.alpha) throw ConfigError("give either --nu or --alpha, not both");
  return c;
}

struct Loaded {
  Dataset raw;
  TransformedData data;
  std::optional<Dataset> test;
};

Loaded load(const RunConfig& rc) {
  ParseOptions opts;
  opts.accept_zero_two_labels = rc.accept_zero_two;
  Loaded l{load_libsvm(rc.input, opts), {}, std::nullopt};
  l.data = apply_transform(l.raw, rc.seed);
  if (rc.test) {
    l.test = load_libsvm(*rc.test, opts);
    if (l.test->dim() > l.data.spec.padded_dim)
      throw ValidationError("test data has more features than the training data");
  }
  return l;
}

void add_accuracy(json& j, const Solution& sol, const Loaded& l) {
  j["train_accuracy"] = sol.hyperplane.accuracy(l.raw);
  if (l.test) j["test_accuracy"] = sol.hyperplane.accuracy(*l.test);
}

void emit_trace(const RunConfig& rc, const std::vector<TraceRow>& rows) {
  if (!rc.trace) return;
  std::ostringstream s;
  write_trace(s, rows, rc.format == "json" ? TraceFormat::Json : TraceFormat::Csv);
  write_file(*rc.trace, s.str());
}

json comm_json(const CommStats& s, std::size_t k, std::size_t dim) {
  const double unit = static_cast<double>(k) * static_cast<double>(dim);
  return {{"clients", k},
          {"scalars_up", s.scalars_up},
          {"scalars_down", s.scalars_down},
          {"rounds", s.rounds},
          {"iterations", s.iterations},
          {"clip_passes", s.clip_passes},
          {"messages", s.messages},
          {"checkpoint_up", s.checkpoint_up},
          {"checkpoint_down", s.checkpoint_down},
          {"finalize_up", s.finalize_up},
          {"total_scalars", s.total_scalars()},
          {"total_kd_units", static_cast<double>(s.total_scalars()) / unit}};
}

json run_train(const RunConfig& rc, Mode mode) {
  const auto cfg = solver_config(rc, mode);
  const auto l = load(rc);
  const auto sol = solve(l.data, cfg);
  json j = solution_summary(sol);
  j["data"] = data_json(l.raw);
  add_accuracy(j, sol, l);
  emit_trace(rc, sol.trace);
  return j;
}

json run_dist(const RunConfig& rc) {
  const auto cfg = solver_config(rc, parse_mode(rc.mode));
  const auto l = load(rc);
  SimulationOptions opts;
  opts.clients = rc.clients;
  opts.scheme = parse_partition(rc.partition);
  opts.partition_seed = rc.seed;
  const auto res = run_simulation(l.data, cfg, opts);
  json j = solution_summary(res.solution);
  j["data"] = data_json(l.raw);
  j["comm"] = comm_json(res.stats, rc.clients, l.data.dim());
  add_accuracy(j, res.solution, l);
  emit_trace(rc, res.solution.trace);
  return j;
}

json oracle_summary(const OracleResult& r, const TransformedData& data) {
  return {{"objective", r.distance / data.spec.scale},
          {"distance", r.distance},
          {"half_sq", r.half_sq},
          {"gap_certificate", r.gap_certificate},
          {"iterations", r.iterations},
          {"separable", r.separable}};
}

json run_gilbert(const RunConfig& rc) {
  const auto l = load(rc);
  const auto r = gilbert_solve(l.data, rc.epsilon);
  json j = oracle_summary(r, l.data);
  j["data"] = data_json(l.raw);
  return j;
}

json run_oracle(const RunConfig& rc) {
  const auto l = load(rc);
  std::optional<double> nu;
  if (rc.nu || rc.alpha) {
    SolverConfig c;
    c.mode = Mode::Nu;
    c.nu = rc.nu;
    c.alpha = rc.alpha;
    nu = resolve_nu(c, l.data.n_positive(), l.data.n_negative());
  }
  OracleOptions opts;
  opts.tolerance = rc.tolerance;
  const auto r = fw_oracle(l.data, nu, opts);
  json j = oracle_summary(r, l.data);
  j["nu"] = nu.value_or(1.0);
  j["data"] = data_json(l.raw);
  return j;
}

json run_sweep(const RunConfig& rc) {
  if (rc.betas.empty()) throw ConfigError("empty beta list");
  const auto cfg = solver_config(rc, parse_mode(rc.mode));
  const auto l = load(rc);
  const auto sweep = sweep_beta(l.data, cfg, rc.betas, rc.budget);
  json runs = json::array();
  for (const auto& run : sweep.runs) {
    runs.push_back({{"beta", run.beta},
                    {"primal", run.solution.primal},
                    {"objective", run.solution.distance_input_units()},
                    {"iterations", run.solution.iterations},
                    {"status", to_string(run.solution.status)},
                    {"wall_time_ms", run.solution.wall_time_ms}});
  }
  const auto& best = sweep.runs[sweep.best];
  json j;
  j["runs"] = runs;
  j["budget"] = rc.budget;
  j["best_beta"] = best.beta;
  j["best"] = solution_summary(best.solution);
  j["data"] = data_json(l.raw);
  emit_trace(rc, best.solution.trace);
  return j;
}

void add_common(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--input", rc.input, "training data (LIBSVM format)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", rc.seed, "seed for the transform, index sampling and partition");
  sub->add_option("--output", rc.output, "also write the JSON summary here");
  sub->add_flag("--accept-zero-two", rc.accept_zero_two, "map labels 0 and 2 to -1");
}

void add_solver(CLI::App* sub, RunConfig& rc, bool nu_options) {
  sub->add_option("--epsilon", rc.epsilon, "accuracy parameter")->capture_default_str();
  sub->add_option("--beta", rc.beta, "strong-convexity weight")->capture_default_str();
  sub->add_option("--max-blocks", rc.max_blocks, "cap on objective checks")->capture_default_str();
  sub->add_option("--max-iterations", rc.max_iterations, "iteration cap (0: none)");
  sub->add_option("--gap-tolerance", rc.gap_tolerance,
                  "also require primal - dual <= tol * primal to stop");
  sub->add_option("--test", rc.test, "held-out data for accuracy")->check(CLI::ExistingFile);
  sub->add_option("--trace", rc.trace, "per-checkpoint trace file");
  sub->add_option("--format", rc.format, "trace format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  if (nu_options) {
    sub->add_option("--nu", rc.nu, "cap on each dual weight");
    sub->add_option("--alpha", rc.alpha, "nu = 1 / (alpha * min(n1, n2))");
    sub->add_option("--cap-rule", rc.cap_rule, "capped projection rule")
        ->check(CLI::IsMember({"auto", "loop", "sorted"}));
  }
}

int dispatch(const RunConfig& rc, std::ostream& out) {
  json j;
  if (rc.command == "train-hm") j = run_train(rc, Mode::HardMargin);
  else if (rc.command == "train-nu") j = run_train(rc, Mode::Nu);
  else if (rc.command == "gilbert") j = run_gilbert(rc);
  else if (rc.command == "oracle") j = run_oracle(rc);
  else if (rc.command == "dist-sim") j = run_dist(rc);
  else j = run_sweep(rc);
  j["command"] = rc.command;
  j["seed"] = rc.seed;
  const std::string text = j.dump(2) + "\n";
  out << text;
  if (rc.output) write_file(*rc.output, text);
  return kExitOk;
}

}  // namespace

nlohmann::json solution_summary(const Solution& sol) {
  return {{"status", to_string(sol.status)},
          {"objective", sol.distance_input_units()},
          {"distance", sol.distance},
          {"half_sq", sol.primal},
          {"primal", sol.primal},
          {"dual", sol.dual},
          {"gap", sol.gap},
          {"saddle", sol.saddle},
          {"margin", sol.hyperplane.margin_input_units()},
          {"b", sol.b},
          {"iterations", sol.iterations},
          {"blocks", sol.blocks},
          {"wall_time_ms", sol.wall_time_ms},
          {"params", params_json(sol.params)}};
}

SweepResult sweep_beta(const TransformedData& data, const SolverConfig& base,
                       const std::vector<double>& betas, std::size_t budget) {
  SweepResult r;
  for (double beta : betas) {
    SolverConfig c = base;
    c.beta = beta;
    c.max_iterations = budget;
    c.max_blocks = std::numeric_limits<std::size_t>::max();
    r.runs.push_back({beta, solve(data, c)});
    if (r.runs.back().solution.primal < r.runs[r.best].solution.primal) r.best = r.runs.size() - 1;
  }
  return r;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Linear SVM training with an accelerated saddle-point solver"};
  app.name(args.empty() ? "saddlesvm" : args.front());
  app.require_subcommand(1);
  RunConfig rc;

  auto* hm = app.add_subcommand("train-hm", "hard-margin SVM");
  add_common(hm, rc);
  add_solver(hm, rc, false);

  auto* nu = app.add_subcommand("train-nu", "nu-SVM (reduced convex hulls)");
  add_common(nu, rc);
  add_solver(nu, rc, true);

  auto* gil = app.add_subcommand("gilbert", "Gilbert's algorithm baseline");
  add_common(gil, rc);
  gil->add_option("--epsilon", rc.epsilon, "relative stopping tolerance")->capture_default_str();

  auto* orc = app.add_subcommand("oracle", "high-precision hull distance");
  add_common(orc, rc);
  orc->add_option("--tolerance", rc.tolerance, "Frank-Wolfe gap target")->capture_default_str();
  orc->add_option("--nu", rc.nu, "cap for reduced hulls");
  orc->add_option("--alpha", rc.alpha, "nu = 1 / (alpha * min(n1, n2))");

  auto* dist = app.add_subcommand("dist-sim", "simulated distributed training");
  add_common(dist, rc);
  add_solver(dist, rc, true);
  dist->add_option("--clients,-k", rc.clients, "number of clients")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  dist->add_option("--mode", rc.mode, "hm or nu")->check(CLI::IsMember({"hm", "nu"}));
  dist->add_option("--partition", rc.partition, "column assignment")
      ->check(CLI::IsMember({"round-robin", "contiguous", "shuffled"}));

  auto* sweep = app.add_subcommand("sweep-beta", "try several beta values");
  add_common(sweep, rc);
  add_solver(sweep, rc, true);
  sweep->add_option("--mode", rc.mode, "hm or nu")->check(CLI::IsMember({"hm", "nu"}));
  sweep->add_option("--betas", rc.betas, "beta values")->delimiter(',');
  sweep->add_option("--budget", rc.budget, "iteration budget per run")->capture_default_str();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  for (auto* sub : app.get_subcommands()) rc.command = sub->get_name();

  try {
    return dispatch(rc, out);
  } catch (const ParseError& e) {
    err << "error: " << rc.input << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const SimulationFault& e) {
    err << "simulation fault: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const OracleIterationLimit& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run_cli(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace saddlesvm
