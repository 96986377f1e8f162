#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "saddlesvm/cli.hpp"
#include "saddlesvm/error.hpp"
#include "saddlesvm/preprocess.hpp"
#include "saddlesvm/trace.hpp"
#include "support/instances.hpp"

using namespace saddlesvm;
using nlohmann::json;

namespace {

const std::string kData = SADDLESVM_TEST_DATA;
const std::string kIris = kData + "/iris.libsvm";
const std::string kTiny = kData + "/tiny.libsvm";

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "saddlesvm");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

json parse(const Run& r) { return json::parse(r.out); }

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / "saddlesvm_test_cli" / name;
  std::filesystem::create_directories(p.parent_path());
  return p;
}

void strip_times(json& j) {
  if (j.is_object()) {
    j.erase("wall_time_ms");
    for (auto& [k, v] : j.items()) strip_times(v);
  } else if (j.is_array()) {
    for (auto& v : j) strip_times(v);
  }
}

}  // namespace

TEST_CASE("trace csv and json carry the same values") {
  std::vector<TraceRow> rows{{0, 0.5, -1.25, 1.75, 0.5, 0.0, 0, 0},
                             {37, 0.1 + 0.2, 1.0 / 3.0, 1e-17, 0.123456789012345678, 12.5, 900, 1125}};
  std::ostringstream csv;
  write_trace_csv(csv, rows);
  CHECK(csv.str().rfind("iter,primal,dual,gap,margin,elapsed_ms,scalars_up,scalars_down\n", 0) == 0);
  std::istringstream in(csv.str());
  const auto back = read_trace_csv(in);
  const auto from_json = trace_from_json(json::parse(trace_to_json(rows).dump()));
  REQUIRE(back.size() == rows.size());
  REQUIRE(from_json.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto* r : {&back[i], &from_json[i]}) {
      CHECK(r->iter == rows[i].iter);
      CHECK(r->primal == rows[i].primal);
      CHECK(r->dual == rows[i].dual);
      CHECK(r->gap == rows[i].gap);
      CHECK(r->margin == rows[i].margin);
      CHECK(r->elapsed_ms == rows[i].elapsed_ms);
      CHECK(r->scalars_up == rows[i].scalars_up);
      CHECK(r->scalars_down == rows[i].scalars_down);
    }
  }
  std::istringstream bad("iter,primal\n1,2\n");
  CHECK_THROWS_AS(read_trace_csv(bad), ParseError);
}

TEST_CASE("train-hm on iris") {
  auto r = cli({"train-hm", "--input", kIris, "--seed", "7"});
  REQUIRE(r.code == kExitOk);
  auto j = parse(r);
  CHECK(j["status"] == "converged");
  CHECK(j["objective"].get<double>() == doctest::Approx(0.835).epsilon(0.02 / 0.835));
  CHECK(j["train_accuracy"].get<double>() == 1.0);
  CHECK(j["data"]["n"] == 150);
  CHECK(j["command"] == "train-hm");
  CHECK(j["params"]["padded_dim"] == 4);
}

TEST_CASE("oracle and train-hm agree on a small file") {
  auto o = cli({"oracle", "--input", kTiny});
  auto h = cli({"train-hm", "--input", kTiny, "--epsilon", "1e-4"});
  REQUIRE(o.code == kExitOk);
  REQUIRE(h.code == kExitOk);
  const double opt = parse(o)["objective"].get<double>();
  const double got = parse(h)["objective"].get<double>();
  CHECK(got >= opt * (1.0 - 1e-9));
  CHECK(got <= opt * 1.01);
  auto g = cli({"gilbert", "--input", kTiny, "--epsilon", "1e-6"});
  REQUIRE(g.code == kExitOk);
  CHECK(parse(g)["objective"].get<double>() == doctest::Approx(opt).epsilon(1e-5));
}

TEST_CASE("train-nu and dist-sim summaries") {
  auto n = cli({"train-nu", "--input", kTiny, "--alpha", "0.9"});
  REQUIRE(n.code == kExitOk);
  CHECK(parse(n)["params"]["nu"].get<double>() == doctest::Approx(1.0 / 2.7));

  auto d = cli({"dist-sim", "--input", kTiny, "-k", "3", "--max-blocks", "5"});
  REQUIRE(d.code == kExitOk);
  auto j = parse(d);
  const auto iters = j["iterations"].get<std::uint64_t>();
  CHECK(j["comm"]["clients"] == 3);
  CHECK(j["comm"]["scalars_up"].get<std::uint64_t>() == 12 * iters);
  CHECK(j["comm"]["scalars_down"].get<std::uint64_t>() == 15 * iters);
  CHECK(j["comm"]["total_kd_units"].get<double>() > 0.0);
}

TEST_CASE("exit codes") {
  CHECK(cli({"train-hm", "--input", kTiny, "--bogus"}).code == kExitUsage);
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"train-hm", "--input", kData + "/missing.libsvm"}).code == kExitUsage);
  CHECK(cli({"train-nu", "--input", kTiny}).code == kExitUsage);
  CHECK(cli({"train-nu", "--input", kTiny, "--nu", "0.2"}).code == kExitUsage);
  CHECK(cli({"train-nu", "--input", kTiny, "--nu", "0.5", "--alpha", "1"}).code == kExitUsage);
  CHECK(cli({"dist-sim", "--input", kTiny, "-k", "0"}).code == kExitUsage);
  CHECK(cli({"dist-sim", "--input", kTiny, "-k", "7"}).code == kExitUsage);
  CHECK(cli({"train-hm", "--input", kTiny, "--epsilon", "0"}).code == kExitUsage);

  const auto bad = scratch("bad.libsvm");
  std::ofstream(bad) << "+1 1:1\nnot a line\n";
  auto r = cli({"train-hm", "--input", bad.string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("error") != std::string::npos);
}

TEST_CASE("the binary reports its exit codes") {
  const std::string exe = SADDLESVM_CLI_PATH;
  const auto quiet = " > " + scratch("stdout.txt").string() + " 2>&1";
  const auto status = [&](const std::string& args) {
    const int raw = std::system((exe + " " + args + quiet).c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status("train-hm --input " + kTiny) == kExitOk);
  CHECK(status("train-hm --input " + kTiny + " --bogus") == kExitUsage);
  CHECK(status("oracle --input " + kData + "/missing.libsvm") == kExitUsage);
}

TEST_CASE("same arguments give the same output") {
  const std::vector<std::vector<std::string>> cases{
      {"train-hm", "--input", kIris, "--seed", "3"},
      {"train-nu", "--input", kIris, "--seed", "3", "--alpha", "0.8"},
      {"dist-sim", "--input", kIris, "--seed", "3", "-k", "4",
       "--partition", "shuffled"}};
  for (const auto& args : cases) {
    auto a = parse(cli(args));
    auto b = parse(cli(args));
    strip_times(a);
    strip_times(b);
    CHECK(a.dump() == b.dump());
  }
}

TEST_CASE("beta sweep") {
  auto r = cli({"sweep-beta", "--input", kTiny, "--betas", "0.1,0.01,0.001", "--budget", "500"});
  REQUIRE(r.code == kExitOk);
  auto j = parse(r);
  REQUIRE(j["runs"].size() == 3);
  const double best = j["best"]["primal"].get<double>();
  for (const auto& run : j["runs"]) {
    CHECK(run["iterations"].get<std::size_t>() <= 500);
    CHECK(best <= run["primal"].get<double>());
  }

  auto data = apply_transform(testing::gaussian_instance(4, {10, 10, 5}, 0.2), 4);
  auto sweep = sweep_beta(data, SolverConfig{}, {0.1, 0.01}, 300);
  REQUIRE(sweep.runs.size() == 2);
  CHECK(sweep.runs[0].beta == 0.1);
  for (const auto& run : sweep.runs)
    CHECK(sweep.runs[sweep.best].solution.primal <= run.solution.primal);
}

TEST_CASE("output paths and trace files") {
  const auto dir = scratch("out");
  std::filesystem::remove_all(dir);
  setenv(kOutDirEnv, dir.string().c_str(), 1);
  CHECK(resolve_output_path("a/b.json") == dir / "a/b.json");
  CHECK(resolve_output_path("/abs.json") == std::filesystem::path("/abs.json"));

  auto r = cli({"train-hm", "--input", kTiny, "--output", "s.json", "--trace", "t.csv"});
  REQUIRE(r.code == kExitOk);
  std::ifstream summary(dir / "s.json");
  std::stringstream text;
  text << summary.rdbuf();
  CHECK(text.str() == r.out);
  std::ifstream trace(dir / "t.csv");
  const auto rows = read_trace_csv(trace);
  REQUIRE(!rows.empty());
  CHECK(rows.front().iter == 0);
  CHECK(rows.back().primal == parse(r)["primal"].get<double>());

  r = cli({"train-hm", "--input", kTiny, "--trace", "t.json", "--format", "json"});
  REQUIRE(r.code == kExitOk);
  std::ifstream tj(dir / "t.json");
  CHECK(trace_from_json(json::parse(tj)).size() == rows.size());
  unsetenv(kOutDirEnv);
}
