#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "memento/planner.hpp"
#include "memento/trace.hpp"

using namespace memento;
using json = nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
  std::vector<json> lines;

  std::vector<json> of_kind(const std::string& kind) const {
    std::vector<json> v;
    for (const auto& j : lines) {
      if (j.value("kind", "") == kind) v.push_back(j);
    }
    return v;
  }
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  std::istringstream in(r.out);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.front() == '{') r.lines.push_back(json::parse(line));
  }
  return r;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / (std::string("memento_cli_") + name)).string();
}

}  // namespace

TEST_CASE("cli: plan") {
  const auto r = run({"plan"});
  REQUIRE(r.code == 0);
  const auto opt = r.of_kind("optimum");
  REQUIRE(opt.size() == 1);
  CHECK(opt[0]["batch"].get<int>() >= 35);
  CHECK(opt[0]["batch"].get<int>() <= 55);
  CHECK(r.of_kind("curve").size() == 200);

  const auto b5 = run({"plan", "--budget", "5"}).of_kind("optimum");
  REQUIRE(b5.size() == 1);
  CHECK(b5[0]["totalError"].get<double>() < opt[0]["totalError"].get<double>());

  const auto one = run({"plan", "--batch", "1"}).of_kind("selected");
  REQUIRE(one.size() == 1);
  planner::DeploymentParams p;
  p.points = 10;
  p.overhead_bytes = 64;
  p.sample_bytes = 4;
  p.budget = 1;
  p.window = 1e6;
  p.hierarchy_size = 5;
  p.delta_s = 1e-4;
  CHECK(one[0]["totalError"].get<double>() == doctest::Approx(planner::error_bound(1, p).total_error));
  CHECK(one[0]["tau"].get<double>() == doctest::Approx(1.0 / 68));
}

TEST_CASE("cli: accuracy") {
  const auto r = run({"accuracy", "--packets", "30000", "--window", "4000", "--taus", "1,0.0625,0.0009765625",
                      "--counters", "100", "--seeds", "5", "--eps-a", "0.04"});
  REQUIRE(r.code == 0);
  const auto cells = r.of_kind("cell");
  REQUIRE(cells.size() == 15);
  double low = 0, high = 0;
  for (const auto& c : cells) {
    const double tau = c["tau"].get<double>();
    if (tau == 1.0) CHECK(c["rmse"].get<double>() <= 0.04 * 4000);
    if (tau == 0.0625) low += c["rmse"].get<double>() / 5;
    if (tau < 0.001) high += c["rmse"].get<double>() / 5;
  }
  CHECK(high >= low);
}

TEST_CASE("cli: bench, detect, flood") {
  const auto bench = run({"bench", "--packets", "20000", "--window", "4096", "--taus", "1,0.25,0.0625", "--counters",
                          "256", "--reps", "1"});
  REQUIRE(bench.code == 0);
  const auto rows = bench.of_kind("throughput");
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) CHECK(row["updates"].get<int>() == 20000);

  const auto detect = run({"detect", "--ratios", "2,1.1", "--phases", "5"});
  REQUIRE(detect.code == 0);
  const auto pts = detect.of_kind("point");
  REQUIRE(pts.size() == 6);
  for (const auto& p : pts) {
    if (p["method"] == "Window" && p["ratio"].get<double>() == 2.0) CHECK(p["windows"].get<double>() == 0.5);
  }

  const auto flood = run({"flood", "--packets", "60000", "--window", "10000", "--subnets", "5"});
  REQUIRE(flood.code == 0);
  const auto methods = flood.of_kind("method");
  REQUIRE(methods.size() == 4);
  CHECK(methods[0]["method"] == "OPT");
  CHECK(methods[0]["detected"].get<int>() == 5);
  for (const auto& m : methods) {
    if (m["method"] == "Sample" || m["method"] == "Batch") {
      CHECK(m["bytesPerPacket"].get<double>() <= 1.0 + 1e-9);
      CHECK(m["maxUnreported"].get<double>() <= m["stalenessBound"].get<double>());
    }
  }
}

TEST_CASE("cli: gen writes a trace that loads back") {
  const auto path = temp_path("gen.csv");
  const auto r = run({"gen", "--kind", "zipf", "--packets", "5000", "--flows", "20", "--seed", "3", "--out", path});
  REQUIRE(r.code == 0);
  const auto summary = r.of_kind("trace");
  REQUIRE(summary.size() == 1);
  CHECK(summary[0]["packets"].get<int>() == 5000);
  CHECK(load_trace(path) == gen_zipf_trace({5000, 20, 1.0, 3, 1}));

  const auto hhh = run({"hhh", "--trace", path, "--window", "4000", "--eps-a", "0.05", "--theta", "0.2"});
  CHECK(hhh.code == 0);
  CHECK(hhh.of_kind("config").size() == 1);
  CHECK(hhh.lines.size() > 1);

  const auto flood = temp_path("flood.csv");
  CHECK(run({"gen", "--kind", "flood", "--packets", "50000", "--window", "10000", "--out", flood}).code == 0);
  bool tagged = false;
  for (const auto& rec : load_trace(flood)) tagged = tagged || rec.flood;
  CHECK(tagged);
  std::filesystem::remove(path);
  std::filesystem::remove(flood);
}

TEST_CASE("cli: exit codes") {
  CHECK(run({"plan", "--window", "-1"}).code == cli::kConfigError);
  CHECK(run({"plan", "--budget", "0"}).code == cli::kConfigError);
  CHECK(run({"no-such-command"}).code == cli::kConfigError);
  CHECK(run({"plan", "--dim", "3"}).code == cli::kConfigError);
  CHECK(run({}).code == cli::kConfigError);
  CHECK(run({"gen", "--kind", "zipf"}).code == cli::kConfigError);
  CHECK(run({"--help"}).code == cli::kOk);

  const auto missing = run({"accuracy", "--trace", temp_path("missing.csv")});
  CHECK(missing.code == cli::kIoError);
  CHECK(missing.err.find("cannot open") != std::string::npos);

  const auto bad = temp_path("bad.csv");
  std::ofstream(bad) << "10.0.0.1\n10.0.0.x\n";
  const auto parse = run({"accuracy", "--trace", bad});
  CHECK(parse.code == cli::kIoError);
  CHECK(parse.err.find("line 2") != std::string::npos);
  std::filesystem::remove(bad);

  const auto check = run({"--check", "--criteria", "4"});
  CHECK(check.code == cli::kOk);
  const auto crit = check.of_kind("criterion");
  REQUIRE(crit.size() == 1);
  CHECK(crit[0]["id"].get<int>() == 4);
  CHECK(crit[0]["pass"].get<bool>());
}

TEST_CASE("cli: output is reproducible and the seed can come from the environment") {
  const std::vector<std::string> args{"accuracy", "--packets", "10000", "--window", "2000", "--taus", "0.25",
                                      "--counters", "100", "--seeds", "2"};
  auto with_seed = args;
  with_seed.insert(with_seed.end(), {"--seed", "7"});
  const auto a = run(with_seed);
  const auto b = run(with_seed);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  setenv("MEMENTO_SEED", "7", 1);
  const auto env = run(args);
  unsetenv("MEMENTO_SEED");
  CHECK(env.out == a.out);
  CHECK(run(args).out != a.out);
}
