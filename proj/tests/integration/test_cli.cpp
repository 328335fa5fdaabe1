#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "corpus.hpp"
#include "riskmdp/generators.hpp"
#include "riskmdp/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace riskmdp;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("riskmdp_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_model(const MdpModel& m, const std::string& name) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << model_to_json(m).dump(2);
  return p.string();
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  return json::parse(in);
}

const std::string kExample = riskmdp::testing::data_path("models/example_rho08.json");

}  // namespace

TEST_CASE("solve on the two-state example writes a complete report") {
  const std::string out = (scratch() / "ex.json").string();
  const Run r = run({"solve", "--model", kExample, "--out", out});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("lambda_bar = 0.7768") != std::string::npos);
  const json rep = read_json(out);
  CHECK(rep["report_version"] == 1);
  CHECK(rep["command"] == "solve");
  CHECK(rep["model_digest"].get<std::string>().rfind("fnv1a64:", 0) == 0);
  CHECK(std::abs(rep["solution"]["lambda_bar"].get<double>() - (1.0 + std::log(0.8))) <= 2e-2);
  CHECK(rep["solution"]["pure_minimizer"]["2"] == "a");
  CHECK(rep["solution"]["maximizer"][1][1].get<double>() >= 1.0 - 1e-6);
  CHECK(rep["trace"].size() >= 2);
  for (const char* key : {"policy_value", "oracle", "certificate", "timings_ms"}) CHECK(rep.contains(key));
  CHECK(rep["oracle"]["gap"].get<double>() ==
        doctest::Approx(std::abs(rep["solution"]["lambda_bar"].get<double>() - rep["oracle"]["value"].get<double>())));
}

TEST_CASE("reports are deterministic apart from timings") {
  const std::string model = write_model(riskmdp::testing::corpus()[3].model, "m3.json");
  const std::string a = (scratch() / "a.json").string(), b = (scratch() / "b.json").string();
  REQUIRE(run({"solve", "--model", model, "--out", a}).code == 0);
  REQUIRE(run({"solve", "--model", model, "--out", b}).code == 0);
  json ja = read_json(a), jb = read_json(b);
  ja.erase("timings_ms");
  jb.erase("timings_ms");
  ja.erase("argv");
  jb.erase("argv");
  CHECK(ja.dump() == jb.dump());
}

TEST_CASE("grid and constraint generation agree") {
  const std::string model = write_model(riskmdp::testing::corpus()[0].model, "m0.json");
  const std::string a = (scratch() / "grid.json").string(), b = (scratch() / "cg.json").string();
  REQUIRE(run({"solve", "--model", model, "--out", a}).code == 0);
  REQUIRE(run({"solve", "--model", model, "--method", "congen", "--out", b}).code == 0);
  CHECK(std::abs(read_json(a)["solution"]["lambda_bar"].get<double>() -
                 read_json(b)["solution"]["lambda_bar"].get<double>()) <= 1e-3);
}

TEST_CASE("solve error paths") {
  CHECK(run({"solve", "--model", kExample, "--grid-guard", "3"}).code == 3);
  CHECK(run({"solve", "--model", "/nonexistent.json"}).code == 2);
  CHECK(run({"solve"}).code == 2);
  CHECK(run({"solve", "--model", kExample, "--method", "simplex"}).code == 2);
  CHECK(run({"solve", "--model", kExample, "--n-start", "5", "--n-max", "3"}).code == 2);
  const fs::path bad = scratch() / "bad.json";
  std::ofstream(bad) << R"({"states": ["x"], "actions": ["a"], "transitions": {"a": [[0.9]]}, "costs": [[0]]})";
  const Run r = run({"solve", "--model", bad.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("row-sum") != std::string::npos);
}

TEST_CASE("oracle") {
  const Run r = run({"oracle", "--model", kExample, "--out", "-"});
  REQUIRE(r.code == 0);
  const json rep = json::parse(r.out.substr(r.out.find('{')));
  CHECK(std::abs(rep["lambda"]["1"].get<double>()) <= 1e-8);
  CHECK(std::abs(rep["lambda"]["2"].get<double>() - (1.0 + std::log(0.8))) <= 1e-6);

  const MdpModel m = riskmdp::testing::corpus()[1].model;
  const std::string model = write_model(m, "m1.json");
  const fs::path pol = scratch() / "pol.json";
  std::ofstream(pol) << R"({"policy": {"s0": "a1", "s1": "a0", "s2": "a1"}})";
  const Run p = run({"oracle", "--model", model, "--policy", pol.string(), "--out", "-"});
  REQUIRE(p.code == 0);
  const json pr = json::parse(p.out.substr(p.out.find('{')));
  const GrowthRates g = growth_rate(m, PurePolicy({1, 0, 1}).to_stationary(m.num_actions()));
  CHECK(pr["lambda_max"].get<double>() == g.lambda_max);

  RandomModelSpec big;
  big.states = 12;
  big.actions = 4;
  CHECK(run({"oracle", "--model", write_model(random_model(big, 3), "big.json")}).code == 3);
}

TEST_CASE("oracle and solve on random 3x2 models") {
  // The LP value is a relaxation (mixed minimizer) of the pure-policy value,
  // so it never exceeds the oracle; the gap itself is reported, not bounded here.
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::string model = write_model(random_model({}, 500 + seed), "r.json");
    const std::string out = (scratch() / "r_report.json").string();
    REQUIRE(run({"solve", "--model", model, "--out", out}).code == 0);
    const json rep = read_json(out);
    const double lp = rep["solution"]["lambda_bar"].get<double>();
    const double bf = rep["oracle"]["value"].get<double>();
    CHECK(lp <= bf + 1e-6);
    worst = std::max(worst, bf - lp);
  }
  MESSAGE("largest oracle gap on 3x2 models: " << worst);
}

TEST_CASE("verify") {
  const std::string out = (scratch() / "v.json").string();
  REQUIRE(run({"solve", "--model", kExample, "--out", out}).code == 0);
  CHECK(run({"verify", "--model", kExample, "--solution", out}).code == 0);

  json rep = read_json(out);
  rep["solution"]["value"]["2"] = rep["solution"]["value"]["2"].get<double>() + 0.1;
  const std::string perturbed = (scratch() / "v_bad.json").string();
  std::ofstream(perturbed) << rep.dump(2);
  const Run bad = run({"verify", "--model", kExample, "--solution", perturbed});
  CHECK(bad.code == 5);
  CHECK(bad.err.find("state '2'") != std::string::npos);
  CHECK(run({"verify", "--model", kExample, "--solution", perturbed, "--tol", "10"}).code == 0);

  const std::string other = write_model(riskmdp::testing::corpus()[0].model, "other.json");
  CHECK(run({"verify", "--model", other, "--solution", out}).code == 2);
}

TEST_CASE("example") {
  const Run sup = run({"example", "--rho", "0.8"});
  REQUIRE(sup.code == 0);
  CHECK(sup.out.find("lambda_bar = 0.7768") != std::string::npos);
  CHECK(sup.out.find("poisson_insolvable = true") != std::string::npos);

  const Run sub = run({"example", "--rho", "0.1353", "--out", "-"});
  REQUIRE(sub.code == 0);
  const json rep = json::parse(sub.out.substr(sub.out.find('{')));
  CHECK(rep["analytic"]["lambda_bar"] == 0.0);
  CHECK(rep["analytic"]["interior"] == true);
  CHECK_FALSE(rep.contains("poisson"));
  CHECK(std::abs(rep["lp"]["lambda_bar"].get<double>()) <= 2e-2);

  CHECK(run({"example", "--rho", "1.5"}).code == 2);
  CHECK(run({"example", "--rho", "0.36787944117144233"}).code == 2);
}

TEST_CASE("the installed binary maps exit codes") {
  const std::string bin = RISKMDP_CLI_PATH;
  const auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(s);
  };
  CHECK(status(bin + " example --rho 0.8") == 0);
  CHECK(status(bin + " example --rho 1.5") == 2);
  CHECK(status(bin + " solve --model " + kExample + " --grid-guard 2") == 3);
  CHECK(status(bin + " --help") == 0);
}
