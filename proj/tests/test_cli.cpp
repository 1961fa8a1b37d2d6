#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "wolfflab/cli.hpp"

using namespace wolfflab;
namespace fs = std::filesystem;
using cli::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream o;
  std::ostringstream e;
  const int code = cli::run(args, o, e);
  return {code, o.str(), e.str()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("wolfflab_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write(const fs::path& dir, const std::string& file, const std::string& body) {
  const auto p = dir / file;
  std::ofstream(p) << body;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> split(const std::string& row) {
  std::vector<std::string> v;
  std::istringstream in(row);
  for (std::string f; std::getline(in, f, ',');) v.push_back(f);
  return v;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

const char* kManufactured = R"({
  "params": {"n": 3, "p": 2, "q": [0.5], "gamma": 1},
  "measures": {"sigma": {"type": "density", "profile": {"kind": "bump", "a": 3, "b": 1, "c": 2.25}}},
  "command": {"sigma": ["sigma"], "verify": false,
              "reference": {"profile": {"kind": "bump", "a": 1, "b": 1, "c": 0.5}, "r_min": 0.01, "r_max": 100}}
})";

}  // namespace

TEST_CASE("wolff command: Dirac rows and truncations") {
  const auto dir = scratch("wolff");
  const auto cfg = write(dir, "c.json", R"({
    "params": {"n": 3, "p": 2},
    "measures": {"d": {"type": "dirac"}},
    "command": {"measure": "d", "radii": [0.5, 1, 2], "truncations": [1.0]}})");
  const auto r = run({"wolff", "--config", cfg.string(), "--out", (dir / "o").string()});
  REQUIRE(r.code == 0);
  const auto rows = lines(slurp(dir / "o" / "wolff.csv"));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "x1,x2,x3,W,W_err,W_R=1");
  CHECK(rows[1] == "0.5,0,0,2,0,1");
  CHECK(rows[2] == "1,0,0,1,0,0");
  CHECK(rows[3] == "2,0,0,0.5,0,0");
}

TEST_CASE("wolff command: empty point list gives a header only") {
  const auto dir = scratch("wolff_empty");
  const auto cfg = write(dir, "c.json", R"({
    "params": {"n": 3, "p": 2},
    "measures": {"d": {"type": "dirac"}},
    "command": {"measure": "d", "points": []}})");
  REQUIRE(run({"wolff", "--config", cfg.string(), "--out", dir.string()}).code == 0);
  CHECK(slurp(dir / "wolff.csv") == "x1,x2,x3,W,W_err\n");
}

TEST_CASE("wolff command: off-axis points, sums and CSV densities") {
  const auto dir = scratch("wolff_sum");
  write(dir, "ball.csv", "s,f\n0,1\n0.5,1\n1,1\n");
  const auto cfg = write(dir, "c.json", R"({
    "params": {"n": 3, "p": 2},
    "measures": {
      "ball": {"type": "density", "profile": {"kind": "indicator", "radius": 1}},
      "tab": {"type": "density", "profile": {"kind": "csv", "path": "ball.csv"}},
      "both": {"type": "sum", "terms": ["tab", "delta"]},
      "delta": {"type": "dirac"}},
    "command": {"measure": "both", "points": [[0, 0, 2], [0, 2, 0]]}})");
  REQUIRE(run({"wolff", "--config", cfg.string(), "--out", dir.string()}).code == 0);
  const auto rows = lines(slurp(dir / "wolff.csv"));
  REQUIRE(rows.size() == 3);
  // W(ball) + W(δ) = 2π/3 + 1/2 at |x| = 2, in any direction
  for (int i : {1, 2}) CHECK(std::abs(std::stod(split(rows[i])[3]) - (2.0 * M_PI / 3.0 + 0.5)) < 1e-8);
}

TEST_CASE("config errors exit 2 and name the key") {
  const auto dir = scratch("errors");
  const auto bad = write(dir, "bad.json", R"({"params": {"n": 3, "p": 2}, "measures": {"d": {"type": "dirac", "weight": }}})");
  auto r = run({"wolff", "--config", bad.string(), "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("'weight'") != std::string::npos);

  const auto typo = write(dir, "typo.json", R"({"params": {"n": 3, "p": 2}, "measures": {"d": {"type": "dirac", "wieght": 1}}})");
  r = run({"wolff", "--config", typo.string(), "--out", dir.string(), "--json-errors"});
  CHECK(r.code == 2);
  const auto j = json::parse(r.err);
  CHECK(j["error"] == "ConfigError");
  CHECK(j["exit_code"] == 2);
  CHECK(j["message"].get<std::string>().find("measures.d.wieght") != std::string::npos);

  const auto loop = write(dir, "loop.json", R"({"params": {"n": 3, "p": 2}, "measures": {"a": {"type": "sum", "terms": ["a"]}}})");
  CHECK(run({"wolff", "--config", loop.string(), "--out", dir.string()}).code == 2);

  const auto missing = write(dir, "missing.json", R"({"params": {"n": 3, "p": 2}, "measures": {}, "command": {"measure": "nope"}})");
  r = run({"wolff", "--config", missing.string(), "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("command.measure") != std::string::npos);

  CHECK(run({"wolff", "--config", (dir / "absent.json").string()}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"wolff"}).code == 2);
}

TEST_CASE("params parsing: gamma modes and exponent errors") {
  CHECK(cli::parse_params(json::parse(R"({"n": 3, "p": 2, "q": [0.5], "gamma": "inf"})"), "params").mode ==
        GammaMode::GammaInfinity);
  CHECK(cli::parse_params(json::parse(R"({"n": 3, "p": 2, "q": 0.5, "gamma": 0})"), "params").mode ==
        GammaMode::GammaZero);
  const auto f = cli::parse_params(json::parse(R"({"n": 4, "p": 2.5, "q": [0.5, 1.0], "gamma": 0.7})"), "params");
  CHECK(f.mode == GammaMode::FiniteGamma);
  CHECK(f.q.size() == 2);
  CHECK_THROWS_AS(cli::parse_params(json::parse(R"({"n": 3, "p": 2, "q": [1.5]})"), "params"), Error);
  CHECK_THROWS_AS(cli::parse_params(json::parse(R"({"n": 3, "p": 2, "gamma": "big"})"), "params"), Error);
  CHECK_THROWS_AS(cli::parse_params(json::parse(R"({"n": 3, "p": 2, "gamma": 1, "mode": "GammaZero"})"), "params"),
                  Error);
}

TEST_CASE("exit code mapping") {
  CHECK(cli::exit_code(ErrorCode::ExponentError) == 2);
  CHECK(cli::exit_code(ErrorCode::ConfigError) == 2);
  CHECK(cli::exit_code(ErrorCode::UnboundedCondition) == 2);
  CHECK(cli::exit_code(ErrorCode::ZeroMeasure) == 2);
  CHECK(cli::exit_code(ErrorCode::DivergentTail) == 3);
  CHECK(cli::exit_code(ErrorCode::MonotonicityViolated) == 3);
  CHECK(cli::exit_code(ErrorCode::NotConverged) == 4);
}

TEST_CASE("solve command: manufactured solution against its reference") {
  const auto dir = scratch("solve");
  const auto cfg = write(dir, "c.json", kManufactured);
  REQUIRE(run({"solve", "--config", cfg.string(), "--out", dir.string()}).code == 0);
  const auto d = json::parse(slurp(dir / "diagnostics.json"));
  CHECK(d["status"] == "converged");
  CHECK(d["reference"]["sup_rel_error"].get<double>() < 1e-4);
  CHECK(d["solution"]["iterations"].get<int>() <= 50);
  CHECK(d["solution"]["trace"].size() == static_cast<std::size_t>(d["solution"]["iterations"].get<int>()));
  CHECK(lines(slurp(dir / "solution.csv")).front() == "r,u,du");
}

TEST_CASE("solve command: error exits") {
  const auto dir = scratch("solve_err");
  auto cfg = write(dir, "zero.json", R"({"params": {"n": 3, "p": 2, "q": [0.5]},
    "measures": {"z": {"type": "zero"}}, "command": {"sigma": ["z"], "mu": "z"}})");
  auto r = run({"solve", "--config", cfg.string(), "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("ZeroMeasure") != std::string::npos);

  cfg = write(dir, "inf.json", R"({"params": {"n": 3, "p": 2, "q": [0.5], "gamma": "inf"},
    "measures": {"s": {"type": "density", "profile": {"kind": "indicator", "radius": 1}}, "a": {"type": "dirac"}},
    "command": {"sigma": ["s"], "mu": "a"}})");
  r = run({"solve", "--config", cfg.string(), "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("UnboundedCondition") != std::string::npos);

  cfg = write(dir, "count.json", R"({"params": {"n": 3, "p": 2, "q": [0.5, 0.3]},
    "measures": {"s": {"type": "density", "profile": {"kind": "indicator", "radius": 1}}},
    "command": {"sigma": ["s"]}})");
  CHECK(run({"solve", "--config", cfg.string(), "--out", dir.string()}).code == 2);
}

TEST_CASE("solve command: no convergence exits 4 and still writes files") {
  const auto dir = scratch("solve_nc");
  std::string body = kManufactured;
  body.replace(body.find("\"measures\""), 0, "\"quad\": {\"max_iter\": 3},\n  ");
  const auto cfg = write(dir, "c.json", body);
  REQUIRE(run({"solve", "--config", cfg.string(), "--out", dir.string()}).code == 4);
  const auto d = json::parse(slurp(dir / "diagnostics.json"));
  CHECK(d["status"] == "not_converged");
  CHECK(d["solution"]["iterations"] == 3);
  CHECK(fs::exists(dir / "solution.csv"));
}

TEST_CASE("verify command: determinism across thread counts") {
  const auto dir = scratch("verify");
  const auto cfg = write(dir, "c.json", R"({
    "params": {"n": 3, "p": 2, "q": [0.5], "gamma": 1},
    "quad": {"r_min": 1e-4, "r_max": 1e4, "rel_tol": 1e-8},
    "command": {"checks": ["picone", "weighted_norm", "density_conditions"], "instances": 4}})");
  REQUIRE(run({"verify", "--config", cfg.string(), "--seed", "5", "--threads", "1", "--out", (dir / "a").string()}).code == 0);
  REQUIRE(run({"verify", "--config", cfg.string(), "--seed", "5", "--threads", "3", "--out", (dir / "b").string()}).code == 0);
  const auto a = slurp(dir / "a" / "reports.jsonl");
  CHECK(a == slurp(dir / "b" / "reports.jsonl"));
  CHECK(lines(a).size() == 12);
  const auto first = json::parse(lines(a).front());
  CHECK(first["check"] == "picone");
  CHECK(first["instance"] == 0);
  CHECK(lines(slurp(dir / "a" / "summary.csv")).size() == 5);

  REQUIRE(run({"verify", "--config", cfg.string(), "--seed", "6", "--out", (dir / "c").string()}).code == 0);
  CHECK(slurp(dir / "c" / "reports.jsonl") != a);

  // no seed anywhere
  CHECK(run({"verify", "--config", cfg.string(), "--out", (dir / "d").string()}).code == 2);
}

TEST_CASE("verify command: thread count from the environment") {
  const auto dir = scratch("verify_env");
  const auto cfg = write(dir, "c.json", R"({
    "params": {"n": 3, "p": 2, "q": [0.5], "gamma": 1},
    "command": {"checks": ["density_conditions"], "instances": 2, "seed": 3}})");
  setenv("WOLFFLAB_THREADS", "2", 1);
  CHECK(run({"verify", "--config", cfg.string(), "--out", dir.string()}).code == 0);
  CHECK(json::parse(slurp(dir / "run.json"))["threads"] == 2);
  setenv("WOLFFLAB_THREADS", "zero", 1);
  CHECK(run({"verify", "--config", cfg.string(), "--out", dir.string()}).code == 2);
  unsetenv("WOLFFLAB_THREADS");
}

TEST_CASE("verify command: corrupted exponent and failing checks") {
  const auto dir = scratch("verify_fail");
  auto cfg = write(dir, "q.json", R"({"params": {"n": 3, "p": 2, "q": [0.999999999999], "gamma": 1},
    "command": {"seed": 1}})");
  auto r = run({"verify", "--config", cfg.string(), "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("ExponentError") != std::string::npos);

  cfg = write(dir, "fail.json", R"({"params": {"n": 3, "p": 2, "q": [0.5], "gamma": 1},
    "quad": {"r_min": 1e-4, "r_max": 1e4, "rel_tol": 1e-8},
    "command": {"seed": 1, "checks": {"km_sandwich": {"instances": 1, "quad": {"max_iter": 2}}}}})");
  REQUIRE(run({"verify", "--config", cfg.string(), "--out", dir.string()}).code == 5);
  const auto rec = json::parse(lines(slurp(dir / "reports.jsonl")).front());
  CHECK(rec["passed"] == false);
  CHECK(rec["error"].get<std::string>().find("NotConverged") != std::string::npos);
  CHECK(fs::exists(dir / "summary.csv"));

  cfg = write(dir, "unknown.json", R"({"params": {"n": 3, "p": 2, "q": [0.5]}, "command": {"seed": 1, "checks": ["thm99"]}})");
  r = run({"verify", "--config", cfg.string(), "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("command.checks[0]") != std::string::npos);
}

TEST_CASE("suite and report: max-merge over runs") {
  const auto dir = scratch("report");
  const auto cfg = write(dir, "c.json", R"({
    "params": {"n": 3, "p": 2, "q": [0.5], "gamma": 1},
    "quad": {"r_min": 1e-4, "r_max": 1e4, "rel_tol": 1e-8},
    "command": {"solves": 2, "checks": ["weighted_norm"], "instances": 3}})");
  REQUIRE(run({"suite", "--config", cfg.string(), "--seed", "1", "--out", (dir / "r1").string()}).code == 0);
  REQUIRE(run({"suite", "--config", cfg.string(), "--seed", "2", "--out", (dir / "r2").string()}).code == 0);
  CHECK(lines(slurp(dir / "r1" / "solves.jsonl")).size() == 2);
  for (const auto& l : lines(slurp(dir / "r1" / "solves.jsonl"))) {
    const auto j = json::parse(l);
    CHECK(j["violations"] == 0);
    CHECK(j["converged"] == true);
  }

  double best = 0.0;
  for (const char* r : {"r1", "r2"}) {
    for (const auto& l : lines(slurp(dir / r / "reports.jsonl"))) best = std::max(best, json::parse(l)["ratio"].get<double>());
  }
  REQUIRE(run({"report", "--out", (dir / "rep").string(), (dir / "r1").string(), (dir / "r2").string()}).code == 0);
  const auto rows = lines(slurp(dir / "rep" / "constants.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].find("weighted_norm") == 0);
  const double merged = std::stod(rows[1].substr(rows[1].rfind(',') + 1));
  CHECK(merged == best);
  CHECK(fs::exists(dir / "rep" / "ratio_hist.csv"));
  CHECK(fs::exists(dir / "rep" / "solves.csv"));

  fs::create_directories(dir / "empty");
  CHECK(run({"report", "--out", (dir / "rep2").string(), (dir / "empty").string()}).code == 2);
  CHECK(run({"report", "--out", (dir / "rep2").string()}).code == 2);
}

TEST_CASE("report: a single solve run gives a residual row") {
  const auto dir = scratch("report_solve");
  const auto cfg = write(dir, "c.json", kManufactured);
  REQUIRE(run({"solve", "--config", cfg.string(), "--out", (dir / "s").string()}).code == 0);
  REQUIRE(run({"report", "--out", (dir / "rep").string(), (dir / "s").string()}).code == 0);
  const auto rows = lines(slurp(dir / "rep" / "runs.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "run,status,iterations,residual_final,riesz_mismatch,reference_sup_rel_error");
  CHECK(rows[1].find("converged") != std::string::npos);
  CHECK(lines(slurp(dir / "rep" / "profiles.csv")).size() > 10);
}
