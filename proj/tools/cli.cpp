#include "wolfflab/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <regex>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "wolfflab/radial_function.hpp"
#include "wolfflab/solver.hpp"
#include "wolfflab/wolff.hpp"

namespace fs = std::filesystem;

namespace wolfflab::cli {

namespace {

using ojson = nlohmann::ordered_json;
constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, path + ": " + msg);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
      fail(join(path, k), "unknown key");
    }
  }
}

const json& need(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(join(path, key), "missing");
  return *it;
}

double num(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

bool flag(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(num(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

double opt_num(const json& obj, const char* key, const std::string& path, double dflt) {
  return obj.contains(key) ? num(obj[key], join(path, key)) : dflt;
}

// ---- measures -------------------------------------------------------------

std::pair<std::vector<double>, std::vector<double>> read_two_columns(const std::string& file, const std::string& path) {
  std::ifstream in(file);
  if (!in) fail(path, "cannot open '" + file + "'");
  std::vector<double> s;
  std::vector<double> f;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double a = 0;
    double b = 0;
    if (!(row >> a >> b)) {
      if (lineno == 1) continue;  // header
      fail(path, file + ":" + std::to_string(lineno) + ": expected two numbers");
    }
    s.push_back(a);
    f.push_back(b);
  }
  return {s, f};
}

std::string resolve(const std::string& base, const std::string& file) {
  const fs::path p(file);
  return p.is_absolute() ? file : (fs::path(base) / p).string();
}

std::shared_ptr<const DensityProfile> parse_profile(const json& j, int n, const std::string& path,
                                                    const std::string& base) {
  const std::string kind = text(need(j, "kind", path), join(path, "kind"));
  if (kind == "bump") {
    allow_keys(j, path, {"kind", "a", "b", "c"});
    return DensityProfile::bump(n, num(need(j, "a", path), join(path, "a")), num(need(j, "b", path), join(path, "b")),
                                num(need(j, "c", path), join(path, "c")));
  }
  if (kind == "indicator") {
    allow_keys(j, path, {"kind", "radius", "value"});
    return DensityProfile::indicator(n, num(need(j, "radius", path), join(path, "radius")),
                                     opt_num(j, "value", path, 1.0));
  }
  if (kind == "tabulated") {
    allow_keys(j, path, {"kind", "s", "f"});
    return DensityProfile::tabulated(n, numbers(need(j, "s", path), join(path, "s")),
                                     numbers(need(j, "f", path), join(path, "f")));
  }
  if (kind == "piecewise") {
    allow_keys(j, path, {"kind", "edges", "values"});
    return DensityProfile::piecewise_constant(n, numbers(need(j, "edges", path), join(path, "edges")),
                                              numbers(need(j, "values", path), join(path, "values")));
  }
  if (kind == "csv") {
    allow_keys(j, path, {"kind", "path"});
    auto [s, f] = read_two_columns(resolve(base, text(need(j, "path", path), join(path, "path"))), join(path, "path"));
    return DensityProfile::tabulated(n, std::move(s), std::move(f));
  }
  fail(join(path, "kind"), "unknown profile kind '" + kind + "'");
}

// Same profile kinds as plain functions of r, for reference solutions.
std::function<double(double)> parse_profile_fn(const json& j, const std::string& path, const std::string& base) {
  const std::string kind = text(need(j, "kind", path), join(path, "kind"));
  if (kind == "bump") {
    allow_keys(j, path, {"kind", "a", "b", "c"});
    const double a = num(need(j, "a", path), join(path, "a"));
    const double b = num(need(j, "b", path), join(path, "b"));
    const double c = num(need(j, "c", path), join(path, "c"));
    return [=](double r) { return a * std::pow(1.0 + (r / b) * (r / b), -c); };
  }
  std::vector<double> s;
  std::vector<double> f;
  if (kind == "tabulated") {
    allow_keys(j, path, {"kind", "s", "f"});
    s = numbers(need(j, "s", path), join(path, "s"));
    f = numbers(need(j, "f", path), join(path, "f"));
  } else if (kind == "csv") {
    allow_keys(j, path, {"kind", "path"});
    std::tie(s, f) = read_two_columns(resolve(base, text(need(j, "path", path), join(path, "path"))), join(path, "path"));
  } else {
    fail(join(path, "kind"), "reference profiles are bump, tabulated or csv");
  }
  if (s.size() < 2 || s.size() != f.size()) fail(path, "needs >= 2 matching samples");
  return [s, f](double r) {
    if (r <= s.front()) return f.front();
    if (r >= s.back()) return f.back();
    const auto k = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), r) - s.begin());
    const double t = (r - s[k - 1]) / (s[k] - s[k - 1]);
    return f[k - 1] + t * (f[k] - f[k - 1]);
  };
}

RadonMeasure parse_one(const std::string& name, const json& all, int n, const std::string& base,
                       std::map<std::string, RadonMeasure>& done, std::set<std::string>& active) {
  if (const auto it = done.find(name); it != done.end()) return it->second;
  const std::string path = "measures." + name;
  if (!all.contains(name)) fail(path, "unknown measure");
  if (!active.insert(name).second) fail(path, "measure refers to itself");
  const json& j = all[name];
  const std::string type = text(need(j, "type", path), join(path, "type"));
  RadonMeasure m(n);
  if (type == "density") {
    allow_keys(j, path, {"type", "profile", "weight"});
    m = RadonMeasure::density(parse_profile(need(j, "profile", path), n, join(path, "profile"), base),
                              opt_num(j, "weight", path, 1.0));
  } else if (type == "dirac") {
    allow_keys(j, path, {"type", "weight"});
    m = RadonMeasure::dirac(n, opt_num(j, "weight", path, 1.0));
  } else if (type == "atom") {
    allow_keys(j, path, {"type", "location", "weight"});
    auto x = numbers(need(j, "location", path), join(path, "location"));
    if (static_cast<int>(x.size()) != n) fail(join(path, "location"), "needs " + std::to_string(n) + " coordinates");
    m = RadonMeasure::atom(std::move(x), opt_num(j, "weight", path, 1.0));
  } else if (type == "shell") {
    allow_keys(j, path, {"type", "radius", "mass"});
    m = RadonMeasure::shell(n, num(need(j, "radius", path), join(path, "radius")), opt_num(j, "mass", path, 1.0));
  } else if (type == "zero") {
    allow_keys(j, path, {"type"});
  } else if (type == "sum") {
    allow_keys(j, path, {"type", "terms"});
    const json& terms = need(j, "terms", path);
    if (!terms.is_array()) fail(join(path, "terms"), "expected an array of measure names");
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const std::string t = text(terms[i], join(path, "terms") + "[" + std::to_string(i) + "]");
      if (!all.contains(t)) fail(join(path, "terms") + "[" + std::to_string(i) + "]", "unknown measure '" + t + "'");
      m = add(m, parse_one(t, all, n, base, done, active));
    }
  } else {
    fail(join(path, "type"), "unknown measure type '" + type + "'");
  }
  active.erase(name);
  done.emplace(name, m);
  return m;
}

// ---- output helpers -------------------------------------------------------

std::string g17(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ojson jnum(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot write '" + p.string() + "'");
  return f;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

struct Flags {
  std::string command;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  int threads = 0;
  bool json_errors = false;
  std::vector<std::string> inputs;
};

const RadonMeasure& measure_ref(const RunConfig& cfg, const json& name, const std::string& path) {
  const std::string key = text(name, path);
  const auto it = cfg.measures.find(key);
  if (it == cfg.measures.end()) fail(path, "unknown measure '" + key + "'");
  return it->second;
}

// ---- wolff ----------------------------------------------------------------

int cmd_wolff(const RunConfig& cfg, const Flags& fl) {
  const json& c = cfg.command;
  allow_keys(c, "command", {"measure", "points", "radii", "truncations"});
  const auto& mu = measure_ref(cfg, need(c, "measure", "command"), "command.measure");
  const int n = cfg.params.n;
  std::vector<Point> pts;
  if (c.contains("points")) {
    const json& p = c["points"];
    if (!p.is_array()) fail("command.points", "expected an array of points");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string path = "command.points[" + std::to_string(i) + "]";
      auto x = numbers(p[i], path);
      if (static_cast<int>(x.size()) != n) fail(path, "needs " + std::to_string(n) + " coordinates");
      pts.push_back(std::move(x));
    }
  }
  if (c.contains("radii")) {
    for (double r : numbers(c["radii"], "command.radii")) {
      if (!(r >= 0.0)) fail("command.radii", "radii must be >= 0");
      pts.push_back(axis_point(n, r));
    }
  }
  const auto truncs = c.contains("truncations") ? numbers(c["truncations"], "command.truncations") : std::vector<double>{};
  for (double R : truncs) {
    if (!(R > 0.0)) fail("command.truncations", "truncation radii must be > 0");
  }

  const auto w = wolff_batch(mu, pts, cfg.params, cfg.quad);
  std::vector<std::vector<double>> wr(truncs.size(), std::vector<double>(pts.size()));
  for (std::size_t k = 0; k < truncs.size(); ++k) {
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < pts.size(); ++i) {
      wr[k][i] = truncated_wolff(mu, pts[i], truncs[k], cfg.params, cfg.quad).value;
    }
  }

  auto f = open_out(fs::path(fl.out) / "wolff.csv");
  for (int d = 0; d < n; ++d) f << "x" << d + 1 << ",";
  f << "W,W_err";
  for (double R : truncs) f << ",W_R=" << g17(R);
  f << "\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (double x : pts[i]) f << g17(x) << ",";
    f << g17(w[i].value) << "," << g17(w[i].quad_error_estimate);
    for (std::size_t k = 0; k < truncs.size(); ++k) f << "," << g17(wr[k][i]);
    f << "\n";
  }
  return 0;
}

// ---- solve ----------------------------------------------------------------

ojson report_json(const InequalityReport& r) {
  ojson o;
  o["name"] = r.name;
  o["lhs"] = jnum(r.lhs);
  o["rhs"] = jnum(r.rhs);
  o["ratio"] = jnum(r.ratio);
  o["bound"] = jnum(r.bound);
  o["passed"] = r.passed;
  o["vacuous"] = r.vacuous;
  return o;
}

ojson solution_json(const Solution& s) {
  ojson o;
  o["converged"] = s.converged;
  o["iterations"] = s.iterations_used;
  o["residual_final"] = jnum(s.residual_final);
  o["riesz_mismatch"] = jnum(s.riesz_mismatch);
  o["min_step"] = jnum(s.min_step);
  o["generalized_energy"] = jnum(s.generalized_energy);
  o["lorentz"] = {{"r", jnum(s.lorentz_r)}, {"rho", jnum(s.lorentz_rho)}, {"norm", jnum(s.lorentz_norm)}};
  o["lower_bound_ratio"] = jnum(s.lower_bound_ratio);
  o["center_value"] = jnum(s.u.center_value());
  o["bounded"] = s.bounded;
  o["sup_norm"] = jnum(s.sup_norm);
  o["sup_recursion_constant"] = jnum(s.sup_recursion_constant);
  if (s.intrinsic) {
    o["intrinsic"] = {{"converged", s.intrinsic->converged},
                      {"status", s.intrinsic->converged ? "converged" : "hypothesis not met"},
                      {"iterations", s.intrinsic->iterations},
                      {"residual", jnum(s.intrinsic->residual)},
                      {"lq_mass", jnum(s.intrinsic->lq_mass)}};
  }
  ojson trace = ojson::array();
  for (const auto& st : s.trace) {
    ojson t;
    t["j"] = st.j;
    t["residual"] = jnum(st.residual);
    t["riesz_mismatch"] = jnum(st.riesz_mismatch);
    t["min_step"] = jnum(st.min_step);
    t["sup_norm"] = jnum(st.sup_norm);
    ojson e = ojson::array();
    for (double v : st.sigma_energies) e.push_back(jnum(v));
    t["sigma_energies"] = e;
    trace.push_back(t);
  }
  o["trace"] = trace;
  return o;
}

void write_profile(const Solution& s, const fs::path& p) {
  auto f = open_out(p);
  f.precision(17);
  s.write_csv(f);
}

double reference_error(const RadialFunction& u, const std::function<double(double)>& ref, double lo, double hi) {
  double worst = 0.0;
  const int steps = static_cast<int>(std::ceil(64.0 * std::log10(hi / lo)));
  for (int i = 0; i <= steps; ++i) {
    const double r = lo * std::pow(hi / lo, static_cast<double>(i) / steps);
    worst = std::max(worst, std::abs(u(r) / ref(r) - 1.0));
  }
  return worst;
}

StartFrom parse_start(const json& j) {
  const std::string s = text(j, "command.start");
  if (s == "auto") return StartFrom::Auto;
  if (s == "zero") return StartFrom::Zero;
  if (s == "subsolution") return StartFrom::Subsolution;
  fail("command.start", "expected auto, zero or subsolution");
}

int cmd_solve(const RunConfig& cfg, const Flags& fl) {
  const json& c = cfg.command;
  allow_keys(c, "command", {"sigma", "mu", "k_max", "start", "c_init", "wolff_diagnostics", "verify", "reference"});
  const auto& params = cfg.params;
  std::vector<RadonMeasure> sigma;
  if (c.contains("sigma")) {
    const json& s = c["sigma"];
    if (s.is_string()) {
      sigma.push_back(measure_ref(cfg, s, "command.sigma"));
    } else if (s.is_array()) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        sigma.push_back(measure_ref(cfg, s[i], "command.sigma[" + std::to_string(i) + "]"));
      }
    } else {
      fail("command.sigma", "expected a measure name or a list of names");
    }
  }
  if (sigma.size() != params.q.size()) {
    fail("command.sigma", std::to_string(sigma.size()) + " measures for " + std::to_string(params.q.size()) +
                              " growth exponents in params.q");
  }
  const RadonMeasure mu = c.contains("mu") ? measure_ref(cfg, c["mu"], "command.mu") : RadonMeasure(params.n);
  SolveOptions opts;
  if (c.contains("start")) opts.start = parse_start(c["start"]);
  opts.c_init = opt_num(c, "c_init", "command", 1.0);
  if (c.contains("wolff_diagnostics")) opts.wolff_diagnostics = flag(c["wolff_diagnostics"], "command.wolff_diagnostics");
  const bool verify = c.contains("verify") ? flag(c["verify"], "command.verify") : true;
  const int k_max = c.contains("k_max") ? integer(c["k_max"], "command.k_max") : 0;
  if (c.contains("k_max") && k_max < 1) fail("command.k_max", "must be >= 1");
  std::function<double(double)> ref;
  double ref_lo = 1e-2;
  double ref_hi = 1e2;
  if (c.contains("reference")) {
    const json& r = c["reference"];
    allow_keys(r, "command.reference", {"profile", "r_min", "r_max"});
    ref = parse_profile_fn(need(r, "profile", "command.reference"), "command.reference.profile", cfg.base_dir);
    ref_lo = opt_num(r, "r_min", "command.reference", ref_lo);
    ref_hi = opt_num(r, "r_max", "command.reference", ref_hi);
    if (!(ref_lo > 0.0 && ref_hi > ref_lo)) fail("command.reference", "needs 0 < r_min < r_max");
  }

  fs::create_directories(fl.out);
  ojson diag;
  diag["command"] = "solve";
  diag["n"] = params.n;
  diag["p"] = params.p;
  diag["q"] = params.q;
  diag["mode"] = to_string(params.mode);
  diag["gamma"] = jnum(params.gamma);

  int code = 0;
  Solution sol;
  std::vector<Solution> levels;
  try {
    if (k_max > 0) {
      if (params.mode != GammaMode::FiniteGamma) {
        throw Error(ErrorCode::ModeMismatch, "exhaustion runs the finite-gamma minimal solver");
      }
      levels = solve_with_exhaustion(sigma, mu, params, cfg.quad, k_max, opts);
      sol = levels.back();
    } else if (params.mode == GammaMode::GammaInfinity) {
      sol = solve_bounded_endpoint(sigma, mu, params, cfg.quad, opts);
    } else if (params.mode == GammaMode::GammaZero) {
      if (sigma.size() != 1) fail("command.sigma", "the gamma = 0 solver takes exactly one sigma");
      sol = intrinsic_fixed_point(sigma[0], params.q[0], mu, params, cfg.quad);
    } else {
      sol = solve_minimal(sigma, mu, params, cfg.quad, opts);
    }
    diag["status"] = "converged";
  } catch (const NotConvergedError& e) {
    sol = e.partial();
    diag["status"] = "not_converged";
    diag["message"] = e.what();
    code = 4;
  }

  diag["solution"] = solution_json(sol);
  if (!levels.empty()) {
    ojson lv = ojson::array();
    for (std::size_t k = 0; k < levels.size(); ++k) {
      lv.push_back({{"k", k + 1},
                    {"center_value", jnum(levels[k].u.center_value())},
                    {"iterations", levels[k].iterations_used},
                    {"converged", levels[k].converged}});
      write_profile(levels[k], fs::path(fl.out) / ("solution_k" + std::to_string(k + 1) + ".csv"));
    }
    diag["exhaustion"] = lv;
  }
  if (ref) {
    diag["reference"] = {{"r_min", ref_lo}, {"r_max", ref_hi}, {"sup_rel_error", jnum(reference_error(sol.u, ref, ref_lo, ref_hi))}};
  }
  if (verify && code == 0 && !sol.u.empty()) {
    ojson reps = ojson::array();
    for (const auto& r : verify_solution(sol, sigma, mu, params, cfg.quad, fl.seed.value_or(1))) {
      reps.push_back(report_json(r));
    }
    diag["reports"] = reps;
  }
  write_profile(sol, fs::path(fl.out) / "solution.csv");
  open_out(fs::path(fl.out) / "diagnostics.json") << diag.dump(2) << "\n";
  return code;
}

// ---- verify / suite -------------------------------------------------------

struct CheckPlan {
  std::string name;
  CheckOptions opts;
};

std::vector<CheckPlan> plan_checks(const RunConfig& cfg, const json& c, const std::string& path, std::uint64_t seed,
                                   const ProblemParams& params, bool all_by_default) {
  const int instances = c.contains("instances") ? integer(c["instances"], join(path, "instances")) : 100;
  const bool randomize = c.contains("randomize") ? flag(c["randomize"], join(path, "randomize")) : true;
  auto base = [&](const std::string& name) {
    CheckPlan p{name, {}};
    p.opts.params = params;
    p.opts.quad = cfg.quad;
    p.opts.seed = seed;
    p.opts.instances = instances;
    p.opts.randomize = randomize;
    return p;
  };
  std::vector<CheckPlan> plans;
  if (!c.contains("checks")) {
    if (all_by_default) {
      for (const auto& n : check_names()) plans.push_back(base(n));
    }
    return plans;
  }
  const json& ch = c["checks"];
  const std::string cpath = join(path, "checks");
  if (ch.is_array()) {
    for (std::size_t i = 0; i < ch.size(); ++i) {
      const std::string n = text(ch[i], cpath + "[" + std::to_string(i) + "]");
      if (!is_check_name(n)) fail(cpath + "[" + std::to_string(i) + "]", "unknown check '" + n + "'");
      plans.push_back(base(n));
    }
  } else if (ch.is_object()) {
    // object order is alphabetical in the parsed document; run in the canonical order instead
    for (const auto& [n, o] : ch.items()) {
      if (!is_check_name(n)) fail(join(cpath, n), "unknown check");
    }
    for (const auto& n : check_names()) {
      if (!ch.contains(n)) continue;
      const json& o = ch[n];
      const std::string opath = join(cpath, n);
      allow_keys(o, opath, {"instances", "randomize", "quad"});
      auto p = base(n);
      if (o.contains("instances")) p.opts.instances = integer(o["instances"], join(opath, "instances"));
      if (o.contains("randomize")) p.opts.randomize = flag(o["randomize"], join(opath, "randomize"));
      if (o.contains("quad")) p.opts.quad = parse_quad(o["quad"], join(opath, "quad"), cfg.quad);
      plans.push_back(p);
    }
  } else {
    fail(cpath, "expected a list of check names or an object of per-check options");
  }
  for (const auto& p : plans) {
    if (p.opts.instances < 0) fail(join(path, "instances"), "must be >= 0");
  }
  return plans;
}

std::uint64_t require_seed(const json& c, const Flags& fl) {
  if (fl.seed) return *fl.seed;
  if (c.contains("seed")) {
    if (!c["seed"].is_number_unsigned()) fail("command.seed", "expected a nonnegative integer");
    return c["seed"].get<std::uint64_t>();
  }
  fail("command.seed", "randomized runs need a seed (config or --seed)");
}

struct SummaryRow {
  int records = 0;
  int passed = 0;
  int failed = 0;
  int vacuous = 0;
  int errors = 0;
  double max_ratio = -kInf;
  double min_ratio = kInf;
};

using SummaryKey = std::tuple<std::string, std::string, std::string>;  // check, name, cell

void tally(std::vector<std::pair<SummaryKey, SummaryRow>>& rows, const CheckRecord& r) {
  const SummaryKey key{r.check, r.report.name, r.cell};
  auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& e) { return e.first == key; });
  if (it == rows.end()) {
    rows.push_back({key, {}});
    it = rows.end() - 1;
  }
  auto& s = it->second;
  ++s.records;
  if (!r.error.empty()) ++s.errors;
  if (r.report.vacuous) ++s.vacuous;
  (r.report.passed ? s.passed : s.failed) += 1;
  if (std::isfinite(r.report.ratio)) {
    s.max_ratio = std::max(s.max_ratio, r.report.ratio);
    s.min_ratio = std::min(s.min_ratio, r.report.ratio);
  }
}

void write_summary(const fs::path& p, const std::vector<std::pair<SummaryKey, SummaryRow>>& rows) {
  auto f = open_out(p);
  f << "check,name,cell,records,passed,failed,vacuous,errors,min_ratio,max_ratio\n";
  for (const auto& [k, s] : rows) {
    f << std::get<0>(k) << "," << csv_field(std::get<1>(k)) << "," << csv_field(std::get<2>(k)) << "," << s.records
      << "," << s.passed << "," << s.failed << "," << s.vacuous << "," << s.errors << ","
      << (s.records && std::isfinite(s.min_ratio) ? g17(s.min_ratio) : "") << ","
      << (s.records && std::isfinite(s.max_ratio) ? g17(s.max_ratio) : "") << "\n";
  }
}

// Runs the plans, appends JSON lines, returns false when any record failed.
bool run_plans(const std::vector<CheckPlan>& plans, std::ostream& jsonl,
               std::vector<std::pair<SummaryKey, SummaryRow>>& rows, ojson& timing) {
  bool ok = true;
  for (const auto& p : plans) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto recs = run_check(p.name, p.opts);
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    timing.push_back({{"check", p.name}, {"instances", p.opts.instances}, {"seconds", dt}});
    for (const auto& r : recs) {
      jsonl << to_jsonl(r) << "\n";
      tally(rows, r);
      ok = ok && r.report.passed && r.error.empty();
    }
  }
  return ok;
}

int cmd_verify(const RunConfig& cfg, const Flags& fl) {
  const json& c = cfg.command;
  allow_keys(c, "command", {"checks", "instances", "randomize", "seed"});
  const auto seed = require_seed(c, fl);
  const auto plans = plan_checks(cfg, c, "command", seed, cfg.params, true);
  fs::create_directories(fl.out);
  auto jsonl = open_out(fs::path(fl.out) / "reports.jsonl");
  std::vector<std::pair<SummaryKey, SummaryRow>> rows;
  ojson timing = ojson::array();
  const bool ok = run_plans(plans, jsonl, rows, timing);
  write_summary(fs::path(fl.out) / "summary.csv", rows);
  ojson run;
  run["command"] = "verify";
  run["seed"] = seed;
  run["threads"] = omp_get_max_threads();
  run["timing"] = timing;
  run["passed"] = ok;
  open_out(fs::path(fl.out) / "run.json") << run.dump(2) << "\n";
  return ok ? 0 : 5;
}

std::string cell_name(const ProblemParams& p, bool randomize) {
  std::ostringstream o;
  o << "n=" << p.n << " p=" << p.p;
  if (randomize || p.mode != GammaMode::FiniteGamma) {
    o << " gamma=1";
  } else {
    o << " gamma=" << p.gamma;
  }
  o << " q=";
  if (randomize) o << "*";
  for (std::size_t i = 0; !randomize && i < p.q.size(); ++i) o << (i ? ";" : "") << p.q[i];
  return o.str();
}

int cmd_suite(const RunConfig& cfg, const Flags& fl) {
  const json& c = cfg.command;
  allow_keys(c, "command", {"cells", "solves", "checks", "instances", "randomize", "seed"});
  const auto seed = require_seed(c, fl);
  std::vector<ProblemParams> cells;
  if (c.contains("cells")) {
    const json& cl = c["cells"];
    if (!cl.is_array() || cl.empty()) fail("command.cells", "expected a nonempty array of params objects");
    for (std::size_t i = 0; i < cl.size(); ++i) cells.push_back(parse_params(cl[i], "command.cells[" + std::to_string(i) + "]"));
  } else {
    cells.push_back(cfg.params);
  }
  const int solves = c.contains("solves") ? integer(c["solves"], "command.solves") : 100;
  if (solves < 0) fail("command.solves", "must be >= 0");
  const bool randomize = c.contains("randomize") ? flag(c["randomize"], "command.randomize") : true;

  fs::create_directories(fl.out);
  auto solves_out = open_out(fs::path(fl.out) / "solves.jsonl");
  auto reports_out = open_out(fs::path(fl.out) / "reports.jsonl");
  std::vector<std::pair<SummaryKey, SummaryRow>> rows;
  ojson timing = ojson::array();
  bool ok = true;
  auto sf = open_out(fs::path(fl.out) / "solves_summary.csv");
  sf << "cell,solves,converged,violations,errors,max_iterations,worst_min_step\n";
  for (const auto& cell : cells) {
    CheckOptions o;
    o.params = cell;
    o.quad = cfg.quad;
    o.seed = seed;
    o.instances = solves;
    o.randomize = randomize;
    const std::string name = cell_name(cell, randomize);
    const auto t0 = std::chrono::steady_clock::now();
    const auto recs = run_solve_suite(o);
    timing.push_back({{"cell", name},
                      {"solves", solves},
                      {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}});
    int conv = 0;
    int viol = 0;
    int errs = 0;
    int max_it = 0;
    double worst = kInf;
    for (const auto& r : recs) {
      solves_out << to_jsonl(r, name) << "\n";
      conv += r.converged ? 1 : 0;
      viol += r.violations;
      errs += r.error.empty() ? 0 : 1;
      max_it = std::max(max_it, r.iterations);
      worst = std::min(worst, r.min_step);
      ok = ok && r.converged && r.violations == 0 && r.error.empty();
    }
    sf << csv_field(name) << "," << recs.size() << "," << conv << "," << viol << "," << errs << "," << max_it << ","
       << (recs.empty() ? "" : g17(worst)) << "\n";
    ok = run_plans(plan_checks(cfg, c, "command", seed, cell, false), reports_out, rows, timing) && ok;
  }
  write_summary(fs::path(fl.out) / "summary.csv", rows);
  ojson run;
  run["command"] = "suite";
  run["seed"] = seed;
  run["threads"] = omp_get_max_threads();
  run["timing"] = timing;
  run["passed"] = ok;
  open_out(fs::path(fl.out) / "run.json") << run.dump(2) << "\n";
  return ok ? 0 : 5;
}

// ---- report ---------------------------------------------------------------

std::vector<json> read_jsonl(const fs::path& p) {
  std::vector<json> v;
  std::ifstream in(p);
  std::string line;
  int k = 0;
  while (std::getline(in, line)) {
    ++k;
    if (line.empty()) continue;
    try {
      v.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ConfigError, p.string() + ":" + std::to_string(k) + ": " + e.what());
    }
  }
  return v;
}

double jd(const json& j, const char* key) {
  const auto it = j.find(key);
  return it != j.end() && it->is_number() ? it->get<double>() : std::numeric_limits<double>::quiet_NaN();
}

std::string js(const json& j, const char* key) {
  const auto it = j.find(key);
  return it != j.end() && it->is_string() ? it->get<std::string>() : std::string();
}

int cmd_report(const RunConfig* cfg, const Flags& fl) {
  std::vector<std::string> inputs = fl.inputs;
  if (cfg) {
    const json& c = cfg->command;
    allow_keys(c, "command", {"inputs"});
    if (c.contains("inputs")) {
      const json& in = c["inputs"];
      if (!in.is_array()) fail("command.inputs", "expected an array of run directories");
      for (std::size_t i = 0; i < in.size(); ++i) {
        inputs.push_back(resolve(cfg->base_dir, text(in[i], "command.inputs[" + std::to_string(i) + "]")));
      }
    }
  }
  if (inputs.empty()) throw Error(ErrorCode::ConfigError, "report: no input run directories");

  struct Cell {
    int records = 0;
    int failed = 0;
    int runs = 0;
    double max_ratio = -kInf;
  };
  std::map<std::tuple<std::string, std::string, std::string>, Cell> cells;
  std::map<std::string, std::vector<double>> ratios;
  struct SolveCell {
    int solves = 0;
    int violations = 0;
    int max_iterations = 0;
  };
  std::map<std::string, SolveCell> solve_cells;
  ojson solve_runs = ojson::array();
  std::ostringstream profiles;

  for (const auto& dir : inputs) {
    const fs::path d(dir);
    if (!fs::is_directory(d)) throw Error(ErrorCode::ConfigError, "report: missing input directory '" + dir + "'");
    bool any = false;
    if (fs::exists(d / "reports.jsonl")) {
      any = true;
      std::set<std::tuple<std::string, std::string, std::string>> seen;
      for (const auto& r : read_jsonl(d / "reports.jsonl")) {
        const auto key = std::make_tuple(js(r, "name"), js(r, "cell"), js(r, "check"));
        auto& c = cells[key];
        ++c.records;
        if (!(r.contains("passed") && r["passed"].is_boolean() && r["passed"].get<bool>())) ++c.failed;
        const double ratio = jd(r, "ratio");
        if (std::isfinite(ratio)) {
          c.max_ratio = std::max(c.max_ratio, ratio);
          ratios[js(r, "name")].push_back(ratio);
        }
        if (seen.insert(key).second) ++c.runs;
      }
    }
    if (fs::exists(d / "solves.jsonl")) {
      any = true;
      for (const auto& r : read_jsonl(d / "solves.jsonl")) {
        auto& s = solve_cells[js(r, "cell")];
        ++s.solves;
        s.violations += static_cast<int>(jd(r, "violations"));
        s.max_iterations = std::max(s.max_iterations, static_cast<int>(jd(r, "iterations")));
      }
    }
    if (fs::exists(d / "diagnostics.json")) {
      any = true;
      std::ifstream in(d / "diagnostics.json");
      json dj;
      try {
        dj = json::parse(in);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, (d / "diagnostics.json").string() + ": " + e.what());
      }
      const json sol = dj.value("solution", json::object());
      ojson row;
      row["run"] = dir;
      row["status"] = dj.value("status", "");
      row["iterations"] = sol.value("iterations", 0);
      row["residual_final"] = jnum(jd(sol, "residual_final"));
      row["riesz_mismatch"] = jnum(jd(sol, "riesz_mismatch"));
      row["reference_sup_rel_error"] =
          dj.contains("reference") ? jnum(jd(dj["reference"], "sup_rel_error")) : ojson(nullptr);
      solve_runs.push_back(row);
      if (fs::exists(d / "solution.csv")) {
        std::ifstream pin(d / "solution.csv");
        std::string line;
        std::getline(pin, line);  // header
        while (std::getline(pin, line)) {
          if (!line.empty()) profiles << csv_field(dir) << "," << line << "\n";
        }
      }
    }
    if (!any) throw Error(ErrorCode::ConfigError, "report: no run outputs in '" + dir + "'");
  }

  fs::create_directories(fl.out);
  auto cf = open_out(fs::path(fl.out) / "constants.csv");
  auto md = open_out(fs::path(fl.out) / "constants.md");
  cf << "name,cell,check,runs,records,failed,max_ratio\n";
  md << "| name | cell | records | failed | max ratio |\n|---|---|---|---|---|\n";
  for (const auto& [k, c] : cells) {
    const auto& [name, cell, check] = k;
    const std::string mr = std::isfinite(c.max_ratio) ? g17(c.max_ratio) : "";
    cf << csv_field(name) << "," << csv_field(cell) << "," << check << "," << c.runs << "," << c.records << ","
       << c.failed << "," << mr << "\n";
    md << "| " << name << " | " << cell << " | " << c.records << " | " << c.failed << " | " << mr << " |\n";
  }
  if (!solve_cells.empty()) {
    auto sf = open_out(fs::path(fl.out) / "solves.csv");
    sf << "cell,solves,violations,max_iterations\n";
    md << "\n| solve cell | solves | violations | max iterations |\n|---|---|---|---|\n";
    for (const auto& [cell, s] : solve_cells) {
      sf << csv_field(cell) << "," << s.solves << "," << s.violations << "," << s.max_iterations << "\n";
      md << "| " << cell << " | " << s.solves << " | " << s.violations << " | " << s.max_iterations << " |\n";
    }
  }
  if (!solve_runs.empty()) {
    auto rf = open_out(fs::path(fl.out) / "runs.csv");
    rf << "run,status,iterations,residual_final,riesz_mismatch,reference_sup_rel_error\n";
    md << "\n| run | status | iterations | residual | Riesz mismatch | ref. error |\n|---|---|---|---|---|---|\n";
    for (const auto& r : solve_runs) {
      auto cellv = [](const ojson& v) { return v.is_number() ? g17(v.get<double>()) : std::string(); };
      const std::string run = r["run"].get<std::string>();
      rf << csv_field(run) << "," << r["status"].get<std::string>() << "," << r["iterations"].get<int>() << ","
         << cellv(r["residual_final"]) << "," << cellv(r["riesz_mismatch"]) << ","
         << cellv(r["reference_sup_rel_error"]) << "\n";
      md << "| " << run << " | " << r["status"].get<std::string>() << " | " << r["iterations"].get<int>() << " | "
         << cellv(r["residual_final"]) << " | " << cellv(r["riesz_mismatch"]) << " | "
         << cellv(r["reference_sup_rel_error"]) << " |\n";
    }
    auto pf = open_out(fs::path(fl.out) / "profiles.csv");
    pf << "run,r,u,du\n" << profiles.str();
  }
  // log10 ratio histogram, quarter-decade bins
  auto hf = open_out(fs::path(fl.out) / "ratio_hist.csv");
  hf << "name,log10_lo,log10_hi,count\n";
  for (const auto& [name, v] : ratios) {
    std::map<int, int> bins;
    for (double r : v) {
      if (r > 0.0) ++bins[static_cast<int>(std::floor(4.0 * std::log10(r)))];
    }
    for (const auto& [b, cnt] : bins) {
      hf << csv_field(name) << "," << g17(b / 4.0) << "," << g17((b + 1) / 4.0) << "," << cnt << "\n";
    }
  }
  return 0;
}

// ---- errors ---------------------------------------------------------------

void report_error(std::ostream& err, bool as_json, const std::string& code, const std::string& msg, int exit) {
  if (as_json) {
    ojson o;
    o["error"] = code;
    o["message"] = msg;
    o["exit_code"] = exit;
    err << o.dump() << "\n";
  } else {
    err << "wolfflab: " << msg << "\n";
  }
}

int set_threads(int requested) {
  int t = requested;
  if (t <= 0) {
    if (const char* env = std::getenv("WOLFFLAB_THREADS"); env && *env) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (*end != '\0' || v <= 0) throw Error(ErrorCode::ConfigError, "WOLFFLAB_THREADS must be a positive integer");
      t = static_cast<int>(v);
    }
  }
  if (t > 0) omp_set_num_threads(t);
  return t;
}

}  // namespace

json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::string head = text.substr(0, std::min(e.byte, text.size()));
    static const std::regex key_re("\"([^\"\\\\]*)\"\\s*:");
    std::string key;
    for (std::sregex_iterator it(head.begin(), head.end(), key_re), end; it != end; ++it) key = (*it)[1];
    std::ostringstream msg;
    msg << "malformed JSON";
    if (!key.empty()) msg << " at or after key '" << key << "'";
    msg << " (byte " << e.byte << "): " << e.what();
    throw Error(ErrorCode::ConfigError, msg.str());
  }
}

ProblemParams parse_params(const json& j, const std::string& path) {
  allow_keys(j, path, {"n", "p", "q", "gamma", "mode"});
  ProblemParams p;
  p.n = integer(need(j, "n", path), join(path, "n"));
  p.p = num(need(j, "p", path), join(path, "p"));
  if (j.contains("q")) p.q = numbers(j["q"], join(path, "q"));
  const json& g = j.contains("gamma") ? j["gamma"] : json(1.0);
  if (g.is_string()) {
    const std::string s = g.get<std::string>();
    if (s != "inf" && s != "infinity") fail(join(path, "gamma"), "expected a number or \"inf\"");
    p.gamma = kInf;
    p.mode = GammaMode::GammaInfinity;
  } else {
    p.gamma = num(g, join(path, "gamma"));
    p.mode = p.gamma == 0.0 ? GammaMode::GammaZero : GammaMode::FiniteGamma;
  }
  if (j.contains("mode")) {
    const std::string m = text(j["mode"], join(path, "mode"));
    if (m != to_string(p.mode)) {
      throw Error(ErrorCode::ModeMismatch, join(path, "mode") + ": '" + m + "' does not match gamma");
    }
  }
  return validate(std::move(p));
}

QuadratureConfig parse_quad(const json& j, const std::string& path, QuadratureConfig q) {
  allow_keys(j, path, {"r_min", "r_max", "points_per_decade", "rel_tol", "max_iter", "conv_tol"});
  q.r_min = opt_num(j, "r_min", path, q.r_min);
  q.r_max = opt_num(j, "r_max", path, q.r_max);
  if (j.contains("points_per_decade")) q.points_per_decade = integer(j["points_per_decade"], join(path, "points_per_decade"));
  q.rel_tol = opt_num(j, "rel_tol", path, q.rel_tol);
  if (j.contains("max_iter")) q.max_iter = integer(j["max_iter"], join(path, "max_iter"));
  q.conv_tol = opt_num(j, "conv_tol", path, q.conv_tol);
  q.validate();
  return q;
}

RunConfig parse_config(const json& doc, const std::string& base_dir) {
  allow_keys(doc, "config", {"params", "quad", "measures", "command"});
  RunConfig cfg;
  cfg.base_dir = base_dir;
  cfg.params = parse_params(need(doc, "params", "config"), "params");
  if (doc.contains("quad")) cfg.quad = parse_quad(doc["quad"], "quad");
  if (doc.contains("measures")) {
    const json& m = doc["measures"];
    if (!m.is_object()) fail("measures", "expected an object of named measures");
    std::set<std::string> active;
    for (const auto& [name, _] : m.items()) parse_one(name, m, cfg.params.n, base_dir, cfg.measures, active);
  }
  if (doc.contains("command")) {
    cfg.command = doc["command"];
    if (!cfg.command.is_object()) fail("command", "expected an object");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  const auto base = fs::path(path).parent_path();
  return parse_config(parse_json_text(s.str()), base.empty() ? "." : base.string());
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotConverged:
      return 4;
    case ErrorCode::DivergentTail:
    case ErrorCode::NonMonotoneProfile:
    case ErrorCode::InfiniteEnergy:
    case ErrorCode::SubsolutionSearchFailed:
    case ErrorCode::MonotonicityViolated:
      return 3;
    default:
      return 2;
  }
}

std::string to_jsonl(const CheckRecord& r) {
  ojson o;
  o["check"] = r.check;
  o["instance"] = r.instance;
  o["name"] = r.report.name;
  o["cell"] = r.cell;
  o["gamma"] = jnum(r.gamma);
  o["q"] = jnum(r.q);
  o["lhs"] = jnum(r.report.lhs);
  o["rhs"] = jnum(r.report.rhs);
  o["ratio"] = jnum(r.report.ratio);
  o["empirical_constant"] = jnum(r.report.empirical_constant);
  o["bound"] = jnum(r.report.bound);
  o["passed"] = r.report.passed;
  o["vacuous"] = r.report.vacuous;
  o["data"] = r.report.instance;
  for (const auto& [k, v] : r.extras) o[k] = jnum(v);
  if (!r.error.empty()) o["error"] = r.error;
  return o.dump();
}

std::string to_jsonl(const SolveRecord& r, const std::string& cell) {
  ojson o;
  o["cell"] = cell;
  o["instance"] = r.instance;
  o["data"] = r.data;
  o["q"] = jnum(r.q);
  o["converged"] = r.converged;
  o["iterations"] = r.iterations;
  o["min_step"] = jnum(r.min_step);
  o["violations"] = r.violations;
  o["residual"] = jnum(r.residual);
  o["riesz_mismatch"] = jnum(r.riesz_mismatch);
  o["center_value"] = jnum(r.sup_norm);
  if (!r.error.empty()) o["error"] = r.error;
  return o.dump();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags fl;
  fl.json_errors = std::find(args.begin(), args.end(), "--json-errors") != args.end();
  CLI::App app{"Wolff potentials and sub-natural growth p-Laplace solutions"};
  app.add_option("command", fl.command, "wolff | solve | verify | suite | report")
      ->required()
      ->check(CLI::IsMember({"wolff", "solve", "verify", "suite", "report"}));
  app.add_option("inputs", fl.inputs, "run directories (report)");
  app.add_option("--config", fl.config, "JSON configuration");
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "seed for randomized suites");
  app.add_option("--out", fl.out, "output directory")->capture_default_str();
  app.add_option("--threads", fl.threads, "worker threads (default: WOLFFLAB_THREADS)");
  app.add_flag("--json-errors", fl.json_errors, "errors as JSON on stderr");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    report_error(err, fl.json_errors, "ConfigError", e.what(), 2);
    return 2;
  }
  if (seed_opt->count()) fl.seed = seed;

  try {
    set_threads(fl.threads);
    if (fl.command == "report") {
      if (fl.config.empty()) return cmd_report(nullptr, fl);
      const auto cfg = load_config(fl.config);
      return cmd_report(&cfg, fl);
    }
    if (!fl.inputs.empty()) throw Error(ErrorCode::ConfigError, "unexpected positional arguments");
    if (fl.config.empty()) throw Error(ErrorCode::ConfigError, "--config is required for " + fl.command);
    const auto cfg = load_config(fl.config);
    fs::create_directories(fl.out);
    if (fl.command == "wolff") return cmd_wolff(cfg, fl);
    if (fl.command == "solve") return cmd_solve(cfg, fl);
    if (fl.command == "verify") return cmd_verify(cfg, fl);
    return cmd_suite(cfg, fl);
  } catch (const Error& e) {
    const int code = exit_code(e.code());
    report_error(err, fl.json_errors, to_string(e.code()), e.what(), code);
    return code;
  } catch (const json::exception& e) {
    report_error(err, fl.json_errors, "ConfigError", e.what(), 2);
    return 2;
  } catch (const fs::filesystem_error& e) {
    report_error(err, fl.json_errors, "ConfigError", e.what(), 2);
    return 2;
  } catch (const std::exception& e) {
    report_error(err, fl.json_errors, "NumericalFailure", e.what(), 3);
    return 3;
  }
}

}  // namespace wolfflab::cli
