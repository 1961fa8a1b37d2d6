// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "wolfflab/lorentz.hpp"
#include "wolfflab/radial_pde.hpp"
#include "wolfflab/solver.hpp"
#include "wolfflab/suite.hpp"
#include "wolfflab/wolff.hpp"

using namespace wolfflab;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

QuadratureConfig light() {
  QuadratureConfig q;
  q.r_min = 1e-4;
  q.r_max = 1e4;
  q.rel_tol = 1e-8;
  return q;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

struct Outcome {
  bool ok;
  std::string detail;
};

int failures = 0;

void criterion(int id, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = o.ok && (limit_s <= 0.0 || dt < limit_s);
  if (!ok) ++failures;
  std::printf("criterion %2d: %s  %s  [%.2f s", id, ok ? "PASS" : "FAIL", o.detail.c_str(), dt);
  if (limit_s > 0.0) std::printf(" / limit %.0f s", limit_s);
  std::printf("]\n");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double sup_rel_error(const RadialFunction& u, const std::function<double(double)>& ref, double lo, double hi) {
  double worst = 0.0;
  for (int i = 0; i <= 256; ++i) {
    const double r = lo * std::pow(hi / lo, i / 256.0);
    worst = std::max(worst, rel(u(r), ref(r)));
  }
  return worst;
}

// σ = 3(1 + r^2)^{-9/4} with u* = (1 + r^2)^{-1/2}, n = 3, p = 2, q = 1/2
RadonMeasure manufactured_sigma() { return RadonMeasure::density(DensityProfile::bump(3, 3.0, 1.0, 2.25)); }
double manufactured_u(double r) { return 1.0 / std::sqrt(1.0 + r * r); }

CheckOptions suite_opts(int instances, std::uint64_t seed) {
  CheckOptions o;
  o.params = ProblemParams::finite(3, 2.0, {0.5}, 1.0);
  o.quad = light();
  o.seed = seed;
  o.instances = instances;
  return o;
}

struct Tally {
  int records = 0;
  int failed = 0;
  int errors = 0;
  double max_ratio = 0;
  double max_lhs = 0;
};

Tally tally(const std::vector<CheckRecord>& recs, const std::string& name) {
  Tally t;
  for (const auto& r : recs) {
    if (!r.error.empty()) {
      ++t.errors;
      ++t.failed;
      continue;
    }
    if (r.report.name != name) continue;
    ++t.records;
    if (!r.report.passed) ++t.failed;
    if (std::isfinite(r.report.ratio)) t.max_ratio = std::max(t.max_ratio, r.report.ratio);
    t.max_lhs = std::max(t.max_lhs, std::isnan(r.report.lhs) ? INFINITY : r.report.lhs);
  }
  return t;
}

}  // namespace

int main() {
  const QuadratureConfig quad;

  criterion(1, 1.0, [&] {
    double worst = 0.0;
    for (auto [n, p] : {std::pair{3, 2.0}, {4, 3.0}, {5, 2.5}}) {
      const auto params = ProblemParams::finite(n, p, {}, 1.0);
      for (double r : {0.1, 1.0, 10.0}) {
        const double exact = (p - 1.0) / (n - p) * std::pow(r, -(n - p) / (p - 1.0));
        worst = std::max(worst, rel(wolff(RadonMeasure::dirac(n), axis_point(n, r), params, quad).value, exact));
      }
    }
    return Outcome{worst < 1e-6, fmt("Dirac Wolff potential, max rel err %.2e", worst)};
  });

  criterion(2, 1.0, [&] {
    const auto params = ProblemParams::finite(3, 2.0, {}, 1.0);
    const auto ball = RadonMeasure::density(DensityProfile::indicator(3, 1.0));
    const double e0 = rel(wolff(ball, axis_point(3, 0.0), params, quad).value, 2.0 * kPi);
    const double e2 = rel(wolff(ball, axis_point(3, 2.0), params, quad).value, 2.0 * kPi / 3.0);
    return Outcome{e0 < 1e-6 && e2 < 1e-6, fmt("unit ball, rel err %.2e at 0 and %.2e at |x|=2", e0, e2)};
  });

  criterion(3, 10.0, [&] {
    double fund = 0.0;
    for (auto [n, p] : {std::pair{3, 2.0}, {4, 3.0}, {5, 2.5}}) {
      const auto params = ProblemParams::finite(n, p, {}, 1.0);
      const auto u = solve_radial_p_laplace(RadonMeasure::dirac(n), params, quad);
      const double c = (p - 1.0) / (n - p) * std::pow(unit_sphere_area(n), -1.0 / (p - 1.0));
      for (double r : {0.1, 1.0, 10.0}) fund = std::max(fund, rel(u(r), c * std::pow(r, -(n - p) / (p - 1.0))));
    }
    double trip = 0.0;
    for (int i = 0; i < 20; ++i) {
      InstanceRng rng(2024, "roundtrip", i);
      const int n = i % 2 ? 5 : 3;
      const double p = i % 2 ? 2.5 : 2.0;
      const auto params = ProblemParams::finite(n, p, {}, 1.0);
      const auto nu = bump_measure(n, draw_bump(n, rng));
      const auto u = solve_radial_p_laplace(nu, params, quad);
      const auto masses = riesz_ball_masses(u, params);
      const auto r = u.radii();
      for (std::size_t k = 0; k < r.size(); ++k) {
        const double m = nu.centered_mass(r[k]);
        if (m > 0.0) trip = std::max(trip, rel(masses[k], m));
      }
    }
    return Outcome{fund < 1e-6 && trip < 1e-6,
                   fmt("fundamental solutions max rel err %.2e; Riesz round trip on 20 densities %.2e", fund, trip)};
  });

  criterion(4, 30.0, [&] {
    const auto params = ProblemParams::finite(3, 2.0, {0.5}, 1.0);
    const auto sol = solve_minimal({manufactured_sigma()}, RadonMeasure(3), params, quad);
    const double err = sup_rel_error(sol.u, manufactured_u, 1e-2, 1e2);
    return Outcome{sol.converged && sol.iterations_used <= 50 && err < 1e-4,
                   fmt("manufactured solution: %.0f iterations, sup rel err %.2e on [1e-2, 1e2]",
                       sol.iterations_used, err)};
  });

  criterion(5, 300.0, [&] {
    auto opts = suite_opts(100, 5);
    const auto recs = run_solve_suite(opts);
    int violations = 0;
    int unconverged = 0;
    double worst = INFINITY;
    for (const auto& r : recs) {
      violations += r.violations;
      unconverged += r.converged && r.error.empty() ? 0 : 1;
      worst = std::min(worst, r.min_step);
    }
    return Outcome{violations == 0 && unconverged == 0 && recs.size() == 100,
                   fmt("100 seeded solves: %.0f monotonicity violations, %.0f unconverged, worst step %.2e", violations,
                       unconverged, worst)};
  });

  criterion(6, 300.0, [&] {
    const auto recs = run_check("thm31", suite_opts(100, 31));
    const auto main = tally(recs, "thm31");
    const auto scaling = tally(recs, "thm31_scaling");
    const auto refine = tally(recs, "thm31_refinement");
    double refined_max = 0.0;
    for (const auto& r : recs) {
      for (const auto& [k, v] : r.extras) {
        if (k == "refined_ratio") refined_max = std::max(refined_max, v);
      }
    }
    const double drift = std::abs(refined_max / main.max_ratio - 1.0);
    const bool ok = main.records == 100 && main.failed == 0 && scaling.failed == 0 && refine.failed == 0 &&
                    main.errors == 0 && drift < 0.05;
    return Outcome{ok, fmt("100 instances: max ratio %.4g, scaling dev %.2e, constant drift under refinement %.2e",
                           main.max_ratio, scaling.max_lhs, drift) +
                           fmt(", failures %.0f", main.failed + scaling.failed + refine.failed)};
  });

  criterion(7, 120.0, [&] {
    const auto recs = run_check("quasi_triangle", suite_opts(50, 7));
    const auto main = tally(recs, "quasi_triangle");
    const auto zero = tally(recs, "quasi_triangle_zero");
    return Outcome{main.failed == 0 && zero.failed == 0 && zero.records > 0 &&
                       std::isfinite(main.max_ratio),
                   fmt("50 pairs: max constant %.4g, %.0f nu=0 cases with |lhs-rhs| max %.1e, failures %.0f",
                       main.max_ratio, zero.records, zero.max_lhs, main.failed + zero.failed)};
  });

  criterion(8, 120.0, [&] {
    const auto recs = run_check("km_sandwich", suite_opts(50, 8));
    const auto t = tally(recs, "km_sandwich");
    double lo = INFINITY;
    double hi = 0.0;
    for (const auto& r : recs) {
      for (const auto& [k, v] : r.extras) {
        if (k == "min_lower_ratio") lo = std::min(lo, v);
        if (k == "max_upper_ratio") hi = std::max(hi, v);
      }
    }
    return Outcome{t.records == 50 && t.failed == 0 && lo >= 1e-3 && hi <= 1e3,
                   fmt("50 solves x 10 samples: c(n=3,p=2) = %.4g, ratios within [%.3g, %.3g]", t.max_ratio, lo, hi)};
  });

  criterion(9, 60.0, [&] {
    const auto recs = run_check("lower_bound", suite_opts(12, 9));
    const auto t = tally(recs, "lower_bound");
    const auto d = tally(recs, "lower_bound_refinement");
    double lo = INFINITY;
    for (const auto& r : recs) {
      if (r.report.name == "lower_bound") lo = std::min(lo, r.report.lhs);
    }
    return Outcome{t.records == 12 && t.failed == 0 && d.failed == 0 && lo > 0.0,
                   fmt("12 sigma-driven solves: min ratio %.3g > 0, max drift under refinement %.2e", lo, d.max_lhs)};
  });

  criterion(10, 120.0, [&] {
    const auto recs = run_check("energy_identity", suite_opts(20, 10));
    const auto t = tally(recs, "energy_identity");
    double gap = 0.0;
    for (const auto& r : recs)
      if (r.report.name == "energy_identity") gap = std::max(gap, std::abs(r.report.lhs - r.report.rhs) / r.report.rhs);
    return Outcome{t.records == 20 && t.failed == 0 && gap < 1e-3,
                   fmt("20 two-term solves: max relative gap %.2e", gap)};
  });

  criterion(11, 60.0, [&] {
    const auto params = ProblemParams::finite(3, 2.0, {}, 1.0);
    const auto u = RadialFunction::indicator(quad.grid().nodes(), 1.0);
    const double norm = lorentz_norm(u, 6.0, 2.0, params);
    const double err = rel(norm, std::sqrt(3.0) * std::pow(4.0 * kPi / 3.0, 1.0 / 6.0));
    const auto recs = run_check("lorentz_embed", suite_opts(50, 11));
    const auto t = tally(recs, "lorentz_embedding");
    const auto s = tally(recs, "lorentz_embed_scaling");
    return Outcome{err < 1e-6 && t.records == 50 && t.failed == 0 && s.failed == 0,
                   fmt("indicator norm rel err %.2e; 50 embeddings, max ratio %.4g, scaling dev %.2e", err, t.max_ratio,
                       s.max_lhs)};
  });

  criterion(12, 60.0, [&] {
    const auto bounded =
        solve_bounded_endpoint({manufactured_sigma()}, RadonMeasure(3), ProblemParams::infinity(3, 2.0, {0.5}), quad);
    const double sup_err = std::abs(bounded.sup_norm - 1.0);
    const auto zero = intrinsic_fixed_point(manufactured_sigma(), 0.5, RadonMeasure(3),
                                            ProblemParams::zero(3, 2.0, {0.5}), quad);
    const double err = sup_rel_error(zero.u, manufactured_u, 1e-2, 1e2);
    const bool conv = zero.intrinsic && zero.intrinsic->converged;
    return Outcome{sup_err < 1e-4 && conv && err < 1e-3,
                   fmt("gamma=inf: |sup u - 1| = %.2e; gamma=0: fixed point converged=%.0f, sup rel err %.2e", sup_err,
                       conv ? 1.0 : 0.0, err)};
  });

  criterion(13, 0.0, [&] {
    const auto dir = fs::temp_directory_path() / "wolfflab_acceptance_13";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "verify.json") << R"({
  "params": {"n": 3, "p": 2, "q": [0.5], "gamma": 1},
  "quad": {"r_min": 1e-4, "r_max": 1e4, "rel_tol": 1e-8},
  "command": {"instances": 3}
})";
    auto launch = [&](int threads) {
      std::ostringstream cmd;
      cmd << '"' << WOLFFLAB_CLI << "\" verify --config \"" << (dir / "verify.json").string() << "\" --seed 42"
          << " --threads " << threads << " --out \"" << (dir / ("t" + std::to_string(threads))).string()
          << "\" > /dev/null 2>&1";
      return std::system(cmd.str().c_str());
    };
    const int s1 = launch(1);
    const int s8 = launch(8);
    auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::ostringstream s;
      s << in.rdbuf();
      return s.str();
    };
    const auto a = slurp(dir / "t1" / "reports.jsonl");
    const auto b = slurp(dir / "t8" / "reports.jsonl");
    const bool ok = s1 == s8 && !a.empty() && a == b;
    return Outcome{ok, fmt("verify --seed 42 at 1 and 8 threads: %.0f bytes each, identical=%.0f, exit status %.0f/%.0f",
                           static_cast<double>(a.size()), a == b ? 1.0 : 0.0, s1, s8)};
  });

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
