#include "doctest.h"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <random>

#include "wolfflab/errors.hpp"
#include "wolfflab/radial_pde.hpp"
#include "wolfflab/solver.hpp"
#include "wolfflab/wolff.hpp"

using namespace wolfflab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// -Δu* = σ u*^{1/2} for u* = (1+r²)^{-1/2} in R^3
RadonMeasure manufactured_sigma() {
  auto f = [](double r) { return 3.0 * std::pow(1.0 + r * r, -2.25); };
  return RadonMeasure::density(std::make_shared<const DensityProfile>(3, f, kInf, std::vector<double>{}, "manuf"));
}
double ustar(double r) { return 1.0 / std::sqrt(1.0 + r * r); }

double sup_rel_err(const RadialFunction& u, double scale, double lo, double hi) {
  double err = 0.0;
  for (double r : u.radii()) {
    if (r >= lo && r <= hi) err = std::max(err, std::abs(u(r) / scale - ustar(r)) / ustar(r));
  }
  return err;
}

RadonMeasure unit_ball(double value = 1.0) { return RadonMeasure::density(DensityProfile::indicator(3, 1.0, value)); }

QuadratureConfig light() {
  QuadratureConfig q;
  q.r_min = 1e-3;
  q.r_max = 1e3;
  q.points_per_decade = 32;
  return q;
}

// ∫_{B(0,r)} 1_{B(0,1)} g(|x|) dx in R^3, cellwise Gauss on the given radii
double ball_weighted_mass(const std::function<double(double)>& g, double r, std::span<const double> nodes) {
  using G = boost::math::quadrature::gauss<double, 20>;
  const double top = std::min(r, 1.0);
  double total = 0.0;
  double a = 0.0;
  auto h = [&](double s) { return 4.0 * M_PI * s * s * g(s); };
  for (double b : nodes) {
    if (b <= a) continue;
    const double e = std::min(b, top);
    if (e > a) total += G::integrate(h, a, e);
    a = e;
    if (a >= top) break;
  }
  if (a < top) total += G::integrate(h, a, top);
  return total;
}

}  // namespace

TEST_CASE("initial subsolution") {
  const QuadratureConfig quad;
  const auto params = ProblemParams::finite(3, 2.0, {0.5}, 1.0);
  CHECK_THROWS_AS(initial_subsolution(RadonMeasure(3), 0.5, params, quad), Error);
  CHECK_THROWS_AS(initial_subsolution(unit_ball(), 1.0, params, quad), Error);
  CHECK_THROWS_AS(initial_subsolution(unit_ball(), 0.5, params, quad, 2.0), Error);

  const auto u0 = initial_subsolution(unit_ball(), 0.5, params, quad);
  const auto phi = riesz_ball_masses(u0, params);
  const auto r = u0.radii();
  auto g = [&](double s) { return std::sqrt(s > 0.0 ? u0(s) : u0.center_value()); };
  for (std::size_t i = 0; i < r.size(); i += 7) {
    CHECK(phi[i] <= ball_weighted_mass(g, r[i], r) * (1.0 + 1e-8));
  }
  CHECK(u0.center_value() > 0.0);
}

TEST_CASE("property: subsolution homogeneity") {
  const QuadratureConfig quad;
  const auto params = ProblemParams::finite(3, 2.0, {0.5}, 1.0);
  const auto base = initial_subsolution(unit_ball(), 0.5, params, quad);
  for (double lambda : {1e-3, 0.7, 40.0}) {
    const auto s = initial_subsolution(unit_ball(lambda), 0.5, params, quad);
    const double ratio = s.values()[100] / base.values()[100] / std::pow(lambda, 2.0);
    const double k = std::log2(ratio);
    CHECK(std::abs(k - std::round(k)) < 1e-8);
    CHECK(std::abs(k) <= 1.0);
    for (std::size_t i = 0; i < s.size(); i += 50) {
      CHECK(s.values()[i] / base.values()[i] == doctest::Approx(ratio * lambda * lambda).epsilon(1e-8));
    }
  }
}

TEST_CASE("iterate_once") {
  const QuadratureConfig quad;
  const auto params = ProblemParams::finite(3, 2.0, {0.5}, 1.0);
  const std::vector<RadonMeasure> sigma{unit_ball()};
  const auto grid = problem_grid(sigma, RadonMeasure::dirac(3), quad);
  const auto zero = RadialFunction::zero(grid);

  const auto fund = iterate_once(zero, sigma, {0.5}, RadonMeasure::dirac(3), params, quad);
  for (double r : {0.1, 1.0, 10.0}) CHECK(fund(r) == doctest::Approx(1.0 / (4.0 * M_PI * r)).epsilon(1e-8));

  const auto none = iterate_once(zero, sigma, {0.5}, RadonMeasure(3), params, quad);
  CHECK(none.sup() == 0.0);

  // monotone solution operator
  const auto a = iterate_once(fund, sigma, {0.5}, RadonMeasure::dirac(3), params, quad);
  const auto b = iterate_once(fund.scaled(1.5), sigma, {0.5}, RadonMeasure::dirac(3), params, quad);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values()[i] <= b.values()[i] * (1.0 + 1e-14));
  CHECK(b.values()[10] > a.values()[10]);
}

TEST_CASE("manufactured minimal solution") {
  const QuadratureConfig quad;
  const auto params = ProblemParams::finite(3, 2.0, {0.5}, 1.0);
  const auto sol = solve_minimal({manufactured_sigma()}, RadonMeasure(3), params, quad);
  CHECK(sol.converged);
  CHECK(sol.iterations_used <= 50);
  CHECK(sol.residual_final <= quad.conv_tol);
  CHECK(sol.riesz_mismatch <= 10.0 * quad.rel_tol);
  CHECK(sup_rel_err(sol.u, 1.0, 1e-2, 1e2) < 1e-4);
  CHECK(sol.min_step >= -1e-12);
  CHECK(sol.u.center_value() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.lower_bound_ratio > 0.0);
  CHECK(std::isfinite(sol.generalized_energy));
  CHECK(std::isfinite(sol.lorentz_norm));
  for (std::size_t j = 1; j < sol.trace.size(); ++j) CHECK(sol.trace[j].min_step >= -1e-12);

  // ∫ u*^{3/2} σ dx = ∫ 3 (1+r²)^{-3} 4π r² dr = 3π²/4
  CHECK(sol.trace.back().sigma_energies.at(0) == doctest::Approx(0.75 * M_PI * M_PI).epsilon(1e-6));
  CHECK(sol.generalized_energy == doctest::Approx(0.75 * M_PI * M_PI).epsilon(1e-6));

  const auto reports = verify_solution(sol, {manufactured_sigma()}, RadonMeasure(3), params, quad);
  for (const auto& r : reports) {
    INFO(r.name << " lhs=" << r.lhs << " rhs=" << r.rhs);
    CHECK(r.passed);
  }
}

TEST_CASE("pure measure data is a single step") {
  const QuadratureConfig quad;
  const auto params = ProblemParams::finite(3, 2.0, {0.5}, 1.0);
  const auto sol = solve_minimal({RadonMeasure(3)}, RadonMeasure::dirac(3), params, quad);
  CHECK(sol.iterations_used == 1);
  CHECK(sol.converged);
  for (double r : {0.01, 0.5, 3.0, 100.0}) CHECK(sol.u(r) == doctest::Approx(1.0 / (4.0 * M_PI * r)).epsilon(1e-8));
  CHECK(std::isinf(sol.generalized_energy));

  const auto reports = verify_solution(sol, {RadonMeasure(3)}, RadonMeasure::dirac(3), params, quad);
  bool saw_lower = false;
  for (const auto& r : reports) {
    if (r.name == "lower_bound[mu]") {
      saw_lower = true;
      // W δ = 1/r and u = 1/(4π r)
      CHECK(r.lhs == doctest::Approx(4.0 * M_PI).epsilon(1e-3));
    }
  }
  CHECK(saw_lower);
}

TEST_CASE("ball data with both terms") {
  const QuadratureConfig quad;
  const auto params = ProblemParams::finite(3, 2.0, {0.5}, 1.0);
  const auto sol = solve_minimal({unit_ball()}, unit_ball(), params, quad);
  CHECK(sol.converged);
  CHECK(sol.lower_bound_ratio > 0.0);
  CHECK(std::isfinite(sol.generalized_energy));
  const auto reports = verify_solution(sol, {unit_ball()}, unit_ball(), params, quad);
  bool identity = false;
  for (const auto& r : reports) {
    INFO(r.name << " lhs=" << r.lhs << " rhs=" << r.rhs);
    CHECK(r.passed);
    if (r.name == "energy_identity") {
      identity = true;
      CHECK(std::abs(r.lhs - r.rhs) / r.rhs < 1e-3);
    }
  }
  CHECK(identity);
}

TEST_CASE("solver errors") {
  const QuadratureConfig quad;
  const auto params = ProblemParams::finite(3, 2.0, {0.5}, 1.0);
  try {
    solve_minimal({RadonMeasure(3)}, RadonMeasure(3), params, quad);
    FAIL("expected ZeroMeasure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroMeasure);
  }
  CHECK_THROWS_AS(solve_minimal({unit_ball()}, RadonMeasure(3), ProblemParams::zero(3, 2.0, {0.5}), quad), Error);
  CHECK_THROWS_AS(solve_minimal({unit_ball(), unit_ball()}, RadonMeasure(3), params, quad), Error);
  CHECK_THROWS_AS(solve_minimal({RadonMeasure::atom(axis_point(3, 1.0), 1.0)}, RadonMeasure(3), params, quad), Error);

  QuadratureConfig short_run;
  short_run.max_iter = 3;
  try {
    solve_minimal({unit_ball()}, RadonMeasure(3), params, short_run);
    FAIL("expected NotConverged");
  } catch (const NotConvergedError& e) {
    CHECK(e.code() == ErrorCode::NotConverged);
    CHECK(e.partial().iterations_used == 3);
    CHECK(e.partial().trace.size() == 3);
    CHECK_FALSE(e.partial().converged);
  }
}

TEST_CASE("property: start independence") {
  const QuadratureConfig quad;
  const auto params = ProblemParams::finite(3, 2.0, {0.5}, 1.0);
  SolveOptions from_zero;
  from_zero.start = StartFrom::Zero;
  from_zero.wolff_diagnostics = false;
  SolveOptions from_sub = from_zero;
  from_sub.start = StartFrom::Subsolution;
  const auto mu = scale(unit_ball(), 0.3);
  const auto a = solve_minimal({unit_ball()}, mu, params, quad, from_zero);
  const auto b = solve_minimal({unit_ball()}, mu, params, quad, from_sub);
  REQUIRE(a.u.size() == b.u.size());
  for (std::size_t i = 0; i < a.u.size(); ++i) {
    CHECK(std::abs(a.u.values()[i] - b.u.values()[i]) <= 10.0 * quad.conv_tol * a.u.values()[i]);
  }
}

TEST_CASE("property: minimality against supersolutions") {
  const QuadratureConfig quad;
  const auto params = ProblemParams::finite(3, 2.0, {0.5}, 1.0);
  const auto sol = solve_minimal({unit_ball()}, RadonMeasure(3), params, quad);

  // C v with -Δv = 1_B is a supersolution once C^{1/2} >= v(0)^{1/2}
  const auto v = solve_radial_p_laplace(unit_ball(), params, quad);
  for (double factor : {1.0001, 3.0}) {
    const auto w = v.scaled(v.center_value() * factor);
    const auto phi = riesz_ball_masses(w, params);
    const auto src = source_measure(w, {unit_ball()}, {0.5}, RadonMeasure(3));
    for (std::size_t i = 0; i < phi.size(); i += 11) CHECK(phi[i] >= src.centered_mass(w.radii()[i]) * (1.0 - 1e-9));
    for (double r : {1e-3, 0.3, 0.9, 1.5, 10.0, 1e4}) CHECK(sol.u(r) <= w(r) * (1.0 + 1e-6));
  }
  // multiples of u* for the manufactured data
  const auto m = solve_minimal({manufactured_sigma()}, RadonMeasure(3), params, quad);
  for (double r : {1e-3, 0.3, 1.0, 10.0, 1e3}) CHECK(m.u(r) <= 1.01 * ustar(r) * (1.0 + 1e-6));
}

TEST_CASE("exhaustion") {
  const QuadratureConfig quad;
  const auto params = ProblemParams::finite(3, 2.0, {0.5}, 1.0);
  SolveOptions opts;
  opts.wolff_diagnostics = false;

  // small ball: W <= 1 and support inside B(0,2) already at k = 1
  const auto small = unit_ball(0.05);
  REQUIRE(wolff(small, axis_point(3, 0.0), params, quad).value < 1.0);
  const auto levels = solve_with_exhaustion({small}, RadonMeasure(3), params, quad, 3, opts);
  const auto full = solve_minimal({small}, RadonMeasure(3), params, quad, opts);
  REQUIRE(levels.size() == 3);
  for (const auto& s : levels) {
    REQUIRE(s.u.size() == full.u.size());
    for (std::size_t i = 0; i < s.u.size(); ++i) {
      CHECK(std::abs(s.u.values()[i] - full.u.values()[i]) <= 10.0 * quad.conv_tol * full.u.values()[i]);
    }
  }

  // the atom of μ never enters Ω(μ, k)
  const auto with_atom = solve_with_exhaustion({small}, RadonMeasure::dirac(3, 0.1), params, quad, 2, opts);
  for (const auto& s : with_atom) {
    CHECK(std::isfinite(s.u.center_value()));
    CHECK(s.u(0.5) == doctest::Approx(full.u(0.5)).epsilon(1e-8));
  }

  // growing cutoffs of a spread-out bump
  const auto bump = RadonMeasure::density(DensityProfile::bump(3, 0.02, 3.0, 2.5));
  const auto grow = solve_with_exhaustion({bump}, RadonMeasure(3), params, quad, 4, opts);
  const auto nodes = quad.grid().nodes();
  for (std::size_t k = 1; k < grow.size(); ++k) {
    for (std::size_t i = 0; i < nodes.size(); i += 13) CHECK(grow[k].u(nodes[i]) >= grow[k - 1].u(nodes[i]) * (1.0 - 1e-9));
  }
  CHECK(grow.back().u(1.0) > grow.front().u(1.0));
}

TEST_CASE("bounded endpoint") {
  const QuadratureConfig quad;
  const auto params = ProblemParams::infinity(3, 2.0, {0.5});
  const auto ball = solve_bounded_endpoint({unit_ball()}, RadonMeasure(3), params, quad);
  CHECK(ball.bounded);
  CHECK(std::isfinite(ball.sup_norm));
  CHECK(ball.sup_norm == ball.u.center_value());
  CHECK(std::isfinite(ball.sup_recursion_constant));
  CHECK(ball.sup_recursion_constant < 1e3);

  const auto m = solve_bounded_endpoint({manufactured_sigma()}, RadonMeasure(3), params, quad);
  CHECK(std::abs(m.sup_norm - 1.0) < 1e-4);

  try {
    solve_bounded_endpoint({unit_ball()}, RadonMeasure::dirac(3), params, quad);
    FAIL("expected UnboundedCondition");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnboundedCondition);
  }
  CHECK_THROWS_AS(solve_bounded_endpoint({unit_ball()}, RadonMeasure(3), ProblemParams::finite(3, 2.0, {0.5}, 1.0),
                                         quad),
                  Error);
}

TEST_CASE("intrinsic fixed point") {
  const auto params = ProblemParams::zero(3, 2.0, {0.5});
  {
    const auto quad = light();
    const auto s = intrinsic_fixed_point(RadonMeasure(3), 0.5, unit_ball(), params, quad);
    REQUIRE(s.intrinsic.has_value());
    CHECK(s.intrinsic->iterations == 1);
    CHECK(s.intrinsic->w(0.0001) == doctest::Approx(2.0 * M_PI).epsilon(1e-4));
    CHECK(std::isfinite(s.lorentz_norm));
    CHECK(s.lorentz_rho == kInf);
  }
  const QuadratureConfig quad;
  const auto s = intrinsic_fixed_point(manufactured_sigma(), 0.5, RadonMeasure(3), params, quad);
  REQUIRE(s.intrinsic.has_value());
  CHECK(s.intrinsic->converged);
  CHECK(sup_rel_err(s.u, 1.0, 1e-2, 1e2) < 1e-3);
  // for p = 2, W = |S^2| × Newtonian potential, so w = (4π)^{1/(1-q)} u*
  CHECK(sup_rel_err(s.intrinsic->w, 16.0 * M_PI * M_PI, 1e-2, 1e2) < 1e-3);
  CHECK(std::isfinite(s.intrinsic->lq_mass));
  CHECK(std::isfinite(s.lorentz_norm));
  CHECK(s.generalized_energy == doctest::Approx(s.riesz.total_mass()));
}

TEST_CASE("property: intrinsic fixed point scaling") {
  const auto params = ProblemParams::zero(3, 2.0, {0.5});
  const auto quad = light();
  const auto a = intrinsic_fixed_point(manufactured_sigma(), 0.5, RadonMeasure(3), params, quad);
  const auto b = intrinsic_fixed_point(scale(manufactured_sigma(), 1e-6), 0.5, RadonMeasure(3), params, quad);
  CHECK(b.intrinsic->converged);
  for (double r : {0.01, 1.0, 100.0}) {
    CHECK(b.u(r) == doctest::Approx(1e-12 * a.u(r)).epsilon(1e-7));
    CHECK(b.intrinsic->w(r) == doctest::Approx(1e-12 * a.intrinsic->w(r)).epsilon(1e-5));
  }
}

TEST_CASE("sandwich and truncation energy") {
  const QuadratureConfig quad;
  const auto params = ProblemParams::finite(3, 2.0, {}, 1.0);
  const auto nu = unit_ball();
  const auto u = solve_radial_p_laplace(nu, params, quad);
  const auto samples = km_sandwich(u, nu, params, quad, 10, 5);
  REQUIRE(samples.size() == 10);
  for (const auto& s : samples) {
    CHECK(s.lower_ratio >= 1e-3);
    CHECK(s.upper_ratio <= 1e3);
    CHECK(s.R >= s.r);
  }

  // ∫|∇ min(u,l)|² = ∫ min(u,l) dν
  for (double level : {0.1, 0.3, 0.45, 0.6}) {
    Integrand g;
    g.radial = [&](double r) { return std::min(level, r > 0.0 ? u(r) : u.center_value()); };
    const double expect = integrate_against(nu, g, 1e-12);
    CHECK(truncated_energy(u, level, params) == doctest::Approx(expect).epsilon(1e-6));
  }
  CHECK(truncated_energy(u, 0.0, params) == 0.0);
}
