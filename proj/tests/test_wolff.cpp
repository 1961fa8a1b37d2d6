#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "wolfflab/errors.hpp"
#include "wolfflab/wolff.hpp"

using namespace wolfflab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ProblemParams np(int n, double p) { return ProblemParams::finite(n, p, {}, 1.0); }
double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

RadonMeasure unit_ball(int n) { return RadonMeasure::density(DensityProfile::indicator(n, 1.0)); }

RadonMeasure random_bump(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return RadonMeasure::density(
      DensityProfile::bump(n, 0.1 + 9.9 * u(rng), 0.1 + 9.9 * u(rng), 0.5 * n + 0.5 + 2.0 * u(rng)));
}

}  // namespace

TEST_CASE("Dirac Wolff potential") {
  const QuadratureConfig quad;
  for (auto [n, p] : {std::pair{3, 2.0}, {4, 3.0}, {5, 2.5}}) {
    const auto mu = RadonMeasure::dirac(n);
    for (double r : {0.1, 1.0, 10.0}) {
      const double exact = (p - 1.0) / (n - p) * std::pow(r, -(n - p) / (p - 1.0));
      CHECK(rel(wolff(mu, axis_point(n, r), np(n, p), quad).value, exact) < 1e-12);
    }
    CHECK(wolff(mu, axis_point(n, 0.0), np(n, p), quad).value == kInf);
  }
  CHECK(wolff(RadonMeasure::dirac(3), axis_point(3, 0.5), np(3, 2.0), quad).value == doctest::Approx(2.0));
}

TEST_CASE("uniform ball Wolff potential equals the Newtonian potential") {
  const QuadratureConfig quad;
  const auto mu = unit_ball(3);
  const auto params = np(3, 2.0);
  CHECK(rel(wolff(mu, axis_point(3, 0.0), params, quad).value, 2.0 * M_PI) < 1e-9);
  CHECK(rel(wolff(mu, axis_point(3, 2.0), params, quad).value, 2.0 * M_PI / 3.0) < 1e-9);
  CHECK(rel(wolff(mu, axis_point(3, 0.5), params, quad).value, 2.0 * M_PI * (1.0 - 0.25 / 3.0)) < 1e-9);
  Point diag{0.3, -0.4, 1.2};
  CHECK(rel(wolff(mu, diag, params, quad).value, 4.0 * M_PI / 3.0 / 1.3) < 1e-9);
}

TEST_CASE("truncated Wolff potential") {
  const QuadratureConfig quad;
  const auto d = RadonMeasure::dirac(3);
  const auto params = np(3, 2.0);
  const auto x = axis_point(3, 0.5);
  CHECK(truncated_wolff(d, x, 0.4, params, quad).value == 0.0);
  CHECK(truncated_wolff(d, x, 1.0, params, quad).value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(truncated_wolff(d, x, 0.0, params, quad), Error);

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const auto mu = add(random_bump(3, rng), RadonMeasure::shell(3, 0.8, 1.0));
    const auto y = axis_point(3, 0.1 + trial * 0.4);
    const double full = wolff(mu, y, np(3, 2.5), quad).value;
    double prev = 0.0;
    for (double R : {1e-3, 0.1, 0.5, 1.0, 5.0, 1e3, 1e9, 1e12}) {
      const double t = truncated_wolff(mu, y, R, np(3, 2.5), quad).value;
      CHECK(t >= prev * (1 - 1e-12));
      CHECK(t <= full * (1 + 1e-12));
      prev = t;
    }
    CHECK(rel(prev, full) < 1e-3);
  }
}

TEST_CASE("Wolff potential of a shell against independent quadrature") {
  // n=3: μ(B(x,r)) = r^2/4 on (0,2) for |x| = 1, unit mass shell
  const QuadratureConfig quad;
  const auto shell = RadonMeasure::shell(3, 1.0, 1.0);
  CHECK(rel(wolff(shell, axis_point(3, 1.0), np(3, 2.0), quad).value, 1.0) < 1e-10);
  const double exact = 2.0 * std::pow(4.0, -2.0 / 3.0) + 3.0 * std::pow(2.0, -1.0 / 3.0);
  CHECK(rel(wolff(shell, axis_point(3, 1.0), np(3, 2.5), quad).value, exact) < 1e-9);
  CHECK(rel(wolff_sup_on_support(shell, np(3, 2.0), quad), 1.0) < 1e-6);
}

TEST_CASE("sup on support") {
  const QuadratureConfig quad;
  CHECK(rel(wolff_sup_on_support(unit_ball(3), np(3, 2.0), quad), 2.0 * M_PI) < 1e-9);
  CHECK(wolff_sup_on_support(RadonMeasure::dirac(3), np(3, 2.0), quad) == kInf);
  CHECK_THROWS_AS(wolff_sup_on_support(RadonMeasure(3), np(3, 2.0), quad), Error);
}

TEST_CASE("property: homogeneity, monotonicity and quasi-linearity") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const QuadratureConfig quad;
  for (double p : {1.5, 2.0, 2.7}) {
    const auto params = np(3, p);
    const double c = std::max(1.0, std::pow(2.0, (2.0 - p) / (p - 1.0)));
    for (int trial = 0; trial < 6; ++trial) {
      const auto sigma = random_bump(3, rng);
      const auto mu = add(RadonMeasure::density(DensityProfile::indicator(3, 0.2 + u(rng))),
                          RadonMeasure::shell(3, 0.5, u(rng)));
      const auto x = axis_point(3, 3.0 * u(rng));
      const double lambda = std::exp(6.0 * (u(rng) - 0.5));
      const double ws = wolff(sigma, x, params, quad).value;
      const double wm = wolff(mu, x, params, quad).value;
      CHECK(rel(wolff(scale(sigma, lambda), x, params, quad).value, std::pow(lambda, 1.0 / (p - 1.0)) * ws) < 1e-9);
      CHECK(wolff(add(sigma, mu), x, params, quad).value >= ws * (1 - 1e-10));
      const double a = u(rng) * 5.0;
      const double b = u(rng) * 5.0;
      const double lhs = wolff(add(scale(sigma, a), scale(mu, b)), x, params, quad).value;
      const double rhs = c * (std::pow(a, 1.0 / (p - 1.0)) * ws + std::pow(b, 1.0 / (p - 1.0)) * wm);
      CHECK(lhs <= rhs * (1 + 1e-9));
    }
  }
}

TEST_CASE("property: weak maximum principle constant is finite") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const QuadratureConfig quad;
  double worst = 0.0;
  for (int trial = 0; trial < 8; ++trial) {
    const double R = 0.5 + 2.0 * u(rng);
    const auto mu = add(RadonMeasure::density(DensityProfile::indicator(3, R, 0.1 + u(rng))),
                        RadonMeasure::shell(3, R * u(rng), u(rng)));
    const auto params = np(3, 1.5 + u(rng));
    const double on = wolff_sup_on_support(mu, params, quad);
    for (double r : {1.01, 1.5, 3.0, 10.0}) {
      worst = std::max(worst, wolff(mu, axis_point(3, r * R), params, quad).value / on);
    }
  }
  MESSAGE("empirical weak maximum principle constant " << worst);
  CHECK(std::isfinite(worst));
  CHECK(worst <= 1.0 + 1e-9);
}

TEST_CASE("cutoff measures") {
  const QuadratureConfig quad;
  const auto params = np(3, 2.0);
  const auto ball = unit_ball(3);
  const auto same = cutoff_measure(ball, 7, params, quad);
  REQUIRE(same.components().size() == 1);
  CHECK(std::get<RadialDensity>(same.components()[0]).profile == std::get<RadialDensity>(ball.components()[0]).profile);
  CHECK(cutoff_measure(RadonMeasure::dirac(3), 3, params, quad).is_zero());

  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 3; ++trial) {
    const auto mu = add(random_bump(3, rng), RadonMeasure::dirac(3, 0.5));
    double prev_w = 0.0;
    for (int k = 1; k <= 4; ++k) {
      const auto mk = cutoff_measure(mu, k, params, quad);
      CHECK_FALSE(mk.has_atoms());
      CHECK(mk.support_radius() <= std::ldexp(1.0, k));
      const auto wk = wolff_profile(mk, params, quad);
      const double energy = integrate_against(mk, {[&](double r) { return wk(r); }, {}, {}}, 1e-8);
      CHECK(energy <= k * mk.total_mass() * (1 + 1e-6));
      const double w_here = wolff(mk, axis_point(3, 0.7), params, quad).value;
      CHECK(w_here >= prev_w * (1 - 1e-9));
      prev_w = w_here;
    }
  }
}

TEST_CASE("property: cutoff exhaustion converges") {
  const QuadratureConfig quad;
  const auto params = np(3, 2.0);
  const auto mu = RadonMeasure::density(DensityProfile::bump(3, 3.0, 0.5, 2.5));
  const auto x = axis_point(3, 0.3);
  const double full = wolff(mu, x, params, quad).value;
  double prev = 0.0;
  for (int k = 1; k <= 14; ++k) {
    const double w = wolff(cutoff_measure(mu, k, params, quad), x, params, quad).value;
    CHECK(w >= prev * (1 - 1e-9));
    CHECK(w <= full * (1 + 1e-9));
    prev = w;
  }
  CHECK(rel(prev, full) < 1e-3);
}

TEST_CASE("parallel and serial kernels agree bitwise") {
  const QuadratureConfig quad;
  const auto params = np(4, 2.5);
  const auto mu = add(RadonMeasure::density(DensityProfile::bump(4, 1.0, 2.0, 3.0)), RadonMeasure::shell(4, 1.5, 2.0));
  const auto a = wolff_profile(mu, params, quad);
  const auto b = wolff_profile_serial(mu, params, quad);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values()[i] == b.values()[i]);
  CHECK(a.center_value() == b.center_value());
  std::vector<Point> pts{{0.1, 0.2, 0.0, 0.0}, {3.0, 0.0, 1.0, 0.0}};
  const auto off = add(mu, RadonMeasure::atom({1.0, 1.0, 0.0, 0.0}, 1.0));
  const auto pa = wolff_batch(off, pts, params, quad);
  const auto pb = wolff_batch_serial(off, pts, params, quad);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(pa[i].value == pb[i].value);
  CHECK_THROWS_AS(wolff_profile(off, params, quad), Error);
}
