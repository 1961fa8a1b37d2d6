#include "wolfflab/radial_pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wolfflab/errors.hpp"
#include "wolfflab/quadrature.hpp"

namespace wolfflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_exponents(const ProblemParams& params) {
  if (params.n < 2 || !(params.p > 1.0) || !(params.p < params.n)) {
    throw Error(ErrorCode::DimensionError, "radial solver needs n >= 2 and 1 < p < n");
  }
}

bool has_mass_at_origin(const RadonMeasure& nu) {
  for (const auto& c : nu.components()) {
    if (const auto* a = std::get_if<Atom>(&c); a && a->weight > 0.0) return true;
  }
  return false;
}

std::vector<double> decade_points(double a, double b) {
  std::vector<double> out;
  if (!(b > a) || !(a > 0.0)) return out;
  for (double e = std::ceil(std::log10(a)); std::pow(10.0, e) < b; e += 1.0) out.push_back(std::pow(10.0, e));
  return out;
}

// Radial flux (M / (n ω_n s^{n-1}))^{1/(p-1)} = |u'(s)|.
struct Flux {
  const RadonMeasure& nu;
  int n;
  double k;
  double area;

  double operator()(double s) const { return from_mass(nu.centered_mass(s), s); }
  double from_mass(double m, double s) const {
    if (!(m > 0.0)) return 0.0;
    return std::pow(m / (area * std::pow(s, n - 1)), k);
  }
};

}  // namespace

std::vector<double> solution_grid(const RadonMeasure& nu, const QuadratureConfig& quad) {
  const LogGrid base = quad.grid();
  auto nodes = merge_breakpoints(base.nodes(), nu.radial_breakpoints());
  std::vector<double> shells;
  for (const auto& c : nu.components()) {
    if (const auto* s = std::get_if<SphericalShell>(&c); s && s->mass > 0.0) shells.push_back(s->radius);
  }
  std::sort(shells.begin(), shells.end());
  shells.erase(std::unique(shells.begin(), shells.end()), shells.end());
  for (double R : shells) {
    if (R <= nodes.front() || R >= nodes.back()) continue;
    auto it = std::lower_bound(nodes.begin(), nodes.end(), R * (1.0 - 1e-13));
    if (it == nodes.end() || std::abs(*it - R) > 1e-13 * R) continue;
    *it = R;
    nodes.insert(it, R);
  }
  return nodes;
}

RadialFunction solve_radial_p_laplace(const RadonMeasure& nu, const ProblemParams& params,
                                      const QuadratureConfig& quad) {
  return solve_radial_p_laplace(nu, params, quad, solution_grid(nu, quad));
}

RadialFunction solve_radial_p_laplace(const RadonMeasure& nu, const ProblemParams& params,
                                      const QuadratureConfig& quad, std::vector<double> r) {
  check_exponents(params);
  quad.validate();
  if (nu.dim() != params.n) throw Error(ErrorCode::InvalidArgument, "measure dimension differs from n");
  if (!nu.is_radial()) throw Error(ErrorCode::NonRadialMeasure, "radial solver needs a radial measure");

  const int n = params.n;
  const double tau = params.tail_exponent();
  const Flux g{nu, n, 1.0 / (params.p - 1.0), unit_sphere_area(n)};
  const auto bps = nu.radial_breakpoints();
  if (r.empty()) throw Error(ErrorCode::InvalidArgument, "empty solution grid");
  const std::size_t N = r.size();
  std::vector<double> u(N, 0.0);
  std::vector<double> du(N, 0.0);

  for (std::size_t i = 0; i < N; ++i) {
    const bool right_limit = i > 0 && r[i] == r[i - 1];
    const double s = right_limit ? std::nextafter(r[i], kInf) : r[i];
    du[i] = -g.from_mass(nu.centered_mass(s), r[i]);
  }

  const double rN = r.back();
  const double support = nu.support_radius();
  const double total = nu.total_mass();
  double tail = 0.0;
  if (support < rN) {
    tail = g.from_mass(total, rN) * rN / tau;
  } else {
    const double X = std::isfinite(support) ? support : std::max(1e12, 1e6 * rN);
    auto extra = decade_points(rN, X);
    extra.insert(extra.end(), bps.begin(), bps.end());
    const std::vector<double> ends{rN, X};
    const auto pieces = merge_breakpoints(ends, extra);
    tail = quad::adaptive_pieces(g, pieces, quad.rel_tol, true).value;
    if (std::isfinite(support)) {
      tail += g.from_mass(total, X) * X / tau;
    } else {
      const double gx = g(X);
      if (gx > 0.0) {
        const double e = std::log(gx / g(0.5 * X)) / std::log(2.0);
        if (!(e < -1.0)) throw Error(ErrorCode::DivergentTail, "potential integral diverges at infinity");
        tail += gx * X / (-e - 1.0);
      }
    }
  }
  u[N - 1] = tail;
  for (std::size_t i = N - 1; i-- > 0;) {
    u[i] = u[i + 1];
    if (r[i + 1] > r[i]) u[i] += quad::adaptive(g, r[i], r[i + 1], quad.rel_tol).value;
  }

  double center = kInf;
  if (!has_mass_at_origin(nu)) {
    std::vector<double> pieces{0.0};
    for (double b : bps) {
      if (b > 0.0 && b < r.front()) pieces.push_back(b);
    }
    pieces.push_back(r.front());
    center = u.front() + quad::adaptive_pieces(g, pieces, quad.rel_tol, false).value;
  }
  const double coeff = u.back() * std::pow(rN, tau);
  return RadialFunction(std::move(r), std::move(u), std::move(du), coeff, tau, center);
}

std::vector<double> riesz_ball_masses(const RadialFunction& u, const ProblemParams& params) {
  check_exponents(params);
  const double area = unit_sphere_area(params.n);
  const auto r = u.radii();
  const auto du = u.slopes();
  std::vector<double> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double slope = std::max(0.0, -du[i]);
    out[i] = area * std::pow(r[i], params.n - 1) * std::pow(slope, params.p - 1.0);
  }
  return out;
}

RadonMeasure riesz_measure_of(const RadialFunction& u, const ProblemParams& params) {
  if (!u.is_nonincreasing(1e-10)) {
    throw Error(ErrorCode::NonMonotoneProfile, "Riesz measure needs a nonincreasing profile");
  }
  const int n = params.n;
  const auto phi = riesz_ball_masses(u, params);
  const auto r = u.radii();
  const double vol = unit_ball_volume(n);
  std::vector<MeasureComponent> parts;
  std::vector<double> edges;
  std::vector<double> values;
  if (!std::isfinite(u.center_value())) {
    if (phi[0] > 0.0) parts.push_back(Atom{Point(static_cast<std::size_t>(n), 0.0), phi[0]});
  } else {
    edges.push_back(0.0);
    values.push_back(phi[0] / (vol * std::pow(r[0], n)));
  }
  edges.push_back(r[0]);
  double cum = phi[0];
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    const double next = std::max(cum, phi[i + 1]);
    const double dm = next - cum;
    cum = next;
    if (r[i + 1] == r[i]) {
      if (dm > 0.0) parts.push_back(SphericalShell{r[i], dm});
      continue;
    }
    edges.push_back(r[i + 1]);
    values.push_back(dm / (vol * (std::pow(r[i + 1], n) - std::pow(r[i], n))));
  }
  if (std::any_of(values.begin(), values.end(), [](double v) { return v > 0.0; })) {
    parts.push_back(RadialDensity{DensityProfile::piecewise_constant(n, std::move(edges), std::move(values)), 1.0});
  }
  return RadonMeasure(n, std::move(parts));
}

double dirichlet_energy(const RadialFunction& u, const ProblemParams& params, double weight_gamma) {
  check_exponents(params);
  if (!(weight_gamma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "energy weight must be nonnegative");
  if (!u.is_nonincreasing(1e-10)) {
    throw Error(ErrorCode::NonMonotoneProfile, "energy needs a nonincreasing profile");
  }
  const int n = params.n;
  const double p = params.p;
  const double area = unit_sphere_area(n);
  auto density = [&](double value, double slope, double s) {
    if (slope == 0.0 || !(value > 0.0)) return 0.0;
    return std::pow(std::abs(slope), p) * std::pow(value, weight_gamma - 1.0) * area * std::pow(s, n - 1);
  };
  auto integrand = [&](double s) { return density(u(s), u.derivative(s), s); };

  const auto r = u.radii();
  const auto vals = u.values();
  const auto slopes = u.slopes();
  // A first pass sets an absolute floor: near-flat cells have noisy
  // interpolated slopes and contribute nothing at this level.
  double rough = 0.0;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) rough += quad::kronrod15_log(integrand, r[i], r[i + 1]);
  const double floor = 1e-13 * rough / static_cast<double>(r.size());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    if (r[i + 1] > r[i]) total += quad::adaptive_log(integrand, r[i], r[i + 1], 1e-10, floor).value;
  }

  const double head_value = density(vals[0], slopes[0], r[0]);
  if (head_value > 0.0) {
    const double m0 = r[0] * slopes[0] / vals[0];
    const double e = m0 * (p + weight_gamma - 1.0) - p + n;
    if (!(e > 0.0)) return kInf;
    total += head_value * r[0] / e;
  }

  const double rN = r.back();
  const double tail_u = u.tail_coeff() * std::pow(rN, -u.tail_exp());
  const double tail_value = density(tail_u, -u.tail_exp() * tail_u / rN, rN);
  if (tail_value > 0.0) {
    const double e = -u.tail_exp() * (p + weight_gamma - 1.0) - p + n;
    if (!(e < 0.0)) return kInf;
    total += tail_value * rN / -e;
  }
  return total;
}

}  // namespace wolfflab
