#include "wolfflab/energy.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "wolfflab/errors.hpp"
#include "wolfflab/radial_pde.hpp"
#include "wolfflab/wolff.hpp"

namespace wolfflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool has_radial_parts(const RadonMeasure& m) {
  for (const auto& c : m.components()) {
    if (!std::holds_alternative<Atom>(c)) return true;
  }
  return false;
}

std::optional<RadialFunction> profile_for(const RadonMeasure& sigma, const RadonMeasure& mu,
                                          const ProblemParams& params, const QuadratureConfig& quad) {
  if (!has_radial_parts(sigma) || mu.is_zero()) return std::nullopt;
  if (!mu.is_radial()) {
    throw Error(ErrorCode::NonRadialMeasure, "integrating a non-radial potential against radial parts");
  }
  return wolff_profile(mu, params, quad);
}

double integrate_power(const RadonMeasure& sigma, const RadonMeasure& mu, const std::optional<RadialFunction>& w,
                       double e, const ProblemParams& params, const QuadratureConfig& quad) {
  if (sigma.is_zero()) return 0.0;
  if (e == 0.0) return sigma.total_mass();
  if (mu.is_zero()) return e > 0.0 ? 0.0 : kInf;
  auto power = [e](double v) {
    if (std::isinf(v)) return e > 0.0 ? kInf : 0.0;
    return std::pow(v, e);
  };
  Integrand g;
  if (w) {
    g.radial = [&](double r) { return power(r > 0.0 ? (*w)(r) : w->center_value()); };
    g.breakpoints = mu.radial_breakpoints();
  }
  g.pointwise = [&](std::span<const double> x) { return power(wolff(mu, x, params, quad).value); };
  return integrate_against(sigma, g, quad.rel_tol);
}

double safe_pow(double x, double e) {
  if (x == 0.0) return e > 0.0 ? 0.0 : (e == 0.0 ? 1.0 : kInf);
  return std::pow(x, e);
}

void check_gamma(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::ExponentError, "energy exponent gamma must be finite and nonnegative");
  }
}

void check_mutual_range(double gamma, double q, const ProblemParams& params) {
  check_gamma(gamma);
  if (!(q > -gamma) || !(q < params.p - 1.0)) {
    throw Error(ErrorCode::ExponentError, "mutual energy needs -gamma < q < p-1");
  }
}

std::string describe(const ProblemParams& params, double gamma, double q) {
  std::ostringstream out;
  out << "n=" << params.n << " p=" << params.p << " gamma=" << gamma << " q=" << q;
  return out.str();
}

}  // namespace

InequalityReport make_report(std::string name, double lhs, double rhs, double bound, std::string instance) {
  InequalityReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.bound = bound;
  r.instance = std::move(instance);
  r.vacuous = std::isinf(rhs);
  if (std::isfinite(lhs) && std::isfinite(rhs) && rhs > 0.0) r.ratio = lhs / rhs;
  r.empirical_constant = r.ratio;
  r.passed = r.vacuous || lhs <= bound * rhs;
  return r;
}

double potential_integral(const RadonMeasure& sigma, const RadonMeasure& mu, double e, const ProblemParams& params,
                          const QuadratureConfig& quad) {
  return integrate_power(sigma, mu, profile_for(sigma, mu, params, quad), e, params, quad);
}

double potential_integral(const RadonMeasure& sigma, const RadonMeasure& mu, const RadialFunction& w_mu, double e,
                          const ProblemParams& params, const QuadratureConfig& quad) {
  return integrate_power(sigma, mu, w_mu, e, params, quad);
}

double wolff_energy(const RadonMeasure& mu, double gamma, const ProblemParams& params, const QuadratureConfig& quad) {
  check_gamma(gamma);
  if (gamma == 0.0) return mu.total_mass();
  if (mu.is_zero()) return 0.0;
  if (mu.has_atoms()) return kInf;
  return potential_integral(mu, mu, gamma, params, quad);
}

double mutual_energy(const RadonMeasure& sigma, const RadonMeasure& mu, double gamma, double q,
                     const ProblemParams& params, const QuadratureConfig& quad) {
  check_mutual_range(gamma, q, params);
  return potential_integral(sigma, mu, gamma + q, params, quad);
}

double sigma_energy(const RadonMeasure& sigma, double gamma, double q, const ProblemParams& params,
                    const QuadratureConfig& quad) {
  check_mutual_range(gamma, q, params);
  const double e = (gamma + q) * (params.p - 1.0) / (params.p - 1.0 - q);
  if (sigma.is_zero()) return 0.0;
  if (sigma.has_atoms()) return kInf;
  return potential_integral(sigma, sigma, e, params, quad);
}

InequalityReport check_mutual_energy_estimate(const RadonMeasure& sigma, const RadonMeasure& mu, double gamma,
                                              double q, const ProblemParams& params, const QuadratureConfig& quad,
                                              double bound) {
  check_mutual_range(gamma, q, params);
  const double pm1 = params.p - 1.0;
  const auto w_mu = profile_for(sigma, mu, params, quad);
  const double lhs = integrate_power(sigma, mu, w_mu, gamma + q, params, quad);
  double e_mu = 0.0;
  if (gamma == 0.0) {
    e_mu = mu.total_mass();
  } else if (mu.has_atoms()) {
    e_mu = kInf;
  } else if (!mu.is_zero()) {
    e_mu = integrate_power(mu, mu, w_mu ? w_mu : profile_for(mu, mu, params, quad), gamma, params, quad);
  }
  const double e_sigma = sigma_energy(sigma, gamma, q, params, quad);
  const double rhs = safe_pow(e_mu, (gamma + q) / (pm1 + gamma)) * safe_pow(e_sigma, (pm1 - q) / (pm1 + gamma));
  return make_report("mutual_energy_estimate", lhs, rhs, bound, describe(params, gamma, q));
}

InequalityReport check_quasi_triangle(const RadonMeasure& mu, const RadonMeasure& nu, double gamma,
                                      const ProblemParams& params, const QuadratureConfig& quad, double bound) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::ExponentError, "quasi-triangle check needs gamma > 0");
  const double lhs = wolff_energy(add(mu, nu), gamma, params, quad);
  const double rhs = wolff_energy(mu, gamma, params, quad) + wolff_energy(nu, gamma, params, quad);
  auto r = make_report("quasi_triangle", lhs, rhs, bound, describe(params, gamma, 0.0));
  // Lower direction: E(μ) + E(ν) <= E(μ+ν) since W(μ+ν) >= Wμ, Wν.
  if (!r.vacuous) r.passed = r.passed && rhs <= lhs * (1.0 + 1e-9);
  return r;
}

InequalityReport check_picone_caccioppoli(const RadialFunction& u, const RadialFunction& v, const RadonMeasure& nu_v,
                                          const ProblemParams& params, const QuadratureConfig& quad, double tol) {
  const double p = params.p;
  const double rhs = dirichlet_energy(u, params, 1.0);
  if (!std::isfinite(rhs)) throw Error(ErrorCode::InfiniteEnergy, "test function has infinite p-energy");
  Integrand g;
  g.radial = [&](double r) {
    const double uu = r > 0.0 ? u(r) : u.center_value();
    const double vv = r > 0.0 ? v(r) : v.center_value();
    if (uu == 0.0) return 0.0;
    if (std::isinf(vv)) return 0.0;
    return std::pow(uu, p) * std::pow(vv, 1.0 - p);
  };
  const double lhs = integrate_against(nu_v, g, quad.rel_tol);
  auto r = make_report("picone_caccioppoli", lhs, rhs, 1.0 + tol, describe(params, 1.0, 0.0));
  return r;
}

RadonMeasure weighted_measure(const RadonMeasure& sigma, const std::function<double(double)>& f) {
  std::vector<MeasureComponent> parts;
  for (const auto& c : sigma.components()) {
    if (const auto* a = std::get_if<Atom>(&c)) {
      parts.push_back(Atom{a->location, a->weight * f(norm(a->location))});
    } else if (const auto* s = std::get_if<SphericalShell>(&c)) {
      parts.push_back(SphericalShell{s->radius, s->mass * f(s->radius)});
    } else {
      const auto& d = std::get<RadialDensity>(c);
      const auto prof = d.profile;
      std::vector<double> bps(prof->breakpoints().begin(), prof->breakpoints().end());
      auto fn = [prof, f](double s) { return (*prof)(s) * f(s); };
      auto weighted = std::make_shared<const DensityProfile>(prof->dim(), std::move(fn), prof->support(),
                                                             std::move(bps), prof->label() + "*f");
      parts.push_back(RadialDensity{std::move(weighted), d.weight});
    }
  }
  return RadonMeasure(sigma.dim(), std::move(parts));
}

InequalityReport check_weighted_norm(const RadonMeasure& sigma, const std::function<double(double)>& f, double gamma,
                                     double q, const ProblemParams& params, const QuadratureConfig& quad,
                                     double bound) {
  if (!(q > 0.0)) throw Error(ErrorCode::ExponentError, "weighted norm inequality needs q > 0");
  check_mutual_range(gamma, q, params);
  const double gq = gamma + q;
  const auto fsigma = weighted_measure(sigma, f);
  const double lhs = safe_pow(potential_integral(sigma, fsigma, gq, params, quad), 1.0 / gq);
  Integrand g;
  g.radial = [&](double r) { return std::pow(f(r), gq / q); };
  const double f_norm = integrate_against(sigma, g, quad.rel_tol);
  const double rhs = safe_pow(f_norm, q / (gq * (params.p - 1.0)));
  return make_report("weighted_norm", lhs, rhs, bound, describe(params, gamma, q));
}

}  // namespace wolfflab
