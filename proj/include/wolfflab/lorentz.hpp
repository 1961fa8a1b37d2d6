#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "wolfflab/energy.hpp"
#include "wolfflab/measure.hpp"
#include "wolfflab/params.hpp"
#include "wolfflab/radial_function.hpp"

namespace wolfflab {

/// Decreasing rearrangement f*(t) of a radial profile, stored as a profile in
/// the volume variable t (same interpolation and power-law head/tail rules).
struct RearrangedProfile {
  RadialFunction fstar;

  std::span<const double> t_grid() const { return fstar.radii(); }
  std::span<const double> values() const { return fstar.values(); }
  double operator()(double t) const { return fstar(t); }
  /// "t,fstar" rows.
  void write_csv(std::ostream& out) const;
};

/// f*(t) = inf{α > 0 : |{u > α}| <= t}. Nonincreasing profiles map through
/// t = ω_n r^n exactly; others go through the distribution function.
RearrangedProfile rearrange(const RadialFunction& u, const ProblemParams& params);

/// (∫_0^∞ (t^{1/r} f*(t))^ρ dt/t)^{1/ρ}, or sup_t t^{1/r} f*(t) for ρ = +inf.
double lorentz_norm(const RearrangedProfile& f, double r, double rho);
double lorentz_norm(const RadialFunction& u, double r, double rho, const ProblemParams& params);

/// lhs = ‖W_{1,p}μ‖_{L^{r,ρ}} at the exponents of `params`, rhs = E_γ(μ)^{1/(p-1+γ)}.
InequalityReport check_lorentz_embedding(const RadonMeasure& mu, double gamma, const ProblemParams& params,
                                         const QuadratureConfig& quad, double bound = kDefaultBound);

enum class DensityRole { Sigma, Mu };

struct DensityConditionReport {
  DensityRole role = DensityRole::Mu;
  double s = 0;
  double t = 0;
  double s_target = 0;
  double t_target = 0;
  /// L^{s,t} ⊂ L^{s_target,t_target}: same s and t <= t_target.
  bool dominates = false;
  bool has_instance = false;
  double instance_norm = 0;    // ‖f‖_{L^{s,t}}
  double instance_energy = 0;  // energy the role requires to be finite
  bool implication_holds = true;
};

/// Target Lorentz exponents (s, t) for a density of σ_m (role Sigma, q = q[m])
/// or of μ (role Mu).
std::pair<double, double> density_targets(DensityRole role, const ProblemParams& params, std::size_t m = 0);

/// Compares (s, t) against the targets; with `instance`, also checks
/// "‖f‖_{L^{s,t}} < ∞ ⇒ required energy < ∞" for that radial density.
DensityConditionReport check_density_conditions(double s, double t, DensityRole role, const ProblemParams& params,
                                                const QuadratureConfig& quad,
                                                const std::shared_ptr<const DensityProfile>& instance = nullptr,
                                                std::size_t m = 0);

/// The density f(|x|) as a profile on the quadrature grid, jumps kept as repeated radii.
RadialFunction density_function(const DensityProfile& f, const QuadratureConfig& quad);

}  // namespace wolfflab
