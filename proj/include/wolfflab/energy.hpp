#pragma once

#include <functional>
#include <limits>
#include <string>

#include "wolfflab/measure.hpp"
#include "wolfflab/params.hpp"
#include "wolfflab/radial_function.hpp"

namespace wolfflab {

inline constexpr double kDefaultBound = 1e3;

/// Two sides of an inequality lhs <= bound * rhs.
struct InequalityReport {
  std::string name;
  double lhs = 0;
  double rhs = 0;
  double ratio = std::numeric_limits<double>::quiet_NaN();  // lhs/rhs when both finite and rhs > 0
  double empirical_constant = std::numeric_limits<double>::quiet_NaN();
  double bound = kDefaultBound;
  bool passed = false;
  bool vacuous = false;  // rhs = +inf
  std::string instance;
};

InequalityReport make_report(std::string name, double lhs, double rhs, double bound, std::string instance = {});

/// ∫ (W_{1,p}μ)^e dσ. Radial parts of σ need a radial μ (NonRadialMeasure otherwise).
double potential_integral(const RadonMeasure& sigma, const RadonMeasure& mu, double e, const ProblemParams& params,
                          const QuadratureConfig& quad);
/// Same with a precomputed radial profile `w_mu` of W_{1,p}μ.
double potential_integral(const RadonMeasure& sigma, const RadonMeasure& mu, const RadialFunction& w_mu, double e,
                          const ProblemParams& params, const QuadratureConfig& quad);

/// ∫ (W_{1,p}μ)^γ dμ; total mass for γ = 0, +inf when μ has atoms and γ > 0.
double wolff_energy(const RadonMeasure& mu, double gamma, const ProblemParams& params, const QuadratureConfig& quad);

/// ∫ (W_{1,p}μ)^{γ+q} dσ for -γ < q < p-1.
double mutual_energy(const RadonMeasure& sigma, const RadonMeasure& mu, double gamma, double q,
                     const ProblemParams& params, const QuadratureConfig& quad);

/// ∫ (W_{1,p}σ)^{(γ+q)(p-1)/(p-1-q)} dσ.
double sigma_energy(const RadonMeasure& sigma, double gamma, double q, const ProblemParams& params,
                    const QuadratureConfig& quad);

/// lhs = mutual_energy, rhs = E(μ)^{(γ+q)/(p-1+γ)} · sigma_energy^{(p-1-q)/(p-1+γ)}.
InequalityReport check_mutual_energy_estimate(const RadonMeasure& sigma, const RadonMeasure& mu, double gamma,
                                              double q, const ProblemParams& params, const QuadratureConfig& quad,
                                              double bound = kDefaultBound);

/// lhs = E(μ+ν), rhs = E(μ) + E(ν). Passes when rhs <= lhs (monotonicity)
/// and lhs <= bound * rhs.
InequalityReport check_quasi_triangle(const RadonMeasure& mu, const RadonMeasure& nu, double gamma,
                                      const ProblemParams& params, const QuadratureConfig& quad,
                                      double bound = kDefaultBound);

/// lhs = ∫ u^p v^{1-p} dν_v, rhs = ∫ |∇u|^p dx; passes when lhs <= rhs (1 + tol).
InequalityReport check_picone_caccioppoli(const RadialFunction& u, const RadialFunction& v, const RadonMeasure& nu_v,
                                          const ProblemParams& params, const QuadratureConfig& quad,
                                          double tol = 1e-4);

/// f σ for a radial weight f.
RadonMeasure weighted_measure(const RadonMeasure& sigma, const std::function<double(double)>& f);

/// lhs = ‖W_{1,p}(f σ)‖_{L^{γ+q}(σ)}, rhs = ‖f‖_{L^{(γ+q)/q}(σ)}^{1/(p-1)}.
InequalityReport check_weighted_norm(const RadonMeasure& sigma, const std::function<double(double)>& f, double gamma,
                                     double q, const ProblemParams& params, const QuadratureConfig& quad,
                                     double bound = kDefaultBound);

}  // namespace wolfflab
