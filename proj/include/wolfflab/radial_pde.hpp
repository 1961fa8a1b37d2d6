#pragma once

#include <vector>

#include "wolfflab/measure.hpp"
#include "wolfflab/params.hpp"
#include "wolfflab/radial_function.hpp"

namespace wolfflab {

/// Radii on which radial solutions for `nu` are stored: the configured log
/// grid plus the measure's breakpoints, with shell radii repeated so that
/// the slope jump is kept.
std::vector<double> solution_grid(const RadonMeasure& nu, const QuadratureConfig& quad);

/// Radial p-superharmonic potential with Riesz measure `nu` and zero limit at
/// infinity:  u(r) = ∫_r^∞ (ν(B(0,s)) / (n ω_n s^{n-1}))^{1/(p-1)} ds.
/// Node slopes are exact (u' = -integrand).
RadialFunction solve_radial_p_laplace(const RadonMeasure& nu, const ProblemParams& params,
                                      const QuadratureConfig& quad);
/// Same on caller-supplied radii, which should contain solution_grid(nu)'s breakpoints.
RadialFunction solve_radial_p_laplace(const RadonMeasure& nu, const ProblemParams& params,
                                      const QuadratureConfig& quad, std::vector<double> radii);

/// n ω_n r^{n-1} |u'(r)|^{p-1} at every node (left limits at repeated radii).
std::vector<double> riesz_ball_masses(const RadialFunction& u, const ProblemParams& params);

/// Radial measure whose centered ball masses at the nodes equal
/// riesz_ball_masses(u): piecewise-constant density between nodes, shells at
/// repeated radii, and an atom at the origin when u(0) = +inf.
RadonMeasure riesz_measure_of(const RadialFunction& u, const ProblemParams& params);

/// ∫ |u'|^p u^{γ-1} dx; +inf when the integral diverges at 0 or ∞.
double dirichlet_energy(const RadialFunction& u, const ProblemParams& params, double weight_gamma);

}  // namespace wolfflab
