#pragma once

#include <span>
#include <vector>

#include "wolfflab/measure.hpp"
#include "wolfflab/params.hpp"
#include "wolfflab/radial_function.hpp"

namespace wolfflab {

struct PotentialValue {
  double value = 0;  // +inf when the integral diverges
  double quad_error_estimate = 0;
};

/// W_{1,p}μ(x) = ∫_0^∞ (μ(B(x,r)) / r^{n-p})^{1/(p-1)} dr/r.
PotentialValue wolff(const RadonMeasure& mu, std::span<const double> x, const ProblemParams& params,
                     const QuadratureConfig& quad);

/// The same integral over (0, R).
PotentialValue truncated_wolff(const RadonMeasure& mu, std::span<const double> x, double R,
                               const ProblemParams& params, const QuadratureConfig& quad);

/// Largest sampled value of W_{1,p}μ on supp μ; a lower bound of the true sup.
double wolff_sup_on_support(const RadonMeasure& mu, const ProblemParams& params, const QuadratureConfig& quad,
                            int sample_budget = 64);

/// μ restricted to {W_{1,p}μ <= k} ∩ closed B(0, 2^k).
RadonMeasure cutoff_measure(const RadonMeasure& mu, int k, const ProblemParams& params,
                            const QuadratureConfig& quad);

/// W_{1,p}μ at each point, parallel over points.
std::vector<PotentialValue> wolff_batch(const RadonMeasure& mu, std::span<const Point> points,
                                        const ProblemParams& params, const QuadratureConfig& quad);
std::vector<PotentialValue> wolff_batch_serial(const RadonMeasure& mu, std::span<const Point> points,
                                               const ProblemParams& params, const QuadratureConfig& quad);

/// Radii used for radial Wolff profiles: a quarter-density log grid plus the
/// measure's breakpoints.
std::vector<double> wolff_profile_grid(const RadonMeasure& mu, const QuadratureConfig& quad);

/// r -> W_{1,p}μ(r e_1) for radial μ, parallel over grid nodes.
RadialFunction wolff_profile(const RadonMeasure& mu, const ProblemParams& params, const QuadratureConfig& quad);
RadialFunction wolff_profile_serial(const RadonMeasure& mu, const ProblemParams& params,
                                    const QuadratureConfig& quad);

}  // namespace wolfflab
