#pragma once

#include <limits>
#include <vector>

#include "wolfflab/grid.hpp"

namespace wolfflab {

/// Which energy regime a problem is posed in. `GammaInfinity` is a tag, never
/// an arithmetic path: no exponent is ever formed from an infinite gamma.
enum class GammaMode { FiniteGamma, GammaInfinity, GammaZero };

const char* to_string(GammaMode mode);

/// Problem data for -Δ_p u = Σ_m σ_m u^{q_m} + μ on R^n.
struct ProblemParams {
  int n = 3;
  double p = 2.0;
  std::vector<double> q;
  double gamma = 1.0;
  GammaMode mode = GammaMode::FiniteGamma;

  /// Decay exponent (n-p)/(p-1) of the fundamental solution.
  double tail_exponent() const { return (n - p) / (p - 1.0); }

  static ProblemParams finite(int n, double p, std::vector<double> q, double gamma) {
    return {n, p, std::move(q), gamma, GammaMode::FiniteGamma};
  }
  static ProblemParams infinity(int n, double p, std::vector<double> q) {
    return {n, p, std::move(q), std::numeric_limits<double>::infinity(), GammaMode::GammaInfinity};
  }
  static ProblemParams zero(int n, double p, std::vector<double> q) {
    return {n, p, std::move(q), 0.0, GammaMode::GammaZero};
  }
};

/// Exponents derived from (n, p, q_m, gamma) for finite gamma.
struct ExponentSet {
  double lorentz_r = 0;    // n(p-1+γ)/(n-p)
  double lorentz_rho = 0;  // p-1+γ
  std::vector<double> sigma_energy_exp;      // (γ+q_m)(p-1)/(p-1-q_m)
  std::vector<double> mutual_lhs_exp;        // γ+q_m
  std::vector<double> mutual_rhs_exp_mu;     // (γ+q_m)/(p-1+γ)
  std::vector<double> mutual_rhs_exp_sigma;  // (p-1-q_m)/(p-1+γ)
  double tail_exp = 0;                       // (n-p)/(p-1)
};

struct QuadratureConfig {
  double r_min = 1e-6;
  double r_max = 1e6;
  int points_per_decade = 64;
  double rel_tol = 1e-10;
  int max_iter = 200;
  double conv_tol = 1e-8;

  void validate() const;
  LogGrid grid() const { return LogGrid(r_min, r_max, points_per_decade); }
  /// Same configuration with the grid density doubled.
  QuadratureConfig refined() const;
};

/// Returns `params` unchanged when 1 < p < n, 0 < q_m < p-1 and gamma agrees with mode.
ProblemParams validate(ProblemParams params);

ExponentSet derive_exponents(const ProblemParams& params);

/// Volume ω_n of the unit ball in R^n.
double unit_ball_volume(int n);
/// Surface area n ω_n of the unit sphere in R^n.
double unit_sphere_area(int n);

}  // namespace wolfflab
