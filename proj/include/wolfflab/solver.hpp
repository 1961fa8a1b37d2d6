#pragma once

#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "wolfflab/energy.hpp"
#include "wolfflab/errors.hpp"
#include "wolfflab/measure.hpp"
#include "wolfflab/params.hpp"
#include "wolfflab/radial_function.hpp"

namespace wolfflab {

/// One step of the monotone scheme.
struct IterationState {
  int j = 0;
  double residual = 0;        // sup_i |u_j - u_{j-1}| / max(u_j, 1e-300)
  double riesz_mismatch = 0;  // ball masses of ν[u_j] against Σσ_m u_j^{q_m} + μ
  double min_step = 0;        // min_i (u_j - u_{j-1}) / max(1, u_{j-1}); >= -1e-12 when monotone
  double sup_norm = 0;        // u_j(0)
  std::vector<double> sigma_energies;  // ∫ u_j^{γ+q_m} dσ_m (finite gamma only)
};

/// Wolff fixed point w = W(w^q σ + μ) behind the gamma = 0 solver.
struct FixedPointInfo {
  RadialFunction w;
  bool converged = false;  // false: "hypothesis not met"
  int iterations = 0;
  double residual = 0;
  double lq_mass = 0;      // ∫ w^q dσ
};

struct Solution {
  RadialFunction u;
  RadonMeasure riesz{3};  // Σ σ_m u^{q_m} + μ
  double residual_final = std::numeric_limits<double>::quiet_NaN();
  double riesz_mismatch = std::numeric_limits<double>::quiet_NaN();
  double generalized_energy = std::numeric_limits<double>::quiet_NaN();  // ∫ u^γ dν[u]
  double lorentz_r = std::numeric_limits<double>::quiet_NaN();
  double lorentz_rho = std::numeric_limits<double>::quiet_NaN();
  double lorentz_norm = std::numeric_limits<double>::quiet_NaN();
  double lower_bound_ratio = std::numeric_limits<double>::quiet_NaN();
  int iterations_used = 0;
  bool converged = false;
  double min_step = std::numeric_limits<double>::infinity();  // worst monotonicity slack over all steps

  bool bounded = false;
  double sup_norm = std::numeric_limits<double>::quiet_NaN();
  double sup_recursion_constant = std::numeric_limits<double>::quiet_NaN();  // max_j ‖u_{j+1}‖ / (Σ‖u_j‖^{q/(p-1)} S_σ + S_μ)

  std::optional<FixedPointInfo> intrinsic;
  std::vector<IterationState> trace;

  /// "r,u,du" rows.
  void write_csv(std::ostream& out) const;
};

class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& what, Solution partial)
      : Error(ErrorCode::NotConverged, what), partial_(std::make_shared<const Solution>(std::move(partial))) {}
  const Solution& partial() const { return *partial_; }

 private:
  std::shared_ptr<const Solution> partial_;
};

enum class StartFrom { Auto, Zero, Subsolution };

struct SolveOptions {
  StartFrom start = StartFrom::Auto;  // Auto: subsolution when μ = 0, else zero
  double c_init = 1.0;
  bool wolff_diagnostics = true;      // lower_bound_ratio needs Wolff profiles of the data
};

/// Σ_m σ_m u^{q_m} + μ.
RadonMeasure source_measure(const RadialFunction& u, const std::vector<RadonMeasure>& sigma,
                            const std::vector<double>& q, const RadonMeasure& mu);

/// Common radii for all iterates of a problem.
std::vector<double> problem_grid(const std::vector<RadonMeasure>& sigma, const RadonMeasure& mu,
                                 const QuadratureConfig& quad);

/// c v^{(p-1)/(p-1-q)} with -Δ_p v = ((p-1-q)/(p-1))^{p-1} σ, c halved from c_init
/// until ν[u0] <= σ u0^q ball-mass-wise at every node.
RadialFunction initial_subsolution(const RadonMeasure& sigma, double q, const ProblemParams& params,
                                   const QuadratureConfig& quad, double c_init = 1.0);
RadialFunction initial_subsolution(const RadonMeasure& sigma, double q, const ProblemParams& params,
                                   const QuadratureConfig& quad, double c_init, std::vector<double> radii);

/// Solution of -Δ_p u = Σ σ_m u_prev^{q_m} + μ on problem_grid.
RadialFunction iterate_once(const RadialFunction& u_prev, const std::vector<RadonMeasure>& sigma,
                            const std::vector<double>& q, const RadonMeasure& mu, const ProblemParams& params,
                            const QuadratureConfig& quad);

/// Minimal solution by monotone iteration (q taken from params.q).
Solution solve_minimal(const std::vector<RadonMeasure>& sigma, const RadonMeasure& mu, const ProblemParams& params,
                       const QuadratureConfig& quad, const SolveOptions& opts = {});

/// Solutions for the cut data 1_{Ω(·,k)}· for k = 1..k_max, nondecreasing in k.
std::vector<Solution> solve_with_exhaustion(const std::vector<RadonMeasure>& sigma, const RadonMeasure& mu,
                                            const ProblemParams& params, const QuadratureConfig& quad, int k_max,
                                            const SolveOptions& opts = {});

/// Bounded solution under sup_{supp} W σ_m, sup_{supp} W μ < ∞ (GammaInfinity).
Solution solve_bounded_endpoint(const std::vector<RadonMeasure>& sigma, const RadonMeasure& mu,
                                const ProblemParams& params, const QuadratureConfig& quad,
                                const SolveOptions& opts = {});

/// GammaZero: Wolff fixed point w = W(w^q σ + μ) from w_0 = (Wσ)^{(p-1)/(p-1-q)},
/// then the minimal solution u; the weak Lorentz norm of u goes in lorentz_norm.
Solution intrinsic_fixed_point(const RadonMeasure& sigma, double q, const RadonMeasure& mu,
                               const ProblemParams& params, const QuadratureConfig& quad);

/// Ratios u(x)/W^Rν(x) (lower) and u(x)/(u(|x|+R) + W^{2R}ν(x)) (upper).
struct SandwichSample {
  double r = 0;
  double R = 0;
  double lower_ratio = 0;
  double upper_ratio = 0;
};
std::vector<SandwichSample> km_sandwich(const RadialFunction& u, const RadonMeasure& nu, const ProblemParams& params,
                                        const QuadratureConfig& quad, int samples, unsigned long long seed);

/// ∫ |∇ min(u, l)|^p dx.
double truncated_energy(const RadialFunction& u, double level, const ProblemParams& params);

/// |∫|∇u|^p dx - Σ∫u^{1+q_m}dσ_m - ∫u dμ| relative to the sum; needs no gamma mode.
InequalityReport energy_identity_report(const Solution& sol, const std::vector<RadonMeasure>& sigma,
                                        const RadonMeasure& mu, const ProblemParams& params,
                                        const QuadratureConfig& quad);

std::vector<InequalityReport> verify_solution(const Solution& sol, const std::vector<RadonMeasure>& sigma,
                                              const RadonMeasure& mu, const ProblemParams& params,
                                              const QuadratureConfig& quad, unsigned long long seed = 1);

}  // namespace wolfflab
