#include "wolfflab/params.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "wolfflab/errors.hpp"

namespace wolfflab {

namespace {
// Below this relative gap the exponent (p-1)/(p-1-q) exceeds 1e9.
constexpr double kMinSublinearGap = 1e-9;
}  // namespace

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionError: return "DimensionError";
    case ErrorCode::ExponentError: return "ExponentError";
    case ErrorCode::ModeMismatch: return "ModeMismatch";
    case ErrorCode::NegativeRadius: return "NegativeRadius";
    case ErrorCode::NegativeScale: return "NegativeScale";
    case ErrorCode::SignError: return "SignError";
    case ErrorCode::NonpositiveR: return "NonpositiveR";
    case ErrorCode::ZeroMeasure: return "ZeroMeasure";
    case ErrorCode::NonRadialMeasure: return "NonRadialMeasure";
    case ErrorCode::DivergentTail: return "DivergentTail";
    case ErrorCode::NonMonotoneProfile: return "NonMonotoneProfile";
    case ErrorCode::InfiniteEnergy: return "InfiniteEnergy";
    case ErrorCode::SubsolutionSearchFailed: return "SubsolutionSearchFailed";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::MonotonicityViolated: return "MonotonicityViolated";
    case ErrorCode::UnboundedCondition: return "UnboundedCondition";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

const char* to_string(GammaMode mode) {
  switch (mode) {
    case GammaMode::FiniteGamma: return "finite";
    case GammaMode::GammaInfinity: return "infinity";
    case GammaMode::GammaZero: return "zero";
  }
  return "unknown";
}

ProblemParams validate(ProblemParams params) {
  if (params.n < 2) {
    throw Error(ErrorCode::DimensionError, "dimension n must be at least 2");
  }
  if (!(params.p > 1.0) || !(params.p < params.n)) {
    std::ostringstream os;
    os << "need 1 < p < n, got p=" << params.p << " n=" << params.n
       << " (no nontrivial supersolution exists for p >= n)";
    throw Error(ErrorCode::DimensionError, os.str());
  }
  for (double qm : params.q) {
    if (!(qm > 0.0) || !(qm < params.p - 1.0)) {
      std::ostringstream os;
      os << "growth exponent q=" << qm << " outside (0, p-1) = (0, " << params.p - 1.0 << ")";
      throw Error(ErrorCode::ExponentError, os.str());
    }
    if (params.p - 1.0 - qm < kMinSublinearGap * (params.p - 1.0)) {
      std::ostringstream os;
      os.precision(17);
      os << "growth exponent q=" << qm << " is numerically indistinguishable from p-1";
      throw Error(ErrorCode::ExponentError, os.str());
    }
  }
  switch (params.mode) {
    case GammaMode::FiniteGamma:
      if (!(params.gamma > 0.0) || !std::isfinite(params.gamma)) {
        throw Error(ErrorCode::ModeMismatch, "finite mode requires 0 < gamma < inf");
      }
      break;
    case GammaMode::GammaZero:
      if (params.gamma != 0.0) throw Error(ErrorCode::ModeMismatch, "zero mode requires gamma = 0");
      break;
    case GammaMode::GammaInfinity:
      if (!(std::isinf(params.gamma) && params.gamma > 0)) {
        throw Error(ErrorCode::ModeMismatch, "infinity mode requires gamma = +inf");
      }
      break;
  }
  return params;
}

ExponentSet derive_exponents(const ProblemParams& params) {
  if (params.mode != GammaMode::FiniteGamma) {
    throw Error(ErrorCode::ModeMismatch, "exponents are defined only for finite positive gamma");
  }
  const double n = params.n;
  const double p = params.p;
  const double g = params.gamma;
  ExponentSet e;
  e.lorentz_r = n * (p - 1 + g) / (n - p);
  e.lorentz_rho = p - 1 + g;
  e.tail_exp = (n - p) / (p - 1);
  for (double q : params.q) {
    e.sigma_energy_exp.push_back((g + q) * (p - 1) / (p - 1 - q));
    e.mutual_lhs_exp.push_back(g + q);
    e.mutual_rhs_exp_mu.push_back((g + q) / (p - 1 + g));
    e.mutual_rhs_exp_sigma.push_back((p - 1 - q) / (p - 1 + g));
  }
  return e;
}

void QuadratureConfig::validate() const {
  if (!(r_min > 0) || !(r_max > r_min)) {
    throw Error(ErrorCode::InvalidArgument, "quadrature grid needs 0 < r_min < r_max");
  }
  if (!(rel_tol > 0 && rel_tol < 1) || !(conv_tol > 0 && conv_tol < 1)) {
    throw Error(ErrorCode::InvalidArgument, "rel_tol and conv_tol must lie in (0, 1)");
  }
  if (points_per_decade < 8) {
    throw Error(ErrorCode::InvalidArgument, "points_per_decade must be at least 8");
  }
  if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be positive");
}

QuadratureConfig QuadratureConfig::refined() const {
  QuadratureConfig c = *this;
  c.points_per_decade *= 2;
  return c;
}

double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

double unit_sphere_area(int n) { return n * unit_ball_volume(n); }

}  // namespace wolfflab
