#pragma once

#include <functional>
#include <span>
#include <vector>

#include "wolfflab/grid.hpp"

namespace wolfflab {

/// Radial profile u(|x|) sampled on increasing radii with a power-law tail
/// u(r) = A r^{-tau} beyond the last node.
///
/// Radii may repeat once to encode a jump (value or slope) at that radius;
/// the first copy carries the left limit and the second the right limit.
/// Between positive nodes the profile is a cubic Hermite interpolant in
/// (log r, log u); when slopes are not supplied they are five-point estimates
/// passed through a Hyman filter, so monotone data stay monotone.
class RadialFunction {
 public:
  RadialFunction() = default;
  /// `slopes` are du/dr at the nodes (exact derivatives) or empty.
  RadialFunction(std::vector<double> radii, std::vector<double> values, std::vector<double> slopes,
                 double tail_coeff, double tail_exp, double center_value);

  /// Samples `u` (and `du` when given) on the grid; tail fitted from the last node.
  static RadialFunction sample(std::span<const double> radii, const std::function<double(double)>& u,
                               const std::function<double(double)>& du, double tail_exp,
                               double center_value);
  static RadialFunction zero(std::span<const double> radii);
  /// value on B(0, radius), zero outside; the radius becomes a jump node.
  static RadialFunction indicator(std::span<const double> radii, double radius, double value = 1.0);

  double operator()(double r) const;
  /// du/dr of the interpolant.
  double derivative(double r) const;

  std::span<const double> radii() const { return r_; }
  std::span<const double> values() const { return u_; }
  /// du/dr at the nodes.
  std::span<const double> slopes() const { return du_; }
  bool has_exact_slopes() const { return exact_slopes_; }
  double tail_coeff() const { return tail_coeff_; }
  double tail_exp() const { return tail_exp_; }
  double center_value() const { return center_; }
  std::size_t size() const { return r_.size(); }
  bool empty() const { return r_.empty(); }

  bool is_nonincreasing(double rel_tol = 1e-12) const;
  /// Max of the node values and the center value.
  double sup() const;

  /// c * u.
  RadialFunction scaled(double c) const;
  /// Node-wise maximum of two profiles on the same radii.
  static RadialFunction max(const RadialFunction& a, const RadialFunction& b);

 private:
  void estimate_slopes();
  std::size_t cell_of(double r) const;
  double hermite(std::size_t k, double r, bool derivative) const;

  std::vector<double> r_;
  std::vector<double> u_;
  std::vector<double> du_;
  bool exact_slopes_ = false;
  double tail_coeff_ = 0;
  double tail_exp_ = 0;
  double center_ = 0;
};

}  // namespace wolfflab
