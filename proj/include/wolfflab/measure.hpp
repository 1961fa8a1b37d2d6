#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace wolfflab {

using Point = std::vector<double>;

/// Fraction of the unit sphere S^{n-1} on which the cosine to a fixed axis
/// exceeds t. Used for the part of a sphere |y| = s inside an off-center ball.
double cap_fraction(int n, double t);
/// Same, from 1 - t and 1 + t.
double cap_fraction(int n, double one_minus_t, double one_plus_t);
/// Fraction of the sphere |y| = s inside B(x, r) when |x| = a > 0.
double cap_fraction_at(int n, double a, double s, double r);

/// Immutable radial density f(|x|) on R^n together with its cumulative mass
/// table, so that centered ball masses cost one table lookup plus one
/// 15-point rule.
class DensityProfile {
 public:
  using Fn = std::function<double(double)>;

  /// `f` must be nonnegative and vanish for s > support. `breakpoints` lists
  /// radii where f is not smooth. Infinite supports get a power-law tail
  /// fitted at the end of the mass table.
  DensityProfile(int n, Fn f, double support, std::vector<double> breakpoints, std::string label,
                 bool allow_infinite_mass = false);

  /// value on the open ball B(0, radius), zero outside.
  static std::shared_ptr<const DensityProfile> indicator(int n, double radius, double value = 1.0);
  /// a (1 + (s/b)^2)^{-c}.
  static std::shared_ptr<const DensityProfile> bump(int n, double a, double b, double c);
  /// Piecewise-linear interpolation of samples (s_i, f_i); zero beyond the last sample.
  static std::shared_ptr<const DensityProfile> tabulated(int n, std::vector<double> s,
                                                         std::vector<double> f);
  /// Density constant on each shell [edges[i], edges[i+1]); edges[0] may be 0.
  static std::shared_ptr<const DensityProfile> piecewise_constant(int n, std::vector<double> edges,
                                                                  std::vector<double> values);

  double operator()(double s) const;
  /// Mass of the open centered ball B(0, s).
  double mass_within(double s) const;
  double total_mass() const { return total_mass_; }
  double support() const { return support_; }
  std::span<const double> breakpoints() const { return breakpoints_; }
  /// Radii enclosing 1%, 50% and 99% of the mass; quadrature split points.
  std::span<const double> scales() const { return scales_; }
  /// f ~ s^{-tail_exponent} past the mass table (0 for compact support).
  double tail_exponent() const { return tail_exponent_; }
  const std::string& label() const { return label_; }
  int dim() const { return n_; }
  /// f(s) |S^{n-1}| s^{n-1}: mass per unit radius.
  double radial_mass_density(double s) const;

 private:
  int n_;
  Fn f_;
  double support_;
  std::vector<double> breakpoints_;
  std::vector<double> scales_;
  std::string label_;
  double sphere_area_;
  std::vector<double> table_r_;
  std::vector<double> table_mass_;
  double tail_exponent_ = 0;  // f ~ s^{-tail_exponent} past the table end
  double total_mass_ = 0;
};

struct RadialDensity {
  std::shared_ptr<const DensityProfile> profile;
  double weight = 1.0;
};

struct Atom {
  Point location;
  double weight = 1.0;
};

/// Uniform surface measure of total mass `mass` on the sphere |x| = radius.
struct SphericalShell {
  double radius = 1.0;
  double mass = 1.0;
};

using MeasureComponent = std::variant<RadialDensity, Atom, SphericalShell>;

enum class MeasureKind { Zero, RadialDensity, Atom, SphericalShell, Sum };

/// Nonnegative Radon measure on R^n, stored as a flat sum of components.
class RadonMeasure {
 public:
  explicit RadonMeasure(int n) : n_(n) {}
  RadonMeasure(int n, std::vector<MeasureComponent> parts);

  static RadonMeasure density(std::shared_ptr<const DensityProfile> profile, double weight = 1.0);
  static RadonMeasure atom(Point location, double weight);
  static RadonMeasure dirac(int n, double weight = 1.0);
  static RadonMeasure shell(int n, double radius, double mass);

  int dim() const { return n_; }
  MeasureKind kind() const;
  std::span<const MeasureComponent> components() const { return parts_; }

  bool is_zero() const;
  /// True when every atom sits at the origin.
  bool is_radial() const;
  bool has_atoms() const;

  /// μ(B(center, radius)) for the open ball.
  double ball_mass(std::span<const double> center, double radius, double rel_tol = 1e-12) const;
  /// μ(B(0, radius)).
  double centered_mass(double radius) const;
  double total_mass() const;
  /// Smallest R with μ(B(0,R)) = μ(R^n) (closed-ball sense); +inf if unbounded.
  double support_radius() const;

  /// Radii |y| where the centered ball mass is not smooth (support edges,
  /// density kinks, shells, atoms at the origin excluded).
  std::vector<double> radial_breakpoints() const;
  /// Radii r where r -> μ(B(center, r)) is not smooth.
  std::vector<double> ball_breakpoints(std::span<const double> center) const;

 private:
  int n_;
  std::vector<MeasureComponent> parts_;
};

RadonMeasure scale(const RadonMeasure& mu, double lambda);
RadonMeasure add(const RadonMeasure& mu, const RadonMeasure& nu);

/// Integrand for ∫ g dμ. `radial` evaluates g at |x| and is required for
/// radial components; `pointwise` (optional) is used at atom locations.
struct Integrand {
  std::function<double(double)> radial;
  std::function<double(std::span<const double>)> pointwise;
  std::vector<double> breakpoints;
};

/// ∫ g dμ. Returns +inf when g = +inf on a set of positive μ-mass.
double integrate_against(const RadonMeasure& mu, const Integrand& g, double rel_tol);

/// Point at distance r from the origin on the first axis of R^n.
Point axis_point(int n, double r);
double norm(std::span<const double> x);

}  // namespace wolfflab
