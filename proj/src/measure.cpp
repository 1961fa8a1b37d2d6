#include "wolfflab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "wolfflab/errors.hpp"
#include "wolfflab/grid.hpp"
#include "wolfflab/params.hpp"
#include "wolfflab/quadrature.hpp"

namespace wolfflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTableStart = 1e-8;
constexpr double kTableEnd = 1e8;
constexpr int kTablePointsPerDecade = 32;
constexpr double kTableTol = 1e-13;

double sine_power_integral_full(int m) {
  double v = (m % 2 == 0) ? std::numbers::pi : 2.0;
  for (int k = (m % 2 == 0) ? 2 : 3; k <= m; k += 2) v *= (k - 1.0) / k;
  return v;
}

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

void check_weight(double w, const char* what) {
  if (!(w >= 0.0) || !std::isfinite(w)) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be finite and nonnegative");
  }
}

double density_ball_mass(const DensityProfile& prof, double a, double r, double rel_tol) {
  if (r <= 0.0) return 0.0;
  if (a == 0.0) return prof.mass_within(r);
  const int n = prof.dim();
  double mass = (r > a) ? prof.mass_within(r - a) : 0.0;
  const double lo = std::abs(r - a);
  const double hi = std::min(r + a, prof.support());
  if (!(hi > lo)) return mass;
  std::vector<double> pieces{lo, hi};
  std::vector<double> extra(prof.breakpoints().begin(), prof.breakpoints().end());
  pieces = merge_breakpoints(pieces, extra);
  // s = u (v/u)^{(1 - cos θ)/2} smooths the (s - s0)^{(n-1)/2} cap behaviour
  // at the piece ends and follows power-law decay inside; linear when u = 0.
  const double abs_tol = 1e-15 * prof.mass_within(hi) / static_cast<double>(pieces.size());
  for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
    const double u = pieces[i];
    const double v = pieces[i + 1];
    if (!(v > u)) continue;
    const double L = u > 0.0 ? std::log(v / u) : 0.0;
    const double half = 0.5 * (v - u);
    auto integrand = [&](double th) {
      double s = 0.0;
      double ds = 0.0;
      if (u > 0.0) {
        s = u * std::exp(0.5 * L * (1.0 - std::cos(th)));
        ds = 0.5 * L * s * std::sin(th);
      } else {
        s = u + half * (1.0 - std::cos(th));
        ds = half * std::sin(th);
      }
      return prof.radial_mass_density(s) * cap_fraction_at(n, a, s, r) * ds;
    };
    mass += quad::adaptive(integrand, 0.0, std::numbers::pi, rel_tol, abs_tol).value;
  }
  return mass;
}

}  // namespace

double cap_fraction(int n, double one_minus_t, double one_plus_t) {
  if (one_minus_t <= 0.0) return 0.0;
  if (one_plus_t <= 0.0) return 1.0;
  if (n == 3) return 0.5 * one_minus_t;
  if (one_minus_t > one_plus_t) return 1.0 - cap_fraction(n, one_plus_t, one_minus_t);
  const double theta = 2.0 * std::asin(std::sqrt(0.5 * one_minus_t));
  const int m = n - 2;
  if (m == 0) return theta / std::numbers::pi;
  double part = 0.0;
  if (theta <= 0.5) {
    // Keeps relative accuracy for tiny caps, where the recursion cancels.
    part = quad::gauss10([m](double phi) { return ipow(std::sin(phi), m); }, 0.0, theta);
  } else {
    const double t = 1.0 - one_minus_t;
    const double sn = std::sqrt(one_minus_t * one_plus_t);
    part = (m % 2 == 0) ? theta : one_minus_t;
    for (int k = (m % 2 == 0) ? 2 : 3; k <= m; k += 2) part = -ipow(sn, k - 1) * t / k + (k - 1.0) / k * part;
  }
  return part / sine_power_integral_full(m);
}

double cap_fraction(int n, double t) { return cap_fraction(n, 1.0 - t, 1.0 + t); }

double cap_fraction_at(int n, double a, double s, double r) {
  const double den = 2.0 * a * s;
  const double d = r - a;  // exact when r and a are close
  return cap_fraction(n, (r + a - s) * (s + d) / den, (s - d) * (s + a + r) / den);
}

Point axis_point(int n, double r) {
  Point x(static_cast<std::size_t>(n), 0.0);
  x[0] = r;
  return x;
}

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

// --- DensityProfile ---------------------------------------------------------

DensityProfile::DensityProfile(int n, Fn f, double support, std::vector<double> breakpoints,
                               std::string label, bool allow_infinite_mass)
    : n_(n), f_(std::move(f)), support_(support), label_(std::move(label)),
      sphere_area_(unit_sphere_area(n)) {
  if (n < 2) throw Error(ErrorCode::DimensionError, "density needs n >= 2");
  if (!(support > 0.0)) throw Error(ErrorCode::InvalidArgument, "density support must be positive");
  for (double b : breakpoints) {
    if (b > 0.0 && b < support && std::isfinite(b)) breakpoints_.push_back(b);
  }
  std::sort(breakpoints_.begin(), breakpoints_.end());
  breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());

  const double end = std::isfinite(support) ? support : kTableEnd;
  const double start = std::min(kTableStart, end * 1e-3);
  const LogGrid base(start, end, kTablePointsPerDecade);
  auto nodes = merge_breakpoints(base.nodes(), breakpoints_);
  nodes.back() = end;
  table_r_.reserve(nodes.size() + 1);
  table_r_.push_back(0.0);
  table_r_.insert(table_r_.end(), nodes.begin(), nodes.end());
  table_mass_.assign(table_r_.size(), 0.0);
  auto dens = [this](double s) {
    const double v = (*this)(s);
    if (v < 0.0) throw Error(ErrorCode::SignError, "density is negative at s=" + std::to_string(s));
    return v * sphere_area_ * ipow(s, n_ - 1);
  };
  for (std::size_t k = 0; k + 1 < table_r_.size(); ++k) {
    table_mass_[k + 1] = table_mass_[k] + quad::adaptive(dens, table_r_[k], table_r_[k + 1], kTableTol).value;
  }
  total_mass_ = table_mass_.back();
  if (!std::isfinite(support)) {
    const double f_end = (*this)(end);
    if (f_end > 0.0) {
      const double f_half = (*this)(0.5 * end);
      tail_exponent_ = std::log(f_half / f_end) / std::log(2.0);
      if (tail_exponent_ > n_) {
        total_mass_ += sphere_area_ * f_end * std::pow(end, n_) / (tail_exponent_ - n_);
      } else if (allow_infinite_mass) {
        total_mass_ = kInf;
      } else {
        throw Error(ErrorCode::DivergentTail, "density tail decays too slowly for finite mass: " + label_);
      }
    } else {
      tail_exponent_ = kInf;
    }
  }
  if (std::isfinite(total_mass_) && total_mass_ > 0.0) {
    for (double frac : {0.01, 0.5, 0.99}) {
      const double target = frac * total_mass_;
      const auto it = std::lower_bound(table_mass_.begin(), table_mass_.end(), target);
      if (it == table_mass_.end()) continue;
      const double s = table_r_[static_cast<std::size_t>(std::distance(table_mass_.begin(), it))];
      if (s > 0.0 && (scales_.empty() || s > scales_.back())) scales_.push_back(s);
    }
  }
}

double DensityProfile::operator()(double s) const {
  if (s >= support_ || s < 0.0) return 0.0;
  return f_(s);
}

double DensityProfile::radial_mass_density(double s) const {
  return (*this)(s) * sphere_area_ * ipow(s, n_ - 1);
}

double DensityProfile::mass_within(double s) const {
  if (s <= 0.0) return 0.0;
  const double end = table_r_.back();
  if (s >= end) {
    if (std::isfinite(support_) || !std::isfinite(tail_exponent_)) return table_mass_.back();
    if (!std::isfinite(total_mass_) && tail_exponent_ == n_) {
      const double f_end = f_(end);
      return table_mass_.back() + sphere_area_ * f_end * std::pow(end, n_) * std::log(s / end);
    }
    const double f_end = f_(end);
    const double e = n_ - tail_exponent_;
    return table_mass_.back() +
           sphere_area_ * f_end * std::pow(end, tail_exponent_) * (std::pow(s, e) - std::pow(end, e)) / e;
  }
  const auto it = std::upper_bound(table_r_.begin(), table_r_.end(), s);
  const auto k = static_cast<std::size_t>(std::distance(table_r_.begin(), it)) - 1;
  if (s == table_r_[k]) return table_mass_[k];
  auto dens = [this](double x) { return radial_mass_density(x); };
  return table_mass_[k] + quad::kronrod15(dens, table_r_[k], s);
}

std::shared_ptr<const DensityProfile> DensityProfile::indicator(int n, double radius, double value) {
  if (!(radius > 0.0)) throw Error(ErrorCode::NegativeRadius, "indicator radius must be positive");
  check_weight(value, "indicator value");
  std::ostringstream label;
  label << "indicator(R=" << radius << ",value=" << value << ")";
  return std::make_shared<const DensityProfile>(
      n, [value](double) { return value; }, radius, std::vector<double>{}, label.str());
}

std::shared_ptr<const DensityProfile> DensityProfile::bump(int n, double a, double b, double c) {
  check_weight(a, "bump amplitude");
  if (!(b > 0.0) || !(c > 0.0)) throw Error(ErrorCode::InvalidArgument, "bump needs b > 0 and c > 0");
  std::ostringstream label;
  label.precision(17);
  label << "bump(a=" << a << ",b=" << b << ",c=" << c << ")";
  return std::make_shared<const DensityProfile>(
      n,
      [a, b, c](double s) {
        const double x = s / b;
        return a * std::pow(1.0 + x * x, -c);
      },
      kInf, std::vector<double>{}, label.str());
}

std::shared_ptr<const DensityProfile> DensityProfile::tabulated(int n, std::vector<double> s,
                                                                 std::vector<double> f) {
  if (s.size() != f.size() || s.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "tabulated density needs >= 2 matching samples");
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (f[i] < 0.0) throw Error(ErrorCode::SignError, "tabulated density has a negative value");
    if (i > 0 && !(s[i] > s[i - 1])) throw Error(ErrorCode::InvalidArgument, "sample radii must increase");
  }
  if (!(s.front() >= 0.0)) throw Error(ErrorCode::NegativeRadius, "sample radii must be nonnegative");
  const double support = s.back();
  std::vector<double> bps = s;
  auto fn = [s = std::move(s), f = std::move(f)](double x) {
    if (x <= s.front()) return f.front();
    const auto it = std::upper_bound(s.begin(), s.end(), x);
    if (it == s.end()) return f.back();
    const auto k = static_cast<std::size_t>(std::distance(s.begin(), it));
    const double w = (x - s[k - 1]) / (s[k] - s[k - 1]);
    return (1.0 - w) * f[k - 1] + w * f[k];
  };
  return std::make_shared<const DensityProfile>(n, std::move(fn), support, std::move(bps), "tabulated");
}

std::shared_ptr<const DensityProfile> DensityProfile::piecewise_constant(int n, std::vector<double> edges,
                                                                          std::vector<double> values) {
  if (edges.size() != values.size() + 1 || values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "piecewise-constant density needs |edges| = |values| + 1");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0) throw Error(ErrorCode::SignError, "piecewise-constant density is negative");
    if (!(edges[i + 1] > edges[i])) throw Error(ErrorCode::InvalidArgument, "edges must increase");
  }
  const double support = edges.back();
  std::vector<double> bps = edges;
  auto fn = [edges = std::move(edges), values = std::move(values)](double x) {
    if (x < edges.front()) return 0.0;
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    if (it == edges.end()) return 0.0;
    const auto k = static_cast<std::size_t>(std::distance(edges.begin(), it)) - 1;
    return values[k];
  };
  return std::make_shared<const DensityProfile>(n, std::move(fn), support, std::move(bps),
                                                "piecewise_constant");
}

// --- RadonMeasure -----------------------------------------------------------

RadonMeasure::RadonMeasure(int n, std::vector<MeasureComponent> parts) : n_(n), parts_(std::move(parts)) {
  for (const auto& c : parts_) {
    if (const auto* d = std::get_if<RadialDensity>(&c)) {
      if (!d->profile || d->profile->dim() != n) {
        throw Error(ErrorCode::InvalidArgument, "density dimension does not match measure");
      }
      check_weight(d->weight, "density weight");
    } else if (const auto* a = std::get_if<Atom>(&c)) {
      if (static_cast<int>(a->location.size()) != n) {
        throw Error(ErrorCode::InvalidArgument, "atom location has wrong dimension");
      }
      check_weight(a->weight, "atom weight");
    } else if (const auto* s = std::get_if<SphericalShell>(&c)) {
      if (!(s->radius > 0.0)) throw Error(ErrorCode::NegativeRadius, "shell radius must be positive");
      check_weight(s->mass, "shell mass");
    }
  }
}

RadonMeasure RadonMeasure::density(std::shared_ptr<const DensityProfile> profile, double weight) {
  const int n = profile->dim();
  return RadonMeasure(n, {RadialDensity{std::move(profile), weight}});
}

RadonMeasure RadonMeasure::atom(Point location, double weight) {
  const int n = static_cast<int>(location.size());
  return RadonMeasure(n, {Atom{std::move(location), weight}});
}

RadonMeasure RadonMeasure::dirac(int n, double weight) { return atom(Point(static_cast<std::size_t>(n), 0.0), weight); }

RadonMeasure RadonMeasure::shell(int n, double radius, double mass) {
  return RadonMeasure(n, {SphericalShell{radius, mass}});
}

MeasureKind RadonMeasure::kind() const {
  if (parts_.empty()) return MeasureKind::Zero;
  if (parts_.size() > 1) return MeasureKind::Sum;
  switch (parts_.front().index()) {
    case 0: return MeasureKind::RadialDensity;
    case 1: return MeasureKind::Atom;
    default: return MeasureKind::SphericalShell;
  }
}

bool RadonMeasure::is_zero() const {
  for (const auto& c : parts_) {
    if (const auto* d = std::get_if<RadialDensity>(&c)) {
      if (d->weight > 0.0 && d->profile->total_mass() > 0.0) return false;
    } else if (const auto* a = std::get_if<Atom>(&c)) {
      if (a->weight > 0.0) return false;
    } else if (std::get<SphericalShell>(c).mass > 0.0) {
      return false;
    }
  }
  return true;
}

bool RadonMeasure::is_radial() const {
  for (const auto& c : parts_) {
    if (const auto* a = std::get_if<Atom>(&c)) {
      if (a->weight > 0.0 && norm(a->location) != 0.0) return false;
    }
  }
  return true;
}

bool RadonMeasure::has_atoms() const {
  for (const auto& c : parts_) {
    if (const auto* a = std::get_if<Atom>(&c); a && a->weight > 0.0) return true;
  }
  return false;
}

double RadonMeasure::ball_mass(std::span<const double> center, double radius, double rel_tol) const {
  if (radius < 0.0) throw Error(ErrorCode::NegativeRadius, "ball radius must be nonnegative");
  const double a = norm(center);
  double total = 0.0;
  for (const auto& c : parts_) {
    if (const auto* d = std::get_if<RadialDensity>(&c)) {
      if (d->weight > 0.0) total += d->weight * density_ball_mass(*d->profile, a, radius, rel_tol);
    } else if (const auto* at = std::get_if<Atom>(&c)) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < at->location.size(); ++i) {
        const double diff = at->location[i] - center[i];
        d2 += diff * diff;
      }
      if (std::sqrt(d2) < radius) total += at->weight;
    } else {
      const auto& s = std::get<SphericalShell>(c);
      if (a == 0.0) {
        if (s.radius < radius) total += s.mass;
      } else {
        total += s.mass * cap_fraction_at(n_, a, s.radius, radius);
      }
    }
  }
  return total;
}

double RadonMeasure::centered_mass(double radius) const {
  if (radius < 0.0) throw Error(ErrorCode::NegativeRadius, "ball radius must be nonnegative");
  double total = 0.0;
  for (const auto& c : parts_) {
    if (const auto* d = std::get_if<RadialDensity>(&c)) {
      if (d->weight > 0.0) total += d->weight * d->profile->mass_within(radius);
    } else if (const auto* at = std::get_if<Atom>(&c)) {
      if (norm(at->location) < radius) total += at->weight;
    } else {
      const auto& s = std::get<SphericalShell>(c);
      if (s.radius < radius) total += s.mass;
    }
  }
  return total;
}

double RadonMeasure::total_mass() const {
  double total = 0.0;
  for (const auto& c : parts_) {
    if (const auto* d = std::get_if<RadialDensity>(&c)) {
      if (d->weight > 0.0) total += d->weight * d->profile->total_mass();
    } else if (const auto* a = std::get_if<Atom>(&c)) {
      total += a->weight;
    } else {
      total += std::get<SphericalShell>(c).mass;
    }
  }
  return total;
}

double RadonMeasure::support_radius() const {
  double r = 0.0;
  for (const auto& c : parts_) {
    if (const auto* d = std::get_if<RadialDensity>(&c)) {
      if (d->weight > 0.0 && d->profile->total_mass() > 0.0) r = std::max(r, d->profile->support());
    } else if (const auto* a = std::get_if<Atom>(&c)) {
      if (a->weight > 0.0) r = std::max(r, norm(a->location));
    } else if (const auto& s = std::get<SphericalShell>(c); s.mass > 0.0) {
      r = std::max(r, s.radius);
    }
  }
  return r;
}

std::vector<double> RadonMeasure::radial_breakpoints() const {
  std::vector<double> out;
  for (const auto& c : parts_) {
    if (const auto* d = std::get_if<RadialDensity>(&c)) {
      const auto bps = d->profile->breakpoints();
      out.insert(out.end(), bps.begin(), bps.end());
      if (std::isfinite(d->profile->support())) out.push_back(d->profile->support());
    } else if (const auto* a = std::get_if<Atom>(&c)) {
      const double r = norm(a->location);
      if (r > 0.0) out.push_back(r);
    } else {
      out.push_back(std::get<SphericalShell>(c).radius);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> RadonMeasure::ball_breakpoints(std::span<const double> center) const {
  const double a = norm(center);
  std::vector<double> out;
  auto radial_edge = [&](double s) {
    out.push_back(std::abs(a - s));
    out.push_back(a + s);
  };
  for (const auto& c : parts_) {
    if (const auto* d = std::get_if<RadialDensity>(&c)) {
      for (double b : d->profile->breakpoints()) radial_edge(b);
      if (a > 0.0) {
        for (double b : d->profile->scales()) radial_edge(b);
      }
      if (std::isfinite(d->profile->support())) radial_edge(d->profile->support());
    } else if (const auto* at = std::get_if<Atom>(&c)) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < at->location.size(); ++i) {
        const double diff = at->location[i] - center[i];
        d2 += diff * diff;
      }
      out.push_back(std::sqrt(d2));
    } else {
      radial_edge(std::get<SphericalShell>(c).radius);
    }
  }
  if (a > 0.0) out.push_back(a);
  std::erase_if(out, [](double r) { return !(r > 0.0) || !std::isfinite(r); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

RadonMeasure scale(const RadonMeasure& mu, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::NegativeScale, "scale factor must be finite and nonnegative");
  }
  if (lambda == 0.0) return RadonMeasure(mu.dim());
  std::vector<MeasureComponent> parts(mu.components().begin(), mu.components().end());
  for (auto& c : parts) {
    std::visit(
        [lambda](auto& part) {
          using T = std::decay_t<decltype(part)>;
          if constexpr (std::is_same_v<T, SphericalShell>) {
            part.mass *= lambda;
          } else {
            part.weight *= lambda;
          }
        },
        c);
  }
  return RadonMeasure(mu.dim(), std::move(parts));
}

RadonMeasure add(const RadonMeasure& mu, const RadonMeasure& nu) {
  if (mu.dim() != nu.dim()) throw Error(ErrorCode::InvalidArgument, "cannot add measures of different dimension");
  std::vector<MeasureComponent> parts(mu.components().begin(), mu.components().end());
  parts.insert(parts.end(), nu.components().begin(), nu.components().end());
  return RadonMeasure(mu.dim(), std::move(parts));
}

double integrate_against(const RadonMeasure& mu, const Integrand& g, double rel_tol) {
  double total = 0.0;
  bool infinite = false;
  auto check_value = [](double v) {
    if (v < 0.0) throw Error(ErrorCode::SignError, "integrand is negative on the support");
  };
  for (const auto& c : mu.components()) {
    if (const auto* at = std::get_if<Atom>(&c)) {
      if (at->weight == 0.0) continue;
      const double v = g.pointwise ? g.pointwise(at->location) : g.radial(norm(at->location));
      check_value(v);
      if (std::isinf(v)) {
        infinite = true;
      } else {
        total += at->weight * v;
      }
      continue;
    }
    if (!g.radial) {
      throw Error(ErrorCode::NonRadialMeasure, "radial components need a radial integrand");
    }
    if (const auto* s = std::get_if<SphericalShell>(&c)) {
      if (s->mass == 0.0) continue;
      const double v = g.radial(s->radius);
      check_value(v);
      if (std::isinf(v)) {
        infinite = true;
      } else {
        total += s->mass * v;
      }
      continue;
    }
    const auto& d = std::get<RadialDensity>(c);
    if (d.weight == 0.0) continue;
    const DensityProfile& prof = *d.profile;
    const double end = std::isfinite(prof.support()) ? prof.support() : kTableEnd;
    const double start = std::min(kTableStart, end * 1e-3);
    std::vector<double> pieces{start, end};
    std::vector<double> extra(prof.breakpoints().begin(), prof.breakpoints().end());
    extra.insert(extra.end(), g.breakpoints.begin(), g.breakpoints.end());
    for (double e = std::ceil(std::log10(start)); std::pow(10.0, e) < end; e += 1.0) extra.push_back(std::pow(10.0, e));
    pieces = merge_breakpoints(pieces, extra);
    bool hit_inf = false;
    auto integrand = [&](double r) {
      const double w = prof.radial_mass_density(r);
      if (w == 0.0) return 0.0;
      const double v = g.radial(r);
      check_value(v);
      if (std::isinf(v)) {
        hit_inf = true;
        return 0.0;
      }
      return v * w;
    };
    double part = quad::adaptive(integrand, 0.0, start, rel_tol).value;
    part += quad::adaptive_pieces(integrand, pieces, rel_tol, true).value;
    if (hit_inf) {
      infinite = true;
    } else {
      total += d.weight * part;
    }
  }
  return infinite ? kInf : total;
}

}  // namespace wolfflab
