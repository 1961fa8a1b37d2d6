#include "wolfflab/lorentz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <tuple>

#include "wolfflab/errors.hpp"
#include "wolfflab/grid.hpp"
#include "wolfflab/quadrature.hpp"
#include "wolfflab/wolff.hpp"

namespace wolfflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// exponents within this relative distance of zero count as borderline
constexpr double kBorderline = 1e-9;
constexpr double kNormTol = 1e-11;

bool head_increasing(const RadialFunction& u) {
  return u.values()[0] > 0.0 && u.slopes()[0] > 0.0;
}

RearrangedProfile rearrange_monotone(const RadialFunction& u, int n, double omega) {
  const auto r = u.radii();
  std::vector<double> t(r.size());
  std::vector<double> v(u.values().begin(), u.values().end());
  std::vector<double> d(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    t[i] = omega * std::pow(r[i], n);
    d[i] = u.slopes()[i] / (n * omega * std::pow(r[i], n - 1));
  }
  const double beta = u.tail_exp() / n;
  const double coeff = u.tail_coeff() * std::pow(omega, beta);
  return {RadialFunction(std::move(t), std::move(v), std::move(d), coeff, beta, u.center_value())};
}

// Level-set geometry of a radial profile along r.
class LevelSets {
 public:
  LevelSets(const RadialFunction& u, int n, double omega) : u_(u), n_(n), omega_(omega) {
    const auto r = u.radii();
    const double u0 = u.values()[0];
    m0_ = u0 > 0.0 ? r[0] * u.slopes()[0] / u0 : 0.0;
    const double c = u.center_value();
    if (u0 <= 0.0) {
      at_zero_ = std::isfinite(c) ? std::min(c, u0) : u0;
    } else if (m0_ < 0.0) {
      at_zero_ = std::isfinite(c) ? std::max(c, u0) : kInf;
    } else if (m0_ > 0.0) {
      at_zero_ = 0.0;
    } else {
      at_zero_ = u0;
    }
    const double A = u.tail_coeff();
    const double tau = u.tail_exp();
    at_inf_ = A <= 0.0 ? 0.0 : (tau > 0.0 ? 0.0 : (tau == 0.0 ? A : kInf));

    // nodes plus interior extrema of the interpolant, so that every cell
    // between consecutive samples is monotone
    const auto v = u.values();
    const auto du = u.slopes();
    for (std::size_t k = 0; k < r.size(); ++k) {
      sr_.push_back(r[k]);
      sv_.push_back(v[k]);
      sd_.push_back(du[k]);
      if (k + 1 == r.size() || !(r[k + 1] > r[k])) continue;
      const bool peak = du[k] > 0.0 && du[k + 1] < 0.0;
      const bool dip = du[k] < 0.0 && du[k + 1] > 0.0;
      if (!peak && !dip) continue;
      const double sign = peak ? 1.0 : -1.0;
      double lo = std::log(r[k]);
      double hi = std::log(r[k + 1]);
      constexpr double g = 0.6180339887498949;
      for (int it = 0; it < 80; ++it) {
        const double x1 = hi - g * (hi - lo);
        const double x2 = lo + g * (hi - lo);
        if (sign * u(std::exp(x1)) < sign * u(std::exp(x2))) {
          lo = x1;
        } else {
          hi = x2;
        }
      }
      const double re = std::exp(0.5 * (lo + hi));
      const double ve = u(re);
      if (!(re > r[k] && re < r[k + 1])) continue;
      sr_.push_back(re);
      sv_.push_back(ve);
      sd_.push_back(0.0);
      if (peak && ve > std::max(v[k], v[k + 1])) peaks_.push_back({ve, std::max(v[k], v[k + 1])});
    }
  }

  struct Peak {
    double value;
    double base;  // larger neighbouring node value
  };
  std::span<const Peak> peaks() const { return peaks_; }

  double at_zero() const { return at_zero_; }
  double at_inf() const { return at_inf_; }

  struct Measure {
    double lambda = 0;  // |{u > α}| or |{u >= α}|
    double dlambda = 0;  // d lambda / d alpha (<= 0)
  };

  Measure measure(double alpha, bool strict) const {
    auto above = [&](double v) { return strict ? v > alpha : v >= alpha; };
    const auto& r = sr_;
    const auto& v = sv_;
    const std::size_t N = r.size();
    Measure out;
    bool zero_slope = false;
    // du = NaN: the boundary does not move with alpha (jump of u)
    auto cross = [&](double s, bool leaving, double du) {
      const double vol = omega_ * std::pow(s, n_);
      out.lambda += leaving ? vol : -vol;
      if (std::isnan(du)) return;
      du = std::abs(du);
      if (du == 0.0 || !std::isfinite(du)) {
        zero_slope = du == 0.0;
        return;
      }
      out.dlambda -= n_ * omega_ * std::pow(s, n_ - 1) / du;
    };
    bool state = above(at_zero_);
    // head: u0 (r/r0)^{m0}, monotone
    if (above(v[0]) != state) {
      const double s = m0_ != 0.0 && v[0] > 0.0 && alpha > 0.0 ? r[0] * std::pow(alpha / v[0], 1.0 / m0_) : r[0];
      cross(std::min(s, r[0]), state, m0_ == 0.0 ? kNaN : u_.derivative(std::min(s, r[0])));
      state = !state;
    }
    for (std::size_t k = 0; k + 1 < N; ++k) {
      const bool next = above(v[k + 1]);
      if (next == state) continue;
      if (r[k + 1] == r[k]) {
        // a level equal to one side of the jump moves with that side's slope
        const double du = alpha == v[k + 1] ? sd_[k + 1] : (alpha == v[k] ? sd_[k] : kNaN);
        cross(r[k], state, du);
      } else {
        double lo = std::log(r[k]);
        double hi = std::log(r[k + 1]);
        for (int it = 0; it < 200 && hi - lo > 4e-16 * std::max(1.0, std::abs(lo)); ++it) {
          const double mid = 0.5 * (lo + hi);
          if (above(u_(std::exp(mid))) == state) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        const double s = std::exp(0.5 * (lo + hi));
        cross(s, state, u_.derivative(s));
      }
      state = next;
    }
    if (above(at_inf_) != state) {
      const double A = u_.tail_coeff();
      const double tau = u_.tail_exp();
      const double s = tau != 0.0 && A > 0.0 && alpha > 0.0 ? std::pow(A / alpha, 1.0 / tau) : r[N - 1];
      cross(std::max(s, r[N - 1]), state, tau == 0.0 ? kNaN : u_.derivative(std::max(s, r[N - 1])));
      state = !state;
    }
    if (state) return {kInf, 0.0};
    if (zero_slope) out.dlambda = -kInf;
    return out;
  }

 private:
  const RadialFunction& u_;
  int n_;
  double omega_;
  double m0_ = 0;
  double at_zero_ = 0;
  double at_inf_ = 0;
  std::vector<double> sr_;
  std::vector<double> sv_;
  std::vector<double> sd_;
  std::vector<Peak> peaks_;
};

struct Point2 {
  double t;
  double alpha;
  double slope;
};

RearrangedProfile rearrange_general(const RadialFunction& u, int n, double omega) {
  const LevelSets sets(u, n, omega);
  const auto r = u.radii();
  const auto v = u.values();
  const std::size_t N = r.size();

  std::vector<double> levels;
  for (std::size_t k = 0; k < N; ++k) {
    if (v[k] > 0.0) levels.push_back(v[k]);
    if (k + 1 < N && r[k + 1] > r[k]) {
      const double mid = u(std::sqrt(r[k] * r[k + 1]));
      if (mid > 0.0) levels.push_back(mid);
    }
  }
  // levels accumulate towards each interior peak so small t is resolved
  double peak_sup = 0.0;
  for (const auto& pk : sets.peaks()) {
    peak_sup = std::max(peak_sup, pk.value);
    for (int j = 0; j <= 24; ++j) levels.push_back(pk.value - (pk.value - pk.base) * std::pow(0.5, j));
  }
  constexpr int kExtraPerDecade = 16;
  if (u.tail_coeff() > 0.0 && u.tail_exp() > 0.0) {
    for (int k = 1; k <= 8 * kExtraPerDecade; ++k) levels.push_back(u(r[N - 1] * std::pow(10.0, double(k) / kExtraPerDecade)));
  }
  if (sets.at_zero() != v[0]) {
    for (int k = 1; k <= 4 * kExtraPerDecade; ++k) {
      const double x = u(r[0] * std::pow(10.0, -double(k) / kExtraPerDecade));
      if (x > 0.0 && std::isfinite(x)) levels.push_back(x);
    }
  }
  if (std::isfinite(sets.at_zero()) && sets.at_zero() > 0.0) levels.push_back(sets.at_zero());
  std::sort(levels.begin(), levels.end(), std::greater<>());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  std::vector<Point2> pts;
  for (double a : levels) {
    if (a < sets.at_inf()) break;
    const auto gt = sets.measure(a, true);
    const auto ge = sets.measure(a, false);
    const double slope = gt.dlambda < 0.0 ? 1.0 / gt.dlambda : 0.0;
    if (ge.lambda > gt.lambda * (1.0 + 1e-12) && std::isfinite(ge.lambda)) {
      if (gt.lambda > 0.0) pts.push_back({gt.lambda, a, 0.0});
      pts.push_back({ge.lambda, a, 0.0});
    } else if (gt.lambda > 0.0 && std::isfinite(gt.lambda)) {
      pts.push_back({gt.lambda, a, std::isfinite(slope) ? slope : 0.0});
    }
  }

  double tail_coeff = 0.0;
  double tail_exp = 0.0;
  if (sets.at_inf() > 0.0) {
    tail_coeff = sets.at_inf();
  } else if (u.tail_coeff() > 0.0 && u.tail_exp() > 0.0) {
    tail_exp = u.tail_exp() / n;
  } else {
    const auto zero = sets.measure(0.0, true);
    if (std::isfinite(zero.lambda) && zero.lambda > 0.0) pts.push_back({zero.lambda, 0.0, 0.0});
  }

  // nondecreasing t; at equal t keep the outermost values of f*
  for (std::size_t i = 1; i < pts.size(); ++i) pts[i].t = std::max(pts[i].t, pts[i - 1].t);
  std::vector<Point2> kept;
  for (std::size_t i = 0; i < pts.size();) {
    std::size_t j = i;
    while (j + 1 < pts.size() && pts[j + 1].t == pts[i].t) ++j;
    kept.push_back(pts[i]);
    if (j > i && pts[j].alpha < pts[i].alpha) kept.push_back(pts[j]);
    i = j + 1;
  }

  if (kept.empty()) return {RadialFunction::zero(r)};
  std::vector<double> t;
  std::vector<double> a;
  std::vector<double> d;
  for (const auto& p : kept) {
    t.push_back(p.t);
    a.push_back(p.alpha);
    d.push_back(p.slope);
  }
  if (tail_exp > 0.0) tail_coeff = a.back() * std::pow(t.back(), tail_exp);
  const double sup = std::isfinite(sets.at_zero()) ? std::max({sets.at_zero(), u.sup(), peak_sup}) : kInf;
  return {RadialFunction(std::move(t), std::move(a), std::move(d), tail_coeff, tail_exp, sup)};
}

bool borderline(double e, double scale) { return std::abs(e) <= kBorderline * scale; }

double sup_norm(const RadialFunction& F, double r) {
  const auto t = F.radii();
  const auto v = F.values();
  const double t0 = t[0];
  const double v0 = v[0];
  const double inv = 1.0 / r;
  double best = 0.0;
  if (v0 > 0.0) {
    const double m = t0 * F.slopes()[0] / v0;
    const double c = F.center_value();
    const double eh = inv + m;
    if (std::isfinite(c) && m < 0.0) {
      const double cap = std::max(c, v0);
      const double tc = t0 * std::pow(cap / v0, 1.0 / m);
      best = std::max(best, cap * std::pow(tc, inv));
    } else if (eh < 0.0 && !borderline(eh, inv)) {
      return kInf;
    }
  } else if (F.center_value() > 0.0) {
    best = std::max(best, F.center_value() * std::pow(t0, inv));
  }
  for (std::size_t k = 0; k < t.size(); ++k) {
    best = std::max(best, v[k] * std::pow(t[k], inv));
    if (k + 1 < t.size() && t[k + 1] > t[k]) {
      for (int j = 1; j < 8; ++j) {
        const double s = t[k] * std::pow(t[k + 1] / t[k], j / 8.0);
        best = std::max(best, F(s) * std::pow(s, inv));
      }
    }
  }
  if (F.tail_coeff() > 0.0) {
    const double et = inv - F.tail_exp();
    if (et > 0.0 && !borderline(et, inv)) return kInf;
  }
  return best;
}

}  // namespace

void RearrangedProfile::write_csv(std::ostream& out) const {
  const auto old = out.precision(17);
  out << "t,fstar\n";
  for (std::size_t i = 0; i < fstar.size(); ++i) out << fstar.radii()[i] << ',' << fstar.values()[i] << '\n';
  out.precision(old);
}

RearrangedProfile rearrange(const RadialFunction& u, const ProblemParams& params) {
  const int n = params.n;
  const double omega = unit_ball_volume(n);
  const bool tail_ok = u.tail_coeff() == 0.0 || u.tail_exp() >= 0.0;
  if (u.is_nonincreasing() && tail_ok && !head_increasing(u)) return rearrange_monotone(u, n, omega);
  return rearrange_general(u, n, omega);
}

double lorentz_norm(const RearrangedProfile& f, double r, double rho) {
  if (!(r > 0.0) || !(rho > 0.0)) throw Error(ErrorCode::ExponentError, "Lorentz indices must be positive");
  const auto& F = f.fstar;
  if (F.sup() <= 0.0 && F.tail_coeff() <= 0.0) return 0.0;
  if (std::isinf(rho)) return sup_norm(F, r);

  const auto t = F.radii();
  const auto v = F.values();
  const double a = rho / r;  // t-power of the measure dt/t after raising to ρ
  double total = 0.0;

  // head t < t0: F = min(v0 (t/t0)^m, cap)
  const double t0 = t[0];
  const double v0 = v[0];
  if (v0 > 0.0) {
    const double m = t0 * F.slopes()[0] / v0;
    const double c = F.center_value();
    double sc = 0.0;
    if (std::isfinite(c) && m < 0.0) {
      const double cap = std::max(c, v0);
      sc = std::pow(cap / v0, 1.0 / m);
      total += std::pow(cap, rho) * std::pow(sc * t0, a) / a;
    }
    const double e = rho * (1.0 / r + m);
    const double scale = std::pow(v0, rho) * std::pow(t0, a);
    if (borderline(e, a)) {
      if (sc <= 0.0) return kInf;
      total += scale * -std::log(sc);
    } else if (e < 0.0 && sc <= 0.0) {
      return kInf;
    } else {
      total += scale * (1.0 - std::pow(sc, e)) / e;
    }
  } else if (F.center_value() > 0.0 && std::isfinite(F.center_value())) {
    total += std::pow(F.center_value(), rho) * std::pow(t0, a) / a;
  }

  auto h = [&](double s) {
    const double x = F(s);
    return x > 0.0 ? std::pow(x, rho) * std::pow(s, a - 1.0) : 0.0;
  };
  total += quad::adaptive_pieces(h, t, kNormTol, true).value;

  if (F.tail_coeff() > 0.0) {
    const double e = rho * (1.0 / r - F.tail_exp());
    if (e >= 0.0 || borderline(e, a)) return kInf;
    total += std::pow(F.tail_coeff(), rho) * std::pow(t.back(), e) / -e;
  }
  return std::pow(total, 1.0 / rho);
}

double lorentz_norm(const RadialFunction& u, double r, double rho, const ProblemParams& params) {
  return lorentz_norm(rearrange(u, params), r, rho);
}

InequalityReport check_lorentz_embedding(const RadonMeasure& mu, double gamma, const ProblemParams& params,
                                         const QuadratureConfig& quad, double bound) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::ExponentError, "Lorentz embedding needs finite gamma > 0");
  }
  const auto ex = derive_exponents(ProblemParams::finite(params.n, params.p, params.q, gamma));
  std::string instance = "n=" + std::to_string(params.n) + " p=" + std::to_string(params.p) +
                         " gamma=" + std::to_string(gamma);
  if (mu.is_zero()) return make_report("lorentz_embedding", 0.0, 0.0, bound, instance);
  if (!mu.is_radial()) throw Error(ErrorCode::NonRadialMeasure, "Lorentz embedding needs a radial measure");
  const auto w = wolff_profile(mu, params, quad);
  const double lhs = lorentz_norm(w, ex.lorentz_r, ex.lorentz_rho, params);
  const double energy = mu.has_atoms() ? kInf : potential_integral(mu, mu, w, gamma, params, quad);
  const double rhs = std::pow(energy, 1.0 / ex.lorentz_rho);
  return make_report("lorentz_embedding", lhs, rhs, bound, instance);
}

std::pair<double, double> density_targets(DensityRole role, const ProblemParams& params, std::size_t m) {
  if (params.mode != GammaMode::FiniteGamma) {
    throw Error(ErrorCode::ModeMismatch, "density conditions are stated for finite gamma");
  }
  const double n = params.n;
  const double p = params.p;
  const double g = params.gamma;
  if (role == DensityRole::Mu) return {n * (p - 1 + g) / (n * (p - 1) + p * g), (p - 1 + g) / (p - 1)};
  if (m >= params.q.size()) throw Error(ErrorCode::InvalidArgument, "no growth exponent with that index");
  const double q = params.q[m];
  return {n * (p - 1 + g) / (n * (p - 1 - q) + p * (g + q)), (p - 1 + g) / (p - 1 - q)};
}

DensityConditionReport check_density_conditions(double s, double t, DensityRole role, const ProblemParams& params,
                                                const QuadratureConfig& quad,
                                                const std::shared_ptr<const DensityProfile>& instance,
                                                std::size_t m) {
  DensityConditionReport rep;
  rep.role = role;
  rep.s = s;
  rep.t = t;
  std::tie(rep.s_target, rep.t_target) = density_targets(role, params, m);
  rep.dominates = std::abs(s - rep.s_target) <= 1e-12 * rep.s_target && t <= rep.t_target * (1.0 + 1e-12);
  if (!instance) return rep;
  rep.has_instance = true;
  rep.instance_norm = lorentz_norm(density_function(*instance, quad), s, t, params);
  const auto measure = RadonMeasure::density(instance);
  rep.instance_energy = role == DensityRole::Mu ? wolff_energy(measure, params.gamma, params, quad)
                                                : sigma_energy(measure, params.gamma, params.q[m], params, quad);
  rep.implication_holds = !std::isfinite(rep.instance_norm) || std::isfinite(rep.instance_energy);
  return rep;
}

RadialFunction density_function(const DensityProfile& f, const QuadratureConfig& quad) {
  const auto base = quad.grid();
  std::vector<double> extra(f.breakpoints().begin(), f.breakpoints().end());
  if (std::isfinite(f.support())) extra.push_back(f.support());
  const auto nodes = merge_breakpoints(base.nodes(), extra);
  std::vector<double> r;
  std::vector<double> v;
  for (double x : nodes) {
    const double left = f(std::nextafter(x, 0.0));
    const double right = f(std::nextafter(x, kInf));
    if (std::abs(left - right) > 1e-9 * std::max(left, right)) {
      r.push_back(x);
      v.push_back(left);
      r.push_back(x);
      v.push_back(right);
    } else {
      r.push_back(x);
      v.push_back(f(x));
    }
  }
  double tail_exp = 0.0;
  double tail_coeff = 0.0;
  if (!std::isfinite(f.support())) {
    tail_exp = f.tail_exponent();
    tail_coeff = v.back() * std::pow(r.back(), tail_exp);
  }
  return RadialFunction(std::move(r), std::move(v), {}, tail_coeff, tail_exp, f(0.0));
}

}  // namespace wolfflab
