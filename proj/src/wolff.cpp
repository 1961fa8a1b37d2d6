#include "wolfflab/wolff.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "wolfflab/errors.hpp"
#include "wolfflab/quadrature.hpp"

namespace wolfflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFarField = 1e8;

bool atom_at(const RadonMeasure& mu, std::span<const double> x) {
  for (const auto& c : mu.components()) {
    const auto* a = std::get_if<Atom>(&c);
    if (!a || a->weight <= 0.0) continue;
    bool same = true;
    for (std::size_t i = 0; i < x.size() && same; ++i) same = a->location[i] == x[i];
    if (same) return true;
  }
  return false;
}

// Local power-law exponent of a positive function between r/2 and r.
double log2_slope(double f_hi, double f_lo) { return std::log(f_hi / f_lo) / std::log(2.0); }

PotentialValue wolff_integral(const RadonMeasure& mu, std::span<const double> x, double R,
                              const ProblemParams& params, const QuadratureConfig& quad) {
  if (static_cast<int>(x.size()) != mu.dim() || mu.dim() != params.n) {
    throw Error(ErrorCode::InvalidArgument, "point, measure and params dimensions differ");
  }
  if (!(params.p > 1.0) || !(params.p < params.n)) {
    throw Error(ErrorCode::DimensionError, "Wolff potential needs 1 < p < n");
  }
  if (mu.is_zero()) return {};
  if (atom_at(mu, x)) return {kInf, 0.0};

  const int n = params.n;
  const double k = 1.0 / (params.p - 1.0);
  const double tau = params.tail_exponent();
  const double a = norm(x);
  // H(r) = (μ(B(x,r)) / r^{n-p})^{1/(p-1)}; W = ∫ H dr/r.
  const double inner_tol = std::clamp(1e-2 * quad.rel_tol, 1e-13, 1e-9);
  auto H = [&](double r) {
    const double m = mu.ball_mass(x, r, inner_tol);
    return m > 0.0 ? std::pow(m * std::pow(r, params.p - n), k) : 0.0;
  };
  auto h = [&](double r) { return H(r) / r; };

  const auto bps = mu.ball_breakpoints(x);
  const double support = mu.support_radius();
  const double r_full = std::isfinite(support) ? support + a : kInf;
  double r_lo = quad.r_min;
  if (!bps.empty()) r_lo = std::min(r_lo, 0.5 * bps.front());
  const double top = std::isfinite(r_full) ? r_full : std::max(kFarField, 1e4 * (a + 1.0));
  const double upper = std::min(R, top);

  PotentialValue out;
  const double h_lo = H(std::min(r_lo, upper));
  if (h_lo > 0.0) {
    const double s = std::min(r_lo, upper);
    const double kappa = log2_slope(h_lo, H(0.5 * s));
    if (!(kappa > 1e-6)) return {kInf, 0.0};
    out.value += h_lo / kappa;
  }

  if (upper > r_lo) {
    std::vector<double> extra;
    for (double e = std::ceil(std::log10(r_lo)); std::pow(10.0, e) < upper; e += 1.0) extra.push_back(std::pow(10.0, e));
    extra.insert(extra.end(), bps.begin(), bps.end());
    // Far from a density's bulk the ball mass changes on the scale of |r - a|.
    double s_min = kInf;
    double s_max = 0.0;
    for (const auto& c : mu.components()) {
      if (const auto* d = std::get_if<RadialDensity>(&c)) {
        for (double s : d->profile->scales()) {
          s_min = std::min(s_min, s);
          s_max = std::max(s_max, s);
        }
      }
    }
    if (s_max > 0.0 && a > 10.0 * s_max) {
      for (double d = std::pow(10.0, std::floor(std::log10(s_min))); d < 0.5 * a; d *= 10.0) {
        extra.push_back(a - d);
        extra.push_back(a + d);
      }
    }
    std::erase_if(extra, [&](double r) { return !(r > r_lo) || !(r < upper); });
    const std::vector<double> ends{r_lo, upper};
    const auto pieces = merge_breakpoints(ends, extra);
    const auto res = quad::adaptive_pieces(h, pieces, quad.rel_tol, true);
    out.value += res.value;
    out.quad_error_estimate += res.error;
  }

  if (R > top) {
    const double total = mu.total_mass();
    if (std::isfinite(r_full)) {
      const double far = std::isfinite(R) ? std::pow(R, -tau) : 0.0;
      out.value += std::pow(total, k) * (std::pow(r_full, -tau) - far) / tau;
    } else {
      const double h_top = H(top);
      if (h_top > 0.0) {
        const double kappa = log2_slope(h_top, H(0.5 * top));
        if (!(kappa < 0.0)) return {kInf, out.quad_error_estimate};
        const double far = std::isfinite(R) ? std::pow(R / top, kappa) : 0.0;
        const double t = h_top * (1.0 - far) / -kappa;
        out.value += t;
        // the power-law fit of the far field is the dominant uncertainty there
        out.quad_error_estimate += 1e-6 * t;
      }
    }
  }
  return out;
}

template <bool Parallel>
std::vector<PotentialValue> batch(const RadonMeasure& mu, std::span<const Point> points, const ProblemParams& params,
                                  const QuadratureConfig& quad) {
  std::vector<PotentialValue> out(points.size());
  std::exception_ptr failure;
  const auto count = static_cast<long>(points.size());
#pragma omp parallel for schedule(dynamic) if (Parallel)
  for (long i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = wolff_integral(mu, points[static_cast<std::size_t>(i)], kInf, params, quad);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

template <bool Parallel>
RadialFunction profile(const RadonMeasure& mu, const ProblemParams& params, const QuadratureConfig& quad) {
  if (!mu.is_radial()) throw Error(ErrorCode::NonRadialMeasure, "Wolff profile needs a radial measure");
  const auto nodes = wolff_profile_grid(mu, quad);
  std::vector<Point> pts;
  pts.reserve(nodes.size() + 1);
  for (double r : nodes) pts.push_back(axis_point(params.n, r));
  pts.push_back(axis_point(params.n, 0.0));
  const auto w = batch<Parallel>(mu, pts, params, quad);
  std::vector<double> values(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) values[i] = w[i].value;
  const double tau = params.tail_exponent();
  const double coeff = values.back() * std::pow(nodes.back(), tau);
  return RadialFunction(nodes, std::move(values), {}, coeff, tau, w.back().value);
}

// {r in [0, limit] : W(r) <= k} as a sorted list of closed intervals.
std::vector<std::pair<double, double>> sublevel_intervals(const RadonMeasure& mu, const RadialFunction& w, double k,
                                                          double limit, const ProblemParams& params,
                                                          const QuadratureConfig& quad) {
  auto W = [&](double r) { return wolff_integral(mu, axis_point(params.n, r), kInf, params, quad).value; };
  std::vector<double> r{0.0};
  std::vector<double> v{w.center_value()};
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w.radii()[i] >= limit) break;
    if (w.radii()[i] == r.back()) continue;
    r.push_back(w.radii()[i]);
    v.push_back(w.values()[i]);
  }
  if (r.back() < limit) {
    r.push_back(limit);
    v.push_back(W(limit));
  }
  auto crossing = [&](double lo, double hi, bool lo_inside) {
    for (int it = 0; it < 60 && hi - lo > 1e-14 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      ((W(mid) <= k) == lo_inside ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  std::vector<std::pair<double, double>> out;
  bool inside = v[0] <= k;
  double start = 0.0;
  for (std::size_t i = 1; i < r.size(); ++i) {
    const bool now = v[i] <= k;
    if (now != inside) {
      const double edge = crossing(r[i - 1], r[i], inside);
      if (inside) out.emplace_back(start, edge);
      start = edge;
      inside = now;
    }
  }
  if (inside) out.emplace_back(start, limit);
  return out;
}

}  // namespace

PotentialValue wolff(const RadonMeasure& mu, std::span<const double> x, const ProblemParams& params,
                     const QuadratureConfig& quad) {
  return wolff_integral(mu, x, kInf, params, quad);
}

PotentialValue truncated_wolff(const RadonMeasure& mu, std::span<const double> x, double R,
                               const ProblemParams& params, const QuadratureConfig& quad) {
  if (!(R > 0.0)) throw Error(ErrorCode::NonpositiveR, "truncation radius must be positive");
  return wolff_integral(mu, x, R, params, quad);
}

double wolff_sup_on_support(const RadonMeasure& mu, const ProblemParams& params, const QuadratureConfig& quad,
                            int sample_budget) {
  if (mu.is_zero()) throw Error(ErrorCode::ZeroMeasure, "sup on the support of the zero measure");
  if (mu.has_atoms()) return kInf;
  const int n = params.n;
  std::vector<Point> pts;
  for (const auto& c : mu.components()) {
    if (const auto* s = std::get_if<SphericalShell>(&c)) {
      if (s->mass > 0.0) pts.push_back(axis_point(n, s->radius));
    } else if (const auto* d = std::get_if<RadialDensity>(&c)) {
      if (d->weight <= 0.0) continue;
      const double top = std::min(d->profile->support(), quad.r_max);
      const int count = std::max(2, sample_budget);
      const double lo = std::min(quad.r_min, 1e-3 * top);
      pts.push_back(axis_point(n, 0.0));
      for (int i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / (count - 1);
        pts.push_back(axis_point(n, lo * std::pow(top / lo, t)));
      }
    }
  }
  double best = 0.0;
  for (const auto& v : wolff_batch(mu, pts, params, quad)) best = std::max(best, v.value);
  return best;
}

RadonMeasure cutoff_measure(const RadonMeasure& mu, int k, const ProblemParams& params,
                            const QuadratureConfig& quad) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "cutoff level must be at least 1");
  const double level = k;
  const double radius = std::ldexp(1.0, k);
  const int n = params.n;
  bool needs_profile = false;
  for (const auto& c : mu.components()) needs_profile |= !std::holds_alternative<Atom>(c);
  if (needs_profile && !mu.is_radial()) {
    throw Error(ErrorCode::NonRadialMeasure, "cutoff of radial parts needs a radial measure");
  }

  std::vector<MeasureComponent> parts;
  RadialFunction w;
  std::vector<std::pair<double, double>> keep;
  if (needs_profile) {
    w = wolff_profile(mu, params, quad);
    keep = sublevel_intervals(mu, w, level, radius, params, quad);
  }
  auto kept = [&](double s) {
    for (const auto& [lo, hi] : keep) {
      if (s >= lo && s <= hi) return true;
    }
    return false;
  };

  for (const auto& c : mu.components()) {
    if (const auto* a = std::get_if<Atom>(&c)) {
      if (a->weight > 0.0 && norm(a->location) <= radius && wolff(mu, a->location, params, quad).value <= level) {
        parts.push_back(*a);
      }
    } else if (const auto* s = std::get_if<SphericalShell>(&c)) {
      if (s->mass > 0.0 && kept(s->radius)) parts.push_back(*s);
    } else {
      const auto& d = std::get<RadialDensity>(c);
      if (d.weight <= 0.0) continue;
      const auto& prof = d.profile;
      const double support = prof->support();
      if (keep.size() == 1 && keep.front().first == 0.0 && keep.front().second >= support) {
        parts.push_back(d);
        continue;
      }
      std::vector<std::pair<double, double>> pieces;
      std::vector<double> bps(prof->breakpoints().begin(), prof->breakpoints().end());
      double top = 0.0;
      for (const auto& [lo, hi] : keep) {
        if (lo >= support) break;
        pieces.emplace_back(lo, std::min(hi, support));
        bps.push_back(lo);
        bps.push_back(std::min(hi, support));
        top = std::min(hi, support);
      }
      if (pieces.empty() || !(top > 0.0)) continue;
      auto fn = [prof, pieces](double s) {
        for (const auto& [lo, hi] : pieces) {
          if (s >= lo && s < hi) return (*prof)(s);
        }
        return 0.0;
      };
      auto cut = std::make_shared<const DensityProfile>(n, std::move(fn), top, std::move(bps),
                                                        prof->label() + "|cutoff" + std::to_string(k));
      parts.push_back(RadialDensity{std::move(cut), d.weight});
    }
  }
  return RadonMeasure(n, std::move(parts));
}

std::vector<PotentialValue> wolff_batch(const RadonMeasure& mu, std::span<const Point> points,
                                        const ProblemParams& params, const QuadratureConfig& quad) {
  return batch<true>(mu, points, params, quad);
}

std::vector<PotentialValue> wolff_batch_serial(const RadonMeasure& mu, std::span<const Point> points,
                                               const ProblemParams& params, const QuadratureConfig& quad) {
  return batch<false>(mu, points, params, quad);
}

std::vector<double> wolff_profile_grid(const RadonMeasure& mu, const QuadratureConfig& quad) {
  const int per_decade = std::max(8, quad.points_per_decade / 8);
  const LogGrid base(quad.r_min, quad.r_max, per_decade);
  // The profile's second derivative jumps at breakpoints; grade the grid
  // geometrically towards them.
  std::vector<double> extra;
  const double step = std::log(10.0) / per_decade;
  for (double b : mu.radial_breakpoints()) {
    extra.push_back(b);
    for (double d = 0.5 * step; d > 1e-3 * step; d *= 0.25) {
      extra.push_back(b * std::exp(-d));
      extra.push_back(b * std::exp(d));
    }
  }
  return merge_breakpoints(base.nodes(), extra);
}

RadialFunction wolff_profile(const RadonMeasure& mu, const ProblemParams& params, const QuadratureConfig& quad) {
  return profile<true>(mu, params, quad);
}

RadialFunction wolff_profile_serial(const RadonMeasure& mu, const ProblemParams& params,
                                    const QuadratureConfig& quad) {
  return profile<false>(mu, params, quad);
}

}  // namespace wolfflab
