#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace wolfflab::quad {

struct Result {
  double value = 0;
  double error = 0;

  Result& operator+=(const Result& other) {
    value += other.value;
    error += other.error;
    return *this;
  }
};

inline constexpr unsigned kMaxDepth = 12;

namespace detail {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
using Gauss = boost::math::quadrature::gauss<double, 7>;

// One 15-point Kronrod panel with the QUADPACK error estimate, which is far
// less pessimistic than |K15 - G7| on smooth integrands.
template <class F>
Result panel(F& f, double a, double b) {
  const auto& xk = Kronrod::abscissa();
  const auto& wk = Kronrod::weights();
  const auto& wg = Gauss::weights();
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fv[2][8];
  const double fc = f(c);
  double resk = fc * wk[0];
  double resg = fc * wg[0];
  double resabs = std::abs(resk);
  for (std::size_t j = 1; j < 8; ++j) {
    fv[0][j] = f(c - h * xk[j]);
    fv[1][j] = f(c + h * xk[j]);
    resk += wk[j] * (fv[0][j] + fv[1][j]);
    resabs += wk[j] * (std::abs(fv[0][j]) + std::abs(fv[1][j]));
    if (j % 2 == 0) resg += wg[j / 2] * (fv[0][j] + fv[1][j]);
  }
  const double mean = 0.5 * resk;
  double resasc = wk[0] * std::abs(fc - mean);
  for (std::size_t j = 1; j < 8; ++j) resasc += wk[j] * (std::abs(fv[0][j] - mean) + std::abs(fv[1][j] - mean));
  resasc *= std::abs(h);
  resabs *= std::abs(h);
  double err = std::abs((resk - resg) * h);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  err = std::max(err, 50.0 * std::numeric_limits<double>::epsilon() * resabs);
  return {resk * h, err};
}

template <class F>
Result bisect(F& f, double a, double b, const Result& whole, double rel_tol, double abs_tol, unsigned depth) {
  if (depth == 0 || whole.error <= std::max(abs_tol, rel_tol * std::abs(whole.value))) return whole;
  const double mid = 0.5 * (a + b);
  Result left = panel(f, a, mid);
  const Result right = panel(f, mid, b);
  left = bisect(f, a, mid, left, rel_tol, 0.5 * abs_tol, depth - 1);
  left += bisect(f, mid, b, right, rel_tol, 0.5 * abs_tol, depth - 1);
  return left;
}

}  // namespace detail

/// Adaptive Gauss–Kronrod (7/15) bisection on [a, b]; stops when the error is below
/// rel_tol * |value| or abs_tol.
template <class F>
Result adaptive(F&& f, double a, double b, double rel_tol, double abs_tol = 0.0) {
  if (!(b > a)) return {};
  const Result whole = detail::panel(f, a, b);
  return detail::bisect(f, a, b, whole, rel_tol, std::max(abs_tol, rel_tol * std::abs(whole.value)), kMaxDepth);
}

/// ∫_a^b f(r) dr evaluated in x = ln r; for 0 < a < b.
template <class F>
Result adaptive_log(F&& f, double a, double b, double rel_tol, double abs_tol = 0.0) {
  if (!(b > a)) return {};
  auto g = [&f](double x) {
    const double r = std::exp(x);
    return f(r) * r;
  };
  return adaptive(g, std::log(a), std::log(b), rel_tol, abs_tol);
}

/// Sum of adaptive integrals over consecutive pieces [breaks[i], breaks[i+1]].
/// The tolerance applies to the sum: a first pass of single panels fixes a
/// per-piece absolute floor.
template <class F>
Result adaptive_pieces(F&& f, std::span<const double> breaks, double rel_tol, bool log_scale,
                       double abs_tol = 0.0) {
  if (breaks.size() < 2) return {};
  auto g = [&f](double x) {
    const double r = std::exp(x);
    return f(r) * r;
  };
  const std::size_t m = breaks.size() - 1;
  std::vector<double> lo(m), hi(m);
  std::vector<Result> first(m);
  double rough = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    lo[i] = log_scale ? std::log(breaks[i]) : breaks[i];
    hi[i] = log_scale ? std::log(breaks[i + 1]) : breaks[i + 1];
    if (!(hi[i] > lo[i])) continue;
    first[i] = log_scale ? detail::panel(g, lo[i], hi[i]) : detail::panel(f, lo[i], hi[i]);
    rough += std::abs(first[i].value);
  }
  const double floor = std::max(abs_tol, rel_tol * rough) / static_cast<double>(m);
  Result total;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(hi[i] > lo[i])) continue;
    total += log_scale ? detail::bisect(g, lo[i], hi[i], first[i], rel_tol, floor, kMaxDepth)
                       : detail::bisect(f, lo[i], hi[i], first[i], rel_tol, floor, kMaxDepth);
  }
  return total;
}

/// Fixed 10-point Gauss–Legendre on [a, b].
template <class F>
double gauss10(F&& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss<double, 10>::integrate(f, a, b);
}

/// Fixed 15-point Gauss–Kronrod rule on [a, b] (no refinement).
template <class F>
double kronrod15(F&& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return detail::panel(f, a, b).value;
}

/// Fixed 15-point rule in x = ln r.
template <class F>
double kronrod15_log(F&& f, double a, double b) {
  if (!(b > a)) return 0.0;
  auto g = [&f](double x) {
    const double r = std::exp(x);
    return f(r) * r;
  };
  return kronrod15(g, std::log(a), std::log(b));
}

}  // namespace wolfflab::quad
