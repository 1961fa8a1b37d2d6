#include "wolfflab/radial_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wolfflab/errors.hpp"

namespace wolfflab {

namespace {

// d/dx of the Lagrange interpolant through (xs, ys) evaluated at xs[i].
double lagrange_derivative(std::span<const double> xs, std::span<const double> ys, std::size_t i) {
  double d = 0.0;
  const std::size_t m = xs.size();
  for (std::size_t j = 0; j < m; ++j) {
    double w;
    if (j == i) {
      w = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        if (k != i) w += 1.0 / (xs[i] - xs[k]);
      }
    } else {
      double num = 1.0;
      double den = 1.0;
      for (std::size_t k = 0; k < m; ++k) {
        if (k != j) den *= xs[j] - xs[k];
        if (k != i && k != j) num *= xs[i] - xs[k];
      }
      w = num / den;
    }
    d += ys[j] * w;
  }
  return d;
}

}  // namespace

RadialFunction::RadialFunction(std::vector<double> radii, std::vector<double> values, std::vector<double> slopes,
                               double tail_coeff, double tail_exp, double center_value)
    : r_(std::move(radii)), u_(std::move(values)), du_(std::move(slopes)), tail_coeff_(tail_coeff),
      tail_exp_(tail_exp), center_(center_value) {
  if (r_.size() != u_.size() || r_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "radial function needs matching nonempty radii and values");
  }
  for (std::size_t i = 0; i < r_.size(); ++i) {
    if (!(r_[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "radial grid must be positive");
    if (i > 0 && r_[i] < r_[i - 1]) throw Error(ErrorCode::InvalidArgument, "radial grid must be nondecreasing");
    if (i > 1 && r_[i] == r_[i - 2]) throw Error(ErrorCode::InvalidArgument, "a radius may repeat at most once");
    if (!(u_[i] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "radial function values must be nonnegative");
  }
  if (du_.empty()) {
    estimate_slopes();
  } else {
    if (du_.size() != r_.size()) throw Error(ErrorCode::InvalidArgument, "slope count mismatch");
    exact_slopes_ = true;
  }
}

RadialFunction RadialFunction::sample(std::span<const double> radii, const std::function<double(double)>& u,
                                      const std::function<double(double)>& du, double tail_exp,
                                      double center_value) {
  std::vector<double> r(radii.begin(), radii.end());
  std::vector<double> v(r.size());
  std::vector<double> d;
  for (std::size_t i = 0; i < r.size(); ++i) v[i] = u(r[i]);
  if (du) {
    d.resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) d[i] = du(r[i]);
  }
  const double coeff = v.back() * std::pow(r.back(), tail_exp);
  return RadialFunction(std::move(r), std::move(v), std::move(d), coeff, tail_exp, center_value);
}

RadialFunction RadialFunction::zero(std::span<const double> radii) {
  std::vector<double> r(radii.begin(), radii.end());
  std::vector<double> v(r.size(), 0.0);
  std::vector<double> d(r.size(), 0.0);
  return RadialFunction(std::move(r), std::move(v), std::move(d), 0.0, 0.0, 0.0);
}

RadialFunction RadialFunction::indicator(std::span<const double> radii, double radius, double value) {
  std::vector<double> r;
  std::vector<double> v;
  for (double x : radii) {
    if (x < radius) {
      r.push_back(x);
      v.push_back(value);
    }
  }
  r.push_back(radius);
  v.push_back(value);
  r.push_back(radius);
  v.push_back(0.0);
  for (double x : radii) {
    if (x > radius) {
      r.push_back(x);
      v.push_back(0.0);
    }
  }
  std::vector<double> d(r.size(), 0.0);
  return RadialFunction(std::move(r), std::move(v), std::move(d), 0.0, 0.0, value);
}

void RadialFunction::estimate_slopes() {
  const std::size_t n = r_.size();
  du_.assign(n, 0.0);
  exact_slopes_ = false;
  std::vector<double> x(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::log(r_[i]);
    y[i] = u_[i] > 0.0 ? std::log(u_[i]) : 0.0;
  }
  // Pieces are maximal runs of distinct radii with positive values.
  auto same_piece = [&](std::size_t a, std::size_t b) {
    return r_[b] > r_[a] && u_[a] > 0.0 && u_[b] > 0.0;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (u_[i] <= 0.0) continue;
    std::size_t lo = i;
    std::size_t hi = i;
    while (lo > 0 && i - lo < 2 && same_piece(lo - 1, lo)) --lo;
    while (hi + 1 < n && hi - i < 2 && same_piece(hi, hi + 1)) ++hi;
    if (hi == lo) continue;
    const std::span<const double> xs(x.data() + lo, hi - lo + 1);
    const std::span<const double> ys(y.data() + lo, hi - lo + 1);
    double m = lagrange_derivative(xs, ys, i - lo);
    // Hyman filter: keep the slope consistent with neighbouring secants.
    const bool has_left = i > lo;
    const bool has_right = i < hi;
    const double dl = has_left ? (y[i] - y[i - 1]) / (x[i] - x[i - 1]) : 0.0;
    const double dr = has_right ? (y[i + 1] - y[i]) / (x[i + 1] - x[i]) : 0.0;
    if (has_left && has_right) {
      if (dl * dr <= 0.0) {
        m = 0.0;
      } else {
        const double cap = 3.0 * std::min(std::abs(dl), std::abs(dr));
        m = (m * dl <= 0.0) ? 0.0 : std::copysign(std::min(std::abs(m), cap), dl);
      }
    } else {
      const double d = has_left ? dl : dr;
      m = (m * d <= 0.0) ? 0.0 : std::copysign(std::min(std::abs(m), 3.0 * std::abs(d)), d);
    }
    du_[i] = m * u_[i] / r_[i];
  }
}

std::size_t RadialFunction::cell_of(double r) const {
  const auto it = std::upper_bound(r_.begin(), r_.end(), r);
  return static_cast<std::size_t>(std::distance(r_.begin(), it)) - 1;
}

double RadialFunction::hermite(std::size_t k, double r, bool derivative) const {
  const double r0 = r_[k];
  const double r1 = r_[k + 1];
  const double u0 = u_[k];
  const double u1 = u_[k + 1];
  if (u0 > 0.0 && u1 > 0.0) {
    const double x0 = std::log(r0);
    const double h = std::log(r1) - x0;
    const double t = (std::log(r) - x0) / h;
    const double y0 = std::log(u0);
    const double y1 = std::log(u1);
    const double m0 = r0 * du_[k] / u0;
    const double m1 = r1 * du_[k + 1] / u1;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double y = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * m0 + (-2 * t3 + 3 * t2) * y1 +
                     (t3 - t2) * h * m1;
    const double u = std::exp(y);
    if (!derivative) return u;
    const double dy = ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * h * m0 + (-6 * t2 + 6 * t) * y1 +
                       (3 * t2 - 2 * t) * h * m1) /
                      h;
    return u * dy / r;
  }
  const double slope = (u1 - u0) / (r1 - r0);
  return derivative ? slope : u0 + slope * (r - r0);
}

double RadialFunction::operator()(double r) const {
  if (r_.empty()) return 0.0;
  if (r <= 0.0) return center_;
  if (r < r_.front()) {
    const double u0 = u_.front();
    if (u0 <= 0.0) return std::isfinite(center_) ? std::min(center_, u0) : u0;
    const double m0 = r_.front() * du_.front() / u0;
    const double v = u0 * std::pow(r / r_.front(), m0);
    return std::isfinite(center_) ? std::min(v, std::max(center_, u0)) : v;
  }
  if (r > r_.back()) return tail_coeff_ * std::pow(r, -tail_exp_);
  const std::size_t k = cell_of(r);
  if (r == r_[k] || k + 1 >= r_.size()) return u_[k];
  return hermite(k, r, false);
}

double RadialFunction::derivative(double r) const {
  if (r_.empty() || r <= 0.0) return 0.0;
  if (r < r_.front()) {
    const double u0 = u_.front();
    if (u0 <= 0.0) return 0.0;
    return (*this)(r) * (r_.front() * du_.front() / u0) / r;
  }
  if (r > r_.back()) return -tail_exp_ * tail_coeff_ * std::pow(r, -tail_exp_ - 1.0);
  const std::size_t k = cell_of(r);
  if (r == r_[k] || k + 1 >= r_.size()) return du_[k];
  return hermite(k, r, true);
}

bool RadialFunction::is_nonincreasing(double rel_tol) const {
  if (std::isfinite(center_) && !r_.empty() && center_ < u_.front() * (1.0 - rel_tol)) return false;
  for (std::size_t i = 1; i < u_.size(); ++i) {
    if (u_[i] > u_[i - 1] * (1.0 + rel_tol) + std::numeric_limits<double>::min()) return false;
  }
  return true;
}

double RadialFunction::sup() const {
  double s = center_;
  for (double v : u_) s = std::max(s, v);
  return s;
}

RadialFunction RadialFunction::scaled(double c) const {
  RadialFunction out = *this;
  for (auto& v : out.u_) v *= c;
  for (auto& d : out.du_) d *= c;
  out.tail_coeff_ *= c;
  out.center_ *= c;
  return out;
}

RadialFunction RadialFunction::max(const RadialFunction& a, const RadialFunction& b) {
  if (a.r_ != b.r_) throw Error(ErrorCode::InvalidArgument, "max of radial functions needs a common grid");
  RadialFunction out = a;
  for (std::size_t i = 0; i < a.u_.size(); ++i) {
    if (b.u_[i] > a.u_[i]) {
      out.u_[i] = b.u_[i];
      out.du_[i] = b.du_[i];
    }
  }
  out.exact_slopes_ = a.exact_slopes_ && b.exact_slopes_;
  const double ta = a.tail_coeff_ * std::pow(a.r_.back(), -a.tail_exp_);
  const double tb = b.tail_coeff_ * std::pow(b.r_.back(), -b.tail_exp_);
  if (tb > ta) {
    out.tail_coeff_ = b.tail_coeff_;
    out.tail_exp_ = b.tail_exp_;
  }
  out.center_ = std::max(a.center_, b.center_);
  return out;
}

}  // namespace wolfflab
