#include "wolfflab/grid.hpp"

#include <algorithm>
#include <cmath>

#include "wolfflab/errors.hpp"

namespace wolfflab {

LogGrid::LogGrid(double r_min, double r_max, int points_per_decade) : ppd_(points_per_decade) {
  if (!(r_min > 0) || !(r_max > r_min) || points_per_decade < 1) {
    throw Error(ErrorCode::InvalidArgument, "LogGrid needs 0 < r_min < r_max and ppd >= 1");
  }
  const double ppd = points_per_decade;
  // Snap the exponents to multiples of 1/ppd so that powers of ten are hit exactly.
  double e0 = std::log10(r_min);
  double e1 = std::log10(r_max);
  if (std::abs(e0 * ppd - std::round(e0 * ppd)) < 1e-9) e0 = std::round(e0 * ppd) / ppd;
  if (std::abs(e1 * ppd - std::round(e1 * ppd)) < 1e-9) e1 = std::round(e1 * ppd) / ppd;
  const auto steps = static_cast<std::size_t>(std::ceil((e1 - e0) * ppd - 1e-9));
  nodes_.reserve(steps + 1);
  const auto k0 = std::round(e0 * ppd);
  const bool snapped = std::abs(e0 * ppd - k0) < 1e-12;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double e = snapped ? (k0 + static_cast<double>(i)) / ppd : e0 + static_cast<double>(i) / ppd;
    nodes_.push_back(std::pow(10.0, e));
  }
  nodes_.back() = std::max(nodes_.back(), r_max);
}

std::vector<double> merge_breakpoints(std::span<const double> base, std::span<const double> extra) {
  std::vector<double> out(base.begin(), base.end());
  if (out.empty()) return out;
  const double lo = out.front();
  const double hi = out.back();
  for (double x : extra) {
    if (x > lo && x < hi && std::isfinite(x)) out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  std::vector<double> merged;
  merged.reserve(out.size());
  for (double x : out) {
    if (merged.empty() || x > merged.back() * (1.0 + 1e-13)) {
      merged.push_back(x);
    } else if (x == hi) {
      merged.back() = hi;
    }
  }
  return merged;
}

}  // namespace wolfflab
