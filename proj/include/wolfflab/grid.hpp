#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wolfflab {

/// Logarithmically spaced radii r_i = 10^(e0 + i/ppd). Decade boundaries are
/// exact nodes whenever r_min is a power of ten.
class LogGrid {
 public:
  LogGrid() = default;
  LogGrid(double r_min, double r_max, int points_per_decade);

  std::span<const double> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  double operator[](std::size_t i) const { return nodes_[i]; }
  double front() const { return nodes_.front(); }
  double back() const { return nodes_.back(); }
  int points_per_decade() const { return ppd_; }

 private:
  std::vector<double> nodes_;
  int ppd_ = 0;
};

/// Sorted union of `base` and the `extra` points lying strictly inside
/// (base.front(), base.back()); near-duplicates are merged.
std::vector<double> merge_breakpoints(std::span<const double> base, std::span<const double> extra);

}  // namespace wolfflab
