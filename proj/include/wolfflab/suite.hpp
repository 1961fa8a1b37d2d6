#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wolfflab/energy.hpp"
#include "wolfflab/measure.hpp"
#include "wolfflab/params.hpp"

namespace wolfflab {

/// Per-instance stream seeded from (seed, tag, instance), independent of
/// evaluation order and thread count.
class InstanceRng {
 public:
  InstanceRng(std::uint64_t seed, std::string_view tag, int instance);

  std::uint64_t next() { return gen_(); }
  /// [0, 1) from the top 53 bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double log_uniform(double lo, double hi);

 private:
  std::mt19937_64 gen_;
};

/// a (1 + (r/b)^2)^{-c}: a, b log-uniform in [0.1, 10], c = n/2 + 1 + 2U.
struct BumpParams {
  double a = 1;
  double b = 1;
  double c = 2;
};
BumpParams draw_bump(int n, InstanceRng& rng);
RadonMeasure bump_measure(int n, const BumpParams& b);
std::string describe(const BumpParams& b);

struct CheckRecord {
  std::string check;
  int instance = 0;
  std::string cell;  // n, p, gamma, q; "*" marks a per-instance draw
  double gamma = 0;
  double q = 0;
  InequalityReport report;
  std::vector<std::pair<std::string, double>> extras;
  std::string error;  // set when the instance raised; the report then fails
};

struct CheckOptions {
  ProblemParams params;
  QuadratureConfig quad;
  std::uint64_t seed = 42;
  int instances = 100;
  bool randomize = true;  // draw gamma and q per instance instead of using params
};

const std::vector<std::string>& check_names();
bool is_check_name(std::string_view name);

/// Runs `instances` seeded instances of one check in parallel; records come
/// back in instance order.
std::vector<CheckRecord> run_check(const std::string& name, const CheckOptions& opts);

/// One seeded minimal solve of the monotonicity suite.
struct SolveRecord {
  int instance = 0;
  std::string data;
  double q = 0;
  bool converged = false;
  int iterations = 0;
  double min_step = 0;
  int violations = 0;  // steps with min_step < -1e-12
  double residual = 0;
  double riesz_mismatch = 0;
  double sup_norm = 0;
  std::string error;
};

std::vector<SolveRecord> run_solve_suite(const CheckOptions& opts);

}  // namespace wolfflab
