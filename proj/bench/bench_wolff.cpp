// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include <cmath>

#include "wolfflab/measure.hpp"
#include "wolfflab/wolff.hpp"

using namespace wolfflab;

namespace {

const ProblemParams kParams = ProblemParams::finite(3, 2.5, {0.5}, 1.0);

QuadratureConfig quad() {
  QuadratureConfig q;
  q.r_min = 1e-4;
  q.r_max = 1e4;
  q.rel_tol = 1e-8;
  return q;
}

RadonMeasure bump() { return RadonMeasure::density(DensityProfile::bump(3, 2.0, 0.7, 2.5)); }

std::vector<Point> points(int count) {
  std::vector<Point> out;
  for (int i = 0; i < count; ++i) {
    const double r = 1e-2 * std::pow(1e4, (i + 0.5) / count);
    out.push_back({r * 0.6, r * 0.8, 0.0});
  }
  return out;
}

void BM_profile(benchmark::State& st) {
  const auto mu = bump();
  for (auto _ : st) benchmark::DoNotOptimize(wolff_profile(mu, kParams, quad()));
}

void BM_profile_serial(benchmark::State& st) {
  const auto mu = bump();
  for (auto _ : st) benchmark::DoNotOptimize(wolff_profile_serial(mu, kParams, quad()));
}

void BM_batch(benchmark::State& st) {
  const auto mu = bump();
  const auto x = points(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(wolff_batch(mu, x, kParams, quad()));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_batch_serial(benchmark::State& st) {
  const auto mu = bump();
  const auto x = points(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(wolff_batch_serial(mu, x, kParams, quad()));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

}  // namespace

BENCHMARK(BM_profile)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_profile_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_batch)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_batch_serial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
