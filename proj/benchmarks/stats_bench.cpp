#include <benchmark/benchmark.h>

#include "common.hpp"
#include "pseudosurv/stats.hpp"

static void BM_HdtsTest(benchmark::State& state) {
  const auto xa = bench::gaussian(20, state.range(0), 11);
  const auto xb = bench::gaussian(20, state.range(0), 12, 0.3);
  pseudosurv::HdtsOptions opts;
  opts.permutations = 999;
  for (auto _ : state) benchmark::DoNotOptimize(pseudosurv::hdts_test(xa, xb, opts));
}
BENCHMARK(BM_HdtsTest)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_PairedT(benchmark::State& state) {
  const std::vector<double> a{0.81, 0.84, 0.79, 0.88, 0.83};
  const std::vector<double> b{0.78, 0.80, 0.80, 0.82, 0.79};
  for (auto _ : state) benchmark::DoNotOptimize(pseudosurv::paired_t_test(a, b));
}
BENCHMARK(BM_PairedT);
