#include <benchmark/benchmark.h>

#include "ftlab/rng.hpp"
#include "ftlab/stats.hpp"

namespace {

using namespace ftlab;

std::vector<std::vector<double>> seed_groups(std::size_t k, std::size_t n) {
  Rng rng(11, "bench");
  std::vector<std::vector<double>> groups(k);
  for (std::size_t g = 0; g < k; ++g) {
    groups[g].resize(n);
    for (auto& v : groups[g]) v = 0.6 + 0.05 * (g + 1) * rng.next_normal();
  }
  return groups;
}

void BM_LeveneTwoGroups25(benchmark::State& state) {
  const auto groups = seed_groups(2, 25);
  for (auto _ : state) {
    const auto r = levene_test(groups);
    benchmark::DoNotOptimize(r.p);
  }
}
BENCHMARK(BM_LeveneTwoGroups25);

void BM_IncompleteBeta(benchmark::State& state) {
  double x = 0.0;
  for (auto _ : state) {
    x += 1e-6;
    if (x >= 1.0) x = 1e-6;
    benchmark::DoNotOptimize(regularized_incomplete_beta(x, 12.0, 24.5));
  }
}
BENCHMARK(BM_IncompleteBeta);

void BM_PerPointStability(benchmark::State& state) {
  Rng rng(13, "bench");
  std::vector<std::vector<bool>> correctness(25, std::vector<bool>(512));
  for (auto& row : correctness)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = rng.next_double() < 0.7;
  for (auto _ : state) benchmark::DoNotOptimize(per_point_stability(correctness));
}
BENCHMARK(BM_PerPointStability);

}  // namespace

BENCHMARK_MAIN();
