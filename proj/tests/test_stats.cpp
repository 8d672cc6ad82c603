#include <doctest.h>

#include <cmath>
#include <limits>

#include "ftlab/error.hpp"
#include "ftlab/stats.hpp"

using namespace ftlab;

TEST_CASE("perfect classifier: accuracy, F1, MCC all 1") {
  const ConfusionCounts c{50, 0, 50, 0};
  CHECK(accuracy(c) == 1.0);
  CHECK(f1_score(c) == 1.0);
  CHECK(mcc(c) == 1.0);
}

TEST_CASE("constant classifier: MCC 0 by degenerate-denominator convention") {
  const ConfusionCounts c{50, 50, 0, 0};
  CHECK(mcc(c) == 0.0);
}

TEST_CASE("(tp=3, tn=4, fp=1, fn=2) fixture") {
  const ConfusionCounts c{3, 1, 4, 2};
  CHECK(mcc(c) == doctest::Approx(0.4082483).epsilon(1e-6));
  CHECK(f1_score(c) == doctest::Approx(0.6666667).epsilon(1e-6));
  CHECK(accuracy(c) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("all-zero counts are rejected") {
  const ConfusionCounts c{0, 0, 0, 0};
  CHECK_THROWS_AS(accuracy(c), Error);
  CHECK_THROWS_AS(f1_score(c), Error);
  CHECK_THROWS_AS(mcc(c), Error);
}

TEST_CASE("MCC is symmetric under simultaneous class swap") {
  for (std::uint64_t tp : {3ull, 10ull, 0ull}) {
    for (std::uint64_t fp : {1ull, 5ull}) {
      const ConfusionCounts c{tp, fp, 7, 2};
      const ConfusionCounts swapped{7, 2, tp, fp};  // tp<->tn, fp<->fn
      CHECK(mcc(c) == doctest::Approx(mcc(swapped)).epsilon(1e-12));
    }
  }
}

TEST_CASE("summary stats of [1,2,3]") {
  const SummaryStats s = summary_stats({1.0, 2.0, 3.0});
  CHECK(s.stddev == doctest::Approx(1.0).epsilon(1e-12));  // n-1 divisor
  CHECK(s.mean == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.max == 3.0);
}

TEST_CASE("constant list has zero std; single-element max works; n < 2 std rejected") {
  CHECK(sample_std({4.2, 4.2, 4.2}) == 0.0);
  CHECK(max_of({7.5}) == 7.5);
  CHECK_THROWS_AS(sample_std({1.0}), Error);
}

// Reference (W, p) values computed with scipy.stats.levene(center='mean'),
// recorded before this implementation was written.
struct LeveneFixture {
  double W, p;
  std::vector<std::vector<double>> groups;
};

static const LeveneFixture kLeveneBattery[] = {
    // identical deviation profiles
    {0.0, 1.0, {{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}}},
    // two groups, different spreads
    {2.0571428571428565, 0.18940366109332119, {{1.0, 2.0, 3.0, 4.0, 5.0}, {2.0, 4.0, 6.0, 8.0, 10.0}}},
    // three groups
    {4.380393227744402, 0.04693657825174967,
     {{0.1, 0.2, 0.15, 0.12}, {0.5, 0.9, 0.2, 0.6}, {0.3, 0.31, 0.29, 0.3}}},
    // unequal sizes
    {4.789621318373072, 0.042890321920311926, {{1.2, 1.9, 2.1}, {0.5, 3.5, 1.0, 2.0, 4.0, 0.1}, {2.2, 2.4}}},
    // strongly different spreads, p < 0.001
    {27.46450474489468, 0.0001249563405062613,
     {{0.7, 0.71, 0.69, 0.7, 0.72, 0.71, 0.7, 0.69}, {0.3, 0.95, 0.1, 0.8, 0.55, 0.2, 0.9, 0.4}}},
    // 25-seed accuracy-style samples, stable vs unstable recipe
    {5.345137376567529, 0.025115884207406063,
     {{0.718644, 0.66042,  0.673886, 0.684003, 0.651699, 0.673056, 0.672976, 0.625622, 0.700477,
       0.689213, 0.656113, 0.668368, 0.686643, 0.665943, 0.666446, 0.633762, 0.687974, 0.676345,
       0.68041,  0.631784, 0.717569, 0.677167, 0.662547, 0.727785, 0.671775},
      {0.50905,  0.495971, 0.458777, 0.50842,  0.491974, 0.487349, 0.44072,  0.486911, 0.498169,
       0.479842, 0.537615, 0.587305, 0.522351, 0.540838, 0.591027, 0.528385, 0.578423, 0.468468,
       0.502829, 0.567391, 0.539387, 0.510438, 0.550317, 0.526123, 0.532237}}},
    // 25-seed MCC-style samples with a large variance gap
    {48.07977965772562, 9.283725842216456e-09,
     {{0.65249,  0.615851, 0.612278, 0.57324,  0.620851, 0.615247, 0.611341, 0.626677, 0.628579,
       0.601819, 0.605048, 0.612437, 0.633414, 0.631101, 0.5975,   0.600849, 0.634263, 0.649343,
       0.620441, 0.608698, 0.640721, 0.615428, 0.634064, 0.648883, 0.632341},
      {0.273628, 0.648964, 0.444607, 0.571664, 0.800346, 0.592278, 0.801648, 0.67647,  0.834544,
       0.188383, 0.254019, 0.133029, 0.600089, 0.393708, 0.689918, 0.537242, 0.48859,  1.006498,
       0.61121,  0.449146, 0.204055, 0.760821, 0.699925, 0.177682, 0.418826}}},
    // close spreads, clearly not significant
    {1.4545454545454533, 0.2622547504021784, {{0.6, 0.7, 0.65, 0.68, 0.62}, {0.58, 0.72, 0.66, 0.7, 0.6}}},
    // negative values
    {6.161676646706587, 0.020617762429357128,
     {{-1.5, -0.5, 0.5, 1.5}, {-3.0, -1.0, 1.0, 3.0}, {-0.2, -0.1, 0.1, 0.2}}},
    // one group shifted by a constant: same deviations, W = 0
    {0.0, 1.0, {{10.1, 10.2, 10.3, 10.4}, {110.1, 110.2, 110.3, 110.4}}},
    // one constant group
    {12.0, 0.013399964712331038, {{2.0, 2.0, 2.0, 2.0}, {1.0, 2.0, 3.0, 4.0}}},
    // five groups of mixed spreads
    {10.318091451292254, 0.00032094979438492536,
     {{0.81, 0.83, 0.82, 0.8},
      {0.7, 0.9, 0.6, 1.0},
      {0.85, 0.84, 0.86, 0.83},
      {0.5, 0.7, 0.9, 1.1},
      {0.82, 0.82, 0.83, 0.81}}},
};

TEST_CASE("levene battery matches the reference oracle to 1e-6") {
  for (const auto& fx : kLeveneBattery) {
    const LeveneResult r = levene_test(fx.groups);
    CHECK(r.W == doctest::Approx(fx.W).scale(1.0).epsilon(1e-6));
    CHECK(r.p == doctest::Approx(fx.p).scale(1.0).epsilon(1e-6));
  }
}

TEST_CASE("levene degenerate conventions") {
  // zero within-group z-variation, nonzero between: W = inf, p = 0
  const LeveneResult inf_case = levene_test({{0.0, 0.0, 4.0, 4.0}, {1.0, 1.0, 3.0, 3.0}});
  CHECK(std::isinf(inf_case.W));
  CHECK(inf_case.p == 0.0);
  // every group constant and equal: W = 0, p = 1
  const LeveneResult zero_case = levene_test({{5.0, 5.0, 5.0}, {5.0, 5.0, 5.0}});
  CHECK(zero_case.W == 0.0);
  CHECK(zero_case.p == 1.0);
}

TEST_CASE("levene rejects undersized groups") {
  CHECK_THROWS_AS(levene_test({{1.0, 2.0}}), Error);
  CHECK_THROWS_AS(levene_test({{1.0, 2.0}, {1.0}}), Error);
}

TEST_CASE("levene W is invariant under shift and common positive rescale") {
  const std::vector<std::vector<double>> base = {{0.1, 0.5, 0.3, 0.2}, {0.9, 0.1, 0.5, 0.7}, {0.4, 0.45, 0.5, 0.42}};
  const LeveneResult r0 = levene_test(base);
  auto transformed = base;
  for (auto& g : transformed)
    for (auto& v : g) v = v * 3.7 + 11.0;
  const LeveneResult r1 = levene_test(transformed);
  CHECK(r1.W == doctest::Approx(r0.W).epsilon(1e-9));
  CHECK(r1.p == doctest::Approx(r0.p).epsilon(1e-9));
}

TEST_CASE("incomplete beta endpoints and symmetry identity") {
  CHECK(regularized_incomplete_beta(0.0, 2.0, 3.0) == 0.0);
  CHECK(regularized_incomplete_beta(1.0, 2.0, 3.0) == 1.0);
  // I_x(1,1) = x for the uniform distribution
  for (double x : {0.1, 0.25, 0.5, 0.9})
    CHECK(regularized_incomplete_beta(x, 1.0, 1.0) == doctest::Approx(x).epsilon(1e-12));
  // complement identity
  for (double x : {0.2, 0.4, 0.7}) {
    const double lhs = regularized_incomplete_beta(x, 2.5, 4.0);
    const double rhs = 1.0 - regularized_incomplete_beta(1.0 - x, 4.0, 2.5);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("performance variance stability") {
  CHECK(performance_variance_stability({0.5, 0.7}) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(performance_variance_stability({0.4, 0.4, 0.4}) == 0.0);
  const std::vector<double> vals = {0.61, 0.72, 0.55, 0.68};
  const double s = sample_std(vals);
  CHECK(performance_variance_stability(vals) == doctest::Approx(s * s).epsilon(1e-12));
  CHECK_THROWS_AS(performance_variance_stability({0.5}), Error);
}

TEST_CASE("per-point stability") {
  CHECK(per_point_stability({{true, false, true}, {true, false, true}}) == 0.0);
  // exactly half the runs correct on every point
  CHECK(per_point_stability({{true, true}, {false, false}}) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(per_point_stability({{true}}), Error);
  CHECK_THROWS_AS(per_point_stability({{}, {}}), Error);
}

TEST_CASE("per-point stability is invariant under run and point permutations and bounded by 0.25") {
  const std::vector<std::vector<bool>> m = {{true, false, true, true},
                                            {false, false, true, true},
                                            {true, true, false, true}};
  const double base = per_point_stability(m);
  CHECK(base >= 0.0);
  CHECK(base <= 0.25 + 1e-15);
  const std::vector<std::vector<bool>> runs_permuted = {m[2], m[0], m[1]};
  CHECK(per_point_stability(runs_permuted) == doctest::Approx(base).epsilon(1e-15));
  std::vector<std::vector<bool>> points_permuted(m.size());
  const std::size_t perm[] = {3, 1, 0, 2};
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t j : perm) points_permuted[r].push_back(m[r][j]);
  CHECK(per_point_stability(points_permuted) == doctest::Approx(base).epsilon(1e-15));
}
