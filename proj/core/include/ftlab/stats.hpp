#pragma once

#include <cstdint>
#include <vector>

namespace ftlab {

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::uint64_t total() const { return tp + fp + tn + fn; }
};

// Standard definitions; degenerate denominators return 0 by convention.
double accuracy(const ConfusionCounts& c);
double f1_score(const ConfusionCounts& c);
double mcc(const ConfusionCounts& c);

double mean_of(const std::vector<double>& values);
double max_of(const std::vector<double>& values);
// Sample standard deviation (n-1 divisor); requires n >= 2.
double sample_std(const std::vector<double>& values);

struct SummaryStats {
  double stddev = 0.0, mean = 0.0, max = 0.0;
};
SummaryStats summary_stats(const std::vector<double>& values);

// Continued-fraction regularized incomplete beta I_x(a, b).
double regularized_incomplete_beta(double x, double a, double b);
// Upper tail of the F(d1, d2) distribution at x.
double f_distribution_upper_tail(double x, double d1, double d2);

struct LeveneResult {
  double W = 0.0;
  double p = 1.0;
};

// Mean-centered Levene test (the original 1960 form). Degenerate cases:
// zero within-group deviation spread with nonzero between-group spread gives
// W = +inf, p = 0; both zero gives W = 0, p = 1.
LeveneResult levene_test(const std::vector<std::vector<double>>& groups);

// Sample variance of per-run dev metrics (n-1 divisor); the S_ours estimator.
double performance_variance_stability(const std::vector<double>& run_metrics);

// Mean over dev points of p(1-p), where p is the fraction of runs correct on
// the point (population variance of the Bernoulli indicator); the S_per-point
// estimator. correctness[run][point].
double per_point_stability(const std::vector<std::vector<bool>>& correctness);

}  // namespace ftlab
