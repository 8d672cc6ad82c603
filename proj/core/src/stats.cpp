#include "ftlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ftlab/error.hpp"

namespace ftlab {

double accuracy(const ConfusionCounts& c) {
  require(c.total() > 0, "accuracy: empty counts");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double f1_score(const ConfusionCounts& c) {
  require(c.total() > 0, "f1: empty counts");
  const double denom = static_cast<double>(2 * c.tp + c.fp + c.fn);
  if (denom == 0.0) return 0.0;
  return 2.0 * static_cast<double>(c.tp) / denom;
}

double mcc(const ConfusionCounts& c) {
  require(c.total() > 0, "mcc: empty counts");
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom);
}

double mean_of(const std::vector<double>& values) {
  require(!values.empty(), "mean: empty input");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double max_of(const std::vector<double>& values) {
  require(!values.empty(), "max: empty input");
  double m = values[0];
  for (double v : values) m = std::max(m, v);
  return m;
}

double sample_std(const std::vector<double>& values) {
  require(values.size() >= 2, "sample_std: needs at least 2 values");
  bool constant = true;
  for (double v : values)
    if (v != values[0]) constant = false;
  if (constant) return 0.0;  // exact zero for constant input
  const double mu = mean_of(values);
  double acc = 0.0;
  for (double v : values) acc += (v - mu) * (v - mu);
  return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

SummaryStats summary_stats(const std::vector<double>& values) {
  return {sample_std(values), mean_of(values), max_of(values)};
}

namespace {

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double x, double a, double b) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  require(a > 0.0 && b > 0.0, "incomplete beta: a, b must be positive");
  require(x >= 0.0 && x <= 1.0, "incomplete beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front = std::exp(a * std::log(x) + b * std::log(1.0 - x) - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(x, a, b) / a;
  }
  return 1.0 - std::exp(b * std::log(1.0 - x) + a * std::log(x) - log_beta(b, a)) * beta_cf(1.0 - x, b, a) / b;
}

double f_distribution_upper_tail(double x, double d1, double d2) {
  require(d1 > 0.0 && d2 > 0.0, "f distribution: degrees of freedom must be positive");
  if (!(x > 0.0)) return 1.0;
  if (std::isinf(x)) return 0.0;
  // P(F > x) = I_{d2/(d2 + d1 x)}(d2/2, d1/2); computing the complement form
  // directly keeps small tails accurate.
  return regularized_incomplete_beta(d2 / (d2 + d1 * x), 0.5 * d2, 0.5 * d1);
}

LeveneResult levene_test(const std::vector<std::vector<double>>& groups) {
  require(groups.size() >= 2, "levene: needs at least 2 groups");
  for (const auto& g : groups) require(g.size() >= 2, "levene: every group needs at least 2 values");

  const std::size_t k = groups.size();
  std::size_t n_total = 0;
  std::vector<std::vector<double>> z(k);
  std::vector<double> z_group_mean(k);
  double z_grand = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double mu = 0.0;
    for (double v : groups[i]) mu += v;
    mu /= static_cast<double>(groups[i].size());
    z[i].reserve(groups[i].size());
    double zsum = 0.0;
    for (double v : groups[i]) {
      const double zz = std::fabs(v - mu);
      z[i].push_back(zz);
      zsum += zz;
    }
    z_group_mean[i] = zsum / static_cast<double>(groups[i].size());
    z_grand += zsum;
    n_total += groups[i].size();
  }
  z_grand /= static_cast<double>(n_total);

  double between = 0.0, within = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double d = z_group_mean[i] - z_grand;
    between += static_cast<double>(z[i].size()) * d * d;
    for (double zz : z[i]) {
      const double e = zz - z_group_mean[i];
      within += e * e;
    }
  }

  const double df1 = static_cast<double>(k - 1);
  const double df2 = static_cast<double>(n_total - k);
  if (within == 0.0) {
    if (between == 0.0) return {0.0, 1.0};
    return {std::numeric_limits<double>::infinity(), 0.0};
  }
  const double W = (df2 / df1) * (between / within);
  return {W, f_distribution_upper_tail(W, df1, df2)};
}

double performance_variance_stability(const std::vector<double>& run_metrics) {
  require(run_metrics.size() >= 2, "performance_variance_stability: needs at least 2 runs");
  const double s = sample_std(run_metrics);
  return s * s;
}

double per_point_stability(const std::vector<std::vector<bool>>& correctness) {
  require(correctness.size() >= 2, "per_point_stability: needs at least 2 runs");
  const std::size_t points = correctness[0].size();
  require(points >= 1, "per_point_stability: needs at least 1 dev point");
  for (const auto& row : correctness)
    require(row.size() == points, "per_point_stability: ragged correctness matrix");

  const double runs = static_cast<double>(correctness.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < points; ++j) {
    double hits = 0.0;
    for (const auto& row : correctness) hits += row[j] ? 1.0 : 0.0;
    const double p = hits / runs;
    acc += p * (1.0 - p);
  }
  return acc / static_cast<double>(points);
}

}  // namespace ftlab
