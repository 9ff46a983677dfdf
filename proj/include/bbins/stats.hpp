#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace bbins::stats {

double mean(std::span<const double> xs);
/// Divides by n.
double population_std(std::span<const double> xs);
/// Divides by n - 1 (0 for fewer than two values).
double sample_std(std::span<const double> xs);
double standard_error(std::span<const double> xs);
/// Linear interpolation between order statistics (R type 7).
double quantile(std::vector<double> xs, double q);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_greater = 1.0;  // H1: mean(a) > mean(b)
  double p_two_sided = 1.0;
};

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval for a binomial proportion at the given normal quantile.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054);

/// Upper-tail p-value of Pearson's chi-square statistic with `dof` degrees of freedom.
double chi_square_p_value(double statistic, double dof);

/// Pearson statistic for observed counts against expected probabilities (zero-probability
/// cells must be empty and are skipped).
double chi_square_statistic(std::span<const std::uint64_t> observed, std::span<const double> probs);

struct KsResult {
  double d = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov tail.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace bbins::stats
