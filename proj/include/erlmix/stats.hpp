#ifndef ERLMIX_STATS_HPP_
#define ERLMIX_STATS_HPP_

#include <functional>
#include <span>
#include <vector>

namespace erlmix {

double mean(std::span<const double> x);

/// Unbiased sample variance (n - 1 denominator).
double variance(std::span<const double> x);

/// Linear-interpolation quantile (Hyndman-Fan type 7) of sorted data.
double quantile_sorted(std::span<const double> sorted, double p);

/// Same as quantile_sorted but accepts unsorted data (copies).
double quantile(std::span<const double> x, double p);

struct KsResult {
  double statistic = 0.0;  // sup |F_n - F|
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test of x against the continuous
/// distribution function cdf.
KsResult ks_test(std::span<const double> x, const std::function<double(double)> &cdf);

/// Two-sample Kolmogorov-Smirnov test.
KsResult ks_test_two_sample(std::span<const double> x, std::span<const double> y);

/// Asymptotic Kolmogorov tail probability Pr(D_n > d) with Stephens'
/// small-sample correction; n is the (effective) sample size.
double kolmogorov_pvalue(double d, double n);

}  // namespace erlmix

#endif  // ERLMIX_STATS_HPP_
