// Oracle-backed checks shared by the unit tests and the acceptance runner.
#ifndef ERLMIX_TESTS_CHECKS_HPP_
#define ERLMIX_TESTS_CHECKS_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace checks {

struct NamedValue {
  std::string name;
  double value = 0.0;
};

/// Largest relative error between log_likelihood and the sum of the
/// augmented likelihood over every allocation vector, across random
/// instances with J <= 4 and n <= 6.
double temporal_marginalization_error(int instances, std::uint64_t seed);

/// Spatial analogue with J = 2, n <= 3.
double spatial_marginalization_error(int instances, std::uint64_t seed);

/// KS p-values of repeated weight updates against the analytic gamma full
/// conditional, one per parameter setting.
std::vector<NamedValue> temporal_conjugacy_pvalues(int draws, std::uint64_t seed);
std::vector<NamedValue> spatial_conjugacy_pvalues(int draws, std::uint64_t seed);

/// Runs each scalar MH kernel alone on a frozen instance for `sweeps`
/// updates and returns the KS p-value of the thinned draws against the
/// grid-normalized full conditional.
std::vector<NamedValue> temporal_mh_stationarity(long sweeps, int thin, std::uint64_t seed);
std::vector<NamedValue> spatial_mh_stationarity(long sweeps, int thin, std::uint64_t seed);

/// sup |lambda(t) - 1| over (0.5, 0.9 J theta) with omega_j = theta and
/// J theta = support.
double constant_approximation_error(double theta, double support, int grid_points = 2000);

/// Largest |prior_mean_intensity(t) b - 1| over an interior grid of (0, upper).
double prior_mean_max_relative_deviation(double b, double theta, int J, double upper,
                                         int grid_points = 400);

/// Largest |MC mean - closed form| / s.e. over an interior grid, using
/// `draws` prior weight vectors at fixed (theta, b, c0).
double prior_mean_monte_carlo_z(double b, double theta, double c0, int J, double upper,
                                int grid_points, int draws, std::uint64_t seed);

}  // namespace checks

#endif  // ERLMIX_TESTS_CHECKS_HPP_
