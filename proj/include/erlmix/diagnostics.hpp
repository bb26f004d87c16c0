#ifndef ERLMIX_DIAGNOSTICS_HPP_
#define ERLMIX_DIAGNOSTICS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "erlmix/spatial_model.hpp"
#include "erlmix/temporal_model.hpp"

namespace erlmix {

// Pointwise posterior mean and equal-tailed band over a grid.
struct IntensitySummary {
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
  double lower_level = 0.025;
  double upper_level = 0.975;
};

/// n equally spaced interior points T k / (n + 1), k = 1..n.
std::vector<double> default_grid(double window_end, int n = 51);

/// Summarizes a draws x grid matrix (row-major) column by column.
IntensitySummary summarize_columns(std::span<const double> values, std::span<const double> grid,
                                   double lower_level = 0.025, double upper_level = 0.975);

/// lambda(t) per draw on the grid.
IntensitySummary intensity_summary(const PosteriorChain &chain, std::span<const double> grid,
                                   double lower_level = 0.025, double upper_level = 0.975);

/// Per draw, f(t) = sum_j w*_j ga(t | j, 1/theta) / K_{j,theta}(T) with
/// w*_j proportional to omega_j K_{j,theta}(T); f integrates to 1 on (0, T).
IntensitySummary density_summary(const PosteriorChain &chain, std::span<const double> grid,
                                  double lower_level = 0.025, double upper_level = 0.975);

/// Normalized weights w*_j for one draw; they sum to 1.
std::vector<double> normalized_weights(std::span<const double> weights, double theta,
                                       double window_end);

/// The density above for a single parameter value.
double truncated_mixture_density(double t, std::span<const double> weights, double theta,
                                 double window_end);

struct WeightSummary {
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
  double level = 0.9;
};

/// Per-basis posterior means and central `level` intervals of omega_j.
WeightSummary weight_summary(const PosteriorChain &chain, double level = 0.9);

// Q-Q curve of rescaled inter-event times against uniform quantiles.
struct QqSummary {
  std::vector<double> position;  // i / (n + 1)
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
};

/// U_i = 1 - exp(-(Lambda(t_i) - Lambda(t_{i-1}))) from cumulative values
/// at the ordered event times (Lambda(t_0) = 0).  Unsorted.
std::vector<double> rescaled_uniforms(std::span<const double> cumulative_at_events);

/// U_i for a single Erlang mixture.
std::vector<double> rescaled_uniforms(const PointPattern &pattern,
                                      std::span<const double> weights, double theta);

/// U_i computed from the posterior mean of Lambda.
std::vector<double> posterior_mean_rescaled_uniforms(const PointPattern &pattern,
                                                     const PosteriorChain &chain);

/// Sorted U_i per draw, summarized by the posterior mean and 95% band at
/// each plotting position.
QqSummary time_rescale(const PointPattern &pattern, const PosteriorChain &chain);

/// Empirical autocorrelations rho_0..rho_max_lag with the biased (1/n)
/// normalization.  Throws std::invalid_argument on a constant series.
std::vector<double> acf(std::span<const double> series, std::size_t max_lag);

/// n / (1 + 2 sum rho_k), truncated by Geyer's initial positive sequence
/// rule and clamped to (0, n].  Needs at least 10 values; throws on a
/// constant series.
double ess(std::span<const double> series);

/// Average ESS of the lambda(t_k) traces over the grid.
double mean_ess_over_grid(const PosteriorChain &chain, std::span<const double> grid);

/// Mean ACF of the lambda(t_k) traces over the grid.
std::vector<double> mean_acf_over_grid(const PosteriorChain &chain, std::span<const double> grid,
                                       std::size_t max_lag);

// Spatial surface on a grid1 x grid2 lattice, stored row-major with s1 as
// the row coordinate.
struct SurfaceSummary {
  std::vector<double> grid1;
  std::vector<double> grid2;
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> iqr;  // q75 - q25

  double at(const std::vector<double> &field, std::size_t i, std::size_t j) const {
    return field[i * grid2.size() + j];
  }
};

/// Cell midpoints (k + 0.5) / n of the unit interval.
std::vector<double> unit_midpoint_grid(int n = 64);

SurfaceSummary surface_summary(const SpatialChain &chain, std::span<const double> grid1,
                               std::span<const double> grid2);

/// Marginal intensity along `dimension` (1 or 2) per draw on the grid.
IntensitySummary spatial_marginal_summary(const SpatialChain &chain, int dimension,
                                          std::span<const double> grid,
                                          double lower_level = 0.025,
                                          double upper_level = 0.975);

/// Local maxima of a summary field (strictly larger than all 8 neighbours,
/// edges included), sorted by decreasing value.  Returns (i, j) indices.
std::vector<std::pair<std::size_t, std::size_t>> local_maxima(const SurfaceSummary &surface,
                                                              const std::vector<double> &field);

}  // namespace erlmix

#endif  // ERLMIX_DIAGNOSTICS_HPP_
