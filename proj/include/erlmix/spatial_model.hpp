#ifndef ERLMIX_SPATIAL_MODEL_HPP_
#define ERLMIX_SPATIAL_MODEL_HPP_

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "erlmix/mixture.hpp"
#include "erlmix/prior.hpp"
#include "erlmix/temporal_model.hpp"

namespace erlmix {

struct Location {
  double s1 = 0.0;
  double s2 = 0.0;
};

// Points strictly inside the unit square.
class SpatialPointPattern {
 public:
  SpatialPointPattern() = default;
  /// Throws std::invalid_argument if any coordinate is outside (0, 1).
  explicit SpatialPointPattern(std::vector<Location> locations);

  std::span<const Location> locations() const { return locations_; }
  std::size_t size() const { return locations_.size(); }
  bool empty() const { return locations_.empty(); }

  /// Swaps the two coordinates of every point.
  SpatialPointPattern transposed() const;

 private:
  std::vector<Location> locations_;
};

// Axis-aligned observation rectangle [x0, x1] x [y0, y1].
struct Rectangle {
  double x0 = 0.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;

  double area() const { return (x1 - x0) * (y1 - y0); }
  bool is_unit_square() const { return x0 == 0.0 && x1 == 1.0 && y0 == 0.0 && y1 == 1.0; }
};

/// Maps points in `window` affinely onto the unit square.  An intensity
/// fitted on the unit square converts back to original units by dividing
/// by window.area().
SpatialPointPattern rescale_to_unit_square(std::span<const Location> points,
                                           const Rectangle &window);

struct SpatialState {
  double theta1 = 1.0;
  double theta2 = 1.0;
  double c0 = 1.0;
  double b = 1.0;
  WeightMatrix weights;
  std::vector<std::pair<int, int>> allocations;  // (gamma_i1, gamma_i2), 1-based
  std::vector<int> counts;                       // N_{j1 j2}, row-major J x J

  int J() const { return weights.J(); }
};

// Retained spatial draws; weights stored draws x J^2, each draw row-major.
struct SpatialChain {
  int J = 0;
  McmcSettings settings;
  Rectangle window;
  std::vector<long> iteration;
  std::vector<double> theta1;
  std::vector<double> theta2;
  std::vector<double> c0;
  std::vector<double> b;
  std::vector<double> weights;
  AcceptanceStats theta1_acceptance;
  AcceptanceStats theta2_acceptance;
  AcceptanceStats c0_acceptance;
  AcceptanceStats b_acceptance;

  std::size_t size() const { return theta1.size(); }
  std::span<const double> draw_weights(std::size_t k) const {
    const std::size_t cells = static_cast<std::size_t>(J) * J;
    return std::span<const double>(weights).subspan(k * cells, cells);
  }
  WeightMatrix draw_matrix(std::size_t k) const;
};

/// -sum w K1 K2 + sum_i log sum_{j1,j2} w ga(s_i1 | j1) ga(s_i2 | j2).
double spatial_log_likelihood(const SpatialPointPattern &pattern, const WeightMatrix &weights,
                              double theta1, double theta2);

class SpatialSampler {
 public:
  SpatialSampler(SpatialPointPattern pattern, SpatialHyperpriors hyperpriors,
                 McmcSettings settings, Rng &rng);
  SpatialSampler(SpatialPointPattern pattern, SpatialHyperpriors hyperpriors,
                 McmcSettings settings, SpatialState initial, Rng &rng);

  const SpatialState &state() const { return state_; }
  const SpatialPointPattern &pattern() const { return pattern_; }
  void set_pattern(SpatialPointPattern pattern, Rng &rng);

  void update_allocations(Rng &rng);
  void update_weights(Rng &rng);
  bool update_theta1(Rng &rng);
  bool update_theta2(Rng &rng);
  bool update_c0(Rng &rng);
  bool update_b(Rng &rng);
  /// theta1, theta2, c0, b in that order; returns the accept flags.
  std::array<bool, 4> update_hyperparameters(Rng &rng);
  void sweep(Rng &rng);

  double log_conditional_theta1(double theta1) const;
  double log_conditional_theta2(double theta2) const;
  double log_conditional_c0(double c0) const;
  double log_conditional_b(double b) const;

  double proposal_sd_theta1() const { return sd_[0]; }
  double proposal_sd_theta2() const { return sd_[1]; }
  double proposal_sd_c0() const { return sd_[2]; }
  double proposal_sd_b() const { return sd_[3]; }
  void set_proposal_sds(std::array<double, 4> sds) { sd_ = sds; }
  std::array<double, 4> proposal_sds() const { return sd_; }

 private:
  void init_pattern_sums();
  void refresh_cdf_cache();
  void refresh_weight_cache();
  double weight_prior_term(double shape, double c0) const;
  double normalizer(std::span<const double> k1, std::span<const double> k2) const;
  bool mh_step(double &value, double sd, double (SpatialSampler::*cond)(double) const,
               Rng &rng);

  SpatialPointPattern pattern_;
  SpatialHyperpriors hp_;
  McmcSettings settings_;
  SpatialState state_;
  std::array<double, 4> sd_{};

  std::vector<double> log_s1_, log_s2_;
  double sum_s1_ = 0.0, sum_s2_ = 0.0;
  double sum_alloc1_ = 0.0, sum_alloc2_ = 0.0;
  std::vector<double> k1_, k2_;  // K_{j,theta_k}(1) at the current scales
  std::vector<double> log_weights_;
  double sum_weights_ = 0.0;
  double sum_log_weights_ = 0.0;
  std::vector<double> a_, c_, row_, cell_;
};

/// Full spatial Gibbs sampler on the unit square; engine seeded from
/// settings.seed.
SpatialChain run_spatial_mcmc(const SpatialPointPattern &pattern,
                              const SpatialHyperpriors &hyperpriors,
                              const McmcSettings &settings,
                              const ProgressCallback &progress = {});
SpatialChain run_spatial_mcmc(const SpatialPointPattern &pattern,
                              const SpatialHyperpriors &hyperpriors,
                              const McmcSettings &settings, Rng &rng,
                              const ProgressCallback &progress = {});

/// Marginal intensity of retained draw k along `dimension` (1 or 2).
double marginal_intensity(const SpatialChain &chain, std::size_t k, int dimension, double s);

}  // namespace erlmix

#endif  // ERLMIX_SPATIAL_MODEL_HPP_
