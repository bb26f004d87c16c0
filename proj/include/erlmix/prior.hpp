#ifndef ERLMIX_PRIOR_HPP_
#define ERLMIX_PRIOR_HPP_

#include <span>
#include <variant>
#include <vector>

#include "erlmix/mixture.hpp"
#include "erlmix/special_fns.hpp"

namespace erlmix {

// Lomax (Pareto type II) prior, density (shape/scale)(1 + x/scale)^{-(shape+1)}.
// With the default shape 2 the variance is infinite and the median is
// scale * (sqrt(2) - 1).
struct LomaxPrior {
  double shape = 2.0;
  double scale = 1.0;

  double log_pdf(double x) const;
  double cdf(double x) const;
  double quantile(double p) const;
  double median() const { return quantile(0.5); }
  double sample(Rng &rng) const;
};

struct ExponentialPrior {
  double mean = 1.0;

  double log_pdf(double x) const;
  double cdf(double x) const;
  double sample(Rng &rng) const;
};

// Gamma process G(H0, c0) with centering H0(t) = t/b (area/b in 2-D).
// Increments over a cell of length theta are gamma(c0 theta / b, c0).
struct GammaProcessPrior {
  double c0 = 1.0;
  double b = 1.0;

  double weight_shape(double cell_measure) const { return c0 * cell_measure / b; }
  double weight_rate() const { return c0; }
};

struct TemporalHyperpriors {
  LomaxPrior theta;
  ExponentialPrior c0{10.0};
  ExponentialPrior b;
  int J = 1;
};

struct SpatialHyperpriors {
  LomaxPrior theta1;
  LomaxPrior theta2;
  ExponentialPrior c0{10.0};
  ExponentialPrior b;
  int J = 1;
};

/// Lomax scale d such that Pr(theta < upper) = coverage for a shape-2
/// Lomax, i.e. d = upper / ((1 - coverage)^{-1/2} - 1).
double lomax_scale_for_coverage(double upper, double coverage, double shape = 2.0);

/// Default hyperpriors for a temporal pattern of n events on (0, T):
/// b ~ Exp(mean T/n), c0 ~ Exp(mean 10), theta ~ Lomax(2, d) with
/// Pr(theta < T) = coverage, and J = floor(T / median(theta)).
TemporalHyperpriors elicit_temporal(double T, int n, double coverage = 0.999);

/// Spatial analogue on the unit square: independent Lomax priors for both
/// scales with Pr(theta1 < 1) Pr(theta2 < 1) = coverage, b ~ Exp(mean 1/n),
/// c0 ~ Exp(mean 10), J = floor(1 / median(theta)).
SpatialHyperpriors elicit_spatial(int n, double coverage = 0.999);

/// Independent gamma(c0 theta/b, c0) weights, j = 1..J.
std::vector<double> sample_weights_prior(double theta, const GammaProcessPrior &gp,
                                         int J, Rng &rng);

/// Independent gamma(c0 theta1 theta2/b, c0) weights on the J x J grid.
WeightMatrix sample_weights_prior(double theta1, double theta2,
                                  const GammaProcessPrior &gp, int J, Rng &rng);

/// E(lambda(t) | b, theta) = exp(-t/theta)/b * sum_{m<J} (t/theta)^m / m!.
double prior_mean_intensity(double t, double b, double theta, int J);

// A hyperparameter is either held fixed or drawn from its prior.
using ThetaSource = std::variant<double, LomaxPrior>;
using PositiveSource = std::variant<double, ExponentialPrior>;

struct PriorCheckSpec {
  int J = 50;
  ThetaSource theta = 0.4;
  PositiveSource c0 = 1.0;
  PositiveSource b = 1.0;
};

struct PriorRealizations {
  std::vector<double> grid;
  std::vector<double> theta;      // per draw
  std::vector<double> c0;         // per draw
  std::vector<double> b;          // per draw
  std::vector<double> weights;    // draws x J, row-major
  std::vector<double> intensity;  // draws x grid, row-major
  std::vector<double> mean;       // pointwise over draws
  std::vector<double> lower;      // 2.5% pointwise quantile
  std::vector<double> upper;      // 97.5% pointwise quantile
  int J = 0;

  std::size_t n_draws() const { return theta.size(); }
  std::span<const double> draw_weights(std::size_t k) const {
    return std::span<const double>(weights).subspan(k * J, J);
  }
  std::span<const double> draw_intensity(std::size_t k) const {
    return std::span<const double>(intensity).subspan(k * grid.size(), grid.size());
  }
};

/// Prior predictive intensity curves on a grid plus pointwise mean and
/// 95% bands.
PriorRealizations prior_intensity_realizations(const PriorCheckSpec &spec,
                                               int n_draws,
                                               std::span<const double> grid,
                                               Rng &rng);

}  // namespace erlmix

#endif  // ERLMIX_PRIOR_HPP_
