#include "erlmix/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "erlmix/stats.hpp"

namespace erlmix {

double LomaxPrior::log_pdf(double x) const {
  if (x < 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(shape / scale) - (shape + 1.0) * std::log1p(x / scale);
}

double LomaxPrior::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  return -std::expm1(-shape * std::log1p(x / scale));
}

double LomaxPrior::quantile(double p) const {
  if (!(p >= 0.0 && p < 1.0)) throw std::domain_error("LomaxPrior::quantile: p outside [0, 1)");
  return scale * std::expm1(-std::log1p(-p) / shape);
}

double LomaxPrior::sample(Rng &rng) const { return quantile(1.0 - uniform01(rng)); }

double ExponentialPrior::log_pdf(double x) const {
  if (x < 0.0) return -std::numeric_limits<double>::infinity();
  return -std::log(mean) - x / mean;
}

double ExponentialPrior::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  return -std::expm1(-x / mean);
}

double ExponentialPrior::sample(Rng &rng) const { return -mean * std::log(uniform01(rng)); }

double lomax_scale_for_coverage(double upper, double coverage, double shape) {
  if (!(upper > 0.0)) throw std::domain_error("lomax_scale_for_coverage: upper must be positive");
  if (!(coverage > 0.0 && coverage < 1.0)) {
    throw std::domain_error("lomax_scale_for_coverage: coverage must lie in (0, 1)");
  }
  return upper / std::expm1(-std::log1p(-coverage) / shape);
}

TemporalHyperpriors elicit_temporal(double T, int n, double coverage) {
  if (!(T > 0.0)) throw std::domain_error("elicit_temporal: T must be positive");
  if (n < 1) throw std::domain_error("elicit_temporal: n must be >= 1");
  TemporalHyperpriors hp;
  hp.theta = LomaxPrior{2.0, lomax_scale_for_coverage(T, coverage)};
  hp.c0 = ExponentialPrior{10.0};
  hp.b = ExponentialPrior{T / n};
  hp.J = std::max(1, static_cast<int>(std::floor(T / hp.theta.median())));
  return hp;
}

SpatialHyperpriors elicit_spatial(int n, double coverage) {
  if (n < 1) throw std::domain_error("elicit_spatial: n must be >= 1");
  if (!(coverage > 0.0 && coverage < 1.0)) {
    throw std::domain_error("elicit_spatial: coverage must lie in (0, 1)");
  }
  SpatialHyperpriors hp;
  const LomaxPrior per_axis{2.0, lomax_scale_for_coverage(1.0, std::sqrt(coverage))};
  hp.theta1 = per_axis;
  hp.theta2 = per_axis;
  hp.c0 = ExponentialPrior{10.0};
  hp.b = ExponentialPrior{1.0 / n};
  hp.J = std::max(1, static_cast<int>(std::floor(1.0 / per_axis.median())));
  return hp;
}

std::vector<double> sample_weights_prior(double theta, const GammaProcessPrior &gp,
                                         int J, Rng &rng) {
  std::vector<double> w(J);
  const double shape = gp.weight_shape(theta);
  for (double &v : w) v = gamma_sample(shape, gp.weight_rate(), rng);
  return w;
}

WeightMatrix sample_weights_prior(double theta1, double theta2,
                                  const GammaProcessPrior &gp, int J, Rng &rng) {
  WeightMatrix w(J);
  const double shape = gp.weight_shape(theta1 * theta2);
  for (double &v : w.flat()) v = gamma_sample(shape, gp.weight_rate(), rng);
  return w;
}

double prior_mean_intensity(double t, double b, double theta, int J) {
  if (t < 0.0) throw std::domain_error("prior_mean_intensity: t must be non-negative");
  if (!(b > 0.0)) throw std::domain_error("prior_mean_intensity: b must be positive");
  return erlang_sf(t, J, theta) / b;
}

namespace {

double draw(const ThetaSource &src, Rng &rng) {
  if (const auto *fixed = std::get_if<double>(&src)) return *fixed;
  return std::get<LomaxPrior>(src).sample(rng);
}

double draw(const PositiveSource &src, Rng &rng) {
  if (const auto *fixed = std::get_if<double>(&src)) return *fixed;
  return std::get<ExponentialPrior>(src).sample(rng);
}

}  // namespace

PriorRealizations prior_intensity_realizations(const PriorCheckSpec &spec,
                                               int n_draws,
                                               std::span<const double> grid,
                                               Rng &rng) {
  if (n_draws < 1) throw std::domain_error("prior_intensity_realizations: need at least one draw");
  if (spec.J < 1) throw std::domain_error("prior_intensity_realizations: J must be >= 1");
  PriorRealizations out;
  out.J = spec.J;
  out.grid.assign(grid.begin(), grid.end());
  const std::size_t G = grid.size();
  out.intensity.resize(static_cast<std::size_t>(n_draws) * G);
  out.weights.reserve(static_cast<std::size_t>(n_draws) * spec.J);
  for (int k = 0; k < n_draws; ++k) {
    const double theta = draw(spec.theta, rng);
    const double c0 = draw(spec.c0, rng);
    const double b = draw(spec.b, rng);
    const auto w = sample_weights_prior(theta, GammaProcessPrior{c0, b}, spec.J, rng);
    out.theta.push_back(theta);
    out.c0.push_back(c0);
    out.b.push_back(b);
    out.weights.insert(out.weights.end(), w.begin(), w.end());
    mixture_intensity_grid(grid, w, theta,
                           std::span<double>(out.intensity).subspan(k * G, G));
  }
  out.mean.resize(G);
  out.lower.resize(G);
  out.upper.resize(G);
  std::vector<double> column(n_draws);
  for (std::size_t g = 0; g < G; ++g) {
    for (int k = 0; k < n_draws; ++k) column[k] = out.intensity[k * G + g];
    out.mean[g] = mean(column);
    std::sort(column.begin(), column.end());
    out.lower[g] = quantile_sorted(column, 0.025);
    out.upper[g] = quantile_sorted(column, 0.975);
  }
  return out;
}

}  // namespace erlmix
