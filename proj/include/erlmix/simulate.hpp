#ifndef ERLMIX_SIMULATE_HPP_
#define ERLMIX_SIMULATE_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "erlmix/mixture.hpp"
#include "erlmix/spatial_model.hpp"
#include "erlmix/special_fns.hpp"
#include "erlmix/temporal_model.hpp"

namespace erlmix {

// Weibull hazard (alpha/beta)(t/beta)^{alpha-1}; Lambda(t) = (t/beta)^alpha.
struct WeibullHazard {
  double alpha = 1.0;
  double beta = 1.0;
};

// Weibull density with shape and scale (mean scale * Gamma(1 + 1/shape)).
struct WeibullDensity {
  double shape = 1.0;
  double scale = 1.0;
};

struct LogNormalDensity {
  double mu = 0.0;
  double sigma = 1.0;
};

using DensitySpec = std::variant<WeibullDensity, LogNormalDensity>;

// sum_k mass_k f_k(t).
struct WeightedDensityMixture {
  struct Component {
    double mass = 1.0;
    DensitySpec density;
  };
  std::vector<Component> components;
};

struct ErlangMixture {
  std::vector<double> weights;
  double theta = 1.0;
};

struct Homogeneous {
  double rate = 1.0;
};

// Black-box intensity.  Simulation needs a dominating bound (thinning);
// the cumulative intensity falls back to adaptive quadrature.
struct CustomIntensity {
  std::function<double(double)> rate;
  std::optional<double> bound;
};

using IntensitySpec =
    std::variant<WeibullHazard, WeightedDensityMixture, ErlangMixture, Homogeneous, CustomIntensity>;

// sum_k mass_k BLN(s | mu_k, Sigma_k) on the unit square.
struct BivariateLogitNormalMixture {
  struct Component {
    double mass = 1.0;
    std::array<double, 2> mu{0.0, 0.0};
    std::array<double, 4> cov{1.0, 0.0, 0.0, 1.0};  // row-major 2x2
  };
  std::vector<Component> components;
};

struct SpatialErlangMixture {
  WeightMatrix weights;
  double theta1 = 1.0;
  double theta2 = 1.0;
};

struct SpatialHomogeneous {
  double rate = 1.0;
};

using SpatialIntensitySpec =
    std::variant<BivariateLogitNormalMixture, SpatialErlangMixture, SpatialHomogeneous>;

/// Throws std::invalid_argument for non-positive masses or rates and
/// non-positive-definite covariances.
void validate(const IntensitySpec &spec);
void validate(const SpatialIntensitySpec &spec);

double intensity(const IntensitySpec &spec, double t);

/// Lambda(t) = integral of the intensity over (0, t).
double cumulative_intensity(const IntensitySpec &spec, double t);

/// Count ~ Poisson(Lambda(T)), then i.i.d. times from lambda / Lambda(T).
/// CustomIntensity specs are simulated by thinning against their bound and
/// throw std::invalid_argument when it is missing.
PointPattern simulate_nhpp(const IntensitySpec &spec, double window_end, Rng &rng);

/// Lewis-Shedler thinning of a rate-`bound` homogeneous process.  Throws
/// std::domain_error if the intensity exceeds the bound at a candidate.
PointPattern simulate_nhpp_thinning(const std::function<double(double)> &rate, double bound,
                                    double window_end, Rng &rng);

double intensity(const SpatialIntensitySpec &spec, double s1, double s2);
double total_intensity(const SpatialIntensitySpec &spec);
/// Intensity integrated over the other coordinate on (0, 1).
double marginal_intensity(const SpatialIntensitySpec &spec, int dimension, double s);
SpatialPointPattern simulate_nhpp(const SpatialIntensitySpec &spec, Rng &rng);

/// 150 BLN(mu1, Sigma) + 350 BLN(mu2, Sigma), mu1 = (-1, 1), mu2 = (1, -1),
/// Sigma = [[0.3, 0.1], [0.1, 0.3]].
BivariateLogitNormalMixture bimodal_logit_normal_spec();
SpatialPointPattern simulate_bln_mixture_pattern(Rng &rng);

/// Poisson draw (multiplication method below mean 10, PTRS above).
long poisson_sample(double mean, Rng &rng);

struct Preset {
  std::string name;
  std::string description;
  std::variant<IntensitySpec, SpatialIntensitySpec> spec;
  double window_end = 1.0;  // temporal only
  std::uint64_t seed = 0;

  bool is_spatial() const { return spec.index() == 1; }
};

/// dec-3.1, inc-3.2, bimodal-3.3, bln-4.2, homogeneous.
const std::vector<Preset> &presets();
const Preset &find_preset(const std::string &name);

}  // namespace erlmix

#endif  // ERLMIX_SIMULATE_HPP_
