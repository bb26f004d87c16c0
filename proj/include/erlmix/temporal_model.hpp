#ifndef ERLMIX_TEMPORAL_MODEL_HPP_
#define ERLMIX_TEMPORAL_MODEL_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "erlmix/prior.hpp"
#include "erlmix/special_fns.hpp"

namespace erlmix {

// Event times 0 < t_1 < ... < t_n < T observed on the window (0, T).
class PointPattern {
 public:
  PointPattern() = default;
  /// Sorts the times; throws std::invalid_argument on ties, non-finite
  /// values or times outside (0, T).
  PointPattern(std::vector<double> times, double window_end);

  std::span<const double> times() const { return times_; }
  double window_end() const { return window_end_; }
  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }

 private:
  std::vector<double> times_;
  double window_end_ = 1.0;
};

struct McmcSettings {
  int n_iterations = 70000;
  int burn_in = 10000;
  int thin = 1;
  // Log-scale standard deviations of the log-normal random-walk proposals.
  double proposal_sd_theta = 0.1;
  double proposal_sd_c0 = 0.1;
  double proposal_sd_b = 0.1;
  // Robbins-Monro tuning of the proposal scales during burn-in only.
  bool adapt = true;
  double target_acceptance = 0.44;
  std::uint64_t seed = 1;
  int progress_every = 1000;

  /// Throws std::invalid_argument unless 0 <= burn_in < n_iterations,
  /// thin >= 1 and all proposal scales are positive.
  void validate() const;
  int retained_draws() const { return (n_iterations - burn_in) / thin; }
};

struct AcceptanceStats {
  long accepted = 0;
  long proposed = 0;

  void record(bool ok) {
    ++proposed;
    if (ok) ++accepted;
  }
  double rate() const { return proposed == 0 ? 0.0 : static_cast<double>(accepted) / proposed; }
};

struct TemporalState {
  double theta = 1.0;
  double c0 = 1.0;
  double b = 1.0;
  std::vector<double> weights;   // omega_j, j = 1..J
  std::vector<int> allocations;  // gamma_i in 1..J
  std::vector<int> counts;       // N_j, j = 1..J

  int J() const { return static_cast<int>(weights.size()); }
};

// Retained draws of a temporal run.  Weights are stored draws x J row-major.
struct PosteriorChain {
  int J = 0;
  double window_end = 1.0;
  McmcSettings settings;
  std::vector<long> iteration;
  std::vector<double> theta;
  std::vector<double> c0;
  std::vector<double> b;
  std::vector<double> weights;
  AcceptanceStats theta_acceptance;  // post burn-in
  AcceptanceStats c0_acceptance;
  AcceptanceStats b_acceptance;
  double final_sd_theta = 0.0;
  double final_sd_c0 = 0.0;
  double final_sd_b = 0.0;

  std::size_t size() const { return theta.size(); }
  std::span<const double> draw_weights(std::size_t k) const {
    return std::span<const double>(weights).subspan(k * J, J);
  }
};

class SweepError : public std::runtime_error {
 public:
  SweepError(long sweep, const std::string &what)
      : std::runtime_error("sweep " + std::to_string(sweep) + ": " + what), sweep_(sweep) {}
  long sweep() const { return sweep_; }

 private:
  long sweep_;
};

/// -sum_j w_j K_{j,theta}(T) + sum_i log sum_j w_j ga(t_i | j, 1/theta).
double log_likelihood(const PointPattern &pattern, std::span<const double> weights,
                      double theta);

struct SweepProgress {
  long iteration = 0;
  long n_iterations = 0;
  double theta_rate = 0.0;
  double c0_rate = 0.0;
  double b_rate = 0.0;
  double theta2_rate = 0.0;  // spatial runs only
};
using ProgressCallback = std::function<void(const SweepProgress &)>;

// Gibbs sampler for the augmented Erlang mixture model.  Each update_*
// method draws one block from its full conditional given the rest.
class TemporalSampler {
 public:
  /// Starts at theta = prior median, c0 = 1, b = prior mean of b,
  /// omega_j = theta/b, and draws allocations from their full conditional.
  TemporalSampler(PointPattern pattern, TemporalHyperpriors hyperpriors,
                  McmcSettings settings, Rng &rng);

  /// Starts from an explicit state; allocations/counts are taken as given
  /// when sized to the pattern, otherwise they are redrawn.
  TemporalSampler(PointPattern pattern, TemporalHyperpriors hyperpriors,
                  McmcSettings settings, TemporalState initial, Rng &rng);

  const TemporalState &state() const { return state_; }
  const PointPattern &pattern() const { return pattern_; }
  const TemporalHyperpriors &hyperpriors() const { return hp_; }

  /// Replaces the data, e.g. for joint-distribution tests.  Allocations
  /// are redrawn for the new pattern.
  void set_pattern(PointPattern pattern, Rng &rng);

  void update_allocations(Rng &rng);
  void update_weights(Rng &rng);
  bool update_theta(Rng &rng);
  bool update_c0(Rng &rng);
  bool update_b(Rng &rng);

  /// allocations -> weights -> theta -> c0 -> b.
  void sweep(Rng &rng);

  /// Log full-conditional densities up to additive constants.
  double log_conditional_theta(double theta) const;
  double log_conditional_c0(double c0) const;
  double log_conditional_b(double b) const;

  /// Log MH acceptance ratio for a log-normal proposal to `proposed`,
  /// including the Jacobian proposed/current.
  double log_accept_ratio_theta(double proposed) const;
  double log_accept_ratio_c0(double proposed) const;
  double log_accept_ratio_b(double proposed) const;

  double proposal_sd_theta() const { return sd_theta_; }
  double proposal_sd_c0() const { return sd_c0_; }
  double proposal_sd_b() const { return sd_b_; }
  void set_proposal_sds(double theta, double c0, double b);

  /// Sum_j omega_j K_{j,theta}(T) for the current state.
  double total_intensity() const;

 private:
  void refresh_theta_cache();
  void refresh_weight_cache();
  double weight_prior_term(double shape, double c0) const;
  bool mh_step(double &value, double sd, const std::function<double(double)> &ratio,
               Rng &rng);

  PointPattern pattern_;
  TemporalHyperpriors hp_;
  McmcSettings settings_;
  TemporalState state_;

  double sd_theta_, sd_c0_, sd_b_;
  double sum_times_ = 0.0;
  std::vector<double> log_times_;
  std::vector<double> log_weights_;
  std::vector<double> cdf_at_T_;  // K_{j,theta}(T) at the current theta
  std::vector<double> scratch_;
  std::vector<double> scratch_cdf_;
  double sum_weights_ = 0.0;
  double sum_log_weights_ = 0.0;
  double sum_allocations_ = 0.0;  // sum_i gamma_i
};

/// Runs the full sampler and keeps post-burn-in draws at the thinning
/// interval.  The engine is seeded from settings.seed.
PosteriorChain run_mcmc(const PointPattern &pattern, const TemporalHyperpriors &hyperpriors,
                        const McmcSettings &settings,
                        const ProgressCallback &progress = {});

/// Same, drawing from a caller-supplied engine.
PosteriorChain run_mcmc(const PointPattern &pattern, const TemporalHyperpriors &hyperpriors,
                        const McmcSettings &settings, Rng &rng,
                        const ProgressCallback &progress = {});

}  // namespace erlmix

#endif  // ERLMIX_TEMPORAL_MODEL_HPP_
