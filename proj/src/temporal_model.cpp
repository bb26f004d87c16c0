#include "erlmix/temporal_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace erlmix {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

PointPattern::PointPattern(std::vector<double> times, double window_end)
    : times_(std::move(times)), window_end_(window_end) {
  if (!(window_end_ > 0.0) || !std::isfinite(window_end_)) {
    throw std::invalid_argument("PointPattern: window end must be positive and finite");
  }
  std::sort(times_.begin(), times_.end());
  for (std::size_t i = 0; i < times_.size(); ++i) {
    const double t = times_[i];
    if (!std::isfinite(t) || t <= 0.0 || t >= window_end_) {
      throw std::invalid_argument("PointPattern: event time " + std::to_string(t) +
                                  " outside (0, " + std::to_string(window_end_) + ")");
    }
    if (i > 0 && times_[i - 1] == t) {
      throw std::invalid_argument("PointPattern: duplicate event time " + std::to_string(t));
    }
  }
}

void McmcSettings::validate() const {
  if (n_iterations < 1) throw std::invalid_argument("mcmc: n_iterations must be >= 1");
  if (burn_in < 0 || burn_in >= n_iterations) {
    throw std::invalid_argument("mcmc: burn_in must satisfy 0 <= burn_in < n_iterations");
  }
  if (thin < 1) throw std::invalid_argument("mcmc: thin must be >= 1");
  if (!(proposal_sd_theta > 0.0 && proposal_sd_c0 > 0.0 && proposal_sd_b > 0.0)) {
    throw std::invalid_argument("mcmc: proposal standard deviations must be positive");
  }
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    throw std::invalid_argument("mcmc: target_acceptance must lie in (0, 1)");
  }
}

double log_likelihood(const PointPattern &pattern, std::span<const double> weights,
                      double theta) {
  const int J = static_cast<int>(weights.size());
  if (J < 1) throw std::invalid_argument("log_likelihood: empty weight vector");
  std::vector<double> k(J);
  erlang_cdf_table(pattern.window_end(), theta, k);
  CompensatedSum total;
  for (int j = 0; j < J; ++j) total.add(-weights[j] * k[j]);
  std::vector<double> terms(J);
  for (double t : pattern.times()) {
    erlang_log_pdf_table(t, theta, terms);
    for (int j = 0; j < J; ++j) {
      terms[j] += weights[j] > 0.0 ? std::log(weights[j]) : kNegInf;
    }
    total.add(log_sum_exp(terms));
  }
  return total.value();
}

TemporalSampler::TemporalSampler(PointPattern pattern, TemporalHyperpriors hyperpriors,
                                 McmcSettings settings, Rng &rng)
    : pattern_(std::move(pattern)), hp_(hyperpriors), settings_(settings) {
  settings_.validate();
  if (hp_.J < 1) throw std::invalid_argument("TemporalSampler: J must be >= 1");
  sd_theta_ = settings_.proposal_sd_theta;
  sd_c0_ = settings_.proposal_sd_c0;
  sd_b_ = settings_.proposal_sd_b;
  state_.theta = hp_.theta.median();
  state_.c0 = 1.0;
  state_.b = hp_.b.mean;
  state_.weights.assign(hp_.J, state_.theta / state_.b);
  state_.counts.assign(hp_.J, 0);
  set_pattern(pattern_, rng);
}

TemporalSampler::TemporalSampler(PointPattern pattern, TemporalHyperpriors hyperpriors,
                                 McmcSettings settings, TemporalState initial, Rng &rng)
    : pattern_(std::move(pattern)), hp_(hyperpriors), settings_(settings),
      state_(std::move(initial)) {
  settings_.validate();
  if (state_.J() != hp_.J) {
    throw std::invalid_argument("TemporalSampler: initial weights do not match J");
  }
  if (!(state_.theta > 0.0 && state_.c0 > 0.0 && state_.b > 0.0)) {
    throw std::invalid_argument("TemporalSampler: initial hyperparameters must be positive");
  }
  sd_theta_ = settings_.proposal_sd_theta;
  sd_c0_ = settings_.proposal_sd_c0;
  sd_b_ = settings_.proposal_sd_b;
  if (state_.allocations.size() == pattern_.size()) {
    log_times_.clear();
    sum_times_ = 0.0;
    for (double t : pattern_.times()) {
      log_times_.push_back(std::log(t));
      sum_times_ += t;
    }
    state_.counts.assign(hp_.J, 0);
    sum_allocations_ = 0.0;
    for (int g : state_.allocations) {
      if (g < 1 || g > hp_.J) throw std::invalid_argument("TemporalSampler: allocation out of range");
      ++state_.counts[g - 1];
      sum_allocations_ += g;
    }
    refresh_theta_cache();
    refresh_weight_cache();
  } else {
    set_pattern(pattern_, rng);
  }
}

void TemporalSampler::set_pattern(PointPattern pattern, Rng &rng) {
  pattern_ = std::move(pattern);
  log_times_.clear();
  sum_times_ = 0.0;
  for (double t : pattern_.times()) {
    log_times_.push_back(std::log(t));
    sum_times_ += t;
  }
  state_.allocations.assign(pattern_.size(), 1);
  refresh_theta_cache();
  refresh_weight_cache();
  update_allocations(rng);
}

void TemporalSampler::set_proposal_sds(double theta, double c0, double b) {
  sd_theta_ = theta;
  sd_c0_ = c0;
  sd_b_ = b;
}

void TemporalSampler::refresh_theta_cache() {
  cdf_at_T_.resize(hp_.J);
  erlang_cdf_table(pattern_.window_end(), state_.theta, cdf_at_T_);
}

void TemporalSampler::refresh_weight_cache() {
  log_weights_.resize(hp_.J);
  CompensatedSum sw, slw;
  for (int j = 0; j < hp_.J; ++j) {
    log_weights_[j] = std::log(state_.weights[j]);
    sw.add(state_.weights[j]);
    slw.add(log_weights_[j]);
  }
  sum_weights_ = sw.value();
  sum_log_weights_ = slw.value();
}

void TemporalSampler::update_allocations(Rng &rng) {
  const int J = hp_.J;
  // Pr(gamma_i = j) is proportional to omega_j (t_i/theta)^{j-1} / (j-1)!;
  // factors common to all j cancel.
  std::vector<double> &base = scratch_cdf_;
  base.resize(J);
  for (int j = 0; j < J; ++j) base[j] = log_weights_[j] - log_factorial(j);
  scratch_.resize(J);
  const double log_theta = std::log(state_.theta);
  state_.counts.assign(J, 0);
  sum_allocations_ = 0.0;
  for (std::size_t i = 0; i < pattern_.size(); ++i) {
    const double ratio = log_times_[i] - log_theta;
    double top = kNegInf;
    for (int j = 0; j < J; ++j) {
      scratch_[j] = base[j] + j * ratio;
      top = std::max(top, scratch_[j]);
    }
    for (int j = 0; j < J; ++j) scratch_[j] = std::exp(scratch_[j] - top);
    const int g = static_cast<int>(categorical_sample(scratch_, rng)) + 1;
    state_.allocations[i] = g;
    ++state_.counts[g - 1];
    sum_allocations_ += g;
  }
}

void TemporalSampler::update_weights(Rng &rng) {
  const double prior_shape = state_.c0 * state_.theta / state_.b;
  CompensatedSum sw, slw;
  for (int j = 0; j < hp_.J; ++j) {
    const double lw = log_gamma_sample(state_.counts[j] + prior_shape,
                                       cdf_at_T_[j] + state_.c0, rng);
    state_.weights[j] = std::max(std::exp(lw), std::numeric_limits<double>::min());
    log_weights_[j] = lw;
    sw.add(state_.weights[j]);
    slw.add(lw);
  }
  sum_weights_ = sw.value();
  sum_log_weights_ = slw.value();
}

// sum_j log ga(omega_j | shape, c0), dropping the -c0 sum(omega) term.
double TemporalSampler::weight_prior_term(double shape, double c0) const {
  return hp_.J * (shape * std::log(c0) - std::lgamma(shape)) +
         (shape - 1.0) * sum_log_weights_;
}

double TemporalSampler::log_conditional_theta(double theta) const {
  if (!(theta > 0.0) || !std::isfinite(theta)) return kNegInf;
  std::vector<double> k(hp_.J);
  erlang_cdf_table(pattern_.window_end(), theta, k);
  CompensatedSum normalizer;
  for (int j = 0; j < hp_.J; ++j) normalizer.add(state_.weights[j] * k[j]);
  const double shape = state_.c0 * theta / state_.b;
  return hp_.theta.log_pdf(theta) + weight_prior_term(shape, state_.c0) -
         normalizer.value() - sum_times_ / theta - sum_allocations_ * std::log(theta);
}

double TemporalSampler::log_conditional_c0(double c0) const {
  if (!(c0 > 0.0) || !std::isfinite(c0)) return kNegInf;
  const double shape = c0 * state_.theta / state_.b;
  return hp_.c0.log_pdf(c0) + weight_prior_term(shape, c0) - c0 * sum_weights_;
}

double TemporalSampler::log_conditional_b(double b) const {
  if (!(b > 0.0) || !std::isfinite(b)) return kNegInf;
  const double shape = state_.c0 * state_.theta / b;
  return hp_.b.log_pdf(b) + weight_prior_term(shape, state_.c0);
}

double TemporalSampler::log_accept_ratio_theta(double proposed) const {
  if (proposed == state_.theta) return 0.0;
  return log_conditional_theta(proposed) - log_conditional_theta(state_.theta) +
         std::log(proposed) - std::log(state_.theta);
}

double TemporalSampler::log_accept_ratio_c0(double proposed) const {
  if (proposed == state_.c0) return 0.0;
  return log_conditional_c0(proposed) - log_conditional_c0(state_.c0) + std::log(proposed) -
         std::log(state_.c0);
}

double TemporalSampler::log_accept_ratio_b(double proposed) const {
  if (proposed == state_.b) return 0.0;
  return log_conditional_b(proposed) - log_conditional_b(state_.b) + std::log(proposed) -
         std::log(state_.b);
}

bool TemporalSampler::mh_step(double &value, double sd,
                              const std::function<double(double)> &ratio, Rng &rng) {
  const double proposed = value * std::exp(sd * standard_normal(rng));
  const double log_r = ratio(proposed);
  const double log_u = std::log(uniform01(rng));
  if (log_u < log_r) {
    value = proposed;
    return true;
  }
  return false;
}

bool TemporalSampler::update_theta(Rng &rng) {
  const bool ok = mh_step(
      state_.theta, sd_theta_, [this](double p) { return log_accept_ratio_theta(p); }, rng);
  if (ok) refresh_theta_cache();
  return ok;
}

bool TemporalSampler::update_c0(Rng &rng) {
  return mh_step(state_.c0, sd_c0_, [this](double p) { return log_accept_ratio_c0(p); }, rng);
}

bool TemporalSampler::update_b(Rng &rng) {
  return mh_step(state_.b, sd_b_, [this](double p) { return log_accept_ratio_b(p); }, rng);
}

void TemporalSampler::sweep(Rng &rng) {
  update_allocations(rng);
  update_weights(rng);
  update_theta(rng);
  update_c0(rng);
  update_b(rng);
}

double TemporalSampler::total_intensity() const {
  CompensatedSum s;
  for (int j = 0; j < hp_.J; ++j) s.add(state_.weights[j] * cdf_at_T_[j]);
  return s.value();
}

namespace {

void adapt_scale(double &sd, bool accepted, long iteration, double target) {
  const double step = std::pow(static_cast<double>(iteration), -0.6);
  const double log_sd = std::log(sd) + step * ((accepted ? 1.0 : 0.0) - target);
  sd = std::exp(std::clamp(log_sd, std::log(1e-4), std::log(10.0)));
}

void check_finite_state(const TemporalState &s, long sweep) {
  if (!(std::isfinite(s.theta) && s.theta > 0.0 && std::isfinite(s.c0) && s.c0 > 0.0 &&
        std::isfinite(s.b) && s.b > 0.0)) {
    throw SweepError(sweep, "hyperparameter left the positive reals");
  }
  for (double w : s.weights) {
    if (!std::isfinite(w) || !(w > 0.0)) throw SweepError(sweep, "non-finite mixture weight");
  }
}

}  // namespace

PosteriorChain run_mcmc(const PointPattern &pattern, const TemporalHyperpriors &hyperpriors,
                        const McmcSettings &settings, const ProgressCallback &progress) {
  Rng rng(settings.seed);
  return run_mcmc(pattern, hyperpriors, settings, rng, progress);
}

PosteriorChain run_mcmc(const PointPattern &pattern, const TemporalHyperpriors &hyperpriors,
                        const McmcSettings &settings, Rng &rng,
                        const ProgressCallback &progress) {
  settings.validate();
  TemporalSampler sampler(pattern, hyperpriors, settings, rng);
  PosteriorChain chain;
  chain.J = hyperpriors.J;
  chain.window_end = pattern.window_end();
  chain.settings = settings;
  const std::size_t keep = settings.retained_draws();
  chain.iteration.reserve(keep);
  chain.theta.reserve(keep);
  chain.c0.reserve(keep);
  chain.b.reserve(keep);
  chain.weights.reserve(keep * hyperpriors.J);

  AcceptanceStats run_theta, run_c0, run_b;
  for (long it = 1; it <= settings.n_iterations; ++it) {
    bool acc_theta, acc_c0, acc_b;
    try {
      sampler.update_allocations(rng);
      sampler.update_weights(rng);
      acc_theta = sampler.update_theta(rng);
      acc_c0 = sampler.update_c0(rng);
      acc_b = sampler.update_b(rng);
    } catch (const SweepError &) {
      throw;
    } catch (const std::exception &e) {
      throw SweepError(it, e.what());
    }
    check_finite_state(sampler.state(), it);
    run_theta.record(acc_theta);
    run_c0.record(acc_c0);
    run_b.record(acc_b);

    if (it <= settings.burn_in) {
      if (settings.adapt) {
        double sd_t = sampler.proposal_sd_theta();
        double sd_c = sampler.proposal_sd_c0();
        double sd_b = sampler.proposal_sd_b();
        adapt_scale(sd_t, acc_theta, it, settings.target_acceptance);
        adapt_scale(sd_c, acc_c0, it, settings.target_acceptance);
        adapt_scale(sd_b, acc_b, it, settings.target_acceptance);
        sampler.set_proposal_sds(sd_t, sd_c, sd_b);
      }
    } else {
      chain.theta_acceptance.record(acc_theta);
      chain.c0_acceptance.record(acc_c0);
      chain.b_acceptance.record(acc_b);
      if ((it - settings.burn_in) % settings.thin == 0) {
        const auto &s = sampler.state();
        chain.iteration.push_back(it);
        chain.theta.push_back(s.theta);
        chain.c0.push_back(s.c0);
        chain.b.push_back(s.b);
        chain.weights.insert(chain.weights.end(), s.weights.begin(), s.weights.end());
      }
    }
    if (progress && settings.progress_every > 0 && it % settings.progress_every == 0) {
      progress({it, settings.n_iterations, run_theta.rate(), run_c0.rate(), run_b.rate()});
    }
  }
  chain.final_sd_theta = sampler.proposal_sd_theta();
  chain.final_sd_c0 = sampler.proposal_sd_c0();
  chain.final_sd_b = sampler.proposal_sd_b();
  return chain;
}

}  // namespace erlmix
