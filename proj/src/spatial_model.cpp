#include "erlmix/spatial_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace erlmix {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Below this total the linear-space cell weights lose too much precision.
constexpr double kUnderflowGuard = 1e-280;
}  // namespace

SpatialPointPattern::SpatialPointPattern(std::vector<Location> locations)
    : locations_(std::move(locations)) {
  for (const auto &p : locations_) {
    if (!(p.s1 > 0.0 && p.s1 < 1.0 && p.s2 > 0.0 && p.s2 < 1.0)) {
      throw std::invalid_argument("SpatialPointPattern: location (" + std::to_string(p.s1) +
                                  ", " + std::to_string(p.s2) +
                                  ") outside the open unit square");
    }
  }
}

SpatialPointPattern SpatialPointPattern::transposed() const {
  std::vector<Location> t;
  t.reserve(locations_.size());
  for (const auto &p : locations_) t.push_back({p.s2, p.s1});
  return SpatialPointPattern(std::move(t));
}

SpatialPointPattern rescale_to_unit_square(std::span<const Location> points,
                                           const Rectangle &window) {
  if (!(window.x1 > window.x0 && window.y1 > window.y0)) {
    throw std::invalid_argument("rescale_to_unit_square: degenerate window");
  }
  std::vector<Location> out;
  out.reserve(points.size());
  for (const auto &p : points) {
    out.push_back({(p.s1 - window.x0) / (window.x1 - window.x0),
                   (p.s2 - window.y0) / (window.y1 - window.y0)});
  }
  return SpatialPointPattern(std::move(out));
}

WeightMatrix SpatialChain::draw_matrix(std::size_t k) const {
  WeightMatrix m(J);
  const auto w = draw_weights(k);
  std::copy(w.begin(), w.end(), m.flat().begin());
  return m;
}

double spatial_log_likelihood(const SpatialPointPattern &pattern, const WeightMatrix &weights,
                              double theta1, double theta2) {
  const int J = weights.J();
  if (J < 1) throw std::invalid_argument("spatial_log_likelihood: empty weight matrix");
  std::vector<double> k1(J), k2(J);
  erlang_cdf_table(1.0, theta1, k1);
  erlang_cdf_table(1.0, theta2, k2);
  CompensatedSum total;
  for (int r = 0; r < J; ++r)
    for (int c = 0; c < J; ++c) total.add(-weights(r, c) * k1[r] * k2[c]);
  std::vector<double> l1(J), l2(J), cells(static_cast<std::size_t>(J) * J);
  for (const auto &p : pattern.locations()) {
    erlang_log_pdf_table(p.s1, theta1, l1);
    erlang_log_pdf_table(p.s2, theta2, l2);
    for (int r = 0; r < J; ++r) {
      for (int c = 0; c < J; ++c) {
        const double w = weights(r, c);
        cells[r * J + c] = (w > 0.0 ? std::log(w) : kNegInf) + l1[r] + l2[c];
      }
    }
    total.add(log_sum_exp(cells));
  }
  return total.value();
}

SpatialSampler::SpatialSampler(SpatialPointPattern pattern, SpatialHyperpriors hyperpriors,
                               McmcSettings settings, Rng &rng)
    : pattern_(std::move(pattern)), hp_(hyperpriors), settings_(settings) {
  settings_.validate();
  if (hp_.J < 1) throw std::invalid_argument("SpatialSampler: J must be >= 1");
  sd_ = {settings_.proposal_sd_theta, settings_.proposal_sd_theta, settings_.proposal_sd_c0,
         settings_.proposal_sd_b};
  state_.theta1 = hp_.theta1.median();
  state_.theta2 = hp_.theta2.median();
  state_.c0 = 1.0;
  state_.b = hp_.b.mean;
  state_.weights = WeightMatrix(hp_.J, state_.theta1 * state_.theta2 / state_.b);
  set_pattern(pattern_, rng);
}

SpatialSampler::SpatialSampler(SpatialPointPattern pattern, SpatialHyperpriors hyperpriors,
                               McmcSettings settings, SpatialState initial, Rng &rng)
    : pattern_(std::move(pattern)), hp_(hyperpriors), settings_(settings),
      state_(std::move(initial)) {
  settings_.validate();
  if (state_.J() != hp_.J) {
    throw std::invalid_argument("SpatialSampler: initial weights do not match J");
  }
  sd_ = {settings_.proposal_sd_theta, settings_.proposal_sd_theta, settings_.proposal_sd_c0,
         settings_.proposal_sd_b};
  if (state_.allocations.size() == pattern_.size()) {
    init_pattern_sums();
    state_.counts.assign(static_cast<std::size_t>(hp_.J) * hp_.J, 0);
    sum_alloc1_ = sum_alloc2_ = 0.0;
    for (const auto &[g1, g2] : state_.allocations) {
      if (g1 < 1 || g1 > hp_.J || g2 < 1 || g2 > hp_.J) {
        throw std::invalid_argument("SpatialSampler: allocation out of range");
      }
      ++state_.counts[(g1 - 1) * hp_.J + (g2 - 1)];
      sum_alloc1_ += g1;
      sum_alloc2_ += g2;
    }
    refresh_cdf_cache();
    refresh_weight_cache();
  } else {
    set_pattern(pattern_, rng);
  }
}

void SpatialSampler::init_pattern_sums() {
  log_s1_.clear();
  log_s2_.clear();
  sum_s1_ = sum_s2_ = 0.0;
  for (const auto &p : pattern_.locations()) {
    log_s1_.push_back(std::log(p.s1));
    log_s2_.push_back(std::log(p.s2));
    sum_s1_ += p.s1;
    sum_s2_ += p.s2;
  }
}

void SpatialSampler::set_pattern(SpatialPointPattern pattern, Rng &rng) {
  pattern_ = std::move(pattern);
  init_pattern_sums();
  state_.allocations.assign(pattern_.size(), {1, 1});
  refresh_cdf_cache();
  refresh_weight_cache();
  update_allocations(rng);
}

void SpatialSampler::refresh_cdf_cache() {
  k1_.resize(hp_.J);
  k2_.resize(hp_.J);
  erlang_cdf_table(1.0, state_.theta1, k1_);
  erlang_cdf_table(1.0, state_.theta2, k2_);
}

void SpatialSampler::refresh_weight_cache() {
  const auto w = state_.weights.flat();
  log_weights_.resize(w.size());
  CompensatedSum sw, slw;
  for (std::size_t k = 0; k < w.size(); ++k) {
    log_weights_[k] = std::log(w[k]);
    sw.add(w[k]);
    slw.add(log_weights_[k]);
  }
  sum_weights_ = sw.value();
  sum_log_weights_ = slw.value();
}

void SpatialSampler::update_allocations(Rng &rng) {
  const int J = hp_.J;
  const std::size_t cells = static_cast<std::size_t>(J) * J;
  a_.resize(J);
  c_.resize(J);
  row_.resize(J);
  cell_.resize(J);
  state_.counts.assign(cells, 0);
  sum_alloc1_ = sum_alloc2_ = 0.0;
  const double log_t1 = std::log(state_.theta1);
  const double log_t2 = std::log(state_.theta2);
  const auto w = state_.weights.flat();

  // Per event the cell weight factorizes as omega_{rc} a_r c_c with the
  // one-dimensional basis terms a, c shifted to max 1.
  auto shifted_basis = [J](double log_ratio, std::vector<double> &out) {
    double top = kNegInf;
    for (int j = 0; j < J; ++j) {
      out[j] = j * log_ratio - log_factorial(j);
      top = std::max(top, out[j]);
    }
    for (int j = 0; j < J; ++j) out[j] = std::exp(out[j] - top);
  };

  std::vector<double> log_cells;
  for (std::size_t i = 0; i < pattern_.size(); ++i) {
    shifted_basis(log_s1_[i] - log_t1, a_);
    shifted_basis(log_s2_[i] - log_t2, c_);
    double total = 0.0;
    for (int r = 0; r < J; ++r) {
      const double *wr = w.data() + static_cast<std::size_t>(r) * J;
      double acc = 0.0;
      for (int c = 0; c < J; ++c) acc += wr[c] * c_[c];
      row_[r] = a_[r] * acc;
      total += row_[r];
    }
    int g1, g2;
    if (total > kUnderflowGuard && std::isfinite(total)) {
      g1 = static_cast<int>(categorical_sample(row_, rng));
      const double *wr = w.data() + static_cast<std::size_t>(g1) * J;
      for (int c = 0; c < J; ++c) cell_[c] = wr[c] * c_[c];
      g2 = static_cast<int>(categorical_sample(cell_, rng));
    } else {
      log_cells.resize(cells);
      for (int r = 0; r < J; ++r) {
        for (int c = 0; c < J; ++c) {
          log_cells[r * J + c] = log_weights_[r * J + c] + r * (log_s1_[i] - log_t1) -
                                 log_factorial(r) + c * (log_s2_[i] - log_t2) -
                                 log_factorial(c);
        }
      }
      const auto k = log_categorical_sample(log_cells, rng);
      g1 = static_cast<int>(k) / J;
      g2 = static_cast<int>(k) % J;
    }
    state_.allocations[i] = {g1 + 1, g2 + 1};
    ++state_.counts[static_cast<std::size_t>(g1) * J + g2];
    sum_alloc1_ += g1 + 1;
    sum_alloc2_ += g2 + 1;
  }
}

void SpatialSampler::update_weights(Rng &rng) {
  const int J = hp_.J;
  const double prior_shape = state_.c0 * state_.theta1 * state_.theta2 / state_.b;
  auto w = state_.weights.flat();
  CompensatedSum sw, slw;
  for (int r = 0; r < J; ++r) {
    for (int c = 0; c < J; ++c) {
      const std::size_t k = static_cast<std::size_t>(r) * J + c;
      const double lw =
          log_gamma_sample(state_.counts[k] + prior_shape, k1_[r] * k2_[c] + state_.c0, rng);
      w[k] = std::max(std::exp(lw), std::numeric_limits<double>::min());
      log_weights_[k] = lw;
      sw.add(w[k]);
      slw.add(lw);
    }
  }
  sum_weights_ = sw.value();
  sum_log_weights_ = slw.value();
}

double SpatialSampler::weight_prior_term(double shape, double c0) const {
  const double cells = static_cast<double>(hp_.J) * hp_.J;
  return cells * (shape * std::log(c0) - std::lgamma(shape)) +
         (shape - 1.0) * sum_log_weights_;
}

double SpatialSampler::normalizer(std::span<const double> k1,
                                  std::span<const double> k2) const {
  const int J = hp_.J;
  CompensatedSum s;
  for (int r = 0; r < J; ++r) {
    double acc = 0.0;
    for (int c = 0; c < J; ++c) acc += state_.weights(r, c) * k2[c];
    s.add(k1[r] * acc);
  }
  return s.value();
}

double SpatialSampler::log_conditional_theta1(double theta1) const {
  if (!(theta1 > 0.0) || !std::isfinite(theta1)) return kNegInf;
  std::vector<double> k1(hp_.J);
  erlang_cdf_table(1.0, theta1, k1);
  const double shape = state_.c0 * theta1 * state_.theta2 / state_.b;
  return hp_.theta1.log_pdf(theta1) + weight_prior_term(shape, state_.c0) -
         normalizer(k1, k2_) - sum_s1_ / theta1 - sum_alloc1_ * std::log(theta1);
}

double SpatialSampler::log_conditional_theta2(double theta2) const {
  if (!(theta2 > 0.0) || !std::isfinite(theta2)) return kNegInf;
  std::vector<double> k2(hp_.J);
  erlang_cdf_table(1.0, theta2, k2);
  const double shape = state_.c0 * state_.theta1 * theta2 / state_.b;
  return hp_.theta2.log_pdf(theta2) + weight_prior_term(shape, state_.c0) -
         normalizer(k1_, k2) - sum_s2_ / theta2 - sum_alloc2_ * std::log(theta2);
}

double SpatialSampler::log_conditional_c0(double c0) const {
  if (!(c0 > 0.0) || !std::isfinite(c0)) return kNegInf;
  const double shape = c0 * state_.theta1 * state_.theta2 / state_.b;
  return hp_.c0.log_pdf(c0) + weight_prior_term(shape, c0) - c0 * sum_weights_;
}

double SpatialSampler::log_conditional_b(double b) const {
  if (!(b > 0.0) || !std::isfinite(b)) return kNegInf;
  const double shape = state_.c0 * state_.theta1 * state_.theta2 / b;
  return hp_.b.log_pdf(b) + weight_prior_term(shape, state_.c0);
}

bool SpatialSampler::mh_step(double &value, double sd,
                             double (SpatialSampler::*cond)(double) const, Rng &rng) {
  const double proposed = value * std::exp(sd * standard_normal(rng));
  const double log_r = (this->*cond)(proposed) - (this->*cond)(value) + std::log(proposed) -
                       std::log(value);
  if (std::log(uniform01(rng)) < log_r) {
    value = proposed;
    return true;
  }
  return false;
}

bool SpatialSampler::update_theta1(Rng &rng) {
  const bool ok = mh_step(state_.theta1, sd_[0], &SpatialSampler::log_conditional_theta1, rng);
  if (ok) erlang_cdf_table(1.0, state_.theta1, k1_);
  return ok;
}

bool SpatialSampler::update_theta2(Rng &rng) {
  const bool ok = mh_step(state_.theta2, sd_[1], &SpatialSampler::log_conditional_theta2, rng);
  if (ok) erlang_cdf_table(1.0, state_.theta2, k2_);
  return ok;
}

bool SpatialSampler::update_c0(Rng &rng) {
  return mh_step(state_.c0, sd_[2], &SpatialSampler::log_conditional_c0, rng);
}

bool SpatialSampler::update_b(Rng &rng) {
  return mh_step(state_.b, sd_[3], &SpatialSampler::log_conditional_b, rng);
}

std::array<bool, 4> SpatialSampler::update_hyperparameters(Rng &rng) {
  std::array<bool, 4> acc{};
  acc[0] = update_theta1(rng);
  acc[1] = update_theta2(rng);
  acc[2] = update_c0(rng);
  acc[3] = update_b(rng);
  return acc;
}

void SpatialSampler::sweep(Rng &rng) {
  update_allocations(rng);
  update_weights(rng);
  update_hyperparameters(rng);
}

SpatialChain run_spatial_mcmc(const SpatialPointPattern &pattern,
                              const SpatialHyperpriors &hyperpriors,
                              const McmcSettings &settings, const ProgressCallback &progress) {
  Rng rng(settings.seed);
  return run_spatial_mcmc(pattern, hyperpriors, settings, rng, progress);
}

SpatialChain run_spatial_mcmc(const SpatialPointPattern &pattern,
                              const SpatialHyperpriors &hyperpriors,
                              const McmcSettings &settings, Rng &rng,
                              const ProgressCallback &progress) {
  settings.validate();
  SpatialSampler sampler(pattern, hyperpriors, settings, rng);
  SpatialChain chain;
  chain.J = hyperpriors.J;
  chain.settings = settings;
  const std::size_t keep = settings.retained_draws();
  const std::size_t cells = static_cast<std::size_t>(chain.J) * chain.J;
  chain.weights.reserve(keep * cells);

  std::array<AcceptanceStats, 4> running{};
  std::array<AcceptanceStats *, 4> retained{&chain.theta1_acceptance, &chain.theta2_acceptance,
                                            &chain.c0_acceptance, &chain.b_acceptance};
  for (long it = 1; it <= settings.n_iterations; ++it) {
    std::array<bool, 4> acc{};
    try {
      sampler.update_allocations(rng);
      sampler.update_weights(rng);
      acc = sampler.update_hyperparameters(rng);
    } catch (const std::exception &e) {
      throw SweepError(it, e.what());
    }
    const auto &s = sampler.state();
    if (!(std::isfinite(s.theta1) && std::isfinite(s.theta2) && std::isfinite(s.c0) &&
          std::isfinite(s.b))) {
      throw SweepError(it, "non-finite hyperparameter");
    }
    for (int k = 0; k < 4; ++k) running[k].record(acc[k]);
    if (it <= settings.burn_in) {
      if (settings.adapt) {
        auto sds = sampler.proposal_sds();
        const double step = std::pow(static_cast<double>(it), -0.6);
        for (int k = 0; k < 4; ++k) {
          const double log_sd =
              std::log(sds[k]) + step * ((acc[k] ? 1.0 : 0.0) - settings.target_acceptance);
          sds[k] = std::exp(std::clamp(log_sd, std::log(1e-4), std::log(10.0)));
        }
        sampler.set_proposal_sds(sds);
      }
    } else {
      for (int k = 0; k < 4; ++k) retained[k]->record(acc[k]);
      if ((it - settings.burn_in) % settings.thin == 0) {
        chain.iteration.push_back(it);
        chain.theta1.push_back(s.theta1);
        chain.theta2.push_back(s.theta2);
        chain.c0.push_back(s.c0);
        chain.b.push_back(s.b);
        const auto w = s.weights.flat();
        chain.weights.insert(chain.weights.end(), w.begin(), w.end());
      }
    }
    if (progress && settings.progress_every > 0 && it % settings.progress_every == 0) {
      SweepProgress p{it, settings.n_iterations, running[0].rate(), running[2].rate(),
                      running[3].rate(), running[1].rate()};
      progress(p);
    }
  }
  return chain;
}

double marginal_intensity(const SpatialChain &chain, std::size_t k, int dimension, double s) {
  return spatial_marginal_intensity(chain.draw_matrix(k), chain.theta1[k], chain.theta2[k],
                                    dimension, s);
}

}  // namespace erlmix
