#include "erlmix/special_fns.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>
#include <string>

namespace erlmix {

namespace {

constexpr int kLogFactorialTableSize = 8192;

const std::vector<double> &log_factorial_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kLogFactorialTableSize);
    t[0] = 0.0;
    for (int j = 1; j < kLogFactorialTableSize; ++j) {
      t[j] = t[j - 1] + std::log(static_cast<double>(j));
    }
    // Summed logs drift by ~1e-13 at the far end; lgamma is exact there.
    for (int j = 64; j < kLogFactorialTableSize; ++j) {
      t[j] = std::lgamma(j + 1.0);
    }
    return t;
  }();
  return table;
}

void check_erlang_args(int j, double theta, const char *who) {
  if (j < 1) {
    throw std::domain_error(std::string(who) + ": shape j must be >= 1, got " +
                            std::to_string(j));
  }
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw std::domain_error(std::string(who) +
                            ": scale theta must be positive and finite");
  }
}

// log of the Poisson(x) probability mass at m.
inline double log_poisson_term(int m, double x, double log_x) {
  if (m == 0) return -x;
  return -x + m * log_x - log_factorial(m);
}

// P(j, x) = sum_{m >= j} Poisson(x) masses, by the lower series
// p_j * (1 + x/(j+1) + x^2/((j+1)(j+2)) + ...).  Used when x <= j.
double lower_series(int j, double x, double log_x) {
  CompensatedSum s;
  double term = 1.0;
  s.add(term);
  for (int k = 1; k < 1000000; ++k) {
    term *= x / (j + k);
    s.add(term);
    if (term < 1e-17 * s.value()) break;
  }
  return std::exp(log_poisson_term(j, x, log_x)) * s.value();
}

}  // namespace

double uniform01(Rng &rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal(Rng &rng) {
  for (;;) {
    const double u = 2.0 * uniform01(rng) - 1.0;
    const double v = 2.0 * uniform01(rng) - 1.0;
    const double s = u * u + v * v;
    if (s < 1.0 && s > 0.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

ErlangBasis::ErlangBasis(int shape, double scale) : j(shape), theta(scale) {
  check_erlang_args(j, theta, "ErlangBasis");
}

double ErlangBasis::log_pdf(double t) const { return erlang_log_pdf(t, j, theta); }

double ErlangBasis::cdf(double t) const { return erlang_cdf(t, j, theta); }

double log_factorial(int j) {
  if (j < 0) throw std::domain_error("log_factorial: negative argument");
  if (j < kLogFactorialTableSize) return log_factorial_table()[j];
  return std::lgamma(j + 1.0);
}

double erlang_log_pdf(double t, int j, double theta) {
  check_erlang_args(j, theta, "erlang_log_pdf");
  if (!(t > 0.0)) {
    throw std::domain_error("erlang_log_pdf: t must be positive");
  }
  const double log_theta = std::log(theta);
  double lp = -t / theta - log_theta - log_factorial(j - 1);
  if (j > 1) lp += (j - 1) * (std::log(t) - log_theta);
  return lp;
}

double erlang_cdf(double t, int j, double theta) {
  check_erlang_args(j, theta, "erlang_cdf");
  if (!(t > 0.0)) {
    throw std::domain_error("erlang_cdf: t must be positive");
  }
  if (std::isinf(t)) return 1.0;
  const double x = t / theta;
  const double log_x = std::log(x);
  if (x <= j) return std::min(1.0, lower_series(j, x, log_x));
  CompensatedSum upper;
  for (int m = 0; m < j; ++m) upper.add(std::exp(log_poisson_term(m, x, log_x)));
  return std::clamp(1.0 - upper.value(), 0.0, 1.0);
}

double erlang_sf(double t, int j, double theta) {
  check_erlang_args(j, theta, "erlang_sf");
  if (t < 0.0 || std::isnan(t)) {
    throw std::domain_error("erlang_sf: t must be non-negative");
  }
  if (t == 0.0) return 1.0;
  if (std::isinf(t)) return 0.0;
  const double x = t / theta;
  const double log_x = std::log(x);
  if (x <= j) return std::clamp(1.0 - lower_series(j, x, log_x), 0.0, 1.0);
  CompensatedSum upper;
  for (int m = 0; m < j; ++m) upper.add(std::exp(log_poisson_term(m, x, log_x)));
  return std::min(1.0, upper.value());
}

void erlang_log_pdf_table(double t, double theta, std::span<double> out) {
  const int n = static_cast<int>(out.size());
  if (n == 0) return;
  check_erlang_args(n, theta, "erlang_log_pdf_table");
  if (!(t > 0.0)) {
    throw std::domain_error("erlang_log_pdf_table: t must be positive");
  }
  const double log_theta = std::log(theta);
  const double log_ratio = std::log(t) - log_theta;
  const double base = -t / theta - log_theta;
  for (int j = 1; j <= n; ++j) {
    out[j - 1] = base + (j - 1) * log_ratio - log_factorial(j - 1);
  }
}

void erlang_cdf_table(double t, double theta, std::span<double> out) {
  const int n = static_cast<int>(out.size());
  if (n == 0) return;
  check_erlang_args(n, theta, "erlang_cdf_table");
  if (t < 0.0 || std::isnan(t)) {
    throw std::domain_error("erlang_cdf_table: t must be non-negative");
  }
  if (t == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  if (std::isinf(t)) {
    std::fill(out.begin(), out.end(), 1.0);
    return;
  }
  const double x = t / theta;
  const double log_x = std::log(x);
  if (x <= n) {
    // Tail sums accumulate downwards from P(J, x); every addend is positive.
    CompensatedSum tail;
    tail.add(lower_series(n, x, log_x));
    out[n - 1] = std::min(1.0, tail.value());
    for (int j = n - 1; j >= 1; --j) {
      tail.add(std::exp(log_poisson_term(j, x, log_x)));
      out[j - 1] = std::min(1.0, tail.value());
    }
  } else {
    // Here P(J, x) >= ~1/2, so 1 - prefix does not cancel badly.
    CompensatedSum head;
    for (int j = 1; j <= n; ++j) {
      head.add(std::exp(log_poisson_term(j - 1, x, log_x)));
      out[j - 1] = std::clamp(1.0 - head.value(), 0.0, 1.0);
    }
  }
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  CompensatedSum s;
  for (double x : v) s.add(std::exp(x - m));
  return m + std::log(s.value());
}

std::size_t log_categorical_sample(std::span<const double> log_weights,
                                   Rng &rng) {
  if (log_weights.empty()) {
    throw std::domain_error("log_categorical_sample: empty weight vector");
  }
  const double m = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(m)) {
    throw std::domain_error(
        "log_categorical_sample: no finite log-weight to sample from");
  }
  std::vector<double> w(log_weights.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(log_weights[k] - m);
  return categorical_sample(w, rng);
}

std::size_t categorical_sample(std::span<const double> weights, Rng &rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::domain_error("categorical_sample: weights must have a positive finite sum");
  }
  const double target = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    acc += weights[k];
    last_positive = k;
    if (target < acc) return k;
  }
  return last_positive;
}

namespace {

// Marsaglia & Tsang squeeze method; requires shape >= 1, unit rate.
double gamma_unit_rate_large_shape(double shape, Rng &rng) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double z, v;
    do {
      z = standard_normal(rng);
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01(rng);
    const double z2 = z * z;
    if (u < 1.0 - 0.0331 * z2 * z2) return d * v;
    if (std::log(u) < 0.5 * z2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

void check_gamma_args(double shape, double rate) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw std::domain_error("gamma_sample: shape must be positive and finite");
  }
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw std::domain_error("gamma_sample: rate must be positive and finite");
  }
}

}  // namespace

double log_gamma_sample(double shape, double rate, Rng &rng) {
  check_gamma_args(shape, rate);
  if (shape >= 1.0) {
    return std::log(gamma_unit_rate_large_shape(shape, rng)) - std::log(rate);
  }
  // G(a) = G(a + 1) * U^{1/a}.
  const double g = gamma_unit_rate_large_shape(shape + 1.0, rng);
  const double u = uniform01(rng);
  return std::log(g) + std::log(u) / shape - std::log(rate);
}

double gamma_sample(double shape, double rate, Rng &rng) {
  const double lg = log_gamma_sample(shape, rate, rng);
  return std::max(std::exp(lg), std::numeric_limits<double>::min());
}

double gamma_log_pdf(double x, double shape, double rate) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) -
         rate * x;
}

}  // namespace erlmix
