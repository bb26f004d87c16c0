#ifndef ERLMIX_SPECIAL_FNS_HPP_
#define ERLMIX_SPECIAL_FNS_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace erlmix {

// Every sampler in the library draws from an explicit engine of this type.
// Distributions are implemented locally so a seed yields the same stream on
// every standard library.
using Rng = std::mt19937_64;

/// Uniform draw on the open interval (0, 1) with 53 random bits.
double uniform01(Rng &rng);

/// Standard normal draw (Marsaglia polar method, one variate per call).
double standard_normal(Rng &rng);

/// Erlang density ga(t | j, 1/theta): integer shape j, scale theta.
struct ErlangBasis {
  int j = 1;
  double theta = 1.0;

  ErlangBasis(int shape, double scale);

  double log_pdf(double t) const;
  double cdf(double t) const;
  double mean() const { return j * theta; }
  double mode() const { return (j - 1) * theta; }
};

/// log[ theta^{-j} t^{j-1} exp(-t/theta) / (j-1)! ].  Throws
/// std::domain_error unless t > 0, j >= 1 and theta > 0.
double erlang_log_pdf(double t, int j, double theta);

/// Regularized lower incomplete gamma P(j, T/theta), i.e. the Erlang
/// distribution function K_{j,theta}(T).  T = +inf gives 1.
double erlang_cdf(double t, int j, double theta);

/// Upper tail 1 - K_{j,theta}(t) = Pr(Poisson(t/theta) <= j-1), computed
/// without cancellation in either tail.
double erlang_sf(double t, int j, double theta);

/// Fills out[j-1] = log ga(t | j, 1/theta) for j = 1..out.size().
void erlang_log_pdf_table(double t, double theta, std::span<double> out);

/// Fills out[j-1] = K_{j,theta}(t) for j = 1..out.size() in O(J) work.
/// t = 0 yields all zeros.
void erlang_cdf_table(double t, double theta, std::span<double> out);

/// ln(j!) for j = 0..n-1, cached process-wide.
double log_factorial(int j);

/// Numerically stable log(sum(exp(v))).  Returns -inf for an empty span or
/// when every entry is -inf.
double log_sum_exp(std::span<const double> v);

/// Draws k with probability exp(lw[k]) / sum(exp(lw)).  Throws
/// std::domain_error if no entry is finite.
std::size_t log_categorical_sample(std::span<const double> log_weights,
                                   Rng &rng);

/// Draws k with probability w[k] / sum(w) for non-negative weights.
/// Throws std::domain_error if the sum is not positive and finite.
std::size_t categorical_sample(std::span<const double> weights, Rng &rng);

/// Gamma draw with the given shape and rate (mean shape/rate).  Valid for
/// any shape > 0; results are always strictly positive.
double gamma_sample(double shape, double rate, Rng &rng);

/// Natural log of a gamma draw; keeps precision when shape << 1 and the
/// draw itself would underflow.
double log_gamma_sample(double shape, double rate, Rng &rng);

/// Log density of gamma(shape, rate) at x > 0.
double gamma_log_pdf(double x, double shape, double rate);

/// Running sum with Neumaier compensation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace erlmix

#endif  // ERLMIX_SPECIAL_FNS_HPP_
