#ifndef ERLMIX_MIXTURE_HPP_
#define ERLMIX_MIXTURE_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace erlmix {

// J x J weights omega_{j1 j2}, stored row-major with j1 as the row index.
// Indices are zero-based in code (basis shape = index + 1).
class WeightMatrix {
 public:
  WeightMatrix() = default;
  explicit WeightMatrix(int J, double fill = 0.0)
      : J_(J), values_(static_cast<std::size_t>(J) * J, fill) {}

  int J() const { return J_; }
  double &operator()(int r, int c) { return values_[index(r, c)]; }
  double operator()(int r, int c) const { return values_[index(r, c)]; }

  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }

  WeightMatrix transposed() const;

 private:
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * J_ + c;
  }
  int J_ = 0;
  std::vector<double> values_;
};

/// lambda(t) = sum_j w[j-1] ga(t | j, 1/theta); t = 0 gives w[0]/theta.
double mixture_intensity(double t, std::span<const double> weights, double theta);

/// Lambda(t) = sum_j w[j-1] K_{j,theta}(t).
double mixture_cumulative(double t, std::span<const double> weights, double theta);

/// Evaluates lambda on every grid point.
void mixture_intensity_grid(std::span<const double> grid,
                            std::span<const double> weights, double theta,
                            std::span<double> out);

/// lambda(s1, s2) for the product-Erlang mixture.
double spatial_intensity(double s1, double s2, const WeightMatrix &weights,
                         double theta1, double theta2);

/// Integral of lambda over the unit square.
double spatial_total_intensity(const WeightMatrix &weights, double theta1,
                               double theta2);

/// Marginal intensity along one axis: lambda integrated over the other
/// coordinate on (0, 1).  dimension is 1 or 2.
double spatial_marginal_intensity(const WeightMatrix &weights, double theta1,
                                  double theta2, int dimension, double s);

}  // namespace erlmix

#endif  // ERLMIX_MIXTURE_HPP_
