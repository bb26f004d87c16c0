#include "erlmix/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "erlmix/special_fns.hpp"

namespace erlmix {

WeightMatrix WeightMatrix::transposed() const {
  WeightMatrix t(J_);
  for (int r = 0; r < J_; ++r)
    for (int c = 0; c < J_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

namespace {

// Linear-space basis densities ga(t | j, 1/theta), j = 1..J.
void basis_densities(double t, double theta, std::span<double> out) {
  if (t == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    if (!out.empty()) out[0] = 1.0 / theta;
    return;
  }
  erlang_log_pdf_table(t, theta, out);
  for (double &v : out) v = std::exp(v);
}

}  // namespace

double mixture_intensity(double t, std::span<const double> weights, double theta) {
  if (t < 0.0) throw std::domain_error("mixture_intensity: negative time");
  std::vector<double> dens(weights.size());
  basis_densities(t, theta, dens);
  CompensatedSum s;
  for (std::size_t j = 0; j < weights.size(); ++j) s.add(weights[j] * dens[j]);
  return s.value();
}

double mixture_cumulative(double t, std::span<const double> weights, double theta) {
  std::vector<double> k(weights.size());
  erlang_cdf_table(t, theta, k);
  CompensatedSum s;
  for (std::size_t j = 0; j < weights.size(); ++j) s.add(weights[j] * k[j]);
  return s.value();
}

void mixture_intensity_grid(std::span<const double> grid,
                            std::span<const double> weights, double theta,
                            std::span<double> out) {
  if (out.size() != grid.size()) {
    throw std::invalid_argument("mixture_intensity_grid: output size mismatch");
  }
  std::vector<double> dens(weights.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (grid[g] < 0.0) throw std::domain_error("mixture_intensity_grid: negative time");
    basis_densities(grid[g], theta, dens);
    CompensatedSum s;
    for (std::size_t j = 0; j < weights.size(); ++j) s.add(weights[j] * dens[j]);
    out[g] = s.value();
  }
}

double spatial_intensity(double s1, double s2, const WeightMatrix &weights,
                         double theta1, double theta2) {
  const int J = weights.J();
  std::vector<double> d1(J), d2(J);
  basis_densities(s1, theta1, d1);
  basis_densities(s2, theta2, d2);
  CompensatedSum s;
  for (int r = 0; r < J; ++r) {
    double row = 0.0;
    for (int c = 0; c < J; ++c) row += weights(r, c) * d2[c];
    s.add(d1[r] * row);
  }
  return s.value();
}

double spatial_total_intensity(const WeightMatrix &weights, double theta1,
                               double theta2) {
  const int J = weights.J();
  std::vector<double> k1(J), k2(J);
  erlang_cdf_table(1.0, theta1, k1);
  erlang_cdf_table(1.0, theta2, k2);
  CompensatedSum s;
  for (int r = 0; r < J; ++r)
    for (int c = 0; c < J; ++c) s.add(weights(r, c) * k1[r] * k2[c]);
  return s.value();
}

double spatial_marginal_intensity(const WeightMatrix &weights, double theta1,
                                  double theta2, int dimension, double s) {
  if (dimension != 1 && dimension != 2) {
    throw std::invalid_argument("spatial_marginal_intensity: dimension must be 1 or 2");
  }
  const int J = weights.J();
  const double own_theta = dimension == 1 ? theta1 : theta2;
  const double other_theta = dimension == 1 ? theta2 : theta1;
  std::vector<double> k_other(J), dens(J);
  erlang_cdf_table(1.0, other_theta, k_other);
  basis_densities(s, own_theta, dens);
  CompensatedSum total;
  for (int a = 0; a < J; ++a) {
    double collapsed = 0.0;
    for (int o = 0; o < J; ++o) {
      const double w = dimension == 1 ? weights(a, o) : weights(o, a);
      collapsed += w * k_other[o];
    }
    total.add(collapsed * dens[a]);
  }
  return total.value();
}

}  // namespace erlmix
