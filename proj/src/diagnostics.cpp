#include "erlmix/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "erlmix/mixture.hpp"
#include "erlmix/special_fns.hpp"
#include "erlmix/stats.hpp"

namespace erlmix {

namespace {

void require_nonempty(std::size_t draws, const char *who) {
  if (draws == 0) throw std::invalid_argument(std::string(who) + ": empty chain");
}

void basis_densities(double t, double theta, std::span<double> out) {
  if (t <= 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    if (t == 0.0 && !out.empty()) out[0] = 1.0 / theta;
    return;
  }
  erlang_log_pdf_table(t, theta, out);
  for (double &v : out) v = std::exp(v);
}

// Posterior mean and quantiles of each column of a draws x m matrix.
void column_stats(std::span<const double> values, std::size_t m, std::span<const double> levels,
                  std::vector<double> &mean_out, std::vector<std::vector<double>> &q_out) {
  const std::size_t draws = values.size() / m;
  std::vector<double> column(draws);
  mean_out.assign(m, 0.0);
  q_out.assign(levels.size(), std::vector<double>(m));
  for (std::size_t g = 0; g < m; ++g) {
    CompensatedSum s;
    for (std::size_t k = 0; k < draws; ++k) {
      column[k] = values[k * m + g];
      s.add(column[k]);
    }
    mean_out[g] = s.value() / static_cast<double>(draws);
    std::sort(column.begin(), column.end());
    for (std::size_t q = 0; q < levels.size(); ++q) {
      q_out[q][g] = quantile_sorted(column, levels[q]);
    }
    // Rounding in the mean can leave it a hair outside a collapsed band.
    mean_out[g] = std::clamp(mean_out[g], column.front(), column.back());
  }
}

std::vector<double> intensity_matrix(const PosteriorChain &chain, std::span<const double> grid) {
  const std::size_t G = grid.size();
  std::vector<double> values(chain.size() * G);
  for (std::size_t k = 0; k < chain.size(); ++k) {
    mixture_intensity_grid(grid, chain.draw_weights(k), chain.theta[k],
                           std::span<double>(values).subspan(k * G, G));
  }
  return values;
}

// Lambda(t_i) for one draw at every event time.
void cumulative_at_events(std::span<const double> times, std::span<const double> weights,
                          double theta, std::span<double> out, std::vector<double> &scratch) {
  scratch.resize(weights.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    erlang_cdf_table(times[i], theta, scratch);
    CompensatedSum s;
    for (std::size_t j = 0; j < weights.size(); ++j) s.add(weights[j] * scratch[j]);
    out[i] = s.value();
  }
}

}  // namespace

std::vector<double> default_grid(double window_end, int n) {
  if (!(window_end > 0.0) || n < 1) {
    throw std::invalid_argument("default_grid: need window_end > 0 and n >= 1");
  }
  std::vector<double> grid(n);
  for (int k = 0; k < n; ++k) grid[k] = window_end * (k + 1) / (n + 1);
  return grid;
}

IntensitySummary summarize_columns(std::span<const double> values, std::span<const double> grid,
                                   double lower_level, double upper_level) {
  if (grid.empty() || values.size() % grid.size() != 0 || values.empty()) {
    throw std::invalid_argument("summarize_columns: value matrix does not match the grid");
  }
  if (!(0.0 <= lower_level && lower_level <= upper_level && upper_level <= 1.0)) {
    throw std::invalid_argument("summarize_columns: bad quantile levels");
  }
  IntensitySummary out;
  out.grid.assign(grid.begin(), grid.end());
  out.lower_level = lower_level;
  out.upper_level = upper_level;
  const double levels[] = {lower_level, upper_level};
  std::vector<std::vector<double>> q;
  column_stats(values, grid.size(), levels, out.mean, q);
  out.lower = std::move(q[0]);
  out.upper = std::move(q[1]);
  return out;
}

IntensitySummary intensity_summary(const PosteriorChain &chain, std::span<const double> grid,
                                   double lower_level, double upper_level) {
  require_nonempty(chain.size(), "intensity_summary");
  return summarize_columns(intensity_matrix(chain, grid), grid, lower_level, upper_level);
}

std::vector<double> normalized_weights(std::span<const double> weights, double theta,
                                       double window_end) {
  std::vector<double> k(weights.size());
  erlang_cdf_table(window_end, theta, k);
  CompensatedSum total;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    k[j] *= weights[j];
    total.add(k[j]);
  }
  const double z = total.value();
  if (!(z > 0.0)) throw std::domain_error("normalized_weights: zero total intensity");
  for (double &v : k) v /= z;
  return k;
}

double truncated_mixture_density(double t, std::span<const double> weights, double theta,
                                 double window_end) {
  if (t < 0.0 || t > window_end) return 0.0;
  return mixture_intensity(t, weights, theta) / mixture_cumulative(window_end, weights, theta);
}

IntensitySummary density_summary(const PosteriorChain &chain, std::span<const double> grid,
                                 double lower_level, double upper_level) {
  require_nonempty(chain.size(), "density_summary");
  std::vector<double> values = intensity_matrix(chain, grid);
  const std::size_t G = grid.size();
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const double total = mixture_cumulative(chain.window_end, chain.draw_weights(k), chain.theta[k]);
    for (std::size_t g = 0; g < G; ++g) {
      values[k * G + g] = grid[g] > chain.window_end ? 0.0 : values[k * G + g] / total;
    }
  }
  return summarize_columns(values, grid, lower_level, upper_level);
}

WeightSummary weight_summary(const PosteriorChain &chain, double level) {
  require_nonempty(chain.size(), "weight_summary");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("weight_summary: bad level");
  WeightSummary out;
  out.level = level;
  const double levels[] = {0.5 * (1.0 - level), 0.5 * (1.0 + level)};
  std::vector<std::vector<double>> q;
  column_stats(chain.weights, chain.J, levels, out.mean, q);
  out.lower = std::move(q[0]);
  out.upper = std::move(q[1]);
  return out;
}

std::vector<double> rescaled_uniforms(std::span<const double> cumulative_at_events) {
  std::vector<double> u(cumulative_at_events.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = -std::expm1(-(cumulative_at_events[i] - prev));
    prev = cumulative_at_events[i];
  }
  return u;
}

std::vector<double> rescaled_uniforms(const PointPattern &pattern,
                                      std::span<const double> weights, double theta) {
  std::vector<double> cum(pattern.size()), scratch;
  cumulative_at_events(pattern.times(), weights, theta, cum, scratch);
  return rescaled_uniforms(cum);
}

std::vector<double> posterior_mean_rescaled_uniforms(const PointPattern &pattern,
                                                     const PosteriorChain &chain) {
  require_nonempty(chain.size(), "posterior_mean_rescaled_uniforms");
  const std::size_t n = pattern.size();
  std::vector<double> cum(n), total(n, 0.0), scratch;
  for (std::size_t k = 0; k < chain.size(); ++k) {
    cumulative_at_events(pattern.times(), chain.draw_weights(k), chain.theta[k], cum, scratch);
    for (std::size_t i = 0; i < n; ++i) total[i] += cum[i];
  }
  for (double &v : total) v /= static_cast<double>(chain.size());
  return rescaled_uniforms(total);
}

QqSummary time_rescale(const PointPattern &pattern, const PosteriorChain &chain) {
  require_nonempty(chain.size(), "time_rescale");
  const std::size_t n = pattern.size();
  QqSummary out;
  out.position.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.position[i] = (i + 1.0) / (n + 1.0);
  if (n == 0) return out;
  std::vector<double> sorted_u(chain.size() * n), cum(n), scratch;
  for (std::size_t k = 0; k < chain.size(); ++k) {
    cumulative_at_events(pattern.times(), chain.draw_weights(k), chain.theta[k], cum, scratch);
    auto u = rescaled_uniforms(cum);
    std::sort(u.begin(), u.end());
    std::copy(u.begin(), u.end(), sorted_u.begin() + k * n);
  }
  const double levels[] = {0.025, 0.975};
  std::vector<std::vector<double>> q;
  column_stats(sorted_u, n, levels, out.mean, q);
  out.lower = std::move(q[0]);
  out.upper = std::move(q[1]);
  return out;
}

std::vector<double> acf(std::span<const double> series, std::size_t max_lag) {
  const std::size_t n = series.size();
  if (n < 2) throw std::invalid_argument("acf: need at least two values");
  const double m = mean(series);
  std::vector<double> centred(n);
  CompensatedSum c0;
  for (std::size_t i = 0; i < n; ++i) {
    centred[i] = series[i] - m;
    c0.add(centred[i] * centred[i]);
  }
  const double gamma0 = c0.value();
  if (!(gamma0 > 0.0)) throw std::invalid_argument("acf: constant series");
  max_lag = std::min(max_lag, n - 1);
  std::vector<double> rho(max_lag + 1);
  rho[0] = 1.0;
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += centred[i] * centred[i + lag];
    rho[lag] = s / gamma0;
  }
  return rho;
}

double ess(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 10) throw std::invalid_argument("ess: need at least 10 values");
  const double m = mean(series);
  std::vector<double> centred(n);
  double gamma0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    centred[i] = series[i] - m;
    gamma0 += centred[i] * centred[i];
  }
  if (!(gamma0 > 0.0)) throw std::invalid_argument("ess: constant series");
  auto rho = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += centred[i] * centred[i + lag];
    return s / gamma0;
  };
  // tau = -1 + 2 sum_m (rho_{2m} + rho_{2m+1}) over the initial positive pairs.
  double tau = -1.0;
  for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
    const double pair = (lag == 0 ? 1.0 : rho(lag)) + rho(lag + 1);
    if (!(pair > 0.0)) break;
    tau += 2.0 * pair;
  }
  const double e = static_cast<double>(n) / tau;
  return std::clamp(e, std::nextafter(0.0, 1.0), static_cast<double>(n));
}

double mean_ess_over_grid(const PosteriorChain &chain, std::span<const double> grid) {
  require_nonempty(chain.size(), "mean_ess_over_grid");
  const auto values = intensity_matrix(chain, grid);
  const std::size_t G = grid.size();
  std::vector<double> trace(chain.size());
  double total = 0.0;
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t k = 0; k < chain.size(); ++k) trace[k] = values[k * G + g];
    total += ess(trace);
  }
  return total / static_cast<double>(G);
}

std::vector<double> mean_acf_over_grid(const PosteriorChain &chain, std::span<const double> grid,
                                       std::size_t max_lag) {
  require_nonempty(chain.size(), "mean_acf_over_grid");
  const auto values = intensity_matrix(chain, grid);
  const std::size_t G = grid.size();
  std::vector<double> trace(chain.size());
  std::vector<double> total;
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t k = 0; k < chain.size(); ++k) trace[k] = values[k * G + g];
    const auto r = acf(trace, max_lag);
    if (total.empty()) total.assign(r.size(), 0.0);
    for (std::size_t l = 0; l < r.size(); ++l) total[l] += r[l];
  }
  for (double &v : total) v /= static_cast<double>(G);
  return total;
}

std::vector<double> unit_midpoint_grid(int n) {
  if (n < 1) throw std::invalid_argument("unit_midpoint_grid: n must be positive");
  std::vector<double> grid(n);
  for (int k = 0; k < n; ++k) grid[k] = (k + 0.5) / n;
  return grid;
}

SurfaceSummary surface_summary(const SpatialChain &chain, std::span<const double> grid1,
                               std::span<const double> grid2) {
  require_nonempty(chain.size(), "surface_summary");
  const std::size_t n1 = grid1.size(), n2 = grid2.size();
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("surface_summary: empty grid");
  const std::size_t J = chain.J;
  const std::size_t draws = chain.size();

  SurfaceSummary out;
  out.grid1.assign(grid1.begin(), grid1.end());
  out.grid2.assign(grid2.begin(), grid2.end());
  out.mean.resize(n1 * n2);
  out.lower.resize(n1 * n2);
  out.upper.resize(n1 * n2);
  out.iqr.resize(n1 * n2);

  // Rows are processed in blocks so the draws x block buffer stays small.
  const std::size_t budget = 8u << 20;  // doubles
  const std::size_t block = std::clamp<std::size_t>(budget / std::max<std::size_t>(1, draws * n2), 1, n1);
  std::vector<double> values;
  std::vector<double> b2(n2 * J), a1(J), v(J), tmp(J);
  const double levels[] = {0.025, 0.975, 0.25, 0.75};
  std::vector<double> mean_block;
  std::vector<std::vector<double>> q;

  for (std::size_t r0 = 0; r0 < n1; r0 += block) {
    const std::size_t rows = std::min(block, n1 - r0);
    const std::size_t m = rows * n2;
    values.assign(draws * m, 0.0);
    for (std::size_t k = 0; k < draws; ++k) {
      const auto w = chain.draw_weights(k);
      for (std::size_t c = 0; c < n2; ++c) {
        basis_densities(grid2[c], chain.theta2[k], std::span<double>(b2).subspan(c * J, J));
      }
      for (std::size_t r = 0; r < rows; ++r) {
        basis_densities(grid1[r0 + r], chain.theta1[k], a1);
        // v_c = sum_r a1_r w_{rc}
        std::fill(v.begin(), v.end(), 0.0);
        for (std::size_t i = 0; i < J; ++i) {
          const double a = a1[i];
          if (a == 0.0) continue;
          for (std::size_t j = 0; j < J; ++j) v[j] += a * w[i * J + j];
        }
        for (std::size_t c = 0; c < n2; ++c) {
          const double *bc = &b2[c * J];
          double s = 0.0;
          for (std::size_t j = 0; j < J; ++j) s += v[j] * bc[j];
          values[k * m + r * n2 + c] = s;
        }
      }
    }
    column_stats(values, m, levels, mean_block, q);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t idx = r0 * n2 + i;
      out.mean[idx] = mean_block[i];
      out.lower[idx] = q[0][i];
      out.upper[idx] = q[1][i];
      out.iqr[idx] = q[3][i] - q[2][i];
    }
  }
  return out;
}

IntensitySummary spatial_marginal_summary(const SpatialChain &chain, int dimension,
                                          std::span<const double> grid, double lower_level,
                                          double upper_level) {
  require_nonempty(chain.size(), "spatial_marginal_summary");
  const std::size_t G = grid.size();
  std::vector<double> values(chain.size() * G);
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const WeightMatrix w = chain.draw_matrix(k);
    for (std::size_t g = 0; g < G; ++g) {
      values[k * G + g] =
          spatial_marginal_intensity(w, chain.theta1[k], chain.theta2[k], dimension, grid[g]);
    }
  }
  return summarize_columns(values, grid, lower_level, upper_level);
}

std::vector<std::pair<std::size_t, std::size_t>> local_maxima(const SurfaceSummary &surface,
                                                              const std::vector<double> &field) {
  const std::size_t n1 = surface.grid1.size(), n2 = surface.grid2.size();
  if (field.size() != n1 * n2) throw std::invalid_argument("local_maxima: field size mismatch");
  std::vector<std::pair<std::size_t, std::size_t>> peaks;
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      const double v = field[i * n2 + j];
      bool peak = true;
      for (int di = -1; di <= 1 && peak; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const long ii = static_cast<long>(i) + di, jj = static_cast<long>(j) + dj;
          if (ii < 0 || jj < 0 || ii >= static_cast<long>(n1) || jj >= static_cast<long>(n2)) continue;
          if (field[ii * n2 + jj] >= v) {
            peak = false;
            break;
          }
        }
      }
      if (peak) peaks.emplace_back(i, j);
    }
  }
  std::sort(peaks.begin(), peaks.end(), [&](const auto &a, const auto &b) {
    return field[a.first * n2 + a.second] > field[b.first * n2 + b.second];
  });
  return peaks;
}

}  // namespace erlmix
