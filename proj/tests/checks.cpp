#include "checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "erlmix/mixture.hpp"
#include "erlmix/prior.hpp"
#include "erlmix/spatial_model.hpp"
#include "erlmix/stats.hpp"
#include "erlmix/temporal_model.hpp"
#include "oracles.hpp"

namespace checks {

using namespace erlmix;

namespace {

double uniform(Rng &rng, double a, double b) { return a + (b - a) * uniform01(rng); }

double lomax_log_pdf(double x, double d) { return std::log(2.0 / d) - 3.0 * std::log1p(x / d); }
double exp_log_pdf(double x, double mean) { return -std::log(mean) - x / mean; }
double gamma_log_density(double x, double shape, double rate) {
  return std::log(boost::math::pdf(boost::math::gamma_distribution<>(shape, 1.0 / rate), x));
}

// Bracket [lo, hi] holding all but a negligible share of an unnormalized
// log density on (0, inf).
std::pair<double, double> support_bracket(const std::function<double(double)> &lp) {
  double best = -INFINITY, arg = 1.0;
  for (int k = -600; k <= 600; ++k) {
    const double x = std::pow(10.0, k / 100.0);
    const double v = lp(x);
    if (v > best) {
      best = v;
      arg = x;
    }
  }
  double lo = arg, hi = arg;
  while (lo > 1e-12 && lp(lo) > best - 35.0) lo /= 1.05;
  while (hi < 1e8 && lp(hi) > best - 35.0) hi *= 1.05;
  return {lo, hi};
}

double ks_against_grid(std::vector<double> draws, const std::function<double(double)> &lp) {
  const auto [lo, hi] = support_bracket(lp);
  // Fine grid in log space handles densities concentrated near zero.
  const oracle::GridDistribution logx([&](double y) { return lp(std::exp(y)) + y; }, std::log(lo),
                                      std::log(hi), 40001);
  for (double &d : draws) d = std::log(d);
  return ks_test(draws, [&](double y) { return logx(y); }).p_value;
}

}  // namespace

double temporal_marginalization_error(int instances, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) {
    const int J = 1 + static_cast<int>(uniform01(rng) * 4);
    const int n = static_cast<int>(uniform01(rng) * 7);
    const double T = uniform(rng, 0.5, 10.0);
    const double theta = uniform(rng, 0.1, 3.0);
    std::vector<double> times(n), w(J);
    for (double &t : times) t = uniform(rng, 0.0, T);
    for (double &v : w) v = uniform(rng, 0.05, 5.0);
    const double ours = log_likelihood(PointPattern(times, T), w, theta);
    std::sort(times.begin(), times.end());
    const double ref = oracle::enumerated_log_likelihood(times, T, w, theta);
    worst = std::max(worst, std::abs(ours - ref) / std::max(std::abs(ref), 1e-300));
  }
  return worst;
}

double spatial_marginalization_error(int instances, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  const int J = 2;
  for (int k = 0; k < instances; ++k) {
    const int n = static_cast<int>(uniform01(rng) * 4);
    const double th1 = uniform(rng, 0.1, 1.5), th2 = uniform(rng, 0.1, 1.5);
    std::vector<std::pair<double, double>> pts(n);
    std::vector<Location> locs(n);
    for (int i = 0; i < n; ++i) {
      pts[i] = {uniform01(rng), uniform01(rng)};
      locs[i] = {pts[i].first, pts[i].second};
    }
    WeightMatrix W(J);
    std::vector<double> w(J * J);
    for (int c = 0; c < J * J; ++c) w[c] = W.flat()[c] = uniform(rng, 0.05, 5.0);
    const double ours = spatial_log_likelihood(SpatialPointPattern(locs), W, th1, th2);
    const double ref = oracle::enumerated_spatial_log_likelihood(pts, w, J, th1, th2);
    worst = std::max(worst, std::abs(ours - ref) / std::max(std::abs(ref), 1e-300));
  }
  return worst;
}

std::vector<NamedValue> temporal_conjugacy_pvalues(int draws, std::uint64_t seed) {
  struct Setting {
    double theta, c0, b, T;
    std::vector<double> times;
    std::vector<int> alloc;
    int J;
  };
  const std::vector<Setting> settings{
      {1.0, 1.0, 0.5, std::log(2.0), {0.1, 0.2, 0.3, 0.4, 0.5, 0.55, 0.6, 0.62, 0.65, 0.68}, {1, 1, 1, 1, 1, 1, 1, 1, 1, 1}, 1},
      {0.4, 0.05, 0.02, 20.0, {1.0, 5.0, 9.5}, {3, 12, 24}, 50},
      {2.0, 10.0, 1.0, 10.0, {}, {}, 5},
      {0.1, 0.5, 3.0, 2.0, {0.05, 0.3, 1.7}, {1, 3, 17}, 20},
      {5.0, 0.01, 1.0, 50.0, {3.0, 30.0}, {1, 6}, 8},
  };
  Rng rng(seed);
  std::vector<NamedValue> out;
  for (std::size_t s = 0; s < settings.size(); ++s) {
    const auto &st = settings[s];
    TemporalHyperpriors hp{LomaxPrior{2.0, 1.0}, ExponentialPrior{10.0}, ExponentialPrior{1.0}, st.J};
    TemporalState init;
    init.theta = st.theta;
    init.c0 = st.c0;
    init.b = st.b;
    init.weights.assign(st.J, 1.0);
    init.allocations = st.alloc;
    McmcSettings ms;
    TemporalSampler sampler(PointPattern(st.times, st.T), hp, ms, init, rng);
    // Check the first and the last basis.
    for (int j : {0, st.J - 1}) {
      int N = 0;
      for (int g : st.alloc) N += g == j + 1;
      const double shape = N + st.c0 * st.theta / st.b;
      const double rate = oracle::erlang_cdf(st.T, j + 1, st.theta) + st.c0;
      std::vector<double> x(draws);
      for (double &v : x) {
        sampler.update_weights(rng);
        v = sampler.state().weights[j];
      }
      const double p = ks_test(x, [&](double v) { return oracle::gamma_cdf(v, shape, rate); }).p_value;
      out.push_back({"setting " + std::to_string(s + 1) + " omega_" + std::to_string(j + 1), p});
      if (st.J == 1) break;
    }
  }
  return out;
}

std::vector<NamedValue> spatial_conjugacy_pvalues(int draws, std::uint64_t seed) {
  struct Setting {
    double th1, th2, c0, b;
    std::vector<Location> pts;
    std::vector<std::pair<int, int>> alloc;
    int J;
  };
  const std::vector<Setting> settings{
      {0.3, 0.5, 1.0, 0.1, {{0.2, 0.3}, {0.5, 0.9}}, {{1, 1}, {2, 3}}, 3},
      {0.02, 0.02, 0.01, 0.002, {{0.1, 0.1}}, {{5, 5}}, 30},
      {1.0, 0.2, 5.0, 2.0, {}, {}, 2},
      {0.1, 0.1, 0.5, 0.01, {{0.3, 0.4}, {0.31, 0.41}, {0.7, 0.2}}, {{3, 4}, {3, 4}, {7, 2}}, 10},
      {0.5, 1.5, 0.05, 1.0, {{0.9, 0.9}}, {{2, 1}}, 2},
  };
  Rng rng(seed);
  std::vector<NamedValue> out;
  for (std::size_t s = 0; s < settings.size(); ++s) {
    const auto &st = settings[s];
    SpatialHyperpriors hp{LomaxPrior{2.0, 0.1}, LomaxPrior{2.0, 0.1}, ExponentialPrior{10.0},
                          ExponentialPrior{0.01}, st.J};
    SpatialState init;
    init.theta1 = st.th1;
    init.theta2 = st.th2;
    init.c0 = st.c0;
    init.b = st.b;
    init.weights = WeightMatrix(st.J, 1.0);
    init.allocations = st.alloc;
    McmcSettings ms;
    SpatialSampler sampler(SpatialPointPattern(st.pts), hp, ms, init, rng);
    const std::pair<int, int> cell = st.alloc.empty() ? std::make_pair(1, 2) : st.alloc.front();
    int N = 0;
    for (const auto &a : st.alloc) N += a == cell;
    const double shape = N + st.c0 * st.th1 * st.th2 / st.b;
    const double rate = oracle::erlang_cdf(1.0, cell.first, st.th1) *
                            oracle::erlang_cdf(1.0, cell.second, st.th2) + st.c0;
    std::vector<double> x(draws);
    for (double &v : x) {
      sampler.update_weights(rng);
      v = sampler.state().weights(cell.first - 1, cell.second - 1);
    }
    const double p = ks_test(x, [&](double v) { return oracle::gamma_cdf(v, shape, rate); }).p_value;
    out.push_back({"setting " + std::to_string(s + 1) + " omega_" + std::to_string(cell.first) + "," +
                       std::to_string(cell.second),
                   p});
  }
  return out;
}

std::vector<NamedValue> temporal_mh_stationarity(long sweeps, int thin, std::uint64_t seed) {
  const std::vector<double> times{0.8, 2.3};
  const double T = 4.0;
  const std::vector<int> alloc{1, 2};
  const std::vector<double> w{1.5, 0.7};
  const double d = 1.0, c0_mean = 10.0, b_mean = 2.0;
  const double theta0 = 1.0, c00 = 1.0, b0 = 1.0;

  auto weight_prior = [&](double theta, double c0, double b) {
    double s = 0.0;
    for (double v : w) s += gamma_log_density(v, c0 * theta / b, c0);
    return s;
  };
  const std::function<double(double)> lp_theta = [&](double th) {
    double s = lomax_log_pdf(th, d) + weight_prior(th, c00, b0);
    for (std::size_t j = 0; j < w.size(); ++j) s -= w[j] * oracle::erlang_cdf(T, static_cast<int>(j) + 1, th);
    for (std::size_t i = 0; i < times.size(); ++i) s += std::log(oracle::erlang_pdf(times[i], alloc[i], th));
    return s;
  };
  const std::function<double(double)> lp_c0 = [&](double c0) {
    return exp_log_pdf(c0, c0_mean) + weight_prior(theta0, c0, b0);
  };
  const std::function<double(double)> lp_b = [&](double b) {
    return exp_log_pdf(b, b_mean) + weight_prior(theta0, c00, b);
  };

  std::vector<NamedValue> out;
  for (int which = 0; which < 3; ++which) {
    Rng rng(seed + which);
    TemporalHyperpriors hp{LomaxPrior{2.0, d}, ExponentialPrior{c0_mean}, ExponentialPrior{b_mean}, 2};
    TemporalState init;
    init.theta = theta0;
    init.c0 = c00;
    init.b = b0;
    init.weights = w;
    init.allocations = alloc;
    McmcSettings ms;
    ms.adapt = false;
    TemporalSampler sampler(PointPattern(times, T), hp, ms, init, rng);
    sampler.set_proposal_sds(1.0, 1.0, 1.0);
    std::vector<double> draws;
    for (long it = 1; it <= sweeps; ++it) {
      double v = 0.0;
      if (which == 0) {
        sampler.update_theta(rng);
        v = sampler.state().theta;
      } else if (which == 1) {
        sampler.update_c0(rng);
        v = sampler.state().c0;
      } else {
        sampler.update_b(rng);
        v = sampler.state().b;
      }
      if (it % thin == 0) draws.push_back(v);
    }
    const auto &lp = which == 0 ? lp_theta : which == 1 ? lp_c0 : lp_b;
    out.push_back({which == 0 ? "theta" : which == 1 ? "c0" : "b", ks_against_grid(draws, lp)});
  }
  return out;
}

std::vector<NamedValue> spatial_mh_stationarity(long sweeps, int thin, std::uint64_t seed) {
  const std::vector<Location> pts{{0.3, 0.6}, {0.7, 0.2}};
  const std::vector<std::pair<int, int>> alloc{{1, 2}, {2, 1}};
  const int J = 2;
  const std::vector<double> w{1.5, 0.7, 2.2, 0.4};  // row-major
  const double d = 0.3, c0_mean = 10.0, b_mean = 0.5;
  const double th10 = 0.4, th20 = 0.6, c00 = 1.0, b0 = 0.2;

  auto weight_prior = [&](double th1, double th2, double c0, double b) {
    double s = 0.0;
    for (double v : w) s += gamma_log_density(v, c0 * th1 * th2 / b, c0);
    return s;
  };
  auto normalizer = [&](double th1, double th2) {
    double s = 0.0;
    for (int r = 0; r < J; ++r)
      for (int c = 0; c < J; ++c)
        s += w[r * J + c] * oracle::erlang_cdf(1.0, r + 1, th1) * oracle::erlang_cdf(1.0, c + 1, th2);
    return s;
  };
  const std::function<double(double)> lp_th1 = [&](double th) {
    double s = lomax_log_pdf(th, d) + weight_prior(th, th20, c00, b0) - normalizer(th, th20);
    for (std::size_t i = 0; i < pts.size(); ++i) s += std::log(oracle::erlang_pdf(pts[i].s1, alloc[i].first, th));
    return s;
  };
  const std::function<double(double)> lp_th2 = [&](double th) {
    double s = lomax_log_pdf(th, d) + weight_prior(th10, th, c00, b0) - normalizer(th10, th);
    for (std::size_t i = 0; i < pts.size(); ++i) s += std::log(oracle::erlang_pdf(pts[i].s2, alloc[i].second, th));
    return s;
  };
  const std::function<double(double)> lp_c0 = [&](double c0) {
    return exp_log_pdf(c0, c0_mean) + weight_prior(th10, th20, c0, b0);
  };
  const std::function<double(double)> lp_b = [&](double b) {
    return exp_log_pdf(b, b_mean) + weight_prior(th10, th20, c00, b);
  };
  const std::function<double(double)> *lps[] = {&lp_th1, &lp_th2, &lp_c0, &lp_b};
  const char *names[] = {"theta1", "theta2", "c0", "b"};

  std::vector<NamedValue> out;
  for (int which = 0; which < 4; ++which) {
    Rng rng(seed + which);
    SpatialHyperpriors hp{LomaxPrior{2.0, d}, LomaxPrior{2.0, d}, ExponentialPrior{c0_mean},
                          ExponentialPrior{b_mean}, J};
    SpatialState init;
    init.theta1 = th10;
    init.theta2 = th20;
    init.c0 = c00;
    init.b = b0;
    init.weights = WeightMatrix(J);
    for (int c = 0; c < J * J; ++c) init.weights.flat()[c] = w[c];
    init.allocations = alloc;
    McmcSettings ms;
    ms.adapt = false;
    SpatialSampler sampler(SpatialPointPattern(pts), hp, ms, init, rng);
    sampler.set_proposal_sds({1.0, 1.0, 1.0, 1.0});
    std::vector<double> draws;
    for (long it = 1; it <= sweeps; ++it) {
      double v = 0.0;
      switch (which) {
        case 0: sampler.update_theta1(rng); v = sampler.state().theta1; break;
        case 1: sampler.update_theta2(rng); v = sampler.state().theta2; break;
        case 2: sampler.update_c0(rng); v = sampler.state().c0; break;
        default: sampler.update_b(rng); v = sampler.state().b; break;
      }
      if (it % thin == 0) draws.push_back(v);
    }
    out.push_back({names[which], ks_against_grid(draws, *lps[which])});
  }
  return out;
}

double constant_approximation_error(double theta, double support, int grid_points) {
  const int J = static_cast<int>(std::lround(support / theta));
  const std::vector<double> w(J, theta);
  const double lo = 0.5, hi = 0.9 * J * theta;
  double worst = 0.0;
  for (int k = 0; k < grid_points; ++k) {
    const double t = lo + (hi - lo) * (k + 0.5) / grid_points;
    worst = std::max(worst, std::abs(mixture_intensity(t, w, theta) - 1.0));
  }
  return worst;
}

double prior_mean_max_relative_deviation(double b, double theta, int J, double upper,
                                         int grid_points) {
  double worst = 0.0;
  for (int k = 1; k <= grid_points; ++k) {
    const double t = upper * k / (grid_points + 1.0);
    worst = std::max(worst, std::abs(prior_mean_intensity(t, b, theta, J) * b - 1.0));
  }
  return worst;
}

double prior_mean_monte_carlo_z(double b, double theta, double c0, int J, double upper,
                                int grid_points, int draws, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> grid(grid_points);
  std::vector<std::vector<double>> dens(grid_points, std::vector<double>(J));
  for (int g = 0; g < grid_points; ++g) {
    grid[g] = upper * (g + 1) / (grid_points + 1.0);
    for (int j = 0; j < J; ++j) dens[g][j] = oracle::erlang_pdf(grid[g], j + 1, theta);
  }
  std::vector<double> s(grid_points, 0.0), s2(grid_points, 0.0);
  const GammaProcessPrior gp{c0, b};
  for (int k = 0; k < draws; ++k) {
    const auto w = sample_weights_prior(theta, gp, J, rng);
    for (int g = 0; g < grid_points; ++g) {
      double v = 0.0;
      for (int j = 0; j < J; ++j) v += w[j] * dens[g][j];
      s[g] += v;
      s2[g] += v * v;
    }
  }
  double worst = 0.0;
  for (int g = 0; g < grid_points; ++g) {
    const double m = s[g] / draws;
    const double se = std::sqrt((s2[g] / draws - m * m) / draws);
    worst = std::max(worst, std::abs(m - prior_mean_intensity(grid[g], b, theta, J)) / se);
  }
  return worst;
}

}  // namespace checks
