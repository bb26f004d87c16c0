#include <gtest/gtest.h>

#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/weibull.hpp>
#include <cmath>
#include <vector>

#include "erlmix/mixture.hpp"
#include "erlmix/simulate.hpp"
#include "erlmix/stats.hpp"
#include "oracles.hpp"

using namespace erlmix;

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// E[logistic(Z)] for Z ~ N(mu, var), by quadrature.
double logit_normal_mean(double mu, double var) {
  const double sd = std::sqrt(var);
  return oracle::integrate(
      [&](double z) {
        return logistic(z) * std::exp(-0.5 * (z - mu) * (z - mu) / var) / (sd * std::sqrt(2.0 * M_PI));
      },
      mu - 12.0 * sd, mu + 12.0 * sd);
}

}  // namespace

TEST(Validate, RejectsBadSpecs) {
  EXPECT_THROW(validate(IntensitySpec{Homogeneous{0.0}}), std::invalid_argument);
  EXPECT_THROW(validate(IntensitySpec{WeibullHazard{-1.0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(validate(IntensitySpec{ErlangMixture{{}, 1.0}}), std::invalid_argument);
  EXPECT_THROW(validate(IntensitySpec{WeightedDensityMixture{{{-1.0, WeibullDensity{1.0, 1.0}}}}}),
               std::invalid_argument);
  BivariateLogitNormalMixture bad{{{1.0, {0.0, 0.0}, {1.0, 2.0, 2.0, 1.0}}}};
  EXPECT_THROW(validate(SpatialIntensitySpec{bad}), std::invalid_argument);
  EXPECT_NO_THROW(validate(SpatialIntensitySpec{bimodal_logit_normal_spec()}));
}

TEST(Intensity, WeibullHazardClosedForm) {
  const IntensitySpec s = WeibullHazard{0.5, 8e-5};
  EXPECT_NEAR(cumulative_intensity(s, 20.0), 500.0, 1e-9);
  EXPECT_NEAR(intensity(s, 5.0), 0.5 / 8e-5 * std::pow(5.0 / 8e-5, -0.5), 1e-12);
}

TEST(Intensity, DensityMixtureMatchesBoost) {
  const IntensitySpec s = WeightedDensityMixture{
      {{50.0, WeibullDensity{3.5, 5.0}}, {60.0, WeibullDensity{6.5, 15.0}}, {7.0, LogNormalDensity{1.0, 0.4}}}};
  const boost::math::weibull_distribution<> w1(3.5, 5.0), w2(6.5, 15.0);
  const boost::math::lognormal_distribution<> ln(1.0, 0.4);
  for (double t : {0.5, 3.0, 9.0, 17.0}) {
    const double lam = 50 * pdf(w1, t) + 60 * pdf(w2, t) + 7 * pdf(ln, t);
    const double cum = 50 * cdf(w1, t) + 60 * cdf(w2, t) + 7 * cdf(ln, t);
    EXPECT_NEAR(intensity(s, t), lam, 1e-12 * lam);
    EXPECT_NEAR(cumulative_intensity(s, t), cum, 1e-12 * cum);
  }
}

TEST(Intensity, CustomFallsBackToQuadrature) {
  const IntensitySpec s = CustomIntensity{[](double t) { return 2.0 + std::sin(t); }, 3.0};
  EXPECT_NEAR(cumulative_intensity(s, 4.0), 8.0 + 1.0 - std::cos(4.0), 1e-10);
}

TEST(Intensity, ErlangMixtureMatchesLibraryMixture) {
  const std::vector<double> w{3.0, 0.5, 8.0};
  const IntensitySpec s = ErlangMixture{w, 1.5};
  EXPECT_DOUBLE_EQ(intensity(s, 2.2), mixture_intensity(2.2, w, 1.5));
  EXPECT_NEAR(cumulative_intensity(s, 6.0), mixture_cumulative(6.0, w, 1.5), 1e-12);
}

TEST(Poisson, MomentsAndPmf) {
  for (double m : {0.7, 4.0, 37.5, 600.0}) {
    Rng rng(static_cast<std::uint64_t>(m * 10));
    const int n = 100000;
    std::vector<double> x(n);
    for (double &v : x) v = static_cast<double>(poisson_sample(m, rng));
    EXPECT_NEAR(mean(x), m, 4.5 * std::sqrt(m / n)) << m;
    // Var of the sample variance is about (m + 2 m^2) / n.
    EXPECT_NEAR(variance(x), m, 4.5 * std::sqrt((m + 2 * m * m) / n)) << m;
    const int mode = static_cast<int>(m);
    const double p = std::exp(mode * std::log(m) - m - std::lgamma(mode + 1.0));
    const double freq = static_cast<double>(std::count(x.begin(), x.end(), mode)) / n;
    EXPECT_NEAR(freq, p, 4.5 * std::sqrt(p * (1 - p) / n)) << m;
  }
  Rng rng(1);
  EXPECT_EQ(poisson_sample(0.0, rng), 0);
}

TEST(SimulateNhpp, CountIsPoissonWithMeanLambda) {
  const IntensitySpec s = WeibullHazard{6.0, 7.0};
  const double L = cumulative_intensity(s, 20.0);
  Rng rng(2);
  const int reps = 400;
  std::vector<double> counts(reps);
  for (double &c : counts) c = static_cast<double>(simulate_nhpp(s, 20.0, rng).size());
  EXPECT_NEAR(mean(counts), L, 4.5 * std::sqrt(L / reps));
  EXPECT_NEAR(variance(counts) / L, 1.0, 0.35);
}

TEST(SimulateNhpp, TimesFollowNormalizedIntensity) {
  for (const auto &p : presets()) {
    if (p.is_spatial()) continue;
    const auto &s = std::get<IntensitySpec>(p.spec);
    const double T = p.window_end, L = cumulative_intensity(s, T);
    Rng rng(17);
    const auto pat = simulate_nhpp(s, T, rng);
    ASSERT_GT(pat.size(), 50u) << p.name;
    const std::vector<double> t(pat.times().begin(), pat.times().end());
    EXPECT_GT(ks_test(t, [&](double v) { return cumulative_intensity(s, v) / L; }).p_value, 0.001) << p.name;
  }
}

TEST(SimulateNhpp, ErlangMixtureTimesFollowIntensity) {
  const std::vector<double> w{40.0, 0.0, 5.0, 120.0, 30.0};
  const IntensitySpec s = ErlangMixture{w, 2.0};
  Rng rng(3);
  const auto pat = simulate_nhpp(s, 6.0, rng);
  const double L = mixture_cumulative(6.0, w, 2.0);
  const std::vector<double> t(pat.times().begin(), pat.times().end());
  EXPECT_GT(ks_test(t, [&](double v) { return mixture_cumulative(v, w, 2.0) / L; }).p_value, 0.001);
}

TEST(SimulateNhpp, ThinningAgreesWithInversion) {
  const IntensitySpec s = WeightedDensityMixture{{{50.0, WeibullDensity{3.5, 5.0}}, {60.0, WeibullDensity{6.5, 15.0}}}};
  double bound = 0.0;
  for (int k = 0; k <= 2000; ++k) bound = std::max(bound, intensity(s, 20.0 * k / 2000));
  Rng a(4), b(5);
  std::vector<double> inv, thin;
  for (int r = 0; r < 20; ++r) {
    for (double t : simulate_nhpp(s, 20.0, a).times()) inv.push_back(t);
    for (double t : simulate_nhpp_thinning([&](double t) { return intensity(s, t); }, 1.1 * bound, 20.0, b).times())
      thin.push_back(t);
  }
  EXPECT_GT(ks_test_two_sample(inv, thin).p_value, 0.001);
  const double L = cumulative_intensity(s, 20.0);
  EXPECT_NEAR(static_cast<double>(thin.size()) / 20, L, 4.5 * std::sqrt(L / 20));
}

TEST(SimulateNhpp, ThinningRejectsBoundViolation) {
  Rng rng(6);
  EXPECT_THROW(simulate_nhpp_thinning([](double t) { return t; }, 1.0, 10.0, rng), std::domain_error);
  EXPECT_THROW(simulate_nhpp(IntensitySpec{CustomIntensity{[](double) { return 1.0; }, std::nullopt}}, 1.0, rng),
               std::invalid_argument);
}

TEST(SimulateSpatial, LogitNormalPointsAndMoments) {
  const auto spec = bimodal_logit_normal_spec();
  EXPECT_NEAR(total_intensity(SpatialIntensitySpec{spec}), 500.0, 1e-9);
  Rng rng(7);
  std::vector<double> s1, s2, counts;
  for (int r = 0; r < 40; ++r) {
    const auto pat = simulate_nhpp(SpatialIntensitySpec{spec}, rng);
    counts.push_back(static_cast<double>(pat.size()));
    for (const auto &p : pat.locations()) {
      ASSERT_TRUE(p.s1 > 0.0 && p.s1 < 1.0 && p.s2 > 0.0 && p.s2 < 1.0);
      s1.push_back(p.s1);
      s2.push_back(p.s2);
    }
  }
  EXPECT_NEAR(mean(counts), 500.0, 4.5 * std::sqrt(500.0 / 40));
  const double m_lo = logit_normal_mean(-1.0, 0.3), m_hi = logit_normal_mean(1.0, 0.3);
  const double e1 = (150 * m_lo + 350 * m_hi) / 500, e2 = (150 * m_hi + 350 * m_lo) / 500;
  const double se1 = std::sqrt(variance(s1) / s1.size()), se2 = std::sqrt(variance(s2) / s2.size());
  EXPECT_NEAR(mean(s1), e1, 4.5 * se1);
  EXPECT_NEAR(mean(s2), e2, 4.5 * se2);
}

TEST(SimulateSpatial, MarginalsIntegrateToTotal) {
  const SpatialIntensitySpec spec = bimodal_logit_normal_spec();
  for (int dim : {1, 2}) {
    const double tot = oracle::integrate([&](double s) { return marginal_intensity(spec, dim, s); }, 0.0, 1.0, 1e-10);
    EXPECT_NEAR(tot, 500.0, 1e-6);
  }
  const double direct = oracle::integrate([&](double v) { return intensity(spec, 0.3, v); }, 0.0, 1.0, 1e-10);
  EXPECT_NEAR(marginal_intensity(spec, 1, 0.3), direct, 1e-7 * direct);
}

TEST(SimulateSpatial, ErlangMixtureMarginalDistribution) {
  WeightMatrix W(3);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) W(r, c) = 20.0 + 30.0 * ((r + 2 * c) % 3);
  const SpatialIntensitySpec spec = SpatialErlangMixture{W, 0.2, 0.35};
  Rng rng(8);
  const auto pat = simulate_nhpp(spec, rng);
  std::vector<double> s1;
  for (const auto &p : pat.locations()) s1.push_back(p.s1);
  const double tot = total_intensity(spec);
  EXPECT_NEAR(tot, spatial_total_intensity(W, 0.2, 0.35), 1e-10 * tot);
  auto cdf = [&](double x) {
    return oracle::integrate([&](double s) { return marginal_intensity(spec, 1, s); }, 0.0, x, 1e-9) / tot;
  };
  EXPECT_GT(ks_test(s1, cdf).p_value, 0.001);
}

TEST(Presets, NamesAndReferenceCounts) {
  const std::vector<std::pair<std::string, std::size_t>> expected{
      {"dec-3.1", 491}, {"inc-3.2", 565}, {"bimodal-3.3", 112}, {"bln-4.2", 528}};
  for (const auto &[name, n] : expected) {
    const auto &p = find_preset(name);
    Rng rng(p.seed);
    const std::size_t got = p.is_spatial() ? simulate_nhpp(std::get<SpatialIntensitySpec>(p.spec), rng).size()
                                           : simulate_nhpp(std::get<IntensitySpec>(p.spec), p.window_end, rng).size();
    EXPECT_EQ(got, n) << name;
  }
  EXPECT_NO_THROW(find_preset("homogeneous"));
  EXPECT_THROW(find_preset("nope"), std::invalid_argument);
  EXPECT_NEAR(cumulative_intensity(std::get<IntensitySpec>(find_preset("dec-3.1").spec), 20.0), 500.0, 1e-9);
}
