// Acceptance runner: checks criteria 1-10 and prints one PASS/FAIL line
// each.  An optional argument names a directory for the recovery-run
// artifacts (summaries, Q-Q data, truth curves).  Exit status is the
// number of failed criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "checks.hpp"
#include "erlmix/diagnostics.hpp"
#include "erlmix/io.hpp"
#include "erlmix/prior.hpp"
#include "erlmix/simulate.hpp"
#include "erlmix/spatial_model.hpp"
#include "erlmix/stats.hpp"
#include "erlmix/temporal_model.hpp"

using namespace erlmix;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string min_value(const std::vector<checks::NamedValue> &v, std::string *name = nullptr) {
  auto it = std::min_element(v.begin(), v.end(), [](const auto &a, const auto &b) { return a.value < b.value; });
  if (name) *name = it->name;
  return fmt("%.4g", it->value);
}

bool all_above(const std::vector<checks::NamedValue> &v, double level) {
  return std::all_of(v.begin(), v.end(), [&](const auto &r) { return r.value > level; });
}

fs::path artifact_dir;

Outcome marginalization_temporal() {
  const double err = checks::temporal_marginalization_error(20, 101);
  return {err < 1e-10, "max relative error " + fmt("%.3g", err)};
}

Outcome marginalization_spatial() {
  const double err = checks::spatial_marginalization_error(20, 102);
  return {err < 1e-10, "max relative error " + fmt("%.3g", err)};
}

Outcome conjugacy() {
  const auto t = checks::temporal_conjugacy_pvalues(10000, 103);
  const auto s = checks::spatial_conjugacy_pvalues(10000, 104);
  std::string tn, sn;
  const std::string tp = min_value(t, &tn), sp = min_value(s, &sn);
  return {all_above(t, 0.001) && all_above(s, 0.001),
          std::to_string(t.size() + s.size()) + " KS tests; min p temporal " + tp + " (" + tn +
              "), spatial " + sp + " (" + sn + ")"};
}

Outcome mh_stationarity() {
  const auto t = checks::temporal_mh_stationarity(100000, 20, 105);
  const auto s = checks::spatial_mh_stationarity(100000, 20, 106);
  std::ostringstream d;
  d << "KS p:";
  for (const auto &r : t) d << " " << r.name << "=" << fmt("%.3g", r.value);
  d << " |";
  for (const auto &r : s) d << " " << r.name << "=" << fmt("%.3g", r.value);
  return {all_above(t, 0.001) && all_above(s, 0.001), d.str()};
}

Outcome constant_approximation() {
  const std::vector<double> thetas{0.2, 0.1, 0.05, 0.025};
  std::vector<double> sup;
  for (double th : thetas) sup.push_back(checks::constant_approximation_error(th, 10.0));
  bool decreasing = true;
  for (std::size_t k = 1; k < sup.size(); ++k) decreasing = decreasing && sup[k] < sup[k - 1];
  std::ostringstream d;
  d << "J theta = 10; sup error";
  for (std::size_t k = 0; k < sup.size(); ++k) d << " " << fmt("%.4g", sup[k]);
  return {decreasing && sup.back() < 0.05, d.str()};
}

Outcome prior_mean() {
  const double b = 0.01, theta = 0.4;
  const int J = 50;
  const double upper = 0.8 * J * theta;
  const double dev = checks::prior_mean_max_relative_deviation(b, theta, J, upper);
  // Largest t at which the closed form still lies within 1e-4 of 1/b.
  double ok_until = 0.0;
  for (int k = 1; k <= 4000; ++k) {
    const double t = upper * k / 4001.0;
    if (std::abs(prior_mean_intensity(t, b, theta, J) * b - 1.0) > 1e-4) break;
    ok_until = t;
  }
  const double z = checks::prior_mean_monte_carlo_z(b, theta, 1.0, J, upper, 32, 100000, 107);
  return {dev < 1e-4 && z < 4.0,
          "closed form max relative deviation " + fmt("%.3g", dev) + " on (0, " + fmt("%g", upper) +
              "), within 1e-4 only up to t = " + fmt("%.2f", ok_until) + "; Monte Carlo max |z| " +
              fmt("%.2f", z)};
}

Outcome temporal_recovery() {
  bool pass = true;
  std::ostringstream d;
  for (const std::string name : {"dec-3.1", "bimodal-3.3"}) {
    const Preset &preset = find_preset(name);
    const auto &spec = std::get<IntensitySpec>(preset.spec);
    const double T = preset.window_end;
    Rng rng(preset.seed);
    const PointPattern pattern = simulate_nhpp(spec, T, rng);
    auto hp = elicit_temporal(T, static_cast<int>(pattern.size()));
    hp.J = 50;
    McmcSettings ms;
    ms.n_iterations = 20000;
    ms.burn_in = 5000;
    const PosteriorChain chain = run_mcmc(pattern, hp, ms);
    const auto grid = default_grid(T, 51);
    const IntensitySummary s = intensity_summary(chain, grid);
    int covered = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double truth = intensity(spec, grid[g]);
      covered += s.lower[g] <= truth && truth <= s.upper[g];
    }
    const auto u = posterior_mean_rescaled_uniforms(pattern, chain);
    const double p = ks_test(u, [](double v) { return v; }).p_value;
    const bool ok = covered >= 41 && p > 0.001;
    pass = pass && ok;
    d << name << ": n=" << pattern.size() << " covered " << covered << "/51, KS p " << fmt("%.3g", p) << "; ";
    if (!artifact_dir.empty()) {
      const fs::path dir = artifact_dir / name;
      write_pattern_csv(dir / "pattern.csv", pattern);
      write_chain_csv(dir / "chain.csv", chain);
      write_summary_csv(dir / "intensity_summary.csv", s);
      write_qq_csv(dir / "qq.csv", time_rescale(pattern, chain));
      std::ofstream truth(dir / "truth.csv");
      truth << "t,intensity\n";
      for (double t : default_grid(T, 501)) truth << format_double(t) << ',' << format_double(intensity(spec, t)) << '\n';
    }
  }
  return {pass, d.str()};
}

Outcome spatial_recovery() {
  const Preset &preset = find_preset("bln-4.2");
  const auto &spec = std::get<SpatialIntensitySpec>(preset.spec);
  Rng rng(preset.seed);
  const SpatialPointPattern pattern = simulate_nhpp(spec, rng);
  auto hp = elicit_spatial(static_cast<int>(pattern.size()));
  hp.J = 30;
  McmcSettings ms;
  ms.n_iterations = 10000;
  ms.burn_in = 2500;
  const SpatialChain chain = run_spatial_mcmc(pattern, hp, ms);

  const auto g = unit_midpoint_grid(64);
  const SurfaceSummary surface = surface_summary(chain, g, g);
  const auto peaks = local_maxima(surface, surface.mean);
  // logistic(mu_1) lies in the upper-left quadrant, logistic(mu_2) in the lower-right.
  bool upper_left = false, lower_right = false;
  std::ostringstream d;
  d << "n=" << pattern.size() << "; top maxima";
  for (std::size_t k = 0; k < std::min<std::size_t>(2, peaks.size()); ++k) {
    const double s1 = g[peaks[k].first], s2 = g[peaks[k].second];
    upper_left = upper_left || (s1 < 0.5 && s2 > 0.5);
    lower_right = lower_right || (s1 > 0.5 && s2 < 0.5);
    d << " (" << fmt("%.3f", s1) << ", " << fmt("%.3f", s2) << ")";
  }
  const auto mg = default_grid(1.0, 51);
  int covered[2] = {0, 0};
  for (int dim = 1; dim <= 2; ++dim) {
    const IntensitySummary m = spatial_marginal_summary(chain, dim, mg);
    for (std::size_t k = 0; k < mg.size(); ++k) {
      const double truth = marginal_intensity(spec, dim, mg[k]);
      covered[dim - 1] += m.lower[k] <= truth && truth <= m.upper[k];
    }
  }
  d << "; marginal coverage " << covered[0] << "/51 and " << covered[1] << "/51";
  return {peaks.size() >= 2 && upper_left && lower_right && covered[0] >= 39 && covered[1] >= 39, d.str()};
}

Outcome ess_estimator() {
  const std::size_t n = 100000;
  Rng rng(108);
  std::vector<double> ar(n), iid(n);
  double v = standard_normal(rng) / std::sqrt(0.75);
  for (std::size_t i = 0; i < n; ++i) {
    v = 0.5 * v + standard_normal(rng);
    ar[i] = v;
    iid[i] = standard_normal(rng);
  }
  const double r_ar = ess(ar) / n, r_iid = ess(iid) / n;
  return {std::abs(r_ar * 3.0 - 1.0) < 0.1 && r_iid >= 0.9 && r_iid <= 1.1,
          "AR(1) ESS/n " + fmt("%.4f", r_ar) + " (target 1/3), iid ESS/n " + fmt("%.4f", r_iid)};
}

Outcome simulator_calibration() {
  const std::vector<std::pair<std::string, double>> reference{
      {"dec-3.1", 491}, {"inc-3.2", 565}, {"bimodal-3.3", 112}, {"bln-4.2", 528}};
  const int reps = 10000;
  bool pass = true;
  std::ostringstream d;
  Rng rng(109);
  for (const auto &[name, n_ref] : reference) {
    const Preset &p = find_preset(name);
    const double L = p.is_spatial() ? total_intensity(std::get<SpatialIntensitySpec>(p.spec))
                                    : cumulative_intensity(std::get<IntensitySpec>(p.spec), p.window_end);
    std::vector<double> counts(reps);
    for (double &c : counts) {
      c = static_cast<double>(p.is_spatial() ? simulate_nhpp(std::get<SpatialIntensitySpec>(p.spec), rng).size()
                                             : simulate_nhpp(std::get<IntensitySpec>(p.spec), p.window_end, rng).size());
    }
    const double m = mean(counts), var = variance(counts);
    const double z = (m - L) / std::sqrt(var / reps);
    // Index of dispersion var/mean is 1 for Poisson counts, with standard
    // error about sqrt(2/(reps - 1)).
    const double dispersion = var / m;
    const bool dispersion_ok = std::abs(dispersion - 1.0) < 3.0 * std::sqrt(2.0 / (reps - 1));
    const bool realized_ok = std::abs(n_ref - L) < 3.0 * std::sqrt(L);
    pass = pass && std::abs(z) < 3.0 && dispersion_ok && realized_ok;
    d << name << ": Lambda " << fmt("%.2f", L) << " z " << fmt("%.2f", z) << " dispersion "
      << fmt("%.3f", dispersion) << " reference n " << n_ref << "; ";
  }
  return {pass, d.str()};
}

}  // namespace

int main(int argc, char **argv) {
  if (argc > 1) artifact_dir = argv[1];
  struct Criterion {
    int id;
    const char *name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "temporal marginalization oracle", 1.0, marginalization_temporal},
      {2, "spatial marginalization oracle", 1.0, marginalization_spatial},
      {3, "weight conjugacy", 10.0, conjugacy},
      {4, "MH stationarity", 60.0, mh_stationarity},
      {5, "basis approximation of a constant intensity", 1.0, constant_approximation},
      {6, "prior mean constancy", 5.0, prior_mean},
      {7, "temporal synthetic recovery", 600.0, temporal_recovery},
      {8, "spatial synthetic recovery", 1200.0, spatial_recovery},
      {9, "ESS estimator", 5.0, ess_estimator},
      {10, "simulator calibration", 30.0, simulator_calibration},
  };
  int failures = 0;
  for (const auto &c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("criterion %d %s: %s [%.2f s of %.0f s] %s%s\n", c.id, c.name, pass ? "PASS" : "FAIL", secs,
                c.budget_s, o.detail.c_str(), in_time ? "" : " (over time budget)");
    std::fflush(stdout);
  }
  return failures;
}
