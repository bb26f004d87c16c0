#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "erlmix/diagnostics.hpp"
#include "erlmix/io.hpp"
#include "erlmix/prior.hpp"
#include "erlmix/simulate.hpp"
#include "erlmix/spatial_model.hpp"
#include "erlmix/stats.hpp"
#include "erlmix/temporal_model.hpp"

namespace erlmix::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kSpatialDefaultJ = 70;

// Configuration problems (bad keys, wrong types, inconsistent values).
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string &where, const std::string &what)
      : std::runtime_error(where.empty() ? what : where + ": " + what) {}
};

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::optional<int> grid;
  int chains = 1;
  bool quiet = false;
};

json load_json(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw IoError(path, std::string("invalid JSON: ") + e.what());
  }
}

void write_json(const fs::path &path, const json &j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError(path, "write failed");
}

void check_keys(const json &obj, const std::string &where, const std::set<std::string> &allowed) {
  if (!obj.is_object()) throw SchemaError(where, "expected an object");
  for (const auto &[key, _] : obj.items()) {
    if (!allowed.count(key)) throw SchemaError(where, "unknown key '" + key + "'");
  }
}

template <class T>
std::optional<T> get_opt(const json &obj, const std::string &key, const std::string &where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception &) {
    throw SchemaError(where + "." + key, "wrong type");
  }
}

double positive(double v, const std::string &where) {
  if (!(v > 0.0) || !std::isfinite(v)) throw SchemaError(where, "must be a positive number");
  return v;
}

fs::path default_output(const std::string &command) {
  const char *root = std::getenv("ERLMIX_OUTPUT_ROOT");
  return fs::path(root && *root ? root : "erlmix-output") / command;
}

// Picks the output directory and creates it.
fs::path resolve_output(const CommonFlags &flags, const json &config, const fs::path &fallback) {
  fs::path dir = fallback;
  if (!flags.output.empty()) {
    dir = flags.output;
  } else if (config.contains("output")) {
    dir = config.at("output").get<std::string>();
  }
  fs::create_directories(dir);
  return dir;
}

// Resolved path of `p` relative to the directory of `base`.
fs::path relative_to(const fs::path &p, const fs::path &base) {
  if (p.is_absolute() || base.empty()) return p;
  return base.parent_path() / p;
}

fs::path sidecar(const fs::path &csv) {
  fs::path j = csv;
  j.replace_extension(".json");
  return j;
}

json rectangle_json(const Rectangle &r) {
  return json{{"x0", r.x0}, {"x1", r.x1}, {"y0", r.y0}, {"y1", r.y1}};
}

Rectangle parse_rectangle(const json &j, const std::string &where) {
  check_keys(j, where, {"x0", "x1", "y0", "y1"});
  Rectangle r;
  r.x0 = get_opt<double>(j, "x0", where).value_or(0.0);
  r.x1 = get_opt<double>(j, "x1", where).value_or(1.0);
  r.y0 = get_opt<double>(j, "y0", where).value_or(0.0);
  r.y1 = get_opt<double>(j, "y1", where).value_or(1.0);
  if (!(r.x1 > r.x0 && r.y1 > r.y0)) throw SchemaError(where, "empty rectangle");
  return r;
}

// ---------------------------------------------------------------- fit config

struct HyperpriorConfig {
  double coverage = 0.999;
  std::optional<double> theta_scale;
  std::optional<double> theta2_scale;
  std::optional<double> c0_mean;
  std::optional<double> b_mean;
};

struct RunConfig {
  std::string mode = "temporal";
  fs::path data;
  std::optional<double> window;
  std::optional<Rectangle> rectangle;
  std::optional<int> J;
  HyperpriorConfig hyperpriors;
  McmcSettings mcmc;
  int chains = 1;
};

RunConfig parse_run_config(const json &j) {
  check_keys(j, "config", {"mode", "data", "window", "J", "hyperpriors", "mcmc", "output", "chains"});
  RunConfig c;
  c.mode = get_opt<std::string>(j, "mode", "config").value_or("temporal");
  if (c.mode != "temporal" && c.mode != "spatial") {
    throw SchemaError("config.mode", "must be 'temporal' or 'spatial'");
  }
  if (auto d = get_opt<std::string>(j, "data", "config")) c.data = *d;
  if (j.contains("window")) {
    if (j.at("window").is_object()) {
      c.rectangle = parse_rectangle(j.at("window"), "config.window");
    } else {
      c.window = positive(get_opt<double>(j, "window", "config").value(), "config.window");
    }
  }
  if (c.mode == "temporal" && c.rectangle) {
    throw SchemaError("config.window", "temporal mode takes a number");
  }
  if (c.mode == "spatial" && c.window) {
    throw SchemaError("config.window", "spatial mode takes a rectangle {x0, x1, y0, y1}");
  }
  c.J = get_opt<int>(j, "J", "config");
  if (c.J && *c.J < 1) throw SchemaError("config.J", "must be >= 1");
  c.chains = get_opt<int>(j, "chains", "config").value_or(1);
  if (c.chains < 1) throw SchemaError("config.chains", "must be >= 1");

  if (j.contains("hyperpriors")) {
    const auto &h = j.at("hyperpriors");
    const std::string w = "config.hyperpriors";
    check_keys(h, w, {"coverage", "theta_scale", "theta2_scale", "c0_mean", "b_mean"});
    auto &hp = c.hyperpriors;
    hp.coverage = get_opt<double>(h, "coverage", w).value_or(0.999);
    if (!(hp.coverage > 0.0 && hp.coverage < 1.0)) throw SchemaError(w + ".coverage", "must lie in (0, 1)");
    hp.theta_scale = get_opt<double>(h, "theta_scale", w);
    hp.theta2_scale = get_opt<double>(h, "theta2_scale", w);
    hp.c0_mean = get_opt<double>(h, "c0_mean", w);
    hp.b_mean = get_opt<double>(h, "b_mean", w);
    for (auto *v : {&hp.theta_scale, &hp.theta2_scale, &hp.c0_mean, &hp.b_mean}) {
      if (*v) positive(**v, w);
    }
    if (hp.theta2_scale && c.mode == "temporal") {
      throw SchemaError(w + ".theta2_scale", "only valid in spatial mode");
    }
  }

  if (j.contains("mcmc")) {
    const auto &m = j.at("mcmc");
    const std::string w = "config.mcmc";
    check_keys(m, w, {"iterations", "burn_in", "thin", "proposal_sd", "adapt", "target_acceptance",
                      "seed", "progress_every"});
    auto &s = c.mcmc;
    s.n_iterations = get_opt<int>(m, "iterations", w).value_or(s.n_iterations);
    s.burn_in = get_opt<int>(m, "burn_in", w).value_or(s.burn_in);
    s.thin = get_opt<int>(m, "thin", w).value_or(s.thin);
    s.adapt = get_opt<bool>(m, "adapt", w).value_or(s.adapt);
    s.target_acceptance = get_opt<double>(m, "target_acceptance", w).value_or(s.target_acceptance);
    s.seed = get_opt<std::uint64_t>(m, "seed", w).value_or(s.seed);
    s.progress_every = get_opt<int>(m, "progress_every", w).value_or(s.progress_every);
    if (m.contains("proposal_sd")) {
      const auto &p = m.at("proposal_sd");
      check_keys(p, w + ".proposal_sd", {"theta", "c0", "b"});
      s.proposal_sd_theta = get_opt<double>(p, "theta", w).value_or(s.proposal_sd_theta);
      s.proposal_sd_c0 = get_opt<double>(p, "c0", w).value_or(s.proposal_sd_c0);
      s.proposal_sd_b = get_opt<double>(p, "b", w).value_or(s.proposal_sd_b);
    }
  }
  try {
    c.mcmc.validate();
  } catch (const std::invalid_argument &e) {
    throw SchemaError("config.mcmc", e.what());
  }
  return c;
}

json mcmc_json(const McmcSettings &s) {
  return json{{"iterations", s.n_iterations},
              {"burn_in", s.burn_in},
              {"thin", s.thin},
              {"proposal_sd",
               {{"theta", s.proposal_sd_theta}, {"c0", s.proposal_sd_c0}, {"b", s.proposal_sd_b}}},
              {"adapt", s.adapt},
              {"target_acceptance", s.target_acceptance},
              {"seed", s.seed},
              {"progress_every", s.progress_every}};
}

// Thread-safe progress printing for concurrent chains.
class ProgressSink {
 public:
  ProgressSink(std::ostream &err, bool quiet) : err_(err), quiet_(quiet) {}

  ProgressCallback for_chain(int k, bool spatial) {
    if (quiet_) return {};
    return [this, k, spatial](const SweepProgress &p) {
      std::lock_guard<std::mutex> lock(mu_);
      err_ << "[chain " << k << "] sweep " << p.iteration << '/' << p.n_iterations
           << "  accept theta" << (spatial ? "1 " : " ") << fixed(p.theta_rate);
      if (spatial) err_ << " theta2 " << fixed(p.theta2_rate);
      err_ << " c0 " << fixed(p.c0_rate) << " b " << fixed(p.b_rate) << '\n';
    };
  }
  void log(const std::string &line) {
    if (quiet_) return;
    std::lock_guard<std::mutex> lock(mu_);
    err_ << line << '\n';
  }

 private:
  static std::string fixed(double x) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.3f", x);
    return buf;
  }
  std::ostream &err_;
  bool quiet_;
  std::mutex mu_;
};

// Runs k = 0..chains-1 with seed + k on separate threads.
template <class Fn>
void run_chains(int chains, Fn &&fn) {
  if (chains == 1) {
    fn(0);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(chains);
  for (int k = 0; k < chains; ++k) {
    workers.emplace_back([&, k] {
      try {
        fn(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto &w : workers) w.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

std::string chain_stem(int chains, int k) {
  return chains == 1 ? std::string("chain") : "chain_" + std::to_string(k);
}

// ------------------------------------------------------------------- fit

json cmd_fit(const CommonFlags &flags, const std::string &data_arg, std::optional<int> J_arg,
             std::optional<int> iterations, std::optional<int> burn_in, std::optional<int> thin,
             std::ostream &err) {
  const json config = flags.config.empty() ? json::object() : load_json(flags.config);
  RunConfig rc = parse_run_config(config);
  if (!flags.config.empty() && !rc.data.empty()) rc.data = relative_to(rc.data, flags.config);
  if (!data_arg.empty()) rc.data = data_arg;
  if (rc.data.empty()) throw SchemaError("config.data", "no data file given");
  if (J_arg) rc.J = *J_arg;
  if (iterations) rc.mcmc.n_iterations = *iterations;
  if (burn_in) rc.mcmc.burn_in = *burn_in;
  if (thin) rc.mcmc.thin = *thin;
  if (flags.seed) rc.mcmc.seed = *flags.seed;
  if (flags.chains != 1) rc.chains = flags.chains;
  try {
    rc.mcmc.validate();
  } catch (const std::invalid_argument &e) {
    throw SchemaError("mcmc", e.what());
  }
  if (flags.quiet) rc.mcmc.progress_every = 0;

  const PatternFile file = read_pattern_csv(rc.data);
  const json meta_in = fs::exists(sidecar(rc.data)) ? load_json(sidecar(rc.data)) : json::object();
  if (!config.contains("mode") && meta_in.contains("mode")) rc.mode = meta_in.at("mode");
  if ((rc.mode == "spatial") != file.spatial) {
    throw IoError(rc.data, "columns do not match mode '" + rc.mode + "'");
  }
  const fs::path out_dir = resolve_output(flags, config, default_output("fit"));
  const int n = static_cast<int>(file.spatial ? file.locations.size() : file.times.size());
  const int n_elicit = std::max(n, 1);
  ProgressSink sink(err, flags.quiet);

  json resolved{{"mode", rc.mode}, {"data", fs::absolute(rc.data).lexically_normal().string()}};
  json metadata;
  json artifacts = json::array();

  if (rc.mode == "temporal") {
    if (!rc.window && meta_in.contains("window")) rc.window = meta_in.at("window").get<double>();
    if (!rc.window) throw SchemaError("config.window", "temporal fits need the window end T");
    const double T = *rc.window;
    const PointPattern pattern(file.times, T);
    TemporalHyperpriors hp = elicit_temporal(T, n_elicit, rc.hyperpriors.coverage);
    const int J_formula = hp.J;
    if (rc.hyperpriors.theta_scale) hp.theta.scale = *rc.hyperpriors.theta_scale;
    if (rc.hyperpriors.c0_mean) hp.c0.mean = *rc.hyperpriors.c0_mean;
    if (rc.hyperpriors.b_mean) hp.b.mean = *rc.hyperpriors.b_mean;
    hp.J = rc.J.value_or(J_formula);
    sink.log("fit: n = " + std::to_string(n) + ", T = " + format_double(T) + ", J = " +
             std::to_string(hp.J) + " (rule gives " + std::to_string(J_formula) + ")");

    resolved["window"] = T;
    resolved["J"] = hp.J;
    resolved["hyperpriors"] = {{"coverage", rc.hyperpriors.coverage},
                               {"theta_scale", hp.theta.scale},
                               {"c0_mean", hp.c0.mean},
                               {"b_mean", hp.b.mean}};
    resolved["mcmc"] = mcmc_json(rc.mcmc);
    resolved["chains"] = rc.chains;

    std::vector<json> chain_meta(rc.chains);
    run_chains(rc.chains, [&](int k) {
      McmcSettings s = rc.mcmc;
      s.seed = rc.mcmc.seed + k;
      const PosteriorChain chain = run_mcmc(pattern, hp, s, sink.for_chain(k, false));
      const fs::path csv = out_dir / (chain_stem(rc.chains, k) + ".csv");
      write_chain_csv(csv, chain);
      json m{{"mode", "temporal"},
             {"data", resolved["data"]},
             {"window", T},
             {"n", n},
             {"J", hp.J},
             {"J_rule", J_formula},
             {"seed", s.seed},
             {"retained_draws", chain.size()},
             {"hyperpriors", resolved["hyperpriors"]},
             {"mcmc", mcmc_json(s)},
             {"acceptance",
              {{"theta", chain.theta_acceptance.rate()},
               {"c0", chain.c0_acceptance.rate()},
               {"b", chain.b_acceptance.rate()}}},
             {"final_proposal_sd",
              {{"theta", chain.final_sd_theta}, {"c0", chain.final_sd_c0}, {"b", chain.final_sd_b}}}};
      write_json(sidecar(csv), m);
      chain_meta[k] = m;
    });
    for (int k = 0; k < rc.chains; ++k) {
      const fs::path csv = out_dir / (chain_stem(rc.chains, k) + ".csv");
      artifacts.push_back(csv.string());
      artifacts.push_back(sidecar(csv).string());
    }
  } else {
    std::vector<Location> points = file.locations;
    const Rectangle rect = rc.rectangle.value_or(Rectangle{});
    const SpatialPointPattern pattern = rect.is_unit_square()
                                            ? SpatialPointPattern(points)
                                            : rescale_to_unit_square(points, rect);
    SpatialHyperpriors hp = elicit_spatial(n_elicit, rc.hyperpriors.coverage);
    const int J_formula = hp.J;
    if (rc.hyperpriors.theta_scale) hp.theta1.scale = hp.theta2.scale = *rc.hyperpriors.theta_scale;
    if (rc.hyperpriors.theta2_scale) hp.theta2.scale = *rc.hyperpriors.theta2_scale;
    if (rc.hyperpriors.c0_mean) hp.c0.mean = *rc.hyperpriors.c0_mean;
    if (rc.hyperpriors.b_mean) hp.b.mean = *rc.hyperpriors.b_mean;
    hp.J = rc.J.value_or(kSpatialDefaultJ);
    sink.log("fit: n = " + std::to_string(n) + ", J = " + std::to_string(hp.J) +
             " (rule gives " + std::to_string(J_formula) + ")");

    resolved["window"] = rectangle_json(rect);
    resolved["J"] = hp.J;
    resolved["hyperpriors"] = {{"coverage", rc.hyperpriors.coverage},
                               {"theta_scale", hp.theta1.scale},
                               {"theta2_scale", hp.theta2.scale},
                               {"c0_mean", hp.c0.mean},
                               {"b_mean", hp.b.mean}};
    resolved["mcmc"] = mcmc_json(rc.mcmc);
    resolved["chains"] = rc.chains;

    run_chains(rc.chains, [&](int k) {
      McmcSettings s = rc.mcmc;
      s.seed = rc.mcmc.seed + k;
      SpatialChain chain = run_spatial_mcmc(pattern, hp, s, sink.for_chain(k, true));
      const fs::path csv = out_dir / (chain_stem(rc.chains, k) + ".csv");
      write_spatial_chain_csv(csv, chain);
      json m{{"mode", "spatial"},
             {"data", resolved["data"]},
             {"window", rectangle_json(rect)},
             {"n", n},
             {"J", hp.J},
             {"J_rule", J_formula},
             {"seed", s.seed},
             {"retained_draws", chain.size()},
             {"hyperpriors", resolved["hyperpriors"]},
             {"mcmc", mcmc_json(s)},
             {"acceptance",
              {{"theta1", chain.theta1_acceptance.rate()},
               {"theta2", chain.theta2_acceptance.rate()},
               {"c0", chain.c0_acceptance.rate()},
               {"b", chain.b_acceptance.rate()}}}};
      write_json(sidecar(csv), m);
    });
    for (int k = 0; k < rc.chains; ++k) {
      const fs::path csv = out_dir / (chain_stem(rc.chains, k) + ".csv");
      artifacts.push_back(csv.string());
      artifacts.push_back(sidecar(csv).string());
    }
  }
  resolved["output"] = out_dir.string();
  write_json(out_dir / "resolved_config.json", resolved);
  artifacts.push_back((out_dir / "resolved_config.json").string());
  return json{{"command", "fit"}, {"artifacts", artifacts}};
}

// ------------------------------------------------------------- summarize

struct LoadedChain {
  json meta;
  bool spatial = false;
  PosteriorChain temporal;
  SpatialChain spatial_chain;
  Rectangle rect;
};

LoadedChain load_chain(const fs::path &csv) {
  const fs::path meta_path = sidecar(csv);
  if (!fs::exists(meta_path)) throw IoError(meta_path, "chain metadata not found");
  LoadedChain c;
  c.meta = load_json(meta_path);
  const auto mode = get_opt<std::string>(c.meta, "mode", meta_path.string()).value_or("");
  if (mode == "temporal") {
    const double T = get_opt<double>(c.meta, "window", meta_path.string()).value_or(0.0);
    c.temporal = read_chain_csv(csv, positive(T, meta_path.string() + ".window"));
  } else if (mode == "spatial") {
    c.spatial = true;
    c.spatial_chain = read_spatial_chain_csv(csv);
    c.rect = parse_rectangle(c.meta.at("window"), meta_path.string() + ".window");
    c.spatial_chain.window = c.rect;
  } else {
    throw SchemaError(meta_path.string() + ".mode", "must be 'temporal' or 'spatial'");
  }
  if ((c.spatial ? c.spatial_chain.size() : c.temporal.size()) == 0) {
    throw IoError(csv, "chain has no draws");
  }
  return c;
}

// Maps a unit-interval summary to original coordinates along one axis.
IntensitySummary to_original_axis(IntensitySummary s, double lo, double hi) {
  const double width = hi - lo;
  for (double &g : s.grid) g = lo + width * g;
  for (auto *v : {&s.mean, &s.lower, &s.upper})
    for (double &x : *v) x /= width;
  return s;
}

json cmd_summarize(const CommonFlags &flags, const std::string &chain_arg, int surface_grid) {
  const fs::path csv = chain_arg;
  const LoadedChain c = load_chain(csv);
  const fs::path out_dir = flags.output.empty() ? csv.parent_path() : fs::path(flags.output);
  fs::create_directories(out_dir);
  const std::string prefix = csv.stem().string() == "chain" ? "" : csv.stem().string() + "_";
  const int G = flags.grid.value_or(51);
  if (G < 1) throw SchemaError("--grid", "must be >= 1");
  json artifacts = json::array();
  auto emit = [&](const std::string &name) {
    const fs::path p = out_dir / (prefix + name);
    artifacts.push_back(p.string());
    return p;
  };

  if (!c.spatial) {
    const auto grid = default_grid(c.temporal.window_end, G);
    write_summary_csv(emit("intensity_summary.csv"), intensity_summary(c.temporal, grid));
    write_summary_csv(emit("density_summary.csv"), density_summary(c.temporal, grid));
    write_weight_csv(emit("weight_summary.csv"), weight_summary(c.temporal));
  } else {
    if (surface_grid < 2) throw SchemaError("--surface-grid", "must be >= 2");
    const auto &r = c.rect;
    const auto g = unit_midpoint_grid(surface_grid);
    SurfaceSummary surf = surface_summary(c.spatial_chain, g, g);
    const double area = r.area();
    for (double &x : surf.grid1) x = r.x0 + (r.x1 - r.x0) * x;
    for (double &y : surf.grid2) y = r.y0 + (r.y1 - r.y0) * y;
    for (auto *v : {&surf.mean, &surf.lower, &surf.upper, &surf.iqr})
      for (double &x : *v) x /= area;
    write_surface_csv(emit("surface_summary.csv"), surf);
    const auto mg = default_grid(1.0, G);
    write_summary_csv(emit("marginal_s1.csv"),
                      to_original_axis(spatial_marginal_summary(c.spatial_chain, 1, mg), r.x0, r.x1),
                      "s1");
    write_summary_csv(emit("marginal_s2.csv"),
                      to_original_axis(spatial_marginal_summary(c.spatial_chain, 2, mg), r.y0, r.y1),
                      "s2");
  }
  return json{{"command", "summarize"}, {"artifacts", artifacts}};
}

// -------------------------------------------------------------- diagnose

json ess_or_null(std::span<const double> series) {
  try {
    return ess(series);
  } catch (const std::invalid_argument &) {
    return nullptr;  // constant or too short
  }
}

json cmd_diagnose(const CommonFlags &flags, const std::string &chain_arg, const std::string &data_arg) {
  const fs::path csv = chain_arg;
  const LoadedChain c = load_chain(csv);
  const fs::path out_dir = flags.output.empty() ? csv.parent_path() : fs::path(flags.output);
  fs::create_directories(out_dir);
  const std::string prefix = csv.stem().string() == "chain" ? "" : csv.stem().string() + "_";
  json artifacts = json::array();
  auto emit = [&](const std::string &name) {
    const fs::path p = out_dir / (prefix + name);
    artifacts.push_back(p.string());
    return p;
  };
  json report{{"mode", c.spatial ? "spatial" : "temporal"}};

  if (!c.spatial) {
    const auto &ch = c.temporal;
    report["draws"] = ch.size();
    report["ess"] = {{"theta", ess_or_null(ch.theta)}, {"c0", ess_or_null(ch.c0)}, {"b", ess_or_null(ch.b)}};
    const auto grid = default_grid(ch.window_end, flags.grid.value_or(51));
    json grid_ess = nullptr;
    try {
      grid_ess = mean_ess_over_grid(ch, grid);
    } catch (const std::invalid_argument &) {
    }
    report["mean_grid_ess"] = grid_ess;

    // ACF traces: lag, theta, c0, b, mean over the intensity grid.
    const std::size_t max_lag = std::min<std::size_t>(100, ch.size() > 1 ? ch.size() - 1 : 0);
    if (ch.size() >= 2) {
      auto safe_acf = [&](std::span<const double> x) {
        try {
          return acf(x, max_lag);
        } catch (const std::invalid_argument &) {
          return std::vector<double>(max_lag + 1, std::nan(""));
        }
      };
      const auto a_t = safe_acf(ch.theta), a_c = safe_acf(ch.c0), a_b = safe_acf(ch.b);
      std::vector<double> a_g(max_lag + 1, std::nan(""));
      try {
        a_g = mean_acf_over_grid(ch, grid, max_lag);
      } catch (const std::invalid_argument &) {
      }
      const fs::path p = emit("acf.csv");
      std::ofstream out(p, std::ios::binary);
      if (!out) throw IoError(p, "cannot open for writing");
      out << "lag,theta,c0,b,intensity\n";
      for (std::size_t l = 0; l <= max_lag; ++l) {
        out << l << ',' << format_double(a_t[l]) << ',' << format_double(a_c[l]) << ','
            << format_double(a_b[l]) << ',' << format_double(a_g[l]) << '\n';
      }
    }

    fs::path data = data_arg.empty() ? fs::path(c.meta.value("data", std::string())) : fs::path(data_arg);
    if (data.empty()) throw SchemaError("diagnose", "no data file recorded or given");
    const PatternFile file = read_pattern_csv(data);
    if (file.spatial) throw IoError(data, "expected a temporal pattern");
    const PointPattern pattern(file.times, ch.window_end);
    write_qq_csv(emit("qq.csv"), time_rescale(pattern, ch));
    if (!pattern.empty()) {
      const auto u = posterior_mean_rescaled_uniforms(pattern, ch);
      const auto ks = ks_test(u, [](double x) { return std::clamp(x, 0.0, 1.0); });
      report["rescaled_ks"] = {{"statistic", ks.statistic}, {"p_value", ks.p_value}};
    } else {
      report["rescaled_ks"] = nullptr;
    }
  } else {
    const auto &ch = c.spatial_chain;
    report["draws"] = ch.size();
    report["ess"] = {{"theta1", ess_or_null(ch.theta1)},
                     {"theta2", ess_or_null(ch.theta2)},
                     {"c0", ess_or_null(ch.c0)},
                     {"b", ess_or_null(ch.b)}};
  }
  report["acceptance"] = c.meta.value("acceptance", json::object());
  write_json(emit("diagnostics.json"), report);
  return json{{"command", "diagnose"}, {"artifacts", artifacts}};
}

// -------------------------------------------------------------- simulate

json cmd_simulate(const CommonFlags &flags, const std::string &preset_arg) {
  const json config = flags.config.empty() ? json::object() : load_json(flags.config);
  check_keys(config, "config", {"preset", "seed", "output"});
  std::string name = preset_arg.empty() ? get_opt<std::string>(config, "preset", "config").value_or("")
                                        : preset_arg;
  if (name.empty()) throw SchemaError("config.preset", "no preset given");
  const Preset &preset = find_preset(name);
  const std::uint64_t seed =
      flags.seed.value_or(get_opt<std::uint64_t>(config, "seed", "config").value_or(preset.seed));
  const fs::path out_dir = resolve_output(flags, config, default_output("simulate") / name);
  Rng rng(seed);

  json meta{{"preset", preset.name}, {"description", preset.description}, {"seed", seed}};
  json artifacts = json::array();
  const fs::path pattern_csv = out_dir / "pattern.csv";

  if (!preset.is_spatial()) {
    const auto &spec = std::get<IntensitySpec>(preset.spec);
    const double T = preset.window_end;
    const PointPattern pattern = simulate_nhpp(spec, T, rng);
    write_pattern_csv(pattern_csv, pattern);
    meta["mode"] = "temporal";
    meta["window"] = T;
    meta["n"] = pattern.size();
    meta["Lambda"] = cumulative_intensity(spec, T);

    const fs::path truth = out_dir / "truth.csv";
    std::ofstream out(truth, std::ios::binary);
    if (!out) throw IoError(truth, "cannot open for writing");
    out << "t,intensity\n";
    for (double t : default_grid(T, 501)) out << format_double(t) << ',' << format_double(intensity(spec, t)) << '\n';
    artifacts.push_back(truth.string());
  } else {
    const auto &spec = std::get<SpatialIntensitySpec>(preset.spec);
    const SpatialPointPattern pattern = simulate_nhpp(spec, rng);
    write_pattern_csv(pattern_csv, pattern.locations());
    meta["mode"] = "spatial";
    meta["window"] = rectangle_json(Rectangle{});
    meta["n"] = pattern.size();
    meta["Lambda"] = total_intensity(spec);

    const auto grid = unit_midpoint_grid(64);
    const fs::path surface = out_dir / "truth_surface.csv";
    {
      std::ofstream out(surface, std::ios::binary);
      if (!out) throw IoError(surface, "cannot open for writing");
      out << "s1,s2,intensity\n";
      for (double a : grid)
        for (double b : grid)
          out << format_double(a) << ',' << format_double(b) << ',' << format_double(intensity(spec, a, b)) << '\n';
    }
    artifacts.push_back(surface.string());
    for (int d = 1; d <= 2; ++d) {
      const fs::path p = out_dir / ("truth_marginal_s" + std::to_string(d) + ".csv");
      std::ofstream out(p, std::ios::binary);
      if (!out) throw IoError(p, "cannot open for writing");
      out << 's' << d << ",intensity\n";
      for (double s : default_grid(1.0, 501))
        out << format_double(s) << ',' << format_double(marginal_intensity(spec, d, s)) << '\n';
      artifacts.push_back(p.string());
    }
  }
  write_json(sidecar(pattern_csv), meta);
  write_json(out_dir / "resolved_config.json",
             json{{"preset", preset.name}, {"seed", seed}, {"output", out_dir.string()}});
  artifacts.insert(artifacts.begin(), {pattern_csv.string(), sidecar(pattern_csv).string(),
                                       (out_dir / "resolved_config.json").string()});
  return json{{"command", "simulate"}, {"artifacts", artifacts}};
}

// ----------------------------------------------------------- prior-check

json cmd_prior_check(const CommonFlags &flags) {
  const json config = flags.config.empty() ? json::object() : load_json(flags.config);
  check_keys(config, "config", {"J", "theta", "c0", "b", "draws", "window", "grid", "seed", "output"});
  PriorCheckSpec spec;
  spec.J = get_opt<int>(config, "J", "config").value_or(50);
  if (spec.J < 1) throw SchemaError("config.J", "must be >= 1");

  // Each hyperparameter is a number (fixed) or {"lomax_scale": d} /
  // {"exponential_mean": m} (random).
  auto parse_theta = [&](const json &v) -> ThetaSource {
    if (v.is_number()) return positive(v.get<double>(), "config.theta");
    check_keys(v, "config.theta", {"lomax_scale"});
    return LomaxPrior{2.0, positive(v.at("lomax_scale").get<double>(), "config.theta.lomax_scale")};
  };
  auto parse_pos = [&](const json &v, const std::string &w) -> PositiveSource {
    if (v.is_number()) return positive(v.get<double>(), w);
    check_keys(v, w, {"exponential_mean"});
    return ExponentialPrior{positive(v.at("exponential_mean").get<double>(), w + ".exponential_mean")};
  };
  if (config.contains("theta")) spec.theta = parse_theta(config.at("theta"));
  if (config.contains("c0")) spec.c0 = parse_pos(config.at("c0"), "config.c0");
  if (config.contains("b")) spec.b = parse_pos(config.at("b"), "config.b");
  const int draws = get_opt<int>(config, "draws", "config").value_or(10);
  if (draws < 1) throw SchemaError("config.draws", "must be >= 1");
  const double T = positive(get_opt<double>(config, "window", "config").value_or(20.0), "config.window");
  const int G = flags.grid.value_or(get_opt<int>(config, "grid", "config").value_or(200));
  if (G < 1) throw SchemaError("config.grid", "must be >= 1");
  const std::uint64_t seed = flags.seed.value_or(get_opt<std::uint64_t>(config, "seed", "config").value_or(1));
  const fs::path out_dir = resolve_output(flags, config, default_output("prior-check"));

  Rng rng(seed);
  const auto grid = default_grid(T, G);
  const PriorRealizations r = prior_intensity_realizations(spec, draws, grid, rng);

  json artifacts = json::array();
  {
    const fs::path p = out_dir / "prior_draws.csv";
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError(p, "cannot open for writing");
    out << "draw,theta,c0,b\n";
    for (std::size_t k = 0; k < r.n_draws(); ++k)
      out << k + 1 << ',' << format_double(r.theta[k]) << ',' << format_double(r.c0[k]) << ','
          << format_double(r.b[k]) << '\n';
    artifacts.push_back(p.string());
  }
  {
    const fs::path p = out_dir / "prior_intensity.csv";
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError(p, "cannot open for writing");
    out << "draw,t,intensity\n";
    for (std::size_t k = 0; k < r.n_draws(); ++k) {
      const auto v = r.draw_intensity(k);
      for (std::size_t g = 0; g < grid.size(); ++g)
        out << k + 1 << ',' << format_double(grid[g]) << ',' << format_double(v[g]) << '\n';
    }
    artifacts.push_back(p.string());
  }
  {
    // The closed-form prior mean needs theta and b fixed.
    const bool closed = std::holds_alternative<double>(spec.theta) && std::holds_alternative<double>(spec.b);
    const fs::path p = out_dir / "prior_summary.csv";
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError(p, "cannot open for writing");
    out << "t,mean,lower,upper" << (closed ? ",prior_mean" : "") << '\n';
    for (std::size_t g = 0; g < grid.size(); ++g) {
      out << format_double(grid[g]) << ',' << format_double(r.mean[g]) << ',' << format_double(r.lower[g])
          << ',' << format_double(r.upper[g]);
      if (closed) {
        out << ',' << format_double(prior_mean_intensity(grid[g], std::get<double>(spec.b),
                                                         std::get<double>(spec.theta), spec.J));
      }
      out << '\n';
    }
    artifacts.push_back(p.string());
  }
  auto source_json = [](const auto &v) -> json {
    using V = std::decay_t<decltype(v)>;
    if constexpr (std::is_same_v<V, double>) return v;
    else if constexpr (std::is_same_v<V, LomaxPrior>) return json{{"lomax_scale", v.scale}};
    else return json{{"exponential_mean", v.mean}};
  };
  json resolved{{"J", spec.J},
                {"theta", std::visit(source_json, spec.theta)},
                {"c0", std::visit(source_json, spec.c0)},
                {"b", std::visit(source_json, spec.b)},
                {"draws", draws},
                {"window", T},
                {"grid", G},
                {"seed", seed},
                {"output", out_dir.string()}};
  write_json(out_dir / "resolved_config.json", resolved);
  artifacts.push_back((out_dir / "resolved_config.json").string());
  return json{{"command", "prior-check"}, {"artifacts", artifacts}};
}

json error_json(const std::string &kind, const std::string &message) {
  return json{{"error", {{"kind", kind}, {"message", message}}}};
}

}  // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Bayesian Erlang-mixture intensity estimation for Poisson processes", "erlmix"};
  app.require_subcommand(1);
  CommonFlags flags;
  auto add_common = [&](CLI::App *sub, bool grid) {
    sub->add_option("--config", flags.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "RNG seed (overrides the config)");
    sub->add_option("--output", flags.output, "output directory");
    if (grid) sub->add_option("--grid", flags.grid, "number of grid points");
    sub->add_flag("--quiet", flags.quiet, "no progress output");
  };

  std::string preset, data, chain;
  std::optional<int> J, iterations, burn_in, thin;
  int surface_grid = 64;

  auto *sim = app.add_subcommand("simulate", "simulate a preset dataset");
  add_common(sim, false);
  sim->add_option("--preset", preset, "dec-3.1, inc-3.2, bimodal-3.3, bln-4.2 or homogeneous");

  auto *fit = app.add_subcommand("fit", "run the MCMC sampler on a pattern file");
  add_common(fit, false);
  fit->add_option("data", data, "pattern CSV (overrides config.data)");
  fit->add_option("--chains", flags.chains, "independent chains run concurrently")->check(CLI::PositiveNumber);
  fit->add_option("--J", J, "number of basis functions per axis");
  fit->add_option("--iterations", iterations, "total sweeps");
  fit->add_option("--burn-in", burn_in, "discarded sweeps");
  fit->add_option("--thin", thin, "keep every k-th sweep after burn-in");

  auto *sum = app.add_subcommand("summarize", "posterior intensity summaries from a chain");
  add_common(sum, true);
  sum->add_option("chain", chain, "chain CSV written by fit")->required()->check(CLI::ExistingFile);
  sum->add_option("--surface-grid", surface_grid, "spatial surface grid size per axis");

  auto *diag = app.add_subcommand("diagnose", "time-rescaling Q-Q and MCMC diagnostics");
  add_common(diag, true);
  diag->add_option("chain", chain, "chain CSV written by fit")->required()->check(CLI::ExistingFile);
  diag->add_option("--data", data, "pattern CSV (defaults to the one recorded at fit time)");

  auto *prior = app.add_subcommand("prior-check", "prior realizations of the intensity");
  add_common(prior, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    out << error_json("usage", e.what()).dump() << '\n';
    return 2;
  }

  try {
    json result;
    const auto start = std::chrono::steady_clock::now();
    if (*sim) result = cmd_simulate(flags, preset);
    else if (*fit) result = cmd_fit(flags, data, J, iterations, burn_in, thin, err);
    else if (*sum) result = cmd_summarize(flags, chain, surface_grid);
    else if (*diag) result = cmd_diagnose(flags, chain, data);
    else result = cmd_prior_check(flags);
    if (!flags.quiet) {
      err << "done in " << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
          << " s\n";
    }
    out << result.dump(2) << '\n';
    return 0;
  } catch (const SweepError &e) {
    json j = error_json("numeric", e.what());
    j["error"]["sweep"] = e.sweep();
    out << j.dump() << '\n';
  } catch (const SchemaError &e) {
    out << error_json("schema", e.what()).dump() << '\n';
  } catch (const IoError &e) {
    json j = error_json("io", e.what());
    j["error"]["path"] = e.path().string();
    out << j.dump() << '\n';
  } catch (const fs::filesystem_error &e) {
    out << error_json("io", e.what()).dump() << '\n';
  } catch (const std::exception &e) {
    out << error_json("invalid", e.what()).dump() << '\n';
  }
  return 1;
}

}  // namespace erlmix::cli
