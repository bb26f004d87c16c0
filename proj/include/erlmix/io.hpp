#ifndef ERLMIX_IO_HPP_
#define ERLMIX_IO_HPP_

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "erlmix/diagnostics.hpp"
#include "erlmix/spatial_model.hpp"
#include "erlmix/temporal_model.hpp"

namespace erlmix {

// Raised for malformed or unreadable files; the message carries the path
// and, where relevant, the line number.
class IoError : public std::runtime_error {
 public:
  IoError(const std::filesystem::path &path, const std::string &what)
      : std::runtime_error(path.string() + ": " + what), path_(path) {}
  const std::filesystem::path &path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// A pattern file holds either one column `t` or two columns `s1,s2`.
struct PatternFile {
  bool spatial = false;
  std::vector<double> times;
  std::vector<Location> locations;
};

PatternFile read_pattern_csv(const std::filesystem::path &path);
void write_pattern_csv(const std::filesystem::path &path, const PointPattern &pattern);
void write_pattern_csv(const std::filesystem::path &path, std::span<const Location> points);

/// Columns iteration,theta,c0,b,w1..wJ.
void write_chain_csv(const std::filesystem::path &path, const PosteriorChain &chain);
/// Reads draws back; J is taken from the header, settings are left default.
PosteriorChain read_chain_csv(const std::filesystem::path &path, double window_end);

/// Columns iteration,theta1,theta2,c0,b,w1_1..wJ_J with the weight matrix row-major.
void write_spatial_chain_csv(const std::filesystem::path &path, const SpatialChain &chain);
SpatialChain read_spatial_chain_csv(const std::filesystem::path &path);

/// Columns <grid_name>,mean,lower,upper.
void write_summary_csv(const std::filesystem::path &path, const IntensitySummary &summary,
                       const std::string &grid_name = "t");
/// Columns position,mean,lower,upper.
void write_qq_csv(const std::filesystem::path &path, const QqSummary &qq);
/// Columns j,mean,lower,upper.
void write_weight_csv(const std::filesystem::path &path, const WeightSummary &weights);
/// Columns s1,s2,mean,lower,upper,iqr.
void write_surface_csv(const std::filesystem::path &path, const SurfaceSummary &surface);

/// Shortest text that parses back to the same double.
std::string format_double(double x);

}  // namespace erlmix

#endif  // ERLMIX_IO_HPP_
