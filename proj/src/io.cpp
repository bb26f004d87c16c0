#include "erlmix/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace erlmix {

namespace {

std::vector<std::string> split(const std::string &line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string &s, const std::filesystem::path &path, long line) {
  double v = 0.0;
  const auto *end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) {
    throw IoError(path, "line " + std::to_string(line) + ": not a number: '" + s + "'");
  }
  return v;
}

std::ifstream open_in(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path &path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  return out;
}

// Reads the header and all numeric rows of a rectangular CSV.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table read_table(const std::filesystem::path &path) {
  auto in = open_in(path);
  Table t;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw IoError(path, "line " + std::to_string(lineno) + ": expected " +
                              std::to_string(t.header.size()) + " columns, found " +
                              std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto &c : cells) row.push_back(parse_double(c, path, lineno));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw IoError(path, "empty file (missing header)");
  return t;
}

void check_write(std::ofstream &out, const std::filesystem::path &path) {
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

PatternFile read_pattern_csv(const std::filesystem::path &path) {
  const Table t = read_table(path);
  PatternFile out;
  if (t.header == std::vector<std::string>{"t"}) {
    for (const auto &r : t.rows) out.times.push_back(r[0]);
  } else if (t.header == std::vector<std::string>{"s1", "s2"}) {
    out.spatial = true;
    for (const auto &r : t.rows) out.locations.push_back({r[0], r[1]});
  } else {
    throw IoError(path, "pattern header must be 't' or 's1,s2'");
  }
  return out;
}

void write_pattern_csv(const std::filesystem::path &path, const PointPattern &pattern) {
  auto out = open_out(path);
  out << "t\n";
  for (double t : pattern.times()) out << format_double(t) << '\n';
  check_write(out, path);
}

void write_pattern_csv(const std::filesystem::path &path, std::span<const Location> points) {
  auto out = open_out(path);
  out << "s1,s2\n";
  for (const auto &p : points) out << format_double(p.s1) << ',' << format_double(p.s2) << '\n';
  check_write(out, path);
}

void write_chain_csv(const std::filesystem::path &path, const PosteriorChain &chain) {
  auto out = open_out(path);
  out << "iteration,theta,c0,b";
  for (int j = 1; j <= chain.J; ++j) out << ",w" << j;
  out << '\n';
  for (std::size_t k = 0; k < chain.size(); ++k) {
    out << chain.iteration[k] << ',' << format_double(chain.theta[k]) << ','
        << format_double(chain.c0[k]) << ',' << format_double(chain.b[k]);
    for (double w : chain.draw_weights(k)) out << ',' << format_double(w);
    out << '\n';
  }
  check_write(out, path);
}

PosteriorChain read_chain_csv(const std::filesystem::path &path, double window_end) {
  const Table t = read_table(path);
  if (t.header.size() < 5 || t.header[0] != "iteration" || t.header[1] != "theta" ||
      t.header[2] != "c0" || t.header[3] != "b") {
    throw IoError(path, "chain header must start with iteration,theta,c0,b,w1");
  }
  PosteriorChain c;
  c.J = static_cast<int>(t.header.size()) - 4;
  for (int j = 1; j <= c.J; ++j) {
    if (t.header[3 + j] != "w" + std::to_string(j)) {
      throw IoError(path, "unexpected column '" + t.header[3 + j] + "'");
    }
  }
  c.window_end = window_end;
  for (const auto &r : t.rows) {
    c.iteration.push_back(static_cast<long>(r[0]));
    c.theta.push_back(r[1]);
    c.c0.push_back(r[2]);
    c.b.push_back(r[3]);
    c.weights.insert(c.weights.end(), r.begin() + 4, r.end());
  }
  return c;
}

void write_spatial_chain_csv(const std::filesystem::path &path, const SpatialChain &chain) {
  auto out = open_out(path);
  out << "iteration,theta1,theta2,c0,b";
  for (int r = 1; r <= chain.J; ++r)
    for (int c = 1; c <= chain.J; ++c) out << ",w" << r << '_' << c;
  out << '\n';
  for (std::size_t k = 0; k < chain.size(); ++k) {
    out << chain.iteration[k] << ',' << format_double(chain.theta1[k]) << ','
        << format_double(chain.theta2[k]) << ',' << format_double(chain.c0[k]) << ','
        << format_double(chain.b[k]);
    for (double w : chain.draw_weights(k)) out << ',' << format_double(w);
    out << '\n';
  }
  check_write(out, path);
}

SpatialChain read_spatial_chain_csv(const std::filesystem::path &path) {
  const Table t = read_table(path);
  if (t.header.size() < 6 || t.header[0] != "iteration" || t.header[1] != "theta1" ||
      t.header[2] != "theta2" || t.header[3] != "c0" || t.header[4] != "b") {
    throw IoError(path, "spatial chain header must start with iteration,theta1,theta2,c0,b,w1_1");
  }
  const std::size_t cells = t.header.size() - 5;
  const int J = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cells))));
  if (static_cast<std::size_t>(J) * J != cells) {
    throw IoError(path, "number of weight columns is not a perfect square");
  }
  SpatialChain c;
  c.J = J;
  for (const auto &r : t.rows) {
    c.iteration.push_back(static_cast<long>(r[0]));
    c.theta1.push_back(r[1]);
    c.theta2.push_back(r[2]);
    c.c0.push_back(r[3]);
    c.b.push_back(r[4]);
    c.weights.insert(c.weights.end(), r.begin() + 5, r.end());
  }
  return c;
}

void write_summary_csv(const std::filesystem::path &path, const IntensitySummary &s,
                       const std::string &grid_name) {
  auto out = open_out(path);
  out << grid_name << ",mean,lower,upper\n";
  for (std::size_t g = 0; g < s.grid.size(); ++g) {
    out << format_double(s.grid[g]) << ',' << format_double(s.mean[g]) << ','
        << format_double(s.lower[g]) << ',' << format_double(s.upper[g]) << '\n';
  }
  check_write(out, path);
}

void write_qq_csv(const std::filesystem::path &path, const QqSummary &qq) {
  auto out = open_out(path);
  out << "position,mean,lower,upper\n";
  for (std::size_t i = 0; i < qq.position.size(); ++i) {
    out << format_double(qq.position[i]) << ',' << format_double(qq.mean[i]) << ','
        << format_double(qq.lower[i]) << ',' << format_double(qq.upper[i]) << '\n';
  }
  check_write(out, path);
}

void write_weight_csv(const std::filesystem::path &path, const WeightSummary &w) {
  auto out = open_out(path);
  out << "j,mean,lower,upper\n";
  for (std::size_t j = 0; j < w.mean.size(); ++j) {
    out << j + 1 << ',' << format_double(w.mean[j]) << ',' << format_double(w.lower[j]) << ','
        << format_double(w.upper[j]) << '\n';
  }
  check_write(out, path);
}

void write_surface_csv(const std::filesystem::path &path, const SurfaceSummary &s) {
  auto out = open_out(path);
  out << "s1,s2,mean,lower,upper,iqr\n";
  for (std::size_t i = 0; i < s.grid1.size(); ++i) {
    for (std::size_t j = 0; j < s.grid2.size(); ++j) {
      const std::size_t k = i * s.grid2.size() + j;
      out << format_double(s.grid1[i]) << ',' << format_double(s.grid2[j]) << ','
          << format_double(s.mean[k]) << ',' << format_double(s.lower[k]) << ','
          << format_double(s.upper[k]) << ',' << format_double(s.iqr[k]) << '\n';
    }
  }
  check_write(out, path);
}

}  // namespace erlmix
