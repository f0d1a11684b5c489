#ifndef PMCMC_IO_HPP
#define PMCMC_IO_HPP

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmcmc/model.hpp"
#include "pmcmc/particle_system.hpp"
#include "pmcmc/samplers.hpp"

namespace pmcmc {

// %.17g: shortest text that reparses to the identical double, so written
// files are byte-deterministic and recomputation from them is exact.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

inline double parse_double(const std::string& cell, const std::string& path) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str()) {
    throw std::runtime_error("bad numeric cell '" + cell + "' in " + path);
  }
  return v;
}

}  // namespace detail

// Dataset schema: n, x_true, y with n starting at 1.
inline void write_dataset_csv(const std::string& path,
                              const SimulatedData& data) {
  auto out = detail::open_output(path);
  out << "n,x_true,y\n";
  for (std::size_t n = 0; n < data.y.size(); ++n) {
    out << (n + 1) << ',' << format_double(data.x[n]) << ','
        << format_double(data.y[n]) << '\n';
  }
}

inline SimulatedData read_dataset_csv(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("n,x_true,y", 0) != 0) {
    throw std::runtime_error("dataset header must be 'n,x_true,y': " + path);
  }
  SimulatedData data;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 3) {
      throw std::runtime_error("dataset row needs 3 cells: " + path);
    }
    data.x.push_back(detail::parse_double(cells[1], path));
    data.y.push_back(detail::parse_double(cells[2], path));
  }
  if (data.y.empty()) throw std::runtime_error("empty dataset: " + path);
  return data;
}

// Chain schema: iter, accepted, log_ml, log_prior, theta_1..theta_d, then
// path_1..path_T. Path cells are filled only on iterations where a (thinned)
// path was stored and are empty otherwise.
inline void write_chain_csv(const std::string& path, const ChainOutput& out) {
  auto f = detail::open_output(path);
  f << "iter,accepted,log_ml,log_prior";
  for (std::size_t i = 1; i <= out.theta_dim; ++i) f << ",theta_" << i;
  for (std::size_t n = 1; n <= out.path_len; ++n) f << ",path_" << n;
  f << '\n';
  std::size_t next_path = 0;
  for (std::size_t iter = 1; iter <= out.n_iters; ++iter) {
    const std::size_t row = iter - 1;
    f << iter << ',' << static_cast<int>(out.accept_flags[row]) << ','
      << format_double(out.log_mls[row]) << ','
      << format_double(out.log_priors[row]);
    for (std::size_t i = 0; i < out.theta_dim; ++i) {
      f << ',' << format_double(out.theta_at(row, i));
    }
    const bool has_path = next_path < out.path_iters.size() &&
                          out.path_iters[next_path] == iter;
    if (has_path) {
      const auto p = out.path_row(next_path);
      for (double v : p) f << ',' << format_double(v);
      ++next_path;
    } else {
      for (std::size_t n = 0; n < out.path_len; ++n) f << ',';
    }
    f << '\n';
  }
}

// What diagnose can recover from a chain CSV. Paths exist only for rows
// stored by thinning; freeze detection from a CSV therefore rests on theta
// equality alone.
struct ChainCsv {
  std::size_t n_iters = 0;
  std::size_t theta_dim = 0;
  std::size_t path_len = 0;
  std::vector<double> thetas;
  std::vector<double> log_mls;
  std::vector<double> log_priors;
  std::vector<std::uint8_t> accept_flags;
  std::vector<std::size_t> path_iters;
  std::vector<double> paths;
};

inline ChainCsv read_chain_csv(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty chain file: " + path);
  }
  const auto header = detail::split_csv_line(line);
  if (header.size() < 5 || header[0] != "iter" || header[1] != "accepted" ||
      header[2] != "log_ml" || header[3] != "log_prior") {
    throw std::runtime_error("unrecognized chain header in " + path);
  }
  ChainCsv c;
  std::size_t col = 4;
  while (col < header.size() && header[col].rfind("theta_", 0) == 0) {
    ++c.theta_dim;
    ++col;
  }
  while (col < header.size() && header[col].rfind("path_", 0) == 0) {
    ++c.path_len;
    ++col;
  }
  if (c.theta_dim == 0 || col != header.size()) {
    throw std::runtime_error("unrecognized chain header in " + path);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("chain row width mismatch in " + path);
    }
    ++c.n_iters;
    c.accept_flags.push_back(
        static_cast<std::uint8_t>(detail::parse_double(cells[1], path)));
    c.log_mls.push_back(detail::parse_double(cells[2], path));
    c.log_priors.push_back(detail::parse_double(cells[3], path));
    for (std::size_t i = 0; i < c.theta_dim; ++i) {
      c.thetas.push_back(detail::parse_double(cells[4 + i], path));
    }
    if (c.path_len > 0 && !cells[4 + c.theta_dim].empty()) {
      c.path_iters.push_back(c.n_iters);
      for (std::size_t n = 0; n < c.path_len; ++n) {
        c.paths.push_back(
            detail::parse_double(cells[4 + c.theta_dim + n], path));
      }
    }
  }
  return c;
}

// Particle trace schema: n, k, x, weight, ancestor. n and k are 1-based;
// weight is the unnormalized corrected incremental weight in log space
// (normalized weights would not let the marginal-likelihood product be
// recomputed, and linear weights would not survive long sweeps). ancestor
// is 0 on the first step, which has none.
inline void write_trace_csv(const std::string& path,
                            const ParticleSystem& ps) {
  auto f = detail::open_output(path);
  f << "n,k,x,weight,ancestor\n";
  const std::size_t written_steps =
      ps.collapsed() ? static_cast<std::size_t>(ps.collapsed_at) + 1
                     : ps.n_steps;
  for (std::size_t n = 0; n < written_steps; ++n) {
    for (std::size_t k = 0; k < ps.n_particles; ++k) {
      f << (n + 1) << ',' << (k + 1) << ','
        << format_double(ps.particle(n, k)) << ','
        << format_double(ps.log_weight(n, k)) << ','
        << (n == 0 ? 0 : ps.ancestor(n, k) + 1) << '\n';
    }
  }
}

struct TraceCsv {
  std::size_t n_steps = 0;
  std::size_t n_particles = 0;
  std::vector<double> particles;
  std::vector<double> log_weights;
  std::vector<std::size_t> ancestors;  // 0 on the first step
};

inline TraceCsv read_trace_csv(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("n,k,x,weight,ancestor", 0) != 0) {
    throw std::runtime_error("unrecognized trace header in " + path);
  }
  TraceCsv t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 5) {
      throw std::runtime_error("trace row needs 5 cells: " + path);
    }
    const auto n = static_cast<std::size_t>(detail::parse_double(cells[0], path));
    const auto k = static_cast<std::size_t>(detail::parse_double(cells[1], path));
    t.n_steps = std::max(t.n_steps, n);
    t.n_particles = std::max(t.n_particles, k);
    t.particles.push_back(detail::parse_double(cells[2], path));
    t.log_weights.push_back(detail::parse_double(cells[3], path));
    t.ancestors.push_back(
        static_cast<std::size_t>(detail::parse_double(cells[4], path)));
  }
  if (t.particles.size() != t.n_steps * t.n_particles) {
    throw std::runtime_error("trace is not a full grid: " + path);
  }
  return t;
}

}  // namespace pmcmc

#endif
