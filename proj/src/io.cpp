#include "relaxbsde/io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "relaxbsde/error.hpp"

namespace relaxbsde::io {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_schedule_csv(std::ostream& os, const RelaxedControlSchedule& s) {
  for (std::size_t j = 0; j < s.grid_size(); ++j) os << (j ? "," : "") << 'w' << j;
  os << '\n';
  for (std::size_t k = 0; k < s.steps(); ++k) {
    const auto row = s.row(k);
    for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << format_double(row[j]);
    os << '\n';
  }
}

void write_schedule_csv(std::ostream& os, const StrictControlSchedule& s) {
  os << "index\n";
  for (std::size_t k = 0; k < s.steps(); ++k) os << s[k] << '\n';
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && s[b] == ' ') ++b;
  return s.substr(b);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("schedule CSV: cannot parse number '" + s + "'");
  return v;
}

}  // namespace

AnySchedule read_schedule_csv(std::istream& is, std::size_t grid_size) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("schedule CSV is empty");
  const auto header = split(strip(line));
  if (header.size() == 1 && strip(header[0]) == "index") {
    std::vector<std::size_t> idx;
    while (std::getline(is, line)) {
      line = strip(line);
      if (line.empty()) continue;
      const double v = parse_double(line);
      if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw ConfigError("schedule CSV: index '" + line + "' is not a non-negative integer");
      idx.push_back(static_cast<std::size_t>(v));
    }
    return StrictControlSchedule(std::move(idx), grid_size);
  }
  for (std::size_t j = 0; j < header.size(); ++j)
    if (strip(header[j]) != "w" + std::to_string(j))
      throw ConfigError("schedule CSV: expected header w0,...,w{m-1} or index");
  const std::size_t m = header.size();
  std::vector<double> w;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    line = strip(line);
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != m) throw ConfigError("schedule CSV: row " + std::to_string(rows) + " has the wrong width");
    for (const auto& c : cells) w.push_back(parse_double(strip(c)));
    ++rows;
  }
  return RelaxedControlSchedule(rows, m, std::move(w));
}

void write_paths_csv(std::ostream& os, const PathBundle& paths) {
  os << "path,step";
  for (int c = 0; c < paths.dim(); ++c) os << ",dW_" << c;
  os << '\n';
  for (std::size_t p = 0; p < paths.size(); ++p)
    for (int k = 0; k < paths.steps(); ++k) {
      os << p << ',' << k;
      for (int c = 0; c < paths.dim(); ++c) os << ',' << format_double(paths.increment(p, k, c));
      os << '\n';
    }
}

void write_trajectory_csv(std::ostream& os, const TrajectoryBundle& traj) {
  os << "path,step";
  for (int i = 0; i < traj.n; ++i) os << ",y_" << i;
  for (int i = 0; i < traj.n; ++i)
    for (int l = 0; l < traj.d; ++l) os << ",z_" << i << l;
  os << '\n';
  const std::size_t zs = static_cast<std::size_t>(traj.n) * traj.d;
  for (std::size_t p = 0; p < traj.paths; ++p)
    for (int k = 0; k <= traj.steps; ++k) {
      os << p << ',' << k;
      for (double v : traj.y_at(p, k)) os << ',' << format_double(v);
      if (k < traj.steps) {
        for (double v : traj.z_at(p, k)) os << ',' << format_double(v);
      } else {
        for (std::size_t i = 0; i < zs; ++i) os << ',';
      }
      os << '\n';
    }
}

void write_adjoint_csv(std::ostream& os, const AdjointBundle& adj) {
  os << "path,step";
  for (int i = 0; i < adj.n; ++i) os << ",p_" << i;
  os << '\n';
  for (std::size_t p = 0; p < adj.paths; ++p)
    for (int k = 0; k <= adj.steps; ++k) {
      os << p << ',' << k;
      for (double v : adj.p_at(p, k)) os << ',' << format_double(v);
      os << '\n';
    }
}

void write_iterations_csv(std::ostream& os, const std::vector<IterationRecord>& log) {
  os << "iter,cost,cost_se,gap,theta\n";
  for (const auto& r : log)
    os << r.iter << ',' << format_double(r.cost) << ',' << format_double(r.cost_se) << ','
       << format_double(r.gap) << ',' << format_double(r.theta) << '\n';
}

void write_chatter_csv(std::ostream& os, const std::vector<ChatterResult>& results) {
  os << "r,J_strict,J_strict_se,J_relaxed,J_relaxed_se,abs_gap\n";
  for (const auto& r : results)
    os << r.refinement << ',' << format_double(r.j_strict.mean) << ',' << format_double(r.j_strict.std_error) << ','
       << format_double(r.j_relaxed.mean) << ',' << format_double(r.j_relaxed.std_error) << ','
       << format_double(r.abs_gap) << '\n';
}

nlohmann::json to_json(const GapReport& gap) {
  return {{"total_gap", gap.total_gap},
          {"per_step", gap.per_step_gap},
          {"argmax", gap.argmax_indices},
          {"std_error", gap.std_error},
          {"eps_num", gap.eps_num}};
}

nlohmann::json to_json(const CostEstimate& cost) {
  return {{"mean", cost.mean}, {"std_error", cost.std_error}, {"paths", cost.paths}};
}

nlohmann::json to_json(const Certificate& cert) {
  nlohmann::json worst = nlohmann::json::array();
  for (const auto& [step, g] : cert.worst_steps) worst.push_back({{"step", step}, {"gap", g}});
  return {{"kind", to_string(cert.kind)},
          {"total_gap", cert.total_gap},
          {"gap_std_error", cert.gap_std_error},
          {"tol", cert.tol},
          {"verdict", cert.passed ? "pass" : "fail"},
          {"worst_steps", worst},
          {"cost", to_json(cert.cost)},
          {"gap", to_json(cert.gap)}};
}

nlohmann::json to_json(const ConvexityReport& rep) {
  return {{"g_convex_passed", rep.g_convex_passed},
          {"g_convex_total", rep.g_convex_total},
          {"h_concave_passed", rep.h_concave_passed},
          {"h_concave_total", rep.h_concave_total},
          {"probe_seed", rep.probe_seed},
          {"worst_violation", rep.worst_violation}};
}

}  // namespace relaxbsde::io
