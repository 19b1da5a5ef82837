#include "relaxbsde/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "relaxbsde/adjoint.hpp"
#include "relaxbsde/averaging.hpp"
#include "relaxbsde/error.hpp"
#include "relaxbsde/parallel.hpp"

namespace relaxbsde {
namespace {

void require_simplex(Vec q_row, std::size_t m) {
  if (q_row.size() != m) throw ConfigError("control row has the wrong number of weights");
  double s = 0.0;
  for (double w : q_row) {
    if (!(w >= 0.0)) throw ConfigError("control row has a negative weight");
    s += w;
  }
  if (std::fabs(s - 1.0) > kRenormalizeTol) throw ConfigError("control row does not sum to 1");
}

void check_bundles(const TrajectoryBundle& traj, const AdjointBundle& adj) {
  if (traj.paths != adj.paths || traj.steps != adj.steps || traj.n != adj.n)
    throw ConfigError("trajectory and adjoint bundles do not match");
}

/// Strict Hamiltonian at every grid point for every path at step k: out is N x m.
void hamiltonians_at_step(const ProblemSpec& spec, const TrajectoryBundle& traj, const AdjointBundle& adj, int k,
                          std::vector<double>& out) {
  const std::size_t N = traj.paths;
  const std::size_t m = spec.grid.size();
  out.resize(N * m);
  const double t = spec.time.node(k);
  parallel_for(N, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t p = b; p < e; ++p)
      for (std::size_t j = 0; j < m; ++j)
        out[p * m + j] = strict_hamiltonian(spec, t, traj.y_at(p, k), traj.z_at(p, k), adj.p_at(p, k), spec.grid.point(j));
  });
}

/// Column means of an N x m matrix, chunk-ordered.
std::vector<double> column_means(const std::vector<double>& values, std::size_t N, std::size_t m) {
  std::vector<std::vector<double>> partial(chunk_count(N), std::vector<double>(m, 0.0));
  parallel_for(N, [&](std::size_t b, std::size_t e, std::size_t c) {
    auto& acc = partial[c];
    for (std::size_t p = b; p < e; ++p)
      for (std::size_t j = 0; j < m; ++j) acc[j] += values[p * m + j];
  });
  std::vector<double> mean(m, 0.0);
  for (const auto& acc : partial)
    for (std::size_t j = 0; j < m; ++j) mean[j] += acc[j];
  for (auto& v : mean) v /= static_cast<double>(N);
  return mean;
}

std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < v.size(); ++j)
    if (v[j] > v[best]) best = j;
  return best;
}

}  // namespace

double strict_hamiltonian(const ProblemSpec& spec, double t, Vec y, Vec z, Vec p, Vec a) {
  thread_local std::vector<double> b;
  b.resize(spec.n);
  spec.drift(t, y, z, a, b);
  double pb = 0.0;
  for (int i = 0; i < spec.n; ++i) pb += p[i] * b[i];
  const double h = pb - spec.running_cost(t, y, z, a);
  if (!std::isfinite(h)) throw SolverError("non-finite Hamiltonian at t = " + std::to_string(t));
  return h;
}

double relaxed_hamiltonian(const ProblemSpec& spec, double t, Vec y, Vec z, Vec p, Vec q_row) {
  require_simplex(q_row, spec.grid.size());
  double acc = 0.0;
  bool first = true;
  for (std::size_t j = 0; j < q_row.size(); ++j) {
    if (q_row[j] == 0.0) continue;
    const double v = q_row[j] * strict_hamiltonian(spec, t, y, z, p, spec.grid.point(j));
    acc = first ? v : acc + v;
    first = false;
  }
  return acc;
}

void relaxed_hamiltonian_gradients(const ProblemSpec& spec, double t, Vec y, Vec z, Vec p, Vec q_row,
                                   OutVec h_y, OutVec h_z) {
  const int n = spec.n;
  const std::size_t zs = spec.z_size();
  thread_local AveragingScratch scratch;
  thread_local std::vector<double> by, bz, hy, hz;
  by.resize(static_cast<std::size_t>(n) * n);
  bz.resize(n * zs);
  hy.resize(n);
  hz.resize(zs);
  auto acc_by = [](const ProblemSpec& s, double tt, Vec yy, Vec zz, Vec a, OutVec o) { s.b_y(tt, yy, zz, a, o); };
  auto acc_bz = [](const ProblemSpec& s, double tt, Vec yy, Vec zz, Vec a, OutVec o) { s.b_z(tt, yy, zz, a, o); };
  auto acc_hy = [](const ProblemSpec& s, double tt, Vec yy, Vec zz, Vec a, OutVec o) { s.h_y(tt, yy, zz, a, o); };
  auto acc_hz = [](const ProblemSpec& s, double tt, Vec yy, Vec zz, Vec a, OutVec o) { s.h_z(tt, yy, zz, a, o); };
  averaged_gradient(spec, acc_by, t, y, z, q_row, by, scratch);
  averaged_gradient(spec, acc_bz, t, y, z, q_row, bz, scratch);
  averaged_gradient(spec, acc_hy, t, y, z, q_row, hy, scratch);
  averaged_gradient(spec, acc_hz, t, y, z, q_row, hz, scratch);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += p[i] * by[i * n + j];
    h_y[j] = s - hy[j];
  }
  for (std::size_t jl = 0; jl < zs; ++jl) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += p[i] * bz[i * zs + jl];
    h_z[jl] = s - hz[jl];
  }
}

std::vector<double> mean_hamiltonians(const ProblemSpec& spec, const TrajectoryBundle& traj,
                                      const AdjointBundle& adj) {
  check_bundles(traj, adj);
  const std::size_t m = spec.grid.size();
  std::vector<double> out(static_cast<std::size_t>(traj.steps) * m);
  std::vector<double> h;
  for (int k = 0; k < traj.steps; ++k) {
    hamiltonians_at_step(spec, traj, adj, k, h);
    const auto mean = column_means(h, traj.paths, m);
    std::copy(mean.begin(), mean.end(), out.begin() + static_cast<std::ptrdiff_t>(k * m));
  }
  return out;
}

std::vector<double> mean_relaxed_hamiltonians(const ProblemSpec& spec, const RelaxedControlSchedule& q,
                                              const TrajectoryBundle& traj, const AdjointBundle& adj) {
  const std::size_t m = spec.grid.size();
  const auto g = mean_hamiltonians(spec, traj, adj);
  std::vector<double> out(traj.steps);
  for (int k = 0; k < traj.steps; ++k) {
    double acc = 0.0;
    bool first = true;
    for (std::size_t j = 0; j < m; ++j) {
      if (q.row(k)[j] == 0.0) continue;
      const double v = q.row(k)[j] * g[k * m + j];
      acc = first ? v : acc + v;
      first = false;
    }
    out[k] = acc;
  }
  return out;
}

RelaxedControlSchedule best_response(const ProblemSpec& spec, const TrajectoryBundle& traj,
                                     const AdjointBundle& adj) {
  const std::size_t m = spec.grid.size();
  const auto g = mean_hamiltonians(spec, traj, adj);
  std::vector<std::size_t> idx(traj.steps);
  for (int k = 0; k < traj.steps; ++k) idx[k] = argmax_lowest({g.data() + k * m, m});
  return dirac_embed(StrictControlSchedule(std::move(idx), m));
}

GapReport hamiltonian_gap(const ProblemSpec& spec, const RelaxedControlSchedule& mu,
                          const TrajectoryBundle& traj, const AdjointBundle& adj) {
  check_bundles(traj, adj);
  const std::size_t N = traj.paths;
  const int K = traj.steps;
  const std::size_t m = spec.grid.size();
  if (mu.steps() != static_cast<std::size_t>(K) || mu.grid_size() != m)
    throw ConfigError("control does not match the trajectory");
  const double dt = spec.time.dt();

  GapReport rep;
  rep.dt = dt;
  rep.per_step_gap.assign(K, 0.0);
  rep.argmax_indices.assign(K, 0);
  std::vector<double> per_path(N, 0.0);
  std::vector<double> h;
  double scale = 0.0;
  for (int k = 0; k < K; ++k) {
    hamiltonians_at_step(spec, traj, adj, k, h);
    const auto g = column_means(h, N, m);
    const std::size_t best = argmax_lowest(g);
    rep.argmax_indices[k] = best;
    const auto row = mu.row(k);
    double gap = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      gap += row[j] * (g[best] - g[j]);
      scale = std::max(scale, std::fabs(g[j]));
    }
    rep.per_step_gap[k] = gap;
    parallel_for(N, [&](std::size_t b, std::size_t e, std::size_t) {
      for (std::size_t p = b; p < e; ++p) {
        double v = 0.0;
        for (std::size_t j = 0; j < m; ++j) v += row[j] * (h[p * m + best] - h[p * m + j]);
        per_path[p] += v * dt;
      }
    });
  }
  for (int k = 0; k < K; ++k) rep.total_gap += rep.per_step_gap[k] * dt;
  rep.eps_num = 64.0 * std::numeric_limits<double>::epsilon() * scale;
  rep.std_error = mean_and_std_error(per_path).std_error;
  return rep;
}

}  // namespace relaxbsde
