#include "relaxbsde/bsde.hpp"

#include <cmath>
#include <string>

#include "relaxbsde/averaging.hpp"
#include "relaxbsde/error.hpp"
#include "relaxbsde/parallel.hpp"

namespace relaxbsde {
namespace {

void check_shapes(const ProblemSpec& spec, const RelaxedControlSchedule& control, const PathBundle& paths) {
  require_well_formed(spec);
  if (control.steps() != static_cast<std::size_t>(spec.time.steps))
    throw ConfigError("control has " + std::to_string(control.steps()) + " rows but the time grid has " +
                      std::to_string(spec.time.steps) + " steps");
  if (control.grid_size() != spec.grid.size())
    throw ConfigError("control has " + std::to_string(control.grid_size()) + " columns but the grid has " +
                      std::to_string(spec.grid.size()) + " points");
  if (!(paths.time() == spec.time)) throw ConfigError("path bundle was generated on a different time grid");
  if (paths.dim() != spec.d) throw ConfigError("path bundle Brownian dimension does not match the problem");
}

void require_finite(std::span<const double> v, const char* what, std::size_t path, int step) {
  for (double x : v)
    if (!std::isfinite(x))
      throw SolverError(std::string("non-finite ") + what + " at path " + std::to_string(path) + ", step " +
                        std::to_string(step));
}

/// One regression step shared by the primal and variational sweeps:
/// fills y_hat (N x n) and z (N x n*d) from the next-step values y_next.
void project_step(StepRegression& reg, const PathBundle& paths, int k, int n, int d,
                  std::span<const double> y_next, std::vector<double>& y_hat, std::vector<double>& z) {
  const std::size_t N = paths.size();
  const std::size_t zs = static_cast<std::size_t>(n) * d;
  y_hat.resize(N * n);
  reg.fit(y_next, n, y_hat);

  std::vector<double> ztarget(N * zs);
  parallel_for(N, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t p = b; p < e; ++p)
      for (int i = 0; i < n; ++i) {
        const double r = y_next[p * n + i] - y_hat[p * n + i];
        for (int l = 0; l < d; ++l) ztarget[p * zs + i * d + l] = r * paths.increment(p, k, l);
      }
  });
  z.resize(N * zs);
  reg.fit(ztarget, zs, z);
  const double inv_dt = 1.0 / paths.dt();
  for (double& v : z) v *= inv_dt;
}

}  // namespace

TrajectoryBundle solve_bsde(const ProblemSpec& spec, const RelaxedControlSchedule& control,
                            const PathBundle& paths, const RegressionBasis& basis) {
  check_shapes(spec, control, paths);
  const std::size_t N = paths.size();
  const int K = spec.time.steps;
  const int n = spec.n;
  const int d = spec.d;
  const std::size_t zs = spec.z_size();
  const double dt = spec.time.dt();

  TrajectoryBundle out{N, K, n, d, {}, {}, control, std::vector<double>(K, 1.0), std::vector<double>(K, 0.0)};
  out.y.assign(static_cast<std::size_t>(K + 1) * N * n, 0.0);
  out.z.assign(static_cast<std::size_t>(K) * N * zs, 0.0);

  double* yK = out.y.data() + static_cast<std::size_t>(K) * N * n;
  parallel_for(N, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t p = b; p < e; ++p) {
      std::span<double> dst(yK + p * n, n);
      spec.terminal_condition(paths.path(p), dst);
      require_finite(dst, "terminal condition", p, K);
    }
  });

  std::vector<double> y_hat, z;
  for (int k = K - 1; k >= 0; --k) {
    StepRegression reg(paths, k, basis);
    std::span<const double> y_next(out.y.data() + static_cast<std::size_t>(k + 1) * N * n, N * n);
    project_step(reg, paths, k, n, d, y_next, y_hat, z);
    out.condition[k] = reg.condition();

    const double t = spec.time.node(k);
    const auto row = control.row(k);
    double* yk = out.y.data() + static_cast<std::size_t>(k) * N * n;
    double* zk = out.z.data() + static_cast<std::size_t>(k) * N * zs;
    parallel_for(N, [&](std::size_t b, std::size_t e, std::size_t) {
      AveragingScratch scratch;
      std::vector<double> drift(n);
      for (std::size_t p = b; p < e; ++p) {
        std::span<const double> yh(y_hat.data() + p * n, n);
        std::span<const double> zp(z.data() + p * zs, zs);
        averaged_drift(spec, t, yh, zp, row, drift, scratch);
        require_finite(drift, "drift", p, k);
        for (int i = 0; i < n; ++i) yk[p * n + i] = yh[i] - drift[i] * dt;
        for (std::size_t i = 0; i < zs; ++i) zk[p * zs + i] = zp[i];
      }
    });

    // Residual of the continuation projection, for diagnostics.
    std::vector<double> sq(chunk_count(N), 0.0);
    parallel_for(N, [&](std::size_t b, std::size_t e, std::size_t c) {
      double s = 0.0;
      for (std::size_t i = b * n; i < e * n; ++i) {
        const double r = y_next[i] - y_hat[i];
        s += r * r;
      }
      sq[c] = s;
    });
    out.residual_rms[k] = std::sqrt(ordered_sum(sq) / static_cast<double>(N));
  }
  return out;
}

TrajectoryBundle solve_bsde(const ProblemSpec& spec, const StrictControlSchedule& control,
                            const PathBundle& paths, const RegressionBasis& basis) {
  return solve_bsde(spec, dirac_embed(control), paths, basis);
}

std::vector<double> path_costs(const ProblemSpec& spec, const RelaxedControlSchedule& control,
                               const TrajectoryBundle& traj) {
  const std::size_t N = traj.paths;
  const int K = traj.steps;
  const double dt = spec.time.dt();
  if (control.steps() != static_cast<std::size_t>(K)) throw ConfigError("control does not match trajectory");
  std::vector<double> cost(N);
  parallel_for(N, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t p = b; p < e; ++p) {
      double running = 0.0;
      for (int k = 0; k < K; ++k)
        running += averaged_running_cost(spec, spec.time.node(k), traj.y_at(p, k), traj.z_at(p, k), control.row(k)) * dt;
      const double c = spec.terminal_cost(traj.y_at(p, 0)) + running;
      if (!std::isfinite(c)) throw SolverError("non-finite cost on path " + std::to_string(p));
      cost[p] = c;
    }
  });
  return cost;
}

CostEstimate evaluate_cost(const ProblemSpec& spec, const RelaxedControlSchedule& control,
                           const TrajectoryBundle& traj) {
  const auto costs = path_costs(spec, control, traj);
  const auto s = mean_and_std_error(costs);
  return {s.mean, s.std_error, traj.paths};
}

VariationalBundle solve_variational_bsde(const ProblemSpec& spec, const RelaxedControlSchedule& mu,
                                         const RelaxedControlSchedule& q, const TrajectoryBundle& traj,
                                         const PathBundle& paths, const RegressionBasis& basis) {
  check_shapes(spec, mu, paths);
  check_shapes(spec, q, paths);
  if (traj.paths != paths.size() || traj.steps != spec.time.steps)
    throw ConfigError("trajectory does not match the path bundle");
  const std::size_t N = paths.size();
  const int K = spec.time.steps;
  const int n = spec.n;
  const int d = spec.d;
  const std::size_t zs = spec.z_size();
  const double dt = spec.time.dt();

  VariationalBundle out{N, K, n, d, {}, {}};
  out.y.assign(static_cast<std::size_t>(K + 1) * N * n, 0.0);
  out.z.assign(static_cast<std::size_t>(K) * N * zs, 0.0);

  std::vector<double> y_hat, z;
  for (int k = K - 1; k >= 0; --k) {
    StepRegression reg(paths, k, basis);
    std::span<const double> y_next(out.y.data() + static_cast<std::size_t>(k + 1) * N * n, N * n);
    project_step(reg, paths, k, n, d, y_next, y_hat, z);

    const double t = spec.time.node(k);
    const auto row_mu = mu.row(k);
    const auto row_q = q.row(k);
    double* yk = out.y.data() + static_cast<std::size_t>(k) * N * n;
    double* zk = out.z.data() + static_cast<std::size_t>(k) * N * zs;
    parallel_for(N, [&](std::size_t b, std::size_t e, std::size_t) {
      AveragingScratch scratch;
      std::vector<double> by(n * n), bz(n * zs), bq(n), bmu(n);
      for (std::size_t p = b; p < e; ++p) {
        const auto y0 = traj.y_at(p, k);
        const auto z0 = traj.z_at(p, k);
        averaged_gradient(spec, [](const ProblemSpec& s, double tt, Vec yy, Vec zz, Vec a, OutVec o) { s.b_y(tt, yy, zz, a, o); },
                          t, y0, z0, row_mu, by, scratch);
        averaged_gradient(spec, [](const ProblemSpec& s, double tt, Vec yy, Vec zz, Vec a, OutVec o) { s.b_z(tt, yy, zz, a, o); },
                          t, y0, z0, row_mu, bz, scratch);
        averaged_drift(spec, t, y0, z0, row_q, bq, scratch);
        averaged_drift(spec, t, y0, z0, row_mu, bmu, scratch);
        const double* yh = y_hat.data() + p * n;
        const double* zp = z.data() + p * zs;
        for (int i = 0; i < n; ++i) {
          double drift = bq[i] - bmu[i];
          for (int j = 0; j < n; ++j) drift += by[i * n + j] * yh[j];
          for (std::size_t j = 0; j < zs; ++j) drift += bz[i * zs + j] * zp[j];
          yk[p * n + i] = yh[i] - drift * dt;
        }
        for (std::size_t i = 0; i < zs; ++i) zk[p * zs + i] = zp[i];
        require_finite(std::span<const double>(yk + p * n, n), "variational state", p, k);
      }
    });
  }
  return out;
}

}  // namespace relaxbsde
