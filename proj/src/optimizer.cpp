#include "relaxbsde/optimizer.hpp"

#include <cmath>

#include "relaxbsde/adjoint.hpp"
#include "relaxbsde/averaging.hpp"
#include "relaxbsde/error.hpp"
#include "relaxbsde/parallel.hpp"

namespace relaxbsde {

std::string to_string(StepRule rule) { return rule == StepRule::kHarmonic ? "harmonic" : "backtracking"; }

StepRule parse_step_rule(const std::string& s) {
  if (s == "backtracking") return StepRule::kBacktracking;
  if (s == "harmonic") return StepRule::kHarmonic;
  throw ConfigError("unknown step rule '" + s + "' (expected backtracking or harmonic)");
}

namespace {

struct Evaluated {
  RelaxedControlSchedule mu;
  TrajectoryBundle traj;
  CostEstimate cost;
};

Evaluated evaluate(const ProblemSpec& spec, RelaxedControlSchedule mu, const PathBundle& paths,
                   const RegressionBasis& basis, std::size_t& solves) {
  auto traj = solve_bsde(spec, mu, paths, basis);
  ++solves;
  auto cost = evaluate_cost(spec, mu, traj);
  return {std::move(mu), std::move(traj), cost};
}

}  // namespace

OptimizationResult optimize(const ProblemSpec& spec, const RelaxedControlSchedule& init,
                            const OptimizerOptions& opts) {
  if (opts.max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (!(opts.gap_tol > 0.0)) throw ConfigError("gap_tol must be positive");
  if (!(opts.shrink > 0.0 && opts.shrink < 1.0)) throw ConfigError("backtracking shrink must lie in (0, 1)");
  if (opts.max_trials < 1) throw ConfigError("backtracking needs at least one trial");

  const auto paths = generate_paths(opts.paths.seed, opts.paths.paths, spec.time, spec.d);
  const auto& basis = opts.paths.basis;

  OptimizationResult result{init, {}, false, 0, {}, {}};
  Evaluated cur = evaluate(spec, init, paths, basis, result.bsde_solves);
  double theta_used = 0.0;

  for (int iter = 0;; ++iter) {
    const auto adj = solve_adjoint(spec, cur.mu, cur.traj, paths);
    const auto gap = hamiltonian_gap(spec, cur.mu, cur.traj, adj);
    result.log.push_back({iter, cur.cost.mean, cur.cost.std_error, gap.total_gap, theta_used});
    result.schedule = cur.mu;
    result.final_gap = gap;
    result.final_cost = cur.cost;

    if (gap.total_gap <= opts.gap_tol) {
      result.converged = true;
      break;
    }
    if (iter >= opts.max_iters) break;

    const auto q = dirac_embed(StrictControlSchedule(gap.argmax_indices, spec.grid.size()));
    if (opts.step_rule == StepRule::kHarmonic) {
      theta_used = 2.0 / (iter + 2.0);
      cur = evaluate(spec, mix(cur.mu, q, theta_used), paths, basis, result.bsde_solves);
      continue;
    }

    double theta = 1.0;
    bool accepted = false;
    for (int trial = 0; trial < opts.max_trials; ++trial, theta *= opts.shrink) {
      auto cand = evaluate(spec, mix(cur.mu, q, theta), paths, basis, result.bsde_solves);
      if (cand.cost.mean <= cur.cost.mean - opts.armijo * theta * gap.total_gap) {
        cur = std::move(cand);
        theta_used = theta;
        accepted = true;
        break;
      }
    }
    // No admissible step: the Monte-Carlo noise floor has been reached.
    if (!accepted) break;
  }
  return result;
}

double DirectionalDerivative::combined_se() const {
  const double v = variational_se.value_or(0.0);
  return std::sqrt(adjoint_se * adjoint_se + v * v);
}

DirectionalDerivative directional_derivative(const ProblemSpec& spec, const RelaxedControlSchedule& mu,
                                             const RelaxedControlSchedule& q, const PathBundle& paths,
                                             const RegressionBasis& basis, bool with_variational) {
  if (mu.steps() != q.steps() || mu.grid_size() != q.grid_size())
    throw ConfigError("directional derivative needs schedules of identical shape");
  const auto traj = solve_bsde(spec, mu, paths, basis);
  const auto adj = solve_adjoint(spec, mu, traj, paths);
  const std::size_t N = traj.paths;
  const int K = traj.steps;
  const int n = spec.n;
  const std::size_t zs = spec.z_size();
  const double dt = spec.time.dt();

  DirectionalDerivative out;
  std::vector<double> per_path(N);
  parallel_for(N, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t p = b; p < e; ++p) {
      double s = 0.0;
      for (int k = 0; k < K; ++k) {
        const double t = spec.time.node(k);
        const double hm = relaxed_hamiltonian(spec, t, traj.y_at(p, k), traj.z_at(p, k), adj.p_at(p, k), mu.row(k));
        const double hq = relaxed_hamiltonian(spec, t, traj.y_at(p, k), traj.z_at(p, k), adj.p_at(p, k), q.row(k));
        s += (hm - hq) * dt;
      }
      per_path[p] = s;
    }
  });
  const auto adj_stats = mean_and_std_error(per_path);
  out.adjoint_form = adj_stats.mean;
  out.adjoint_se = adj_stats.std_error;
  if (!with_variational) return out;

  const auto var = solve_variational_bsde(spec, mu, q, traj, paths, basis);
  parallel_for(N, [&](std::size_t b, std::size_t e, std::size_t) {
    AveragingScratch scratch;
    std::vector<double> gy(n), hy(n), hz(zs);
    auto acc_hy = [](const ProblemSpec& s, double tt, Vec yy, Vec zz, Vec a, OutVec o) { s.h_y(tt, yy, zz, a, o); };
    auto acc_hz = [](const ProblemSpec& s, double tt, Vec yy, Vec zz, Vec a, OutVec o) { s.h_z(tt, yy, zz, a, o); };
    for (std::size_t p = b; p < e; ++p) {
      spec.g_y(traj.y_at(p, 0), gy);
      double s = 0.0;
      const auto yt0 = var.y_at(p, 0);
      for (int i = 0; i < n; ++i) s += gy[i] * yt0[i];
      for (int k = 0; k < K; ++k) {
        const double t = spec.time.node(k);
        const auto y = traj.y_at(p, k);
        const auto z = traj.z_at(p, k);
        const double dh = averaged_running_cost(spec, t, y, z, q.row(k)) - averaged_running_cost(spec, t, y, z, mu.row(k));
        averaged_gradient(spec, acc_hy, t, y, z, mu.row(k), hy, scratch);
        averaged_gradient(spec, acc_hz, t, y, z, mu.row(k), hz, scratch);
        double lin = 0.0;
        const auto yt = var.y_at(p, k);
        const auto zt = var.z_at(p, k);
        for (int i = 0; i < n; ++i) lin += hy[i] * yt[i];
        for (std::size_t i = 0; i < zs; ++i) lin += hz[i] * zt[i];
        s += (dh + lin) * dt;
      }
      per_path[p] = s;
    }
  });
  const auto var_stats = mean_and_std_error(per_path);
  out.variational_form = var_stats.mean;
  out.variational_se = var_stats.std_error;
  return out;
}

}  // namespace relaxbsde
