#include "relaxbsde/adjoint.hpp"

#include <cmath>
#include <string>

#include "relaxbsde/error.hpp"
#include "relaxbsde/hamiltonian.hpp"
#include "relaxbsde/parallel.hpp"

namespace relaxbsde {

AdjointBundle solve_adjoint(const ProblemSpec& spec, const RelaxedControlSchedule& mu,
                            const TrajectoryBundle& traj, const PathBundle& paths) {
  require_well_formed(spec);
  const std::size_t N = traj.paths;
  const int K = traj.steps;
  const int n = spec.n;
  const int d = spec.d;
  const std::size_t zs = spec.z_size();
  const double dt = spec.time.dt();
  if (paths.size() != N || paths.steps() != K || paths.dim() != d)
    throw ConfigError("path bundle does not match the trajectory");
  if (mu.steps() != static_cast<std::size_t>(K) || mu.grid_size() != spec.grid.size())
    throw ConfigError("control does not match the trajectory");

  AdjointBundle out{N, K, n, std::vector<double>(static_cast<std::size_t>(K + 1) * N * n, 0.0)};
  parallel_for(N, [&](std::size_t b, std::size_t e, std::size_t) {
    std::vector<double> hy(n), hz(zs);
    for (std::size_t p = b; p < e; ++p) {
      double* p0 = out.p.data() + p * n;
      spec.g_y(traj.y_at(p, 0), std::span<double>(p0, n));
      for (int k = 0; k < K; ++k) {
        const double* pk = out.p.data() + (static_cast<std::size_t>(k) * N + p) * n;
        double* pn = out.p.data() + (static_cast<std::size_t>(k + 1) * N + p) * n;
        relaxed_hamiltonian_gradients(spec, spec.time.node(k), traj.y_at(p, k), traj.z_at(p, k),
                                      std::span<const double>(pk, n), mu.row(k), hy, hz);
        for (int i = 0; i < n; ++i) {
          double noise = 0.0;
          for (int l = 0; l < d; ++l) noise += hz[i * d + l] * paths.increment(p, k, l);
          pn[i] = pk[i] - hy[i] * dt - noise;
          if (!std::isfinite(pn[i]))
            throw SolverError("non-finite adjoint at path " + std::to_string(p) + ", step " + std::to_string(k + 1));
        }
      }
    }
  });
  return out;
}

AdjointBundle solve_adjoint(const ProblemSpec& spec, const StrictControlSchedule& v,
                            const TrajectoryBundle& traj, const PathBundle& paths) {
  return solve_adjoint(spec, dirac_embed(v), traj, paths);
}

}  // namespace relaxbsde
