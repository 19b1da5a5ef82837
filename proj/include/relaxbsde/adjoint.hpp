#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "relaxbsde/bsde.hpp"
#include "relaxbsde/paths.hpp"
#include "relaxbsde/problem.hpp"

namespace relaxbsde {

/// Adjoint process on every path, step-major: p is (K+1) x N x n.
struct AdjointBundle {
  std::size_t paths = 0;
  int steps = 0;
  int n = 1;
  std::vector<double> p;

  std::span<const double> p_at(std::size_t path, int step) const {
    return {p.data() + (static_cast<std::size_t>(step) * paths + path) * n, static_cast<std::size_t>(n)};
  }
};

/// Forward Euler-Maruyama for the adjoint equation
///   dp = -H_y dt - H_z dW,   p_0 = g_y(y_0),
/// with H_y, H_z the mu-averaged Hamiltonian derivatives along traj. The
/// Brownian increments are the ones that drove traj.
AdjointBundle solve_adjoint(const ProblemSpec& spec, const RelaxedControlSchedule& mu,
                            const TrajectoryBundle& traj, const PathBundle& paths);

AdjointBundle solve_adjoint(const ProblemSpec& spec, const StrictControlSchedule& v,
                            const TrajectoryBundle& traj, const PathBundle& paths);

}  // namespace relaxbsde
