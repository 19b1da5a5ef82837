#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "relaxbsde/bsde.hpp"
#include "relaxbsde/problem.hpp"

namespace relaxbsde {

struct AdjointBundle;

/// H(t, y, z, p, a) = p . b(t, y, z, a) - h(t, y, z, a). `a` need not be a grid point.
double strict_hamiltonian(const ProblemSpec& spec, double t, Vec y, Vec z, Vec p, Vec a);

/// sum_j q_j H(t, y, z, p, a_j) over the support of q. Rejects rows off the simplex.
double relaxed_hamiltonian(const ProblemSpec& spec, double t, Vec y, Vec z, Vec p, Vec q_row);

/// Derivatives of the q-averaged Hamiltonian in (y, z):
///   H_y = b_y^T p - h_y   (n),
///   H_z = b_z^T p - h_z   (n x d, row-major).
void relaxed_hamiltonian_gradients(const ProblemSpec& spec, double t, Vec y, Vec z, Vec p, Vec q_row,
                                   OutVec h_y, OutVec h_z);

/// Path-averaged strict Hamiltonians G_k(j) = (1/N) sum_paths H(t_k, y_k, z_k, p_k, a_j),
/// returned as a K x m row-major matrix.
std::vector<double> mean_hamiltonians(const ProblemSpec& spec, const TrajectoryBundle& traj,
                                      const AdjointBundle& adj);

/// Path-averaged relaxed Hamiltonian per step for a schedule: sum_j q_kj G_k(j).
std::vector<double> mean_relaxed_hamiltonians(const ProblemSpec& spec, const RelaxedControlSchedule& q,
                                              const TrajectoryBundle& traj, const AdjointBundle& adj);

/// Dirac schedule at argmax_j G_k(j) for every step; ties go to the lowest index.
RelaxedControlSchedule best_response(const ProblemSpec& spec, const TrajectoryBundle& traj,
                                     const AdjointBundle& adj);

/// Integrated Hamiltonian gap at mu against its best response.
struct GapReport {
  double total_gap = 0.0;
  std::vector<double> per_step_gap;
  std::vector<std::size_t> argmax_indices;
  double eps_num = 0.0;
  /// Monte-Carlo standard error of total_gap (per-path gap contributions).
  double std_error = 0.0;
  double dt = 0.0;
};

/// per_step_gap[k] = sum_j mu_kj (max_i G_k(i) - G_k(j)) >= 0, total = sum_k per_step_gap[k] dt.
GapReport hamiltonian_gap(const ProblemSpec& spec, const RelaxedControlSchedule& mu,
                          const TrajectoryBundle& traj, const AdjointBundle& adj);

}  // namespace relaxbsde
