#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "relaxbsde/paths.hpp"
#include "relaxbsde/problem.hpp"
#include "relaxbsde/regression.hpp"

namespace relaxbsde {

/// Solution (y, z) of the controlled backward equation on every path.
/// Storage is step-major: y is (K+1) x N x n, z is K x N x (n*d).
struct TrajectoryBundle {
  std::size_t paths = 0;
  int steps = 0;
  int n = 1;
  int d = 1;
  std::vector<double> y;
  std::vector<double> z;
  RelaxedControlSchedule control;
  std::vector<double> condition;     // per step, condition estimate of the y regression
  std::vector<double> residual_rms;  // per step, RMS residual of the y regression

  std::span<const double> y_at(std::size_t path, int step) const {
    return {y.data() + (static_cast<std::size_t>(step) * paths + path) * n, static_cast<std::size_t>(n)};
  }
  std::span<const double> z_at(std::size_t path, int step) const {
    const std::size_t zs = static_cast<std::size_t>(n) * d;
    return {z.data() + (static_cast<std::size_t>(step) * paths + path) * zs, zs};
  }
};

/// Linearized (variational) solution: y_tilde is (K+1) x N x n, z_tilde K x N x (n*d).
struct VariationalBundle {
  std::size_t paths = 0;
  int steps = 0;
  int n = 1;
  int d = 1;
  std::vector<double> y;
  std::vector<double> z;

  std::span<const double> y_at(std::size_t path, int step) const {
    return {y.data() + (static_cast<std::size_t>(step) * paths + path) * n, static_cast<std::size_t>(n)};
  }
  std::span<const double> z_at(std::size_t path, int step) const {
    const std::size_t zs = static_cast<std::size_t>(n) * d;
    return {z.data() + (static_cast<std::size_t>(step) * paths + path) * zs, zs};
  }
};

struct CostEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t paths = 0;
};

/// Backward Euler least-squares Monte Carlo sweep for
///   dy = (sum_j q_j b(t, y, z, a_j)) dt + z dW,  y_T = xi.
/// At each step k (from K-1 down to 0):
///   y_hat = E_k[y_{k+1}],
///   z_k   = E_k[(y_{k+1} - y_hat) dW_k^T] / dt,
///   y_k   = y_hat - b_bar(t_k, y_hat, z_k, q_k) dt,
/// with E_k the projection onto the polynomial basis in W_{t_k}.
TrajectoryBundle solve_bsde(const ProblemSpec& spec, const RelaxedControlSchedule& control,
                            const PathBundle& paths, const RegressionBasis& basis);

/// Strict control: the Dirac specialization of the relaxed solve.
TrajectoryBundle solve_bsde(const ProblemSpec& spec, const StrictControlSchedule& control,
                            const PathBundle& paths, const RegressionBasis& basis);

/// Per-path realized cost g(y_0) + sum_k h_bar(t_k, y_k, z_k, q_k) dt.
std::vector<double> path_costs(const ProblemSpec& spec, const RelaxedControlSchedule& control,
                               const TrajectoryBundle& traj);

CostEstimate evaluate_cost(const ProblemSpec& spec, const RelaxedControlSchedule& control,
                           const TrajectoryBundle& traj);

/// Linear backward equation for the derivative of (y, z) along mu -> q:
///   d y~ = [b_y y~ + b_z z~ + (b_bar(q) - b_bar(mu))] dt + z~ dW,  y~_T = 0,
/// with b_y, b_z averaged under mu and all coefficients frozen at traj.
VariationalBundle solve_variational_bsde(const ProblemSpec& spec, const RelaxedControlSchedule& mu,
                                         const RelaxedControlSchedule& q, const TrajectoryBundle& traj,
                                         const PathBundle& paths, const RegressionBasis& basis);

}  // namespace relaxbsde
