#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relaxbsde/bsde.hpp"
#include "relaxbsde/hamiltonian.hpp"
#include "relaxbsde/paths.hpp"
#include "relaxbsde/problem.hpp"
#include "relaxbsde/regression.hpp"

namespace relaxbsde {

enum class StepRule { kBacktracking, kHarmonic };

std::string to_string(StepRule rule);
StepRule parse_step_rule(const std::string& s);

/// Monte-Carlo configuration shared by every solve in a run.
struct PathsConfig {
  std::uint64_t seed = 7;
  std::size_t paths = 16384;
  RegressionBasis basis{2};
};

struct OptimizerOptions {
  int max_iters = 50;
  double gap_tol = 0.01;
  StepRule step_rule = StepRule::kBacktracking;
  double shrink = 0.5;
  int max_trials = 20;
  /// Sufficient-decrease constant: accept theta when J(mu^theta) <= J(mu) - armijo * theta * gap.
  double armijo = 0.1;
  PathsConfig paths;
};

struct IterationRecord {
  int iter = 0;
  double cost = 0.0;
  double cost_se = 0.0;
  double gap = 0.0;
  /// Step that produced this iterate (0 for the initial schedule).
  double theta = 0.0;
};

struct OptimizationResult {
  RelaxedControlSchedule schedule;
  std::vector<IterationRecord> log;
  bool converged = false;
  std::size_t bsde_solves = 0;
  GapReport final_gap;
  CostEstimate final_cost;
};

/// Conditional-gradient loop over relaxed schedules: at each iterate solve
/// state and adjoint, compute the Hamiltonian gap against the best response q,
/// stop when the gap is below gap_tol, otherwise move to mix(mu, q, theta).
/// Every solve reuses one Brownian panel.
OptimizationResult optimize(const ProblemSpec& spec, const RelaxedControlSchedule& init,
                            const OptimizerOptions& opts);

struct DirectionalDerivative {
  /// sum_k [H_bar_k(mu) - H_bar_k(q)] dt, path-averaged.
  double adjoint_form = 0.0;
  double adjoint_se = 0.0;
  /// E[g_y(y_0) y~_0] + sum_k [h_bar(q) - h_bar(mu) + h_bar_y y~ + h_bar_z z~] dt.
  std::optional<double> variational_form;
  std::optional<double> variational_se;

  double combined_se() const;
};

/// Gateaux derivative of J at mu in the direction q - mu.
DirectionalDerivative directional_derivative(const ProblemSpec& spec, const RelaxedControlSchedule& mu,
                                             const RelaxedControlSchedule& q, const PathBundle& paths,
                                             const RegressionBasis& basis, bool with_variational = true);

}  // namespace relaxbsde
