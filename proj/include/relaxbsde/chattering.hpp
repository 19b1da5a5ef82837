#pragma once

#include <cstddef>
#include <vector>

#include "relaxbsde/bsde.hpp"
#include "relaxbsde/optimizer.hpp"
#include "relaxbsde/problem.hpp"

namespace relaxbsde {

/// Largest-remainder apportionment of r substeps to the weights of one row.
/// Counts sum to r and each differs from r * w_j by less than one. Remainders
/// within kTieTolerance of each other are treated as tied (lowest index wins).
std::vector<std::size_t> occupation_counts(std::span<const double> row, std::size_t r);

inline constexpr double kTieTolerance = 1e-9;

/// Strict schedule on the r-fold refined grid: inside macro step k, grid point
/// j occupies occupation_counts(row k)[j] consecutive substeps, in ascending
/// index order.
StrictControlSchedule chatter(const RelaxedControlSchedule& mu, std::size_t r);

struct ChatterResult {
  std::size_t refinement = 1;
  StrictControlSchedule strict;
  CostEstimate j_strict;
  CostEstimate j_relaxed;
  double abs_gap = 0.0;
  /// sqrt(se_strict^2 + se_relaxed^2).
  double combined_se = 0.0;
};

/// For each r, draws fresh paths on the r-fold refined grid (seed derived from
/// the base seed and r) and solves under chatter(mu, r) and under mu lifted to
/// the refined grid. Both costs use the same paths.
std::vector<ChatterResult> compare_values(const ProblemSpec& spec, const RelaxedControlSchedule& mu,
                                          const std::vector<std::size_t>& refinements, const PathsConfig& paths);

struct ValueEqualityOptions {
  OptimizerOptions optimizer;
  std::vector<std::size_t> refinements{1, 2, 4, 8, 16};
  double tolerance = 0.05;
  /// Initial schedule; uniform over the grid when empty.
  std::optional<RelaxedControlSchedule> init;
};

struct ValueEqualityReport {
  OptimizationResult relaxed;
  ChatterResult chattered;  // at the largest refinement
  double j_relaxed_opt = 0.0;
  double j_strict_chattered = 0.0;
  double difference = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Optimizes over relaxed schedules, chatters the optimum at the largest
/// refinement, and compares the two values.
ValueEqualityReport value_equality_check(const ProblemSpec& spec, const ValueEqualityOptions& opts);

}  // namespace relaxbsde
