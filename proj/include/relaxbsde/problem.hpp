#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace relaxbsde {

/// Finite action set U: m distinct points in R^{dim}, stored row-major.
class ControlGrid {
 public:
  ControlGrid(std::size_t dim, std::vector<double> coords);

  static ControlGrid scalar(std::vector<double> points);
  /// `count` equally spaced scalar points on [lo, hi].
  static ControlGrid lattice(double lo, double hi, std::size_t count);

  std::size_t size() const { return coords_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> point(std::size_t j) const;
  const std::vector<double>& coords() const { return coords_; }

  bool operator==(const ControlGrid&) const = default;

 private:
  std::size_t dim_;
  std::vector<double> coords_;
};

/// Uniform grid t_k = k T / K on [0, T].
struct TimeGrid {
  double horizon = 1.0;
  int steps = 1;

  double dt() const { return horizon / steps; }
  /// Node t_k; t_K is exactly the horizon.
  double node(int k) const { return k == steps ? horizon : k * dt(); }
  TimeGrid refined(int factor) const { return {horizon, steps * factor}; }

  bool operator==(const TimeGrid&) const = default;
};

/// Read-only view of one simulated Brownian path.
struct BrownianPath {
  std::span<const double> increments;  // steps x dim
  std::span<const double> positions;   // (steps + 1) x dim, positions[0..dim) = 0
  int steps = 0;
  int dim = 0;
  double dt = 0.0;

  std::span<const double> terminal() const {
    return positions.subspan(static_cast<std::size_t>(steps) * dim, dim);
  }
};

using Vec = std::span<const double>;
using OutVec = std::span<double>;

/// b(t, y, z, a) -> R^n. z is n x d row-major.
using DriftFn = std::function<void(double t, Vec y, Vec z, Vec a, OutVec out)>;
/// h(t, y, z, a) -> R.
using RunningCostFn = std::function<double(double t, Vec y, Vec z, Vec a)>;
/// g(y) -> R.
using TerminalCostFn = std::function<double(Vec y)>;
/// xi(W) -> R^n, a functional of the whole Brownian path.
using TerminalConditionFn = std::function<void(const BrownianPath& path, OutVec out)>;
/// Any (t, y, z, a) -> array derivative.
using CoefficientGradientFn = std::function<void(double t, Vec y, Vec z, Vec a, OutVec out)>;
using TerminalGradientFn = std::function<void(Vec y, OutVec out)>;

/// Optional analytic derivatives. Layouts (row-major):
///   b_y: n x n,        b_y[i*n + j]          = d b_i / d y_j
///   b_z: n x (n*d),    b_z[i*n*d + j*d + l]  = d b_i / d z_{jl}
///   h_y: n,            h_z: n*d,             g_y: n
/// Missing entries fall back to central finite differences.
struct Gradients {
  CoefficientGradientFn b_y;
  CoefficientGradientFn b_z;
  CoefficientGradientFn h_y;
  CoefficientGradientFn h_z;
  TerminalGradientFn g_y;
};

enum class GradientMode { kAnalytic, kFiniteDifference };

/// Relative step for central finite differences: delta = kFdStep * max(1, |x|).
inline constexpr double kFdStep = 1e-5;

struct ProblemSpec {
  std::string name;
  int n = 1;  // state dimension
  int d = 1;  // Brownian dimension
  DriftFn drift;
  RunningCostFn running_cost;
  TerminalCostFn terminal_cost;
  TerminalConditionFn terminal_condition;
  Gradients gradients;
  ControlGrid grid = ControlGrid::scalar({0.0});
  TimeGrid time;

  std::size_t control_dim() const { return grid.dim(); }
  std::size_t z_size() const { return static_cast<std::size_t>(n) * d; }

  ProblemSpec with_time(TimeGrid t) const;

  GradientMode mode_b_y() const { return gradients.b_y ? GradientMode::kAnalytic : GradientMode::kFiniteDifference; }
  GradientMode mode_b_z() const { return gradients.b_z ? GradientMode::kAnalytic : GradientMode::kFiniteDifference; }
  GradientMode mode_h_y() const { return gradients.h_y ? GradientMode::kAnalytic : GradientMode::kFiniteDifference; }
  GradientMode mode_h_z() const { return gradients.h_z ? GradientMode::kAnalytic : GradientMode::kFiniteDifference; }
  GradientMode mode_g_y() const { return gradients.g_y ? GradientMode::kAnalytic : GradientMode::kFiniteDifference; }

  // Derivative accessors: analytic when supplied, central differences otherwise.
  void b_y(double t, Vec y, Vec z, Vec a, OutVec out) const;
  void b_z(double t, Vec y, Vec z, Vec a, OutVec out) const;
  void h_y(double t, Vec y, Vec z, Vec a, OutVec out) const;
  void h_z(double t, Vec y, Vec z, Vec a, OutVec out) const;
  void g_y(Vec y, OutVec out) const;

  // Finite-difference versions, always available (used by the validator).
  void fd_b_y(double t, Vec y, Vec z, Vec a, OutVec out) const;
  void fd_b_z(double t, Vec y, Vec z, Vec a, OutVec out) const;
  void fd_h_y(double t, Vec y, Vec z, Vec a, OutVec out) const;
  void fd_h_z(double t, Vec y, Vec z, Vec a, OutVec out) const;
  void fd_g_y(Vec y, OutVec out) const;
};

/// Throws ConfigError if dimensions, horizon or callbacks are malformed.
void require_well_formed(const ProblemSpec& spec);

/// Deterministic open-loop strict control: one grid index per time step.
class StrictControlSchedule {
 public:
  StrictControlSchedule(std::vector<std::size_t> indices, std::size_t grid_size);

  std::size_t steps() const { return indices_.size(); }
  std::size_t grid_size() const { return grid_size_; }
  std::size_t operator[](std::size_t k) const { return indices_[k]; }
  const std::vector<std::size_t>& indices() const { return indices_; }

  static StrictControlSchedule constant(std::size_t steps, std::size_t index, std::size_t grid_size);

  bool operator==(const StrictControlSchedule&) const = default;

 private:
  std::vector<std::size_t> indices_;
  std::size_t grid_size_;
};

/// Tolerance on row sums of relaxed schedules.
inline constexpr double kSimplexTol = 1e-12;
/// Rows whose sum is within this of 1 (but outside kSimplexTol) are renormalized.
inline constexpr double kRenormalizeTol = 1e-9;

/// Deterministic relaxed control: a K x m row-stochastic weight matrix.
class RelaxedControlSchedule {
 public:
  RelaxedControlSchedule(std::size_t steps, std::size_t grid_size, std::vector<double> weights);

  static RelaxedControlSchedule uniform(std::size_t steps, std::size_t grid_size);

  std::size_t steps() const { return steps_; }
  std::size_t grid_size() const { return grid_size_; }
  std::span<const double> row(std::size_t k) const {
    return {weights_.data() + k * grid_size_, grid_size_};
  }
  const std::vector<double>& weights() const { return weights_; }

  /// Per-row argmax (lowest index on ties).
  std::vector<std::size_t> argmax_indices() const;
  bool is_dirac() const;
  /// Repeats every row `factor` times (the schedule on a refined time grid).
  RelaxedControlSchedule lifted(std::size_t factor) const;

  bool operator==(const RelaxedControlSchedule&) const = default;

 private:
  std::size_t steps_;
  std::size_t grid_size_;
  std::vector<double> weights_;
};

RelaxedControlSchedule dirac_embed(const StrictControlSchedule& v);

/// Convex combination (1 - theta) mu + theta q. theta = 0 and 1 return the
/// endpoints exactly.
RelaxedControlSchedule mix(const RelaxedControlSchedule& mu, const RelaxedControlSchedule& q,
                           double theta);

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;

  bool operator==(const ValidationCheck&) const = default;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  std::vector<std::pair<std::string, GradientMode>> gradient_modes;

  bool all_passed() const;
  const ValidationCheck* find(const std::string& name) const;

  bool operator==(const ValidationReport&) const = default;
};

/// Probes the problem for finiteness, gradient consistency and (optionally)
/// schedule compatibility. Throws ConfigError on malformed dimensions.
ValidationReport validate_problem(const ProblemSpec& spec,
                                  const RelaxedControlSchedule* schedule = nullptr,
                                  std::uint64_t probe_seed = 0x5eedULL);

}  // namespace relaxbsde
