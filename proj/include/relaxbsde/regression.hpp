#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "relaxbsde/paths.hpp"

namespace relaxbsde {

/// Polynomial basis in the current Brownian value W_{t_k}: all monomials of
/// total degree <= degree in the d coordinates of W_{t_k} / sqrt(t_k).
struct RegressionBasis {
  int degree = 2;

  bool operator==(const RegressionBasis&) const = default;
};

/// Condition estimate above which a regression is rejected as rank deficient.
inline constexpr double kMaxCondition = 1e12;
/// Eigenvalues of the equilibrated normal matrix below this fraction of the
/// largest are truncated.
inline constexpr double kRelativeCutoff = 1e-10;

/// Number of monomials of total degree <= degree in dim variables.
std::size_t basis_size(int dim, int degree);

/// Least-squares projection onto the basis evaluated at one time step.
/// The normal matrix is factored lazily, once, and reused for every fit.
class StepRegression {
 public:
  StepRegression(const PathBundle& paths, int step, const RegressionBasis& basis);

  /// Projects each of the `cols` target columns (N x cols, row-major) onto the
  /// basis and writes the fitted values. Columns that are exactly constant
  /// across paths are reproduced exactly.
  void fit(std::span<const double> targets, std::size_t cols, std::span<double> fitted);

  std::size_t paths() const { return paths_; }
  /// Condition estimate of the retained normal matrix (1 when only constants were fit).
  double condition() const { return condition_; }
  /// RMS residual of the most recent fit.
  double residual_rms() const { return residual_rms_; }
  /// Features kept after dropping identically-zero columns.
  std::size_t active_features() const { return active_.size(); }

 private:
  void factor();

  std::size_t paths_;
  int step_;
  std::size_t features_;
  std::vector<double> design_;  // N x features_
  std::vector<std::size_t> active_;
  std::vector<double> scale_;
  bool factored_ = false;
  Eigen::MatrixXd pinv_;  // pseudo-inverse of the equilibrated normal matrix
  double condition_ = 1.0;
  double residual_rms_ = 0.0;
};

}  // namespace relaxbsde
