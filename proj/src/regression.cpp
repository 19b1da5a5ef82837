#include "relaxbsde/regression.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "relaxbsde/error.hpp"
#include "relaxbsde/parallel.hpp"

namespace relaxbsde {
namespace {

/// Exponent tuples of all monomials of total degree <= degree, graded order.
std::vector<std::vector<int>> monomials(int dim, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(dim, 0);
  for (int total = 0; total <= degree; ++total) {
    // Enumerate compositions of `total` into dim parts.
    std::function<void(int, int)> rec = [&](int pos, int left) {
      if (pos == dim - 1) {
        e[pos] = left;
        out.push_back(e);
        return;
      }
      for (int v = left; v >= 0; --v) {
        e[pos] = v;
        rec(pos + 1, left - v);
      }
    };
    rec(0, total);
  }
  return out;
}

}  // namespace

std::size_t basis_size(int dim, int degree) { return monomials(dim, degree).size(); }

StepRegression::StepRegression(const PathBundle& paths, int step, const RegressionBasis& basis)
    : paths_(paths.size()), step_(step) {
  if (basis.degree < 0) throw ConfigError("basis degree must be non-negative");
  const int d = paths.dim();
  const auto exps = monomials(d, basis.degree);
  features_ = exps.size();
  design_.resize(paths_ * features_);
  const double t = paths.time().node(step);
  const double inv_sd = t > 0.0 ? 1.0 / std::sqrt(t) : 1.0;

  parallel_for(paths_, [&](std::size_t b, std::size_t e, std::size_t) {
    std::vector<double> w(d);
    for (std::size_t p = b; p < e; ++p) {
      for (int c = 0; c < d; ++c) w[c] = paths.position(p, step, c) * inv_sd;
      double* row = design_.data() + p * features_;
      for (std::size_t f = 0; f < features_; ++f) {
        double v = 1.0;
        for (int c = 0; c < d; ++c)
          for (int k = 0; k < exps[f][c]; ++k) v *= w[c];
        row[f] = v;
      }
    }
  });
}

void StepRegression::factor() {
  if (factored_) return;
  factored_ = true;
  const std::size_t nf = features_;
  const std::size_t chunks = chunk_count(paths_);
  std::vector<Eigen::MatrixXd> partial(chunks, Eigen::MatrixXd::Zero(nf, nf));
  parallel_for(paths_, [&](std::size_t b, std::size_t e, std::size_t c) {
    Eigen::MatrixXd& g = partial[c];
    for (std::size_t p = b; p < e; ++p) {
      const double* row = design_.data() + p * nf;
      for (std::size_t i = 0; i < nf; ++i)
        for (std::size_t j = 0; j <= i; ++j) g(i, j) += row[i] * row[j];
    }
  });
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nf, nf);
  for (const auto& g : partial) gram += g;

  active_.clear();
  for (std::size_t i = 0; i < nf; ++i)
    if (gram(i, i) > 0.0) active_.push_back(i);
  if (!gram.allFinite() || active_.empty()) {
    std::ostringstream os;
    os << "regression at step " << step_ << " has a non-finite or empty normal matrix";
    throw SolverError(os.str());
  }
  const std::size_t na = active_.size();
  scale_.assign(na, 0.0);
  for (std::size_t i = 0; i < na; ++i) scale_[i] = 1.0 / std::sqrt(gram(active_[i], active_[i]));
  Eigen::MatrixXd eq(na, na);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = gram(active_[i], active_[j]) * scale_[i] * scale_[j];
      eq(i, j) = v;
      eq(j, i) = v;
    }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(eq);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double lmax = lambda.maxCoeff();
  const double lmin = lambda.minCoeff();
  condition_ = lmin > 0.0 ? lmax / lmin : INFINITY;
  if (!(condition_ <= kMaxCondition)) {
    std::ostringstream os;
    os << "rank-deficient regression at step " << step_ << " (condition estimate " << condition_ << ")";
    throw SolverError(os.str());
  }
  Eigen::VectorXd inv(na);
  for (std::size_t i = 0; i < na; ++i) inv[i] = lambda[i] > kRelativeCutoff * lmax ? 1.0 / lambda[i] : 0.0;
  pinv_ = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

void StepRegression::fit(std::span<const double> targets, std::size_t cols, std::span<double> fitted) {
  if (targets.size() != paths_ * cols || fitted.size() != paths_ * cols)
    throw ConfigError("regression target shape mismatch");

  std::vector<std::size_t> varying;
  for (std::size_t c = 0; c < cols; ++c) {
    const double first = targets[c];
    bool constant = true;
    for (std::size_t p = 1; p < paths_ && constant; ++p) constant = targets[p * cols + c] == first;
    if (constant) {
      for (std::size_t p = 0; p < paths_; ++p) fitted[p * cols + c] = first;
    } else {
      varying.push_back(c);
    }
  }
  residual_rms_ = 0.0;
  if (varying.empty()) return;

  factor();
  const std::size_t na = active_.size();
  const std::size_t nv = varying.size();
  const std::size_t chunks = chunk_count(paths_);
  std::vector<Eigen::MatrixXd> partial(chunks, Eigen::MatrixXd::Zero(na, nv));
  parallel_for(paths_, [&](std::size_t b, std::size_t e, std::size_t c) {
    Eigen::MatrixXd& r = partial[c];
    for (std::size_t p = b; p < e; ++p) {
      const double* row = design_.data() + p * features_;
      for (std::size_t i = 0; i < na; ++i) {
        const double f = row[active_[i]];
        for (std::size_t v = 0; v < nv; ++v) r(i, v) += f * targets[p * cols + varying[v]];
      }
    }
  });
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(na, nv);
  for (const auto& r : partial) rhs += r;
  for (std::size_t i = 0; i < na; ++i) rhs.row(i) *= scale_[i];
  Eigen::MatrixXd coef = pinv_ * rhs;
  for (std::size_t i = 0; i < na; ++i) coef.row(i) *= scale_[i];

  if (!coef.allFinite()) {
    std::ostringstream os;
    os << "regression at step " << step_ << " produced non-finite coefficients";
    throw SolverError(os.str());
  }

  std::vector<double> sq(chunks, 0.0);
  parallel_for(paths_, [&](std::size_t b, std::size_t e, std::size_t c) {
    double s = 0.0;
    for (std::size_t p = b; p < e; ++p) {
      const double* row = design_.data() + p * features_;
      for (std::size_t v = 0; v < nv; ++v) {
        double acc = 0.0;
        for (std::size_t i = 0; i < na; ++i) acc += row[active_[i]] * coef(i, v);
        const std::size_t idx = p * cols + varying[v];
        fitted[idx] = acc;
        const double r = targets[idx] - acc;
        s += r * r;
      }
    }
    sq[c] = s;
  });
  residual_rms_ = std::sqrt(ordered_sum(sq) / static_cast<double>(paths_));
}

}  // namespace relaxbsde
