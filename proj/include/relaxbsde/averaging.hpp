#pragma once

#include <span>
#include <vector>

#include "relaxbsde/problem.hpp"

namespace relaxbsde {

// Control-measure averages of the coefficients: for a simplex row q,
//   avg f = sum_j q_j f(a_j),
// summed over the support of q only. The first term is assigned rather than
// added, so a Dirac row reproduces the strict coefficient bit for bit.

/// Scratch space for averaged evaluations; one per thread.
struct AveragingScratch {
  std::vector<double> buf;
};

void averaged_drift(const ProblemSpec& spec, double t, Vec y, Vec z, Vec row, OutVec out,
                    AveragingScratch& scratch);

double averaged_running_cost(const ProblemSpec& spec, double t, Vec y, Vec z, Vec row);

/// Averages any coefficient-gradient accessor of ProblemSpec (b_y, b_z, h_y, h_z).
template <typename Accessor>
void averaged_gradient(const ProblemSpec& spec, Accessor&& accessor, double t, Vec y, Vec z, Vec row,
                       OutVec out, AveragingScratch& scratch) {
  scratch.buf.resize(out.size());
  bool first = true;
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double w = row[j];
    if (w == 0.0) continue;
    accessor(spec, t, y, z, spec.grid.point(j), std::span<double>(scratch.buf));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = first ? w * scratch.buf[i] : out[i] + w * scratch.buf[i];
    first = false;
  }
  if (first)
    for (auto& o : out) o = 0.0;
}

}  // namespace relaxbsde
