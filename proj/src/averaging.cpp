#include "relaxbsde/averaging.hpp"

namespace relaxbsde {

void averaged_drift(const ProblemSpec& spec, double t, Vec y, Vec z, Vec row, OutVec out,
                    AveragingScratch& scratch) {
  scratch.buf.resize(out.size());
  bool first = true;
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double w = row[j];
    if (w == 0.0) continue;
    spec.drift(t, y, z, spec.grid.point(j), std::span<double>(scratch.buf));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = first ? w * scratch.buf[i] : out[i] + w * scratch.buf[i];
    first = false;
  }
  if (first)
    for (auto& o : out) o = 0.0;
}

double averaged_running_cost(const ProblemSpec& spec, double t, Vec y, Vec z, Vec row) {
  double acc = 0.0;
  bool first = true;
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double w = row[j];
    if (w == 0.0) continue;
    const double v = w * spec.running_cost(t, y, z, spec.grid.point(j));
    acc = first ? v : acc + v;
    first = false;
  }
  return acc;
}

}  // namespace relaxbsde
