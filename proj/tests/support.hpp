#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "relaxbsde/adjoint.hpp"
#include "relaxbsde/bsde.hpp"
#include "relaxbsde/hamiltonian.hpp"
#include "relaxbsde/optimizer.hpp"
#include "relaxbsde/paths.hpp"
#include "relaxbsde/registry.hpp"

namespace testing {

using namespace relaxbsde;

inline ProblemSpec builtin(const char* name, int steps = 64, double horizon = 1.0) {
  return make_builtin(name, TimeGrid{horizon, steps});
}

inline PathBundle panel(const ProblemSpec& spec, std::size_t n = 1 << 14, std::uint64_t seed = 7) {
  return generate_paths(seed, n, spec.time, spec.d);
}

inline RelaxedControlSchedule constant_dirac(const ProblemSpec& spec, std::size_t index) {
  return dirac_embed(StrictControlSchedule::constant(spec.time.steps, index, spec.grid.size()));
}

// Index of a scalar grid point, -1 if absent.
inline std::size_t grid_index(const ProblemSpec& spec, double v) {
  for (std::size_t j = 0; j < spec.grid.size(); ++j)
    if (spec.grid.point(j)[0] == v) return j;
  return static_cast<std::size_t>(-1);
}

struct Solved {
  TrajectoryBundle traj;
  AdjointBundle adj;
};

inline Solved solve_all(const ProblemSpec& spec, const RelaxedControlSchedule& mu, const PathBundle& paths,
                        RegressionBasis basis = {2}) {
  auto traj = solve_bsde(spec, mu, paths, basis);
  auto adj = solve_adjoint(spec, mu, traj, paths);
  return {std::move(traj), std::move(adj)};
}

inline double cost_of(const ProblemSpec& spec, const RelaxedControlSchedule& mu, const PathBundle& paths,
                      RegressionBasis basis = {2}) {
  return evaluate_cost(spec, mu, solve_bsde(spec, mu, paths, basis)).mean;
}

inline Polynomial poly(std::vector<Monomial> terms) { return Polynomial{std::move(terms)}; }

}  // namespace testing
