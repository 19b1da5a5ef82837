#include "invariants.hpp"

#include <algorithm>
#include <cmath>

#include "relaxbsde/verify.hpp"
#include "support.hpp"

namespace testing {

std::vector<double> random_row(std::mt19937_64& rng, std::size_t m) {
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution sparse(0.3);
  std::vector<double> w(m);
  double s = 0.0;
  for (auto& x : w) {
    x = sparse(rng) ? 0.0 : e(rng);
    s += x;
  }
  if (s == 0.0) {
    w[rng() % m] = 1.0;
    return w;
  }
  for (auto& x : w) x /= s;
  return w;
}

RelaxedControlSchedule random_schedule(std::mt19937_64& rng, std::size_t K, std::size_t m) {
  std::vector<double> w;
  for (std::size_t k = 0; k < K; ++k) {
    const auto r = random_row(rng, m);
    w.insert(w.end(), r.begin(), r.end());
  }
  return RelaxedControlSchedule(K, m, std::move(w));
}

StrictControlSchedule random_strict(std::mt19937_64& rng, std::size_t K, std::size_t m) {
  std::vector<std::size_t> idx(K);
  for (auto& i : idx) i = rng() % m;
  return StrictControlSchedule(std::move(idx), m);
}

ProblemSpec random_problem(std::mt19937_64& rng, int K) {
  std::uniform_real_distribution<double> c(-0.5, 0.5);
  PolynomialProblem p;
  p.drift = poly({{c(rng), 1, 0, 0}, {c(rng), 0, 1, 0}, {1.0, 0, 0, 1}, {c(rng), 0, 0, 2}, {c(rng), 1, 0, 1}});
  p.running_cost = poly({{std::fabs(c(rng)), 0, 0, 2}, {c(rng), 1, 0, 0}, {c(rng), 0, 2, 0}, {c(rng), 0, 1, 1}});
  p.terminal_cost = poly({{c(rng), 1, 0, 0}, {std::fabs(c(rng)), 2, 0, 0}});
  p.terminal_condition = poly({{1.0 + c(rng), 1, 0, 0}, {c(rng), 2, 0, 0}, {c(rng), 0, 0, 0}});
  const std::size_t m = 1 + rng() % 4;
  std::vector<double> pts;
  while (pts.size() < m) {
    const double v = std::round(std::uniform_real_distribution<double>(-2.0, 2.0)(rng) * 8.0) / 8.0;
    if (std::find(pts.begin(), pts.end(), v) == pts.end()) pts.push_back(v);
  }
  return make_polynomial_problem("random", p, TimeGrid{1.0, K}, ControlGrid::scalar(pts));
}

InvariantTally check_invariants(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  InvariantTally tally;
  for (int i = 0; i < cases; ++i) {
    ++tally.cases;
    {
      const std::size_t K = 1 + rng() % 6, m = 1 + rng() % 6;
      const auto mu = random_schedule(rng, K, m);
      const auto q = random_schedule(rng, K, m);
      const auto out = mix(mu, q, std::uniform_real_distribution<double>(0.0, 1.0)(rng));
      bool ok = true;
      for (std::size_t k = 0; k < K; ++k) {
        double s = 0.0;
        for (double w : out.row(k)) {
          ok = ok && w >= 0.0;
          s += w;
        }
        ok = ok && std::fabs(s - 1.0) <= 1e-12;
      }
      tally.simplex += ok;
    }

    const int K = 2 + static_cast<int>(rng() % 5);
    const auto spec = random_problem(rng, K);
    const std::uint64_t path_seed = rng();
    const auto paths = generate_paths(path_seed, 64, spec.time, 1);
    const RegressionBasis basis{1 + static_cast<int>(rng() % 2)};
    const auto mu = random_schedule(rng, K, spec.grid.size());
    const auto traj = solve_bsde(spec, mu, paths, basis);
    const auto adj = solve_adjoint(spec, mu, traj, paths);

    bool ok = true;
    for (std::size_t p = 0; p < paths.size(); ++p) {
      double xi = 0.0;
      spec.terminal_condition(paths.path(p), OutVec(&xi, 1));
      ok = ok && traj.y_at(p, K)[0] == xi;
    }
    tally.terminal += ok;

    ok = true;
    for (std::size_t p = 0; p < paths.size(); ++p) {
      double g = 0.0;
      spec.g_y(traj.y_at(p, 0), OutVec(&g, 1));
      ok = ok && adj.p_at(p, 0)[0] == g;
    }
    tally.initial += ok;

    const auto gap = hamiltonian_gap(spec, mu, traj, adj);
    ok = gap.total_gap >= 0.0;
    for (double g : gap.per_step_gap) ok = ok && g >= 0.0;
    tally.gap_nonnegative += ok;

    const auto v = random_strict(rng, K, spec.grid.size());
    const auto dv = dirac_embed(v);
    const auto ts = solve_bsde(spec, v, paths, basis);
    const auto tr = solve_bsde(spec, dv, paths, basis);
    const auto as = solve_adjoint(spec, v, ts, paths);
    const auto ar = solve_adjoint(spec, dv, tr, paths);
    const PathsConfig pc{path_seed, 64, basis};
    ok = ts.y == tr.y && ts.z == tr.z && as.p == ar.p &&
         mean_hamiltonians(spec, ts, as) == mean_hamiltonians(spec, tr, ar) &&
         evaluate_cost(spec, dv, ts).mean == evaluate_cost(spec, dv, tr).mean &&
         check_necessary(spec, v, std::nullopt, pc).total_gap == check_necessary(spec, dv, std::nullopt, pc).total_gap;
    tally.dirac += ok;

    const double y = nd(rng), z = nd(rng), p = nd(rng), t = std::uniform_real_distribution<double>(0, 1)(rng);
    ok = true;
    for (std::size_t j = 0; j < spec.grid.size(); ++j) {
      std::vector<double> e(spec.grid.size(), 0.0);
      e[j] = 1.0;
      ok = ok && relaxed_hamiltonian(spec, t, Vec(&y, 1), Vec(&z, 1), Vec(&p, 1), e) ==
                     strict_hamiltonian(spec, t, Vec(&y, 1), Vec(&z, 1), Vec(&p, 1), spec.grid.point(j));
    }
    tally.hamiltonian_dirac += ok;
  }
  return tally;
}

}  // namespace testing
