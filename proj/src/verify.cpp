#include "relaxbsde/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relaxbsde/adjoint.hpp"
#include "relaxbsde/error.hpp"
#include "relaxbsde/paths.hpp"

namespace relaxbsde {

std::string to_string(CertificateKind kind) {
  return kind == CertificateKind::kNecessaryStrict ? "necessary-strict" : "necessary-relaxed";
}

double default_gap_tolerance(const GapReport& gap) { return 3.0 * gap.std_error + 0.01; }

Certificate make_certificate(CertificateKind kind, const GapReport& gap, std::optional<double> tol) {
  Certificate c;
  c.kind = kind;
  c.total_gap = gap.total_gap;
  c.gap_std_error = gap.std_error;
  c.tol = tol.value_or(default_gap_tolerance(gap));
  c.passed = c.total_gap <= c.tol;
  std::vector<std::size_t> order(gap.per_step_gap.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return gap.per_step_gap[a] > gap.per_step_gap[b]; });
  for (std::size_t i = 0; i < std::min<std::size_t>(5, order.size()); ++i)
    c.worst_steps.emplace_back(order[i], gap.per_step_gap[order[i]]);
  c.gap = gap;
  return c;
}

namespace {

Certificate certify(const ProblemSpec& spec, const RelaxedControlSchedule& control, std::optional<double> tol,
                    const PathsConfig& cfg, CertificateKind kind) {
  const auto paths = generate_paths(cfg.seed, cfg.paths, spec.time, spec.d);
  const auto traj = solve_bsde(spec, control, paths, cfg.basis);
  const auto adj = solve_adjoint(spec, control, traj, paths);
  auto cert = make_certificate(kind, hamiltonian_gap(spec, control, traj, adj), tol);
  cert.cost = evaluate_cost(spec, control, traj);
  return cert;
}

struct Range {
  double lo = INFINITY;
  double hi = -INFINITY;

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  /// Widened by 20% of the span in total, 10% per side (or by 1 for a degenerate range).
  Range inflated() const {
    const double span = hi - lo;
    const double pad = span > 0.0 ? 0.1 * span : 1.0;
    return {lo - pad, hi + pad};
  }
  double sample(double u) const { return lo + (hi - lo) * u; }
};

}  // namespace

Certificate check_necessary(const ProblemSpec& spec, const RelaxedControlSchedule& control,
                            std::optional<double> tol, const PathsConfig& paths) {
  return certify(spec, control, tol, paths, CertificateKind::kNecessaryRelaxed);
}

Certificate check_necessary(const ProblemSpec& spec, const StrictControlSchedule& control,
                            std::optional<double> tol, const PathsConfig& paths) {
  return certify(spec, dirac_embed(control), tol, paths, CertificateKind::kNecessaryStrict);
}

ConvexityReport check_sufficient_hypotheses(const ProblemSpec& spec, const RelaxedControlSchedule& mu,
                                            std::size_t n_probes, std::uint64_t seed, const PathsConfig& cfg) {
  if (n_probes == 0) throw ConfigError("need at least one probe");
  const auto paths = generate_paths(cfg.seed, cfg.paths, spec.time, spec.d);
  const auto traj = solve_bsde(spec, mu, paths, cfg.basis);
  const auto adj = solve_adjoint(spec, mu, traj, paths);

  const int n = spec.n;
  const std::size_t zs = spec.z_size();
  const std::size_t m = spec.grid.size();
  std::vector<Range> ry(n), rz(zs), rp(n);
  for (int k = 0; k <= traj.steps; ++k)
    for (std::size_t p = 0; p < traj.paths; ++p) {
      for (int i = 0; i < n; ++i) {
        ry[i].add(traj.y_at(p, k)[i]);
        rp[i].add(adj.p_at(p, k)[i]);
      }
      if (k < traj.steps)
        for (std::size_t i = 0; i < zs; ++i) rz[i].add(traj.z_at(p, k)[i]);
    }
  for (auto& r : ry) r = r.inflated();
  for (auto& r : rz) r = r.inflated();
  for (auto& r : rp) r = r.inflated();

  ConvexityReport rep;
  rep.probe_seed = seed;
  std::vector<double> y1(n), y2(n), ym(n), z1(zs), z2(zs), zm(zs), p(n), q(m);
  for (std::size_t i = 0; i < n_probes; ++i) {
    std::uint32_t slot = 0;
    auto u = [&] { return counter_uniform(seed, i, slot++, 0); };
    for (int j = 0; j < n; ++j) {
      y1[j] = ry[j].sample(u());
      y2[j] = ry[j].sample(u());
      ym[j] = 0.5 * (y1[j] + y2[j]);
      p[j] = rp[j].sample(u());
    }
    for (std::size_t j = 0; j < zs; ++j) {
      z1[j] = rz[j].sample(u());
      z2[j] = rz[j].sample(u());
      zm[j] = 0.5 * (z1[j] + z2[j]);
    }
    // Uniform draw from the simplex via normalized exponentials.
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += (q[j] = -std::log(u()));
    for (auto& w : q) w /= s;
    const double t = spec.time.node(static_cast<int>(std::floor(u() * spec.time.steps)));

    // g convex: g(mid) <= average.
    const double g_viol = spec.terminal_cost(ym) - 0.5 * (spec.terminal_cost(y1) + spec.terminal_cost(y2));
    ++rep.g_convex_total;
    if (g_viol <= kConvexitySlack) ++rep.g_convex_passed;
    rep.worst_violation = std::max(rep.worst_violation, g_viol);

    // Hamiltonian concave in (y, z): H(mid) >= average.
    const double h1 = relaxed_hamiltonian(spec, t, y1, z1, p, q);
    const double h2 = relaxed_hamiltonian(spec, t, y2, z2, p, q);
    const double hm = relaxed_hamiltonian(spec, t, ym, zm, p, q);
    const double h_viol = 0.5 * (h1 + h2) - hm;
    ++rep.h_concave_total;
    if (h_viol <= kConvexitySlack) ++rep.h_concave_passed;
    rep.worst_violation = std::max(rep.worst_violation, h_viol);
  }
  return rep;
}

}  // namespace relaxbsde
