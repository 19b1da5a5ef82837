#include "relaxbsde/chattering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relaxbsde/error.hpp"
#include "relaxbsde/paths.hpp"

namespace relaxbsde {

std::vector<std::size_t> occupation_counts(std::span<const double> row, std::size_t r) {
  if (r == 0) throw ConfigError("refinement factor must be at least 1");
  const std::size_t m = row.size();
  std::vector<std::size_t> counts(m);
  std::vector<double> rem(m);
  std::size_t used = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double target = static_cast<double>(r) * row[j];
    double fl = std::floor(target);
    // Snap targets that sit a rounding error below an integer.
    if (target - fl > 1.0 - kTieTolerance) fl += 1.0;
    counts[j] = static_cast<std::size_t>(fl);
    rem[j] = std::max(0.0, target - fl);
    used += counts[j];
  }
  // Rounding can only push the floors over r by snapping; trim from the end.
  for (std::size_t j = m; used > r && j-- > 0;) {
    const std::size_t take = std::min(counts[j], used - r);
    counts[j] -= take;
    used -= take;
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (std::fabs(rem[a] - rem[b]) <= kTieTolerance) return a < b;
    return rem[a] > rem[b];
  });
  for (std::size_t i = 0; used < r; ++i, ++used) ++counts[order[i % m]];
  return counts;
}

StrictControlSchedule chatter(const RelaxedControlSchedule& mu, std::size_t r) {
  if (r == 0) throw ConfigError("refinement factor must be at least 1");
  std::vector<std::size_t> idx;
  idx.reserve(mu.steps() * r);
  for (std::size_t k = 0; k < mu.steps(); ++k) {
    const auto counts = occupation_counts(mu.row(k), r);
    for (std::size_t j = 0; j < counts.size(); ++j) idx.insert(idx.end(), counts[j], j);
  }
  return StrictControlSchedule(std::move(idx), mu.grid_size());
}

std::vector<ChatterResult> compare_values(const ProblemSpec& spec, const RelaxedControlSchedule& mu,
                                          const std::vector<std::size_t>& refinements, const PathsConfig& cfg) {
  if (refinements.empty()) throw ConfigError("refinement list is empty");
  if (!std::is_sorted(refinements.begin(), refinements.end()) ||
      std::adjacent_find(refinements.begin(), refinements.end()) != refinements.end())
    throw ConfigError("refinements must be strictly ascending");
  if (refinements.front() == 0) throw ConfigError("refinement factor must be at least 1");

  std::vector<ChatterResult> out;
  for (std::size_t r : refinements) {
    const auto fine = spec.with_time(spec.time.refined(static_cast<int>(r)));
    const auto paths = generate_paths(derive_seed(cfg.seed, r), cfg.paths, fine.time, fine.d);
    auto strict = chatter(mu, r);
    const auto strict_relaxed = dirac_embed(strict);
    const auto lifted = mu.lifted(r);
    const auto traj_s = solve_bsde(fine, strict_relaxed, paths, cfg.basis);
    const auto js = evaluate_cost(fine, strict_relaxed, traj_s);
    const auto traj_r = solve_bsde(fine, lifted, paths, cfg.basis);
    const auto jr = evaluate_cost(fine, lifted, traj_r);
    out.push_back({r, std::move(strict), js, jr, std::fabs(js.mean - jr.mean),
                   std::sqrt(js.std_error * js.std_error + jr.std_error * jr.std_error)});
  }
  return out;
}

ValueEqualityReport value_equality_check(const ProblemSpec& spec, const ValueEqualityOptions& opts) {
  const auto init = opts.init.value_or(RelaxedControlSchedule::uniform(spec.time.steps, spec.grid.size()));
  auto relaxed = optimize(spec, init, opts.optimizer);
  const std::size_t r = *std::max_element(opts.refinements.begin(), opts.refinements.end());
  auto chattered = compare_values(spec, relaxed.schedule, {r}, opts.optimizer.paths).front();
  const double jr = chattered.j_relaxed.mean;
  const double js = chattered.j_strict.mean;
  const double diff = chattered.abs_gap;
  ValueEqualityReport rep{std::move(relaxed), std::move(chattered), jr, js, diff, opts.tolerance,
                          diff <= opts.tolerance};
  return rep;
}

}  // namespace relaxbsde
