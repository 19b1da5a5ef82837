#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "relaxbsde/problem.hpp"

namespace relaxbsde {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Uniform in the open interval (0, 1), a pure function of (seed, a, b, c).
double counter_uniform(std::uint64_t seed, std::uint64_t a, std::uint32_t b, std::uint32_t c);

/// Standard normal via inverse CDF, a pure function of (seed, a, b, c).
double counter_normal(std::uint64_t seed, std::uint64_t a, std::uint32_t b, std::uint32_t c);

/// Inverse of the standard normal CDF (Wichura's AS241, ~1e-16 relative accuracy).
double inverse_normal_cdf(double u);

/// Deterministic seed for an auxiliary stream, e.g. a refined grid.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

/// Upper bound on stored doubles (increments plus positions) per bundle.
inline constexpr std::size_t kMaxPanelEntries = std::size_t{1} << 28;

/// Brownian increments for N paths on a time grid, plus the running positions
/// W_{t_k} derived from them.
class PathBundle {
 public:
  /// increments: N x K x d, path-major.
  PathBundle(std::uint64_t seed, TimeGrid grid, int dim, std::vector<double> increments);

  std::size_t size() const { return paths_; }
  int steps() const { return grid_.steps; }
  int dim() const { return dim_; }
  double dt() const { return grid_.dt(); }
  const TimeGrid& time() const { return grid_; }
  std::uint64_t seed() const { return seed_; }

  std::span<const double> increments(std::size_t path) const;
  std::span<const double> positions(std::size_t path) const;
  double increment(std::size_t path, int step, int coord) const {
    return increments_[(path * grid_.steps + step) * dim_ + coord];
  }
  double position(std::size_t path, int step, int coord) const {
    return positions_[(path * (grid_.steps + 1) + step) * dim_ + coord];
  }
  BrownianPath path(std::size_t p) const;

  const std::vector<double>& raw_increments() const { return increments_; }

 private:
  std::uint64_t seed_;
  TimeGrid grid_;
  int dim_;
  std::size_t paths_;
  std::vector<double> increments_;
  std::vector<double> positions_;
};

/// Increments are Normal(0, dt) keyed on (seed, path, step, coordinate), so
/// path p is the same for any N and any worker count.
PathBundle generate_paths(std::uint64_t seed, std::size_t n_paths, const TimeGrid& grid, int dim);

/// W_T per path, N x d.
std::vector<double> terminal_values(const PathBundle& bundle);

}  // namespace relaxbsde
