#include "relaxbsde/paths.hpp"

#include <cmath>
#include <string>

#include "relaxbsde/error.hpp"
#include "relaxbsde/parallel.hpp"

namespace relaxbsde {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(prod >> 32);
  lo = static_cast<std::uint32_t>(prod);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

double counter_uniform(std::uint64_t seed, std::uint64_t a, std::uint32_t b, std::uint32_t c) {
  const auto out = philox4x32(
      {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), b, c},
      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  const std::uint64_t bits = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  // 53 random bits, centred in their cell: never exactly 0 or 1.
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double counter_normal(std::uint64_t seed, std::uint64_t a, std::uint32_t b, std::uint32_t c) {
  return inverse_normal_cdf(counter_uniform(seed, a, b, c));
}

double inverse_normal_cdf(double p) {
  // AS241 PPND16.
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
               1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
               0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
               0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
               7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  return splitmix64(base ^ splitmix64(salt + 0x632BE59BD9B4E019ULL));
}

PathBundle::PathBundle(std::uint64_t seed, TimeGrid grid, int dim, std::vector<double> increments)
    : seed_(seed), grid_(grid), dim_(dim), increments_(std::move(increments)) {
  if (grid_.steps <= 0) throw ConfigError("empty time grid");
  if (dim_ <= 0) throw ConfigError("Brownian dimension must be positive");
  const std::size_t per_path = static_cast<std::size_t>(grid_.steps) * dim_;
  if (increments_.empty() || increments_.size() % per_path != 0)
    throw ConfigError("increment panel size " + std::to_string(increments_.size()) +
                      " is not a positive multiple of steps*dim = " + std::to_string(per_path));
  paths_ = increments_.size() / per_path;

  const std::size_t pos_per_path = static_cast<std::size_t>(grid_.steps + 1) * dim_;
  positions_.assign(paths_ * pos_per_path, 0.0);
  parallel_for(paths_, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t p = b; p < e; ++p) {
      const double* inc = increments_.data() + p * per_path;
      double* pos = positions_.data() + p * pos_per_path;
      for (int k = 0; k < grid_.steps; ++k)
        for (int c = 0; c < dim_; ++c) pos[(k + 1) * dim_ + c] = pos[k * dim_ + c] + inc[k * dim_ + c];
    }
  });
}

std::span<const double> PathBundle::increments(std::size_t path) const {
  const std::size_t per_path = static_cast<std::size_t>(grid_.steps) * dim_;
  return {increments_.data() + path * per_path, per_path};
}

std::span<const double> PathBundle::positions(std::size_t path) const {
  const std::size_t per_path = static_cast<std::size_t>(grid_.steps + 1) * dim_;
  return {positions_.data() + path * per_path, per_path};
}

BrownianPath PathBundle::path(std::size_t p) const {
  return {increments(p), positions(p), grid_.steps, dim_, grid_.dt()};
}

PathBundle generate_paths(std::uint64_t seed, std::size_t n_paths, const TimeGrid& grid, int dim) {
  if (n_paths == 0) throw ConfigError("path count must be at least 1");
  if (dim <= 0) throw ConfigError("Brownian dimension must be positive");
  if (grid.steps <= 0) throw ConfigError("empty time grid");
  if (!(grid.horizon > 0.0)) throw ConfigError("horizon must be positive");

  const std::size_t per_path = static_cast<std::size_t>(grid.steps) * dim;
  const std::size_t per_path_total = per_path + static_cast<std::size_t>(grid.steps + 1) * dim;
  if (n_paths > kMaxPanelEntries / per_path_total)
    throw ConfigError("path panel too large: " + std::to_string(n_paths) + " paths x " +
                      std::to_string(grid.steps) + " steps x " + std::to_string(dim) +
                      " dims exceeds " + std::to_string(kMaxPanelEntries) + " stored values");

  std::vector<double> inc(n_paths * per_path);
  const double sd = std::sqrt(grid.dt());
  parallel_for(n_paths, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t p = b; p < e; ++p)
      for (int k = 0; k < grid.steps; ++k)
        for (int c = 0; c < dim; ++c)
          inc[(p * grid.steps + k) * dim + c] =
              sd * counter_normal(seed, p, static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(c));
  });
  return PathBundle(seed, grid, dim, std::move(inc));
}

std::vector<double> terminal_values(const PathBundle& bundle) {
  const int d = bundle.dim();
  std::vector<double> out(bundle.size() * d);
  for (std::size_t p = 0; p < bundle.size(); ++p)
    for (int c = 0; c < d; ++c) out[p * d + c] = bundle.position(p, bundle.steps(), c);
  return out;
}

}  // namespace relaxbsde
