#include <doctest.h>

#include <cmath>

#include "relaxbsde/error.hpp"
#include "relaxbsde/parallel.hpp"
#include "relaxbsde/paths.hpp"

using namespace relaxbsde;

TEST_CASE("philox known answer") {
  const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);
  const auto ones = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  CHECK(ones[0] == 0x408f276du);
  CHECK(ones[1] == 0x41c83b0eu);
  CHECK(ones[2] == 0xa20bc7c6u);
  CHECK(ones[3] == 0x6d5451fdu);
  const auto pi = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  CHECK(pi[0] == 0xd16cfe09u);
  CHECK(pi[1] == 0x94fdccebu);
  CHECK(pi[2] == 0x5001e420u);
  CHECK(pi[3] == 0x24126ea1u);
}

TEST_CASE("inverse normal cdf matches erfc") {
  // tail probabilities are computed from the small side, where erfc is accurate
  for (double x = 0.0; x <= 8.0; x += 0.125) {
    const double tail = 0.5 * std::erfc(x / std::sqrt(2.0));
    CHECK(inverse_normal_cdf(tail) == doctest::Approx(-x).epsilon(1e-9));
    if (x <= 3.0) CHECK(inverse_normal_cdf(1.0 - tail) == doctest::Approx(x).epsilon(1e-9));
  }
  for (double u : {0.02, 0.3, 0.7, 0.98}) CHECK(inverse_normal_cdf(u) == doctest::Approx(-inverse_normal_cdf(1.0 - u)).epsilon(1e-9));
  CHECK(inverse_normal_cdf(0.5) == 0.0);
  CHECK(inverse_normal_cdf(1e-300) < -37.0);
}

TEST_CASE("uniforms stay inside the open unit interval") {
  for (std::uint32_t i = 0; i < 10000; ++i) {
    const double u = counter_uniform(3, i, i % 7, 0);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("generate_paths is deterministic") {
  const TimeGrid g{1.0, 4};
  const auto a = generate_paths(7, 2, g, 1);
  const auto b = generate_paths(7, 2, g, 1);
  CHECK(a.raw_increments() == b.raw_increments());
  CHECK(generate_paths(8, 2, g, 1).raw_increments() != a.raw_increments());
}

TEST_CASE("path-extension stability") {
  const TimeGrid g{1.0, 6};
  const auto big = generate_paths(5, 10, g, 2);
  const auto small = generate_paths(5, 5, g, 2);
  for (std::size_t p = 0; p < 5; ++p) {
    const auto x = big.increments(p);
    const auto y = small.increments(p);
    CHECK(std::equal(x.begin(), x.end(), y.begin(), y.end()));
  }
}

TEST_CASE("increment moments") {
  {
    const auto b = generate_paths(7, 100000, TimeGrid{1.0, 1}, 1);
    const auto s = mean_and_std_error(b.raw_increments());
    CHECK(std::fabs(s.mean) <= 0.013);
  }
  {
    const auto b = generate_paths(7, 100000, TimeGrid{0.25, 1}, 1);
    double ss = 0.0;
    for (double x : b.raw_increments()) ss += x * x;
    const double var = ss / 100000.0;
    CHECK(var >= 0.24);
    CHECK(var <= 0.26);
  }
  {
    // all steps of a K = 16 panel: mean 0, variance dt within 4 standard errors
    const int K = 16;
    const std::size_t N = 20000;
    const auto b = generate_paths(11, N, TimeGrid{1.0, K}, 1);
    const auto& inc = b.raw_increments();
    const double dt = 1.0 / K;
    double s = 0.0, ss = 0.0;
    for (double x : inc) {
      s += x;
      ss += x * x;
    }
    const double M = static_cast<double>(inc.size());
    CHECK(std::fabs(s / M) <= 4.0 * std::sqrt(dt / M));
    CHECK(std::fabs(ss / M - dt) <= 4.0 * dt * std::sqrt(2.0 / M));
  }
}

TEST_CASE("positions start at zero and accumulate increments") {
  const auto b = generate_paths(1, 3, TimeGrid{1.0, 5}, 2);
  for (std::size_t p = 0; p < 3; ++p)
    for (int c = 0; c < 2; ++c) {
      CHECK(b.position(p, 0, c) == 0.0);
      double w = 0.0;
      for (int k = 0; k < 5; ++k) {
        w += b.increment(p, k, c);
        CHECK(b.position(p, k + 1, c) == w);
      }
    }
}

TEST_CASE("terminal values") {
  CHECK(terminal_values(PathBundle(0, TimeGrid{1.0, 3}, 1, {0, 0, 0, 0, 0, 0})) == std::vector<double>{0, 0});
  CHECK(terminal_values(PathBundle(0, TimeGrid{1.0, 1}, 1, {0.25})) == std::vector<double>{0.25});
  CHECK(terminal_values(PathBundle(0, TimeGrid{1.0, 2}, 1, {0.5, -0.2}))[0] == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("oversized and empty panels are rejected") {
  CHECK_THROWS_AS(generate_paths(1, std::size_t{1} << 30, TimeGrid{1.0, 64}, 1), ConfigError);
  CHECK_THROWS_AS(generate_paths(1, 0, TimeGrid{1.0, 4}, 1), ConfigError);
  CHECK_THROWS_AS(generate_paths(1, 4, TimeGrid{1.0, 0}, 1), ConfigError);
}

TEST_CASE("derived seeds differ") {
  CHECK(derive_seed(7, 1) != derive_seed(7, 2));
  CHECK(derive_seed(7, 1) != derive_seed(8, 1));
  CHECK(derive_seed(7, 1) == derive_seed(7, 1));
}

TEST_CASE("parallel reductions do not depend on worker count") {
  std::vector<double> v(10000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = counter_normal(1, i, 0, 0);
  set_worker_count(1);
  const auto a = mean_and_std_error(v);
  set_worker_count(4);
  const auto b = mean_and_std_error(v);
  set_worker_count(0);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("parallel_for rethrows the lowest failing chunk") {
  set_worker_count(3);
  try {
    parallel_for(5000, [](std::size_t, std::size_t, std::size_t c) {
      if (c == 2 || c == 7) throw SolverError("chunk " + std::to_string(c));
    });
    FAIL("expected an exception");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()) == "chunk 2");
  }
  set_worker_count(0);
}
