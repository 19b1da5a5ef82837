#include <doctest.h>

#include <cmath>

#include "relaxbsde/error.hpp"
#include "relaxbsde/verify.hpp"
#include "support.hpp"

using namespace relaxbsde;
using namespace testing;

TEST_CASE("step rule names") {
  CHECK(parse_step_rule("harmonic") == StepRule::kHarmonic);
  CHECK(parse_step_rule(to_string(StepRule::kBacktracking)) == StepRule::kBacktracking);
  CHECK_THROWS_AS(parse_step_rule("newton"), ConfigError);
}

TEST_CASE("P-QUAD from the zero control") {
  const auto spec = builtin("P-QUAD");
  const OptimizerOptions opts;
  const auto res = optimize(spec, constant_dirac(spec, 0), opts);
  CHECK(res.converged);
  CHECK(res.log.size() - 1 <= 25);
  CHECK(res.log.back().gap <= opts.gap_tol);
  CHECK(std::fabs(res.final_cost.mean + 0.5) <= 0.03);
  CHECK(res.schedule == constant_dirac(spec, grid_index(spec, 1.0)));
  CHECK(res.log.size() <= static_cast<std::size_t>(opts.max_iters) + 1);

  SUBCASE("descent is monotone up to noise") {
    for (std::size_t i = 1; i < res.log.size(); ++i)
      CHECK(res.log[i].cost <= res.log[i - 1].cost + 2.0 * std::max(res.log[i].cost_se, res.log[i - 1].cost_se));
  }
  SUBCASE("convergence implies a certificate pass at the same tolerance") {
    CHECK(check_necessary(spec, res.schedule, opts.gap_tol, opts.paths).passed);
  }
}

TEST_CASE("already optimal initial schedule stops at iteration 0") {
  const auto spec = builtin("P-QUAD");
  const auto res = optimize(spec, constant_dirac(spec, grid_index(spec, 1.0)), OptimizerOptions{});
  CHECK(res.converged);
  CHECK(res.log.size() == 1);
  CHECK(res.bsde_solves == 1);
}

TEST_CASE("P-BANG from +1 reaches a mean-zero mixture") {
  const auto spec = builtin("P-BANG");
  const auto res = optimize(spec, constant_dirac(spec, 1), OptimizerOptions{});
  CHECK(res.final_cost.mean <= 0.01);
  double mean = 0.0;
  for (std::size_t k = 0; k < res.schedule.steps(); ++k)
    mean += (-res.schedule.row(k)[0] + res.schedule.row(k)[1]) / static_cast<double>(res.schedule.steps());
  CHECK(std::fabs(mean) <= 0.05);
}

TEST_CASE("harmonic rule makes progress and respects the iteration cap") {
  const auto spec = builtin("P-QUAD", 32);
  OptimizerOptions opts;
  opts.step_rule = StepRule::kHarmonic;
  opts.max_iters = 10;
  opts.paths.paths = 4096;
  const auto res = optimize(spec, constant_dirac(spec, 0), opts);
  CHECK(res.log.size() <= 11);
  CHECK(res.log[1].theta == 1.0);
  CHECK(res.final_cost.mean < res.log.front().cost);
  if (res.converged) CHECK(res.log.back().gap <= opts.gap_tol);
}

TEST_CASE("non-convergence is reported, not thrown") {
  const auto spec = builtin("P-BANG", 32);
  OptimizerOptions opts;
  opts.step_rule = StepRule::kHarmonic;
  opts.max_iters = 1;
  opts.paths.paths = 1024;
  const auto res = optimize(spec, constant_dirac(spec, 1), opts);
  CHECK_FALSE(res.converged);
  CHECK(res.log.size() <= 2);
}

TEST_CASE("invalid options are rejected") {
  const auto spec = builtin("P-QUAD", 8);
  OptimizerOptions opts;
  opts.gap_tol = 0.0;
  CHECK_THROWS_AS(optimize(spec, constant_dirac(spec, 0), opts), ConfigError);
  opts = {};
  opts.max_iters = 0;
  CHECK_THROWS_AS(optimize(spec, constant_dirac(spec, 0), opts), ConfigError);
}

TEST_CASE("directional derivative oracles") {
  const auto spec = builtin("P-QUAD");
  const auto paths = panel(spec);
  const auto d0 = constant_dirac(spec, 0);
  const auto d1 = constant_dirac(spec, grid_index(spec, 1.0));

  const auto zero = directional_derivative(spec, d0, d0, paths, {2});
  CHECK(zero.adjoint_form == 0.0);
  CHECK(zero.variational_form.value() == 0.0);

  const auto down = directional_derivative(spec, d0, d1, paths, {2});
  CHECK(std::fabs(down.adjoint_form + 0.5) <= 0.05);
  CHECK(std::fabs(*down.variational_form + 0.5) <= 0.05);

  const auto up = directional_derivative(spec, d1, d0, paths, {2});
  CHECK(std::fabs(up.adjoint_form - 0.5) <= 0.05);
  CHECK(std::fabs(*up.variational_form - 0.5) <= 0.05);

  CHECK_FALSE(directional_derivative(spec, d0, d1, paths, {2}, false).variational_form.has_value());
}

TEST_CASE("adjoint and variational forms agree") {
  const auto spec = builtin("P-QUAD");
  const auto paths = panel(spec);
  const auto uni = RelaxedControlSchedule::uniform(64, 5);
  for (std::size_t j = 0; j < 5; ++j) {
    const auto d = directional_derivative(spec, uni, constant_dirac(spec, j), paths, {2});
    CHECK(std::fabs(d.adjoint_form - *d.variational_form) <= std::max(0.05, 3.0 * d.combined_se()));
  }
}

TEST_CASE("adjoint and variational forms agree with state feedback") {
  const auto spec = make_polynomial_problem(
      "coupled", {poly({{0.4, 1, 0, 0}, {0.3, 0, 1, 0}, {1.0, 0, 0, 1}}), poly({{0.5, 0, 0, 2}, {0.2, 1, 0, 0}}),
                  poly({{0.5, 2, 0, 0}}), poly({{1.0, 1, 0, 0}})},
      TimeGrid{1.0, 32}, ControlGrid::scalar({-1.0, 0.0, 1.0}));
  const auto paths = panel(spec, 1 << 13);
  const auto d = directional_derivative(spec, RelaxedControlSchedule::uniform(32, 3), constant_dirac(spec, 2), paths, {2});
  CHECK(std::fabs(d.adjoint_form - *d.variational_form) <= std::max(0.05, 3.0 * d.combined_se()));
}

TEST_CASE("finite differences converge to the derivative when the cost is curved in theta") {
  // on P-QUAD the relaxed cost is affine in theta and the error is at rounding level
  const auto spec = make_polynomial_problem(
      "coupled", {poly({{0.4, 1, 0, 0}, {0.5, 1, 0, 1}, {1.0, 0, 0, 1}}), poly({{0.5, 0, 0, 2}}), poly({{0.5, 2, 0, 0}}),
                  poly({{1.0, 1, 0, 0}})},
      TimeGrid{1.0, 32}, ControlGrid::scalar({-1.0, 0.0, 1.0}));
  const auto paths = panel(spec, 1 << 13);
  const auto mu = constant_dirac(spec, 0);
  const auto q = constant_dirac(spec, 2);
  const double D = directional_derivative(spec, mu, q, paths, {2}, false).adjoint_form;
  const double j0 = cost_of(spec, mu, paths);
  std::vector<double> err;
  for (double theta : {0.2, 0.1, 0.05}) err.push_back(std::fabs((cost_of(spec, mix(mu, q, theta), paths) - j0) / theta - D));
  MESSAGE("curved FD errors " << err[0] << " " << err[1] << " " << err[2]);
  CHECK(err[1] * 1.3 <= err[0]);
  CHECK(err[2] * 1.3 <= err[1]);
}
