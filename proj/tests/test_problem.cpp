#include <doctest.h>

#include <cmath>
#include <limits>

#include "relaxbsde/error.hpp"
#include "support.hpp"

using namespace relaxbsde;
using testing::builtin;

TEST_CASE("control grid validation") {
  CHECK_THROWS_AS(ControlGrid::scalar({}), ConfigError);
  CHECK_THROWS_AS(ControlGrid::scalar({0.0, 1.0, 0.0}), ConfigError);
  CHECK_THROWS_AS(ControlGrid::scalar({std::nan("")}), ConfigError);
  CHECK_THROWS_AS(ControlGrid(2, {0.0, 1.0, 2.0}), ConfigError);
  const auto g = ControlGrid::lattice(-1.0, 1.0, 5);
  REQUIRE(g.size() == 5);
  CHECK(g.point(0)[0] == -1.0);
  CHECK(g.point(4)[0] == 1.0);
  CHECK(g.point(2)[0] == doctest::Approx(0.0));
  CHECK(ControlGrid(2, {0, 0, 1, 0, 0, 1}).size() == 3);
}

TEST_CASE("time grid nodes") {
  const TimeGrid t{1.0, 3};
  CHECK(t.node(0) == 0.0);
  CHECK(t.node(3) == 1.0);
  CHECK(t.refined(4).steps == 12);
}

TEST_CASE("validate_problem on P-QUAD passes every check") {
  const auto spec = builtin("P-QUAD");
  const auto rep = validate_problem(spec);
  CHECK(rep.all_passed());
  REQUIRE(rep.find("finite_coefficients"));
  REQUIRE(rep.find("gradient_g_y"));
  for (const auto& [name, mode] : rep.gradient_modes) CHECK(mode == GradientMode::kAnalytic);
}

TEST_CASE("empty time grid is rejected") {
  auto spec = builtin("P-QUAD");
  spec.time.steps = 0;
  try {
    validate_problem(spec);
    FAIL("expected rejection");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("empty time grid") != std::string::npos);
  }
}

TEST_CASE("inconsistent analytic gradient is reported") {
  auto spec = builtin("P-QUAD");
  spec.gradients.g_y = [](Vec, OutVec out) { out[0] = 0.0; };
  const auto rep = validate_problem(spec);
  CHECK_FALSE(rep.all_passed());
  REQUIRE(rep.find("gradient_g_y"));
  CHECK_FALSE(rep.find("gradient_g_y")->passed);
  CHECK(rep.find("gradient_b_y")->passed);
}

TEST_CASE("missing gradients fall back to finite differences") {
  auto spec = builtin("P-BANG");
  spec.gradients = {};
  CHECK(spec.mode_g_y() == GradientMode::kFiniteDifference);
  double y = 0.7, g = 0.0;
  spec.g_y(Vec(&y, 1), OutVec(&g, 1));
  CHECK(g == doctest::Approx(1.4).epsilon(1e-8));
  const auto rep = validate_problem(spec);
  CHECK(rep.all_passed());
}

TEST_CASE("non-finite coefficients are reported") {
  auto spec = builtin("P-QUAD");
  spec.running_cost = [](double, Vec, Vec, Vec a) { return a[0] > 1.5 ? std::numeric_limits<double>::infinity() : 0.0; };
  CHECK_FALSE(validate_problem(spec).find("finite_coefficients")->passed);
}

TEST_CASE("validate_problem is side-effect free") {
  const auto spec = builtin("P-BANG");
  const auto mu = RelaxedControlSchedule::uniform(spec.time.steps, 2);
  CHECK(validate_problem(spec, &mu, 11) == validate_problem(spec, &mu, 11));
}

TEST_CASE("schedule compatibility check") {
  const auto spec = builtin("P-QUAD");
  const auto wrong = RelaxedControlSchedule::uniform(spec.time.steps, 3);
  CHECK_FALSE(validate_problem(spec, &wrong).find("schedule_simplex")->passed);
}

TEST_CASE("dirac_embed") {
  const auto r = dirac_embed(StrictControlSchedule({1, 0}, 3));
  CHECK(r.weights() == std::vector<double>{0, 1, 0, 1, 0, 0});
  const auto single = dirac_embed(StrictControlSchedule::constant(5, 0, 1));
  for (std::size_t k = 0; k < 5; ++k) CHECK(single.row(k)[0] == 1.0);
  CHECK(single.is_dirac());
  const auto round = dirac_embed(StrictControlSchedule(r.argmax_indices(), 3));
  CHECK(round == r);
  CHECK_THROWS_AS(StrictControlSchedule({3}, 3), ConfigError);
}

TEST_CASE("mix") {
  const RelaxedControlSchedule mu(1, 2, {1.0, 0.0});
  const RelaxedControlSchedule q(1, 2, {0.0, 1.0});
  CHECK(mix(mu, q, 0.0) == mu);
  CHECK(mix(mu, q, 1.0) == q);
  CHECK(mix(mu, q, 0.5).weights() == std::vector<double>{0.5, 0.5});
  CHECK_THROWS_AS(mix(mu, q, 1.5), ConfigError);
  CHECK_THROWS_AS(mix(mu, RelaxedControlSchedule::uniform(1, 3), 0.5), ConfigError);
}

TEST_CASE("relaxed schedule simplex handling") {
  CHECK_THROWS_AS(RelaxedControlSchedule(1, 2, {-0.1, 1.1}), ConfigError);
  CHECK_THROWS_AS(RelaxedControlSchedule(1, 2, {0.5, 0.4}), ConfigError);
  CHECK_THROWS_AS(RelaxedControlSchedule(1, 2, {0.5}), ConfigError);
  const RelaxedControlSchedule near(1, 2, {0.5, 0.5 + 5e-10});
  CHECK(std::fabs(near.row(0)[0] + near.row(0)[1] - 1.0) <= 1e-12);
  const RelaxedControlSchedule exact(1, 3, {0.2, 0.3, 0.5});
  CHECK(exact.weights() == std::vector<double>{0.2, 0.3, 0.5});
  const auto lifted = exact.lifted(3);
  CHECK(lifted.steps() == 3);
  CHECK(lifted.row(2)[2] == 0.5);
}
