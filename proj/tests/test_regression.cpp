#include <doctest.h>

#include <cmath>

#include "relaxbsde/error.hpp"
#include "relaxbsde/paths.hpp"
#include "relaxbsde/regression.hpp"

using namespace relaxbsde;

TEST_CASE("basis size") {
  CHECK(basis_size(1, 0) == 1);
  CHECK(basis_size(1, 2) == 3);
  CHECK(basis_size(2, 2) == 6);
  CHECK(basis_size(3, 1) == 4);
}

TEST_CASE("constant targets are reproduced exactly") {
  const auto paths = generate_paths(3, 1000, TimeGrid{1.0, 8}, 1);
  StepRegression reg(paths, 4, RegressionBasis{2});
  std::vector<double> t(1000, 0.3), f(1000, -1.0);
  reg.fit(t, 1, f);
  for (double v : f) CHECK(v == 0.3);
  CHECK(reg.residual_rms() == 0.0);
}

TEST_CASE("targets inside the span are recovered") {
  const auto paths = generate_paths(3, 4000, TimeGrid{1.0, 8}, 1);
  const int k = 5;
  StepRegression reg(paths, k, RegressionBasis{2});
  std::vector<double> t(2 * 4000), f(2 * 4000);
  for (std::size_t p = 0; p < 4000; ++p) {
    const double w = paths.position(p, k, 0);
    t[2 * p] = 1.0 + 2.0 * w - 0.5 * w * w;
    t[2 * p + 1] = -w;
  }
  reg.fit(t, 2, f);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(f[i] == doctest::Approx(t[i]).epsilon(1e-9).scale(1.0));
  CHECK(reg.residual_rms() < 1e-10);
  CHECK(reg.active_features() == 3);
}

TEST_CASE("projection of noise onto an independent basis is its mean") {
  // W_{t_k} is independent of the future increment, so E_k[dW_k] fits to ~0
  const auto paths = generate_paths(9, 1 << 14, TimeGrid{1.0, 4}, 1);
  StepRegression reg(paths, 2, RegressionBasis{2});
  std::vector<double> t(1 << 14), f(1 << 14);
  for (std::size_t p = 0; p < t.size(); ++p) t[p] = paths.increment(p, 2, 0);
  reg.fit(t, 1, f);
  double worst = 0.0;
  for (double v : f) worst = std::max(worst, std::fabs(v));
  CHECK(worst < 0.05);
}

TEST_CASE("step zero has a degenerate basis and still fits the mean") {
  const auto paths = generate_paths(3, 500, TimeGrid{1.0, 4}, 2);
  StepRegression reg(paths, 0, RegressionBasis{2});
  std::vector<double> t(500), f(500);
  double mean = 0.0;
  for (std::size_t p = 0; p < 500; ++p) {
    t[p] = paths.increment(p, 0, 0);
    mean += t[p] / 500.0;
  }
  reg.fit(t, 1, f);
  CHECK(reg.active_features() == 1);
  for (double v : f) CHECK(v == doctest::Approx(mean).epsilon(1e-12).scale(1.0));
}

TEST_CASE("rank deficiency is a solver error naming the step") {
  // two paths cannot support a quadratic basis in W
  const auto paths = generate_paths(3, 2, TimeGrid{1.0, 4}, 1);
  StepRegression reg(paths, 3, RegressionBasis{2});
  std::vector<double> t{0.0, 1.0}, f(2);
  try {
    reg.fit(t, 1, f);
    FAIL("expected a solver error");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("step 3") != std::string::npos);
  }
}
