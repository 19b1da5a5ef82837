#pragma once

#include <optional>
#include <string>
#include <vector>

#include "relaxbsde/problem.hpp"

namespace relaxbsde {

/// c * y^py * z^pz * v^pv (scalar problems).
struct Monomial {
  double coef = 0.0;
  int py = 0;
  int pz = 0;
  int pv = 0;

  bool operator==(const Monomial&) const = default;
};

/// Sum of monomials in (y, z, v). Missing variables have exponent 0.
struct Polynomial {
  std::vector<Monomial> terms;

  double eval(double y, double z, double v) const;
  double d_dy(double y, double z, double v) const;
  double d_dz(double y, double z, double v) const;

  bool operator==(const Polynomial&) const = default;
};

/// Scalar (n = d = 1, scalar control) problem with polynomial coefficients:
///   b = drift(y, z, v), h = running_cost(y, z, v), g = terminal_cost(y),
///   xi = terminal_condition(W_T)   (the y slot of each polynomial is used).
/// Gradients are supplied analytically.
struct PolynomialProblem {
  Polynomial drift;
  Polynomial running_cost;
  Polynomial terminal_cost;
  Polynomial terminal_condition;

  bool operator==(const PolynomialProblem&) const = default;
};

ProblemSpec make_polynomial_problem(const std::string& name, const PolynomialProblem& poly, TimeGrid time,
                                    ControlGrid grid);

struct BuiltinProblem {
  std::string name;
  std::string description;
  PolynomialProblem coefficients;
  ControlGrid default_grid;
  /// Closed-form reference values, "key=value" pairs for display.
  std::vector<std::pair<std::string, double>> reference;
};

/// P-LIN, P-QUAD and P-BANG (all scalar, T = 1).
const std::vector<BuiltinProblem>& builtin_problems();

/// Throws ConfigError listing the registry if the name is unknown.
const BuiltinProblem& find_builtin(const std::string& name);

/// Builds a registry problem on the given time grid; `grid` overrides the default grid.
ProblemSpec make_builtin(const std::string& name, TimeGrid time, std::optional<ControlGrid> grid = std::nullopt);

std::string registry_listing();

}  // namespace relaxbsde
