#include "relaxbsde/registry.hpp"

#include <cmath>
#include <sstream>

#include "relaxbsde/error.hpp"

namespace relaxbsde {
namespace {

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

}  // namespace

double Polynomial::eval(double y, double z, double v) const {
  double s = 0.0;
  for (const auto& t : terms) s += t.coef * ipow(y, t.py) * ipow(z, t.pz) * ipow(v, t.pv);
  return s;
}

double Polynomial::d_dy(double y, double z, double v) const {
  double s = 0.0;
  for (const auto& t : terms)
    if (t.py > 0) s += t.coef * t.py * ipow(y, t.py - 1) * ipow(z, t.pz) * ipow(v, t.pv);
  return s;
}

double Polynomial::d_dz(double y, double z, double v) const {
  double s = 0.0;
  for (const auto& t : terms)
    if (t.pz > 0) s += t.coef * t.pz * ipow(y, t.py) * ipow(z, t.pz - 1) * ipow(v, t.pv);
  return s;
}

ProblemSpec make_polynomial_problem(const std::string& name, const PolynomialProblem& poly, TimeGrid time,
                                    ControlGrid grid) {
  for (const auto* p : {&poly.drift, &poly.running_cost, &poly.terminal_cost, &poly.terminal_condition})
    for (const auto& t : p->terms)
      if (t.py < 0 || t.pz < 0 || t.pv < 0 || !std::isfinite(t.coef))
        throw ConfigError("polynomial terms need finite coefficients and non-negative exponents");
  if (grid.dim() != 1) throw ConfigError("polynomial problems use a scalar control grid");

  ProblemSpec s;
  s.name = name;
  s.n = 1;
  s.d = 1;
  s.grid = std::move(grid);
  s.time = time;
  // Each callback owns a copy of its polynomial so the spec is self-contained.
  s.drift = [b = poly.drift](double, Vec y, Vec z, Vec a, OutVec out) { out[0] = b.eval(y[0], z[0], a[0]); };
  s.running_cost = [h = poly.running_cost](double, Vec y, Vec z, Vec a) { return h.eval(y[0], z[0], a[0]); };
  s.terminal_cost = [g = poly.terminal_cost](Vec y) { return g.eval(y[0], 0.0, 0.0); };
  s.terminal_condition = [xi = poly.terminal_condition](const BrownianPath& path, OutVec out) {
    out[0] = xi.eval(path.terminal()[0], 0.0, 0.0);
  };
  s.gradients.b_y = [b = poly.drift](double, Vec y, Vec z, Vec a, OutVec out) { out[0] = b.d_dy(y[0], z[0], a[0]); };
  s.gradients.b_z = [b = poly.drift](double, Vec y, Vec z, Vec a, OutVec out) { out[0] = b.d_dz(y[0], z[0], a[0]); };
  s.gradients.h_y = [h = poly.running_cost](double, Vec y, Vec z, Vec a, OutVec out) { out[0] = h.d_dy(y[0], z[0], a[0]); };
  s.gradients.h_z = [h = poly.running_cost](double, Vec y, Vec z, Vec a, OutVec out) { out[0] = h.d_dz(y[0], z[0], a[0]); };
  s.gradients.g_y = [g = poly.terminal_cost](Vec y, OutVec out) { out[0] = g.d_dy(y[0], 0.0, 0.0); };
  return s;
}

const std::vector<BuiltinProblem>& builtin_problems() {
  static const std::vector<BuiltinProblem> registry = [] {
    std::vector<BuiltinProblem> r;
    r.push_back({"P-LIN",
                 "b = y, h = 0, g = 0, xi = W_T; control has no effect",
                 {{{{1.0, 1, 0, 0}}}, {}, {}, {{{1.0, 1, 0, 0}}}},
                 ControlGrid::scalar({0.0}),
                 {{"z0", std::exp(-1.0)}}});
    r.push_back({"P-QUAD",
                 "b = v, h = v^2/2, g(y) = y, xi = W_T",
                 {{{{1.0, 0, 0, 1}}}, {{{0.5, 0, 0, 2}}}, {{{1.0, 1, 0, 0}}}, {{{1.0, 1, 0, 0}}}},
                 ControlGrid::scalar({0.0, 0.5, 1.0, 1.5, 2.0}),
                 {{"v_star", 1.0}, {"J_star", -0.5}, {"p", 1.0}}});
    r.push_back({"P-BANG",
                 "b = v, h = 0, g(y) = y^2, xi = 0; relaxed optimum at any mean-zero mixture",
                 {{{{1.0, 0, 0, 1}}}, {}, {{{1.0, 2, 0, 0}}}, {}},
                 ControlGrid::scalar({-1.0, 1.0}),
                 {{"J_relaxed_star", 0.0}, {"J_strict_inf", 0.0}}});
    return r;
  }();
  return registry;
}

std::string registry_listing() {
  std::ostringstream os;
  for (const auto& p : builtin_problems()) {
    os << p.name << "  " << p.description << "  [reference:";
    for (const auto& [k, v] : p.reference) os << ' ' << k << '=' << v;
    os << "]\n";
  }
  return os.str();
}

const BuiltinProblem& find_builtin(const std::string& name) {
  for (const auto& p : builtin_problems())
    if (p.name == name) return p;
  throw ConfigError("unknown problem '" + name + "'; available problems:\n" + registry_listing());
}

ProblemSpec make_builtin(const std::string& name, TimeGrid time, std::optional<ControlGrid> grid) {
  const auto& b = find_builtin(name);
  return make_polynomial_problem(b.name, b.coefficients, time, grid.value_or(b.default_grid));
}

}  // namespace relaxbsde
