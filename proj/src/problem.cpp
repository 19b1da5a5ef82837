#include "relaxbsde/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "relaxbsde/error.hpp"
#include "relaxbsde/paths.hpp"

namespace relaxbsde {

// ---------------------------------------------------------------------------
// ControlGrid

ControlGrid::ControlGrid(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0) throw ConfigError("control dimension must be positive");
  if (coords_.empty() || coords_.size() % dim_ != 0)
    throw ConfigError("control grid needs at least one point of dimension " + std::to_string(dim_));
  for (double c : coords_)
    if (!std::isfinite(c)) throw ConfigError("control grid contains a non-finite coordinate");
  const std::size_t m = size();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (std::equal(coords_.begin() + i * dim_, coords_.begin() + (i + 1) * dim_, coords_.begin() + j * dim_))
        throw ConfigError("control grid points " + std::to_string(i) + " and " + std::to_string(j) +
                          " coincide");
}

ControlGrid ControlGrid::scalar(std::vector<double> points) { return ControlGrid(1, std::move(points)); }

ControlGrid ControlGrid::lattice(double lo, double hi, std::size_t count) {
  if (count == 0) throw ConfigError("lattice needs at least one point");
  if (count == 1) return scalar({lo});
  if (!(hi > lo)) throw ConfigError("lattice bounds must satisfy lo < hi");
  std::vector<double> pts(count);
  for (std::size_t i = 0; i < count; ++i)
    pts[i] = i + 1 == count ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return scalar(std::move(pts));
}

std::span<const double> ControlGrid::point(std::size_t j) const {
  if (j >= size()) throw ConfigError("grid index " + std::to_string(j) + " out of range");
  return {coords_.data() + j * dim_, dim_};
}

// ---------------------------------------------------------------------------
// ProblemSpec derivatives

ProblemSpec ProblemSpec::with_time(TimeGrid t) const {
  ProblemSpec copy = *this;
  copy.time = t;
  return copy;
}

namespace {

double fd_delta(double x) { return kFdStep * std::max(1.0, std::fabs(x)); }

/// Central differences of a vector-valued f with respect to the entries of x.
/// out[i * x.size() + j] = d f_i / d x_j.
template <typename Eval>
void central_jacobian(std::span<const double> x, std::size_t out_dim, Eval&& eval, OutVec out) {
  std::vector<double> xp(x.begin(), x.end());
  std::vector<double> fp(out_dim), fm(out_dim);
  const std::size_t nx = x.size();
  for (std::size_t j = 0; j < nx; ++j) {
    const double h = fd_delta(x[j]);
    xp[j] = x[j] + h;
    eval(std::span<const double>(xp), std::span<double>(fp));
    xp[j] = x[j] - h;
    eval(std::span<const double>(xp), std::span<double>(fm));
    xp[j] = x[j];
    for (std::size_t i = 0; i < out_dim; ++i) out[i * nx + j] = (fp[i] - fm[i]) / (2.0 * h);
  }
}

}  // namespace

void ProblemSpec::fd_b_y(double t, Vec y, Vec z, Vec a, OutVec out) const {
  central_jacobian(y, n, [&](Vec yy, OutVec o) { drift(t, yy, z, a, o); }, out);
}

void ProblemSpec::fd_b_z(double t, Vec y, Vec z, Vec a, OutVec out) const {
  central_jacobian(z, n, [&](Vec zz, OutVec o) { drift(t, y, zz, a, o); }, out);
}

void ProblemSpec::fd_h_y(double t, Vec y, Vec z, Vec a, OutVec out) const {
  central_jacobian(y, 1, [&](Vec yy, OutVec o) { o[0] = running_cost(t, yy, z, a); }, out);
}

void ProblemSpec::fd_h_z(double t, Vec y, Vec z, Vec a, OutVec out) const {
  central_jacobian(z, 1, [&](Vec zz, OutVec o) { o[0] = running_cost(t, y, zz, a); }, out);
}

void ProblemSpec::fd_g_y(Vec y, OutVec out) const {
  central_jacobian(y, 1, [&](Vec yy, OutVec o) { o[0] = terminal_cost(yy); }, out);
}

void ProblemSpec::b_y(double t, Vec y, Vec z, Vec a, OutVec out) const {
  gradients.b_y ? gradients.b_y(t, y, z, a, out) : fd_b_y(t, y, z, a, out);
}
void ProblemSpec::b_z(double t, Vec y, Vec z, Vec a, OutVec out) const {
  gradients.b_z ? gradients.b_z(t, y, z, a, out) : fd_b_z(t, y, z, a, out);
}
void ProblemSpec::h_y(double t, Vec y, Vec z, Vec a, OutVec out) const {
  gradients.h_y ? gradients.h_y(t, y, z, a, out) : fd_h_y(t, y, z, a, out);
}
void ProblemSpec::h_z(double t, Vec y, Vec z, Vec a, OutVec out) const {
  gradients.h_z ? gradients.h_z(t, y, z, a, out) : fd_h_z(t, y, z, a, out);
}
void ProblemSpec::g_y(Vec y, OutVec out) const { gradients.g_y ? gradients.g_y(y, out) : fd_g_y(y, out); }

void require_well_formed(const ProblemSpec& spec) {
  if (spec.n <= 0) throw ConfigError("state dimension n must be positive");
  if (spec.d <= 0) throw ConfigError("Brownian dimension d must be positive");
  if (spec.time.steps <= 0) throw ConfigError("empty time grid");
  if (!(spec.time.horizon > 0.0) || !std::isfinite(spec.time.horizon))
    throw ConfigError("horizon T must be positive and finite");
  if (!spec.drift) throw ConfigError("problem has no drift");
  if (!spec.running_cost) throw ConfigError("problem has no running cost");
  if (!spec.terminal_cost) throw ConfigError("problem has no terminal cost");
  if (!spec.terminal_condition) throw ConfigError("problem has no terminal condition");
}

// ---------------------------------------------------------------------------
// Schedules

StrictControlSchedule::StrictControlSchedule(std::vector<std::size_t> indices, std::size_t grid_size)
    : indices_(std::move(indices)), grid_size_(grid_size) {
  if (grid_size_ == 0) throw ConfigError("strict schedule needs a non-empty grid");
  for (std::size_t k = 0; k < indices_.size(); ++k)
    if (indices_[k] >= grid_size_)
      throw ConfigError("strict schedule index " + std::to_string(indices_[k]) + " at step " +
                        std::to_string(k) + " is outside [0, " + std::to_string(grid_size_) + ")");
}

StrictControlSchedule StrictControlSchedule::constant(std::size_t steps, std::size_t index,
                                                      std::size_t grid_size) {
  return StrictControlSchedule(std::vector<std::size_t>(steps, index), grid_size);
}

RelaxedControlSchedule::RelaxedControlSchedule(std::size_t steps, std::size_t grid_size,
                                               std::vector<double> weights)
    : steps_(steps), grid_size_(grid_size), weights_(std::move(weights)) {
  if (grid_size_ == 0) throw ConfigError("relaxed schedule needs a non-empty grid");
  if (weights_.size() != steps_ * grid_size_)
    throw ConfigError("relaxed schedule has " + std::to_string(weights_.size()) + " weights, expected " +
                      std::to_string(steps_ * grid_size_));
  for (std::size_t k = 0; k < steps_; ++k) {
    double* r = weights_.data() + k * grid_size_;
    double sum = 0.0;
    for (std::size_t j = 0; j < grid_size_; ++j) {
      if (!(r[j] >= 0.0) || !std::isfinite(r[j]))
        throw ConfigError("relaxed schedule weight at step " + std::to_string(k) + ", point " +
                          std::to_string(j) + " is negative or non-finite");
      sum += r[j];
    }
    const double dev = std::fabs(sum - 1.0);
    if (dev <= kSimplexTol) continue;
    if (dev > kRenormalizeTol) {
      std::ostringstream os;
      os.precision(17);
      os << "relaxed schedule row " << k << " sums to " << sum << ", not 1";
      throw ConfigError(os.str());
    }
    for (std::size_t j = 0; j < grid_size_; ++j) r[j] /= sum;
  }
}

RelaxedControlSchedule RelaxedControlSchedule::uniform(std::size_t steps, std::size_t grid_size) {
  if (grid_size == 0) throw ConfigError("relaxed schedule needs a non-empty grid");
  return {steps, grid_size, std::vector<double>(steps * grid_size, 1.0 / static_cast<double>(grid_size))};
}

std::vector<std::size_t> RelaxedControlSchedule::argmax_indices() const {
  std::vector<std::size_t> out(steps_);
  for (std::size_t k = 0; k < steps_; ++k) {
    auto r = row(k);
    out[k] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

bool RelaxedControlSchedule::is_dirac() const {
  for (std::size_t k = 0; k < steps_; ++k) {
    auto r = row(k);
    if (std::count(r.begin(), r.end(), 1.0) != 1) return false;
  }
  return true;
}

RelaxedControlSchedule RelaxedControlSchedule::lifted(std::size_t factor) const {
  if (factor == 0) throw ConfigError("refinement factor must be at least 1");
  std::vector<double> w;
  w.reserve(weights_.size() * factor);
  for (std::size_t k = 0; k < steps_; ++k)
    for (std::size_t s = 0; s < factor; ++s) w.insert(w.end(), row(k).begin(), row(k).end());
  return {steps_ * factor, grid_size_, std::move(w)};
}

RelaxedControlSchedule dirac_embed(const StrictControlSchedule& v) {
  const std::size_t m = v.grid_size();
  std::vector<double> w(v.steps() * m, 0.0);
  for (std::size_t k = 0; k < v.steps(); ++k) w[k * m + v[k]] = 1.0;
  return {v.steps(), m, std::move(w)};
}

RelaxedControlSchedule mix(const RelaxedControlSchedule& mu, const RelaxedControlSchedule& q, double theta) {
  if (mu.steps() != q.steps() || mu.grid_size() != q.grid_size())
    throw ConfigError("mix requires schedules of identical shape");
  if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("mix weight theta must lie in [0, 1]");
  if (theta == 0.0) return mu;
  if (theta == 1.0) return q;
  std::vector<double> w(mu.weights().size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = (1.0 - theta) * mu.weights()[i] + theta * q.weights()[i];
  return {mu.steps(), mu.grid_size(), std::move(w)};
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

constexpr int kFinitenessProbes = 16;
constexpr int kGradientProbes = 10;
constexpr double kGradientRelTol = 1e-4;

struct Probe {
  double t;
  std::vector<double> y, z;
};

Probe draw_probe(const ProblemSpec& spec, std::uint64_t seed, std::uint64_t index) {
  Probe pr;
  pr.t = spec.time.horizon * counter_uniform(seed, index, 0, 0);
  pr.y.resize(spec.n);
  pr.z.resize(spec.z_size());
  for (int i = 0; i < spec.n; ++i) pr.y[i] = counter_normal(seed, index, 1, static_cast<std::uint32_t>(i));
  for (std::size_t i = 0; i < pr.z.size(); ++i) pr.z[i] = counter_normal(seed, index, 2, static_cast<std::uint32_t>(i));
  return pr;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double max_rel_error(std::span<const double> analytic, std::span<const double> fd) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i)
    worst = std::max(worst, std::fabs(analytic[i] - fd[i]) / std::max(1.0, std::fabs(fd[i])));
  return worst;
}

}  // namespace

ValidationReport validate_problem(const ProblemSpec& spec, const RelaxedControlSchedule* schedule,
                                  std::uint64_t probe_seed) {
  require_well_formed(spec);
  ValidationReport report;
  const std::size_t m = spec.grid.size();
  const std::size_t n = spec.n;
  const std::size_t zs = spec.z_size();

  // Finiteness of b, h, g.
  {
    ValidationCheck c{"finite_coefficients", true, ""};
    std::vector<double> b(n);
    for (int i = 0; i < kFinitenessProbes && c.passed; ++i) {
      const Probe pr = draw_probe(spec, probe_seed, static_cast<std::uint64_t>(i));
      if (!std::isfinite(spec.terminal_cost(pr.y))) {
        c = {"finite_coefficients", false, "g is non-finite at probe " + std::to_string(i)};
        break;
      }
      for (std::size_t j = 0; j < m; ++j) {
        spec.drift(pr.t, pr.y, pr.z, spec.grid.point(j), b);
        if (!all_finite(b)) {
          c = {"finite_coefficients", false,
               "b is non-finite at probe " + std::to_string(i) + ", grid point " + std::to_string(j)};
          break;
        }
        if (!std::isfinite(spec.running_cost(pr.t, pr.y, pr.z, spec.grid.point(j)))) {
          c = {"finite_coefficients", false,
               "h is non-finite at probe " + std::to_string(i) + ", grid point " + std::to_string(j)};
          break;
        }
      }
    }
    if (c.passed) c.detail = std::to_string(kFinitenessProbes) + " probes x " + std::to_string(m) + " grid points";
    report.checks.push_back(std::move(c));
  }

  // Gradient consistency for every analytic gradient supplied.
  auto grad_check = [&](const char* name, bool supplied, std::size_t size, auto&& analytic, auto&& fd) {
    report.gradient_modes.emplace_back(name, supplied ? GradientMode::kAnalytic : GradientMode::kFiniteDifference);
    if (!supplied) return;
    std::vector<double> ga(size), gf(size);
    double worst = 0.0;
    int worst_probe = -1;
    for (int i = 0; i < kGradientProbes; ++i) {
      const Probe pr = draw_probe(spec, probe_seed, 1000 + static_cast<std::uint64_t>(i));
      const auto a = spec.grid.point(static_cast<std::size_t>(i) % m);
      analytic(pr, a, std::span<double>(ga));
      fd(pr, a, std::span<double>(gf));
      const double err = all_finite(ga) ? max_rel_error(ga, gf) : INFINITY;
      if (!(err <= worst)) {
        worst = err;
        worst_probe = i;
      }
    }
    std::ostringstream os;
    os << "max relative error " << worst;
    if (worst > kGradientRelTol) os << " at probe " << worst_probe;
    report.checks.push_back({std::string("gradient_") + name, worst <= kGradientRelTol, os.str()});
  };

  grad_check("b_y", static_cast<bool>(spec.gradients.b_y), n * n,
             [&](const Probe& p, Vec a, OutVec o) { spec.gradients.b_y(p.t, p.y, p.z, a, o); },
             [&](const Probe& p, Vec a, OutVec o) { spec.fd_b_y(p.t, p.y, p.z, a, o); });
  grad_check("b_z", static_cast<bool>(spec.gradients.b_z), n * zs,
             [&](const Probe& p, Vec a, OutVec o) { spec.gradients.b_z(p.t, p.y, p.z, a, o); },
             [&](const Probe& p, Vec a, OutVec o) { spec.fd_b_z(p.t, p.y, p.z, a, o); });
  grad_check("h_y", static_cast<bool>(spec.gradients.h_y), n,
             [&](const Probe& p, Vec a, OutVec o) { spec.gradients.h_y(p.t, p.y, p.z, a, o); },
             [&](const Probe& p, Vec a, OutVec o) { spec.fd_h_y(p.t, p.y, p.z, a, o); });
  grad_check("h_z", static_cast<bool>(spec.gradients.h_z), zs,
             [&](const Probe& p, Vec a, OutVec o) { spec.gradients.h_z(p.t, p.y, p.z, a, o); },
             [&](const Probe& p, Vec a, OutVec o) { spec.fd_h_z(p.t, p.y, p.z, a, o); });
  grad_check("g_y", static_cast<bool>(spec.gradients.g_y), n,
             [&](const Probe& p, Vec, OutVec o) { spec.gradients.g_y(p.y, o); },
             [&](const Probe& p, Vec, OutVec o) { spec.fd_g_y(p.y, o); });

  if (schedule != nullptr) {
    const bool shape_ok = schedule->steps() == static_cast<std::size_t>(spec.time.steps) && schedule->grid_size() == m;
    bool simplex_ok = shape_ok;
    for (std::size_t k = 0; simplex_ok && k < schedule->steps(); ++k) {
      double s = 0.0;
      for (double w : schedule->row(k)) {
        if (w < 0.0) simplex_ok = false;
        s += w;
      }
      if (std::fabs(s - 1.0) > kSimplexTol) simplex_ok = false;
    }
    report.checks.push_back({"schedule_simplex", simplex_ok,
                             shape_ok ? (simplex_ok ? "rows on the simplex" : "row off the simplex")
                                      : "schedule shape does not match K x m"});
  }
  return report;
}

}  // namespace relaxbsde
