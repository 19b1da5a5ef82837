#include "relaxbsde/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "relaxbsde/adjoint.hpp"
#include "relaxbsde/chattering.hpp"
#include "relaxbsde/error.hpp"
#include "relaxbsde/optimizer.hpp"
#include "relaxbsde/parallel.hpp"
#include "relaxbsde/verify.hpp"

namespace relaxbsde::cli {

using nlohmann::json;

// ---------------------------------------------------------------------------
// RunConfig <-> JSON

namespace {

json poly_to_json(const Polynomial& p) {
  json a = json::array();
  for (const auto& t : p.terms) a.push_back({t.coef, t.py, t.pz, t.pv});
  return a;
}

Polynomial poly_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string("inline.") + what + " must be an array of [coef, py, pz, pv]");
  Polynomial p;
  for (const auto& t : j) {
    if (!t.is_array() || t.empty() || t.size() > 4)
      throw ConfigError(std::string("inline.") + what + ": each term is [coef, py, pz, pv]");
    Monomial m;
    m.coef = t[0].get<double>();
    if (t.size() > 1) m.py = t[1].get<int>();
    if (t.size() > 2) m.pz = t[2].get<int>();
    if (t.size() > 3) m.pv = t[3].get<int>();
    p.terms.push_back(m);
  }
  return p;
}

}  // namespace

json to_json(const RunConfig& cfg) {
  json j{{"problem", cfg.problem},
         {"seed", cfg.seed},
         {"paths", cfg.paths},
         {"steps", cfg.steps},
         {"horizon", cfg.horizon},
         {"basis_degree", cfg.basis_degree},
         {"grid", cfg.grid},
         {"max_iters", cfg.max_iters},
         {"gap_tol", cfg.gap_tol ? json(*cfg.gap_tol) : json(nullptr)},
         {"step_rule", cfg.step_rule},
         {"refinements", cfg.refinements},
         {"control", cfg.control},
         {"out", cfg.out}};
  if (cfg.inline_problem)
    j["inline"] = {{"drift", poly_to_json(cfg.inline_problem->drift)},
                   {"running_cost", poly_to_json(cfg.inline_problem->running_cost)},
                   {"terminal_cost", poly_to_json(cfg.inline_problem->terminal_cost)},
                   {"terminal_condition", poly_to_json(cfg.inline_problem->terminal_condition)}};
  return j;
}

RunConfig config_from_json(const json& j, RunConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "problem") c.problem = v.get<std::string>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "paths") c.paths = v.get<std::size_t>();
      else if (key == "steps") c.steps = v.get<int>();
      else if (key == "horizon") c.horizon = v.get<double>();
      else if (key == "basis_degree") c.basis_degree = v.get<int>();
      else if (key == "grid") c.grid = v.get<std::string>();
      else if (key == "max_iters") c.max_iters = v.get<int>();
      else if (key == "gap_tol") c.gap_tol = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      else if (key == "step_rule") c.step_rule = v.get<std::string>();
      else if (key == "refinements") c.refinements = v.get<std::vector<std::size_t>>();
      else if (key == "control") c.control = v.get<std::string>();
      else if (key == "out") c.out = v.get<std::string>();
      else if (key == "inline") {
        PolynomialProblem p;
        if (v.contains("drift")) p.drift = poly_from_json(v["drift"], "drift");
        if (v.contains("running_cost")) p.running_cost = poly_from_json(v["running_cost"], "running_cost");
        if (v.contains("terminal_cost")) p.terminal_cost = poly_from_json(v["terminal_cost"], "terminal_cost");
        if (v.contains("terminal_condition"))
          p.terminal_condition = poly_from_json(v["terminal_condition"], "terminal_condition");
        c.inline_problem = p;
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Parsing helpers

namespace {

double to_double(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("cannot parse ") + what + " '" + s + "'");
  }
}

std::size_t to_index(const std::string& s, const char* what) {
  const double v = to_double(s, what);
  if (v < 0 || v != std::floor(v)) throw ConfigError(std::string(what) + " must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  return out;
}

}  // namespace

ControlGrid parse_grid(const std::string& text) {
  if (text.rfind("lattice:", 0) == 0) {
    const auto parts = split(text.substr(8), ':');
    if (parts.size() != 3) throw ConfigError("grid lattice form is lattice:lo:hi:count");
    return ControlGrid::lattice(to_double(parts[0], "grid bound"), to_double(parts[1], "grid bound"),
                                to_index(parts[2], "grid count"));
  }
  std::vector<double> pts;
  for (const auto& p : split(text, ',')) pts.push_back(to_double(p, "grid point"));
  if (pts.empty()) throw ConfigError("grid needs at least one point");
  return ControlGrid::scalar(std::move(pts));
}

std::vector<std::size_t> parse_refinements(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& p : split(text, ',')) out.push_back(to_index(p, "refinement"));
  if (out.empty()) throw ConfigError("refinement list is empty");
  return out;
}

ProblemSpec resolve_problem(const RunConfig& cfg) {
  if (cfg.steps <= 0) throw ConfigError("empty time grid");
  if (cfg.paths == 0) throw ConfigError("path count must be at least 1");
  if (cfg.basis_degree < 0) throw ConfigError("basis degree must be non-negative");
  const TimeGrid time{cfg.horizon, cfg.steps};
  std::optional<ControlGrid> grid;
  if (!cfg.grid.empty()) grid = parse_grid(cfg.grid);
  ProblemSpec spec;
  if (cfg.problem == "inline") {
    if (!cfg.inline_problem) throw ConfigError("problem 'inline' needs an \"inline\" section in the config file");
    spec = make_polynomial_problem("inline", *cfg.inline_problem, time, grid.value_or(ControlGrid::scalar({0.0})));
  } else {
    spec = make_builtin(cfg.problem, time, grid);
  }
  require_well_formed(spec);
  return spec;
}

io::AnySchedule parse_control(const std::string& text, const ProblemSpec& spec) {
  const std::size_t K = spec.time.steps;
  const std::size_t m = spec.grid.size();
  if (text == "uniform") return RelaxedControlSchedule::uniform(K, m);
  if (text.rfind("index:", 0) == 0) return StrictControlSchedule::constant(K, to_index(text.substr(6), "control index"), m);
  if (text.rfind("constant:", 0) == 0) {
    if (spec.grid.dim() != 1) throw ConfigError("constant controls need a scalar grid");
    const double v = to_double(text.substr(9), "control value");
    for (std::size_t j = 0; j < m; ++j)
      if (std::fabs(spec.grid.point(j)[0] - v) <= 1e-12) return StrictControlSchedule::constant(K, j, m);
    throw ConfigError("control value " + text.substr(9) + " is not a grid point");
  }
  if (text.rfind("file:", 0) == 0) {
    std::ifstream in(text.substr(5));
    if (!in) throw ConfigError("cannot open control file " + text.substr(5));
    auto s = io::read_schedule_csv(in, m);
    const std::size_t steps = std::visit([](const auto& x) { return x.steps(); }, s);
    if (steps != K) throw ConfigError("control file has " + std::to_string(steps) + " rows, expected " + std::to_string(K));
    if (const auto* r = std::get_if<RelaxedControlSchedule>(&s); r && r->grid_size() != m)
      throw ConfigError("control file has the wrong number of grid columns");
    return s;
  }
  throw ConfigError("unknown control '" + text + "' (constant:<v>, index:<j>, uniform, file:<csv>)");
}

// ---------------------------------------------------------------------------
// Commands

namespace {

RelaxedControlSchedule as_relaxed(const io::AnySchedule& s) {
  if (const auto* strict = std::get_if<StrictControlSchedule>(&s)) return dirac_embed(*strict);
  return std::get<RelaxedControlSchedule>(s);
}

PathsConfig paths_config(const RunConfig& cfg) { return {cfg.seed, cfg.paths, RegressionBasis{cfg.basis_degree}}; }

std::filesystem::path prepare_out(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw ConfigError("output directory " + cfg.out + " is not writable");
  return dir;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << content;
}

void write_json(const std::filesystem::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

struct Outcome {
  json summary;
  std::string line;
  int code = kOk;
};

Outcome cmd_solve(const RunConfig& cfg, const ProblemSpec& spec, const std::filesystem::path&) {
  const auto control = as_relaxed(parse_control(cfg.control.empty() ? "index:0" : cfg.control, spec));
  const auto pc = paths_config(cfg);
  const auto paths = generate_paths(pc.seed, pc.paths, spec.time, spec.d);
  const auto traj = solve_bsde(spec, control, paths, pc.basis);
  const auto cost = evaluate_cost(spec, control, traj);
  json y0 = traj.y_at(0, 0), z0 = traj.z_at(0, 0);
  Outcome o;
  o.summary = {{"cost", cost.mean}, {"cost_se", cost.std_error}, {"y0", y0}, {"z0", z0}};
  std::ostringstream os;
  os << "solve " << spec.name << ": J = " << cost.mean << " +/- " << cost.std_error << ", y0 = " << traj.y_at(0, 0)[0]
     << ", z0 = " << traj.z_at(0, 0)[0];
  o.line = os.str();
  return o;
}

Outcome cmd_optimize(const RunConfig& cfg, const ProblemSpec& spec, const std::filesystem::path& dir) {
  const auto init = as_relaxed(parse_control(cfg.control.empty() ? "index:0" : cfg.control, spec));
  OptimizerOptions opts;
  opts.max_iters = cfg.max_iters;
  opts.gap_tol = cfg.gap_tol.value_or(0.01);
  opts.step_rule = parse_step_rule(cfg.step_rule);
  opts.paths = paths_config(cfg);
  const auto res = optimize(spec, init, opts);

  std::ostringstream iters, sched;
  io::write_iterations_csv(iters, res.log);
  io::write_schedule_csv(sched, res.schedule);
  write_file(dir / "iterations.csv", iters.str());
  write_file(dir / "schedule.csv", sched.str());

  Outcome o;
  o.summary = {{"cost", res.final_cost.mean},
               {"cost_se", res.final_cost.std_error},
               {"gap", res.final_gap.total_gap},
               {"gap_tol", opts.gap_tol},
               {"converged", res.converged},
               {"iterations", res.log.size() - 1},
               {"bsde_solves", res.bsde_solves}};
  std::ostringstream os;
  os << "optimize " << spec.name << ": J = " << res.final_cost.mean << " +/- " << res.final_cost.std_error
     << ", gap = " << res.final_gap.total_gap << ", " << (res.converged ? "converged" : "not converged") << " after "
     << res.log.size() - 1 << " iterations";
  o.line = os.str();
  return o;
}

Outcome cmd_gap(const RunConfig& cfg, const ProblemSpec& spec, const std::filesystem::path& dir) {
  const auto control = as_relaxed(parse_control(cfg.control.empty() ? "index:0" : cfg.control, spec));
  const auto pc = paths_config(cfg);
  const auto paths = generate_paths(pc.seed, pc.paths, spec.time, spec.d);
  const auto traj = solve_bsde(spec, control, paths, pc.basis);
  const auto adj = solve_adjoint(spec, control, traj, paths);
  const auto gap = hamiltonian_gap(spec, control, traj, adj);
  write_json(dir / "gap.json", io::to_json(gap));
  Outcome o;
  o.summary = {{"gap", gap.total_gap}, {"gap_se", gap.std_error}, {"cost", evaluate_cost(spec, control, traj).mean}};
  std::ostringstream os;
  os << "gap " << spec.name << ": total gap = " << gap.total_gap << " +/- " << gap.std_error;
  o.line = os.str();
  return o;
}

Outcome cmd_chatter(const RunConfig& cfg, const ProblemSpec& spec, const std::filesystem::path& dir) {
  const auto mu = as_relaxed(parse_control(cfg.control.empty() ? "uniform" : cfg.control, spec));
  const auto results = compare_values(spec, mu, cfg.refinements, paths_config(cfg));
  std::ostringstream csv;
  io::write_chatter_csv(csv, results);
  write_file(dir / "chatter.csv", csv.str());
  const auto& last = results.back();
  Outcome o;
  o.summary = {{"refinement", last.refinement},
               {"J_strict", last.j_strict.mean},
               {"J_relaxed", last.j_relaxed.mean},
               {"abs_gap", last.abs_gap}};
  std::ostringstream os;
  os << "chatter " << spec.name << ": r = " << last.refinement << ", |J_strict - J_relaxed| = " << last.abs_gap;
  o.line = os.str();
  return o;
}

Outcome cmd_verify(const RunConfig& cfg, const ProblemSpec& spec, const std::filesystem::path& dir) {
  const auto control = parse_control(cfg.control.empty() ? "index:0" : cfg.control, spec);
  const auto pc = paths_config(cfg);
  const auto cert = std::visit([&](const auto& c) { return check_necessary(spec, c, cfg.gap_tol, pc); }, control);
  const auto conv = check_sufficient_hypotheses(spec, as_relaxed(control), 256, derive_seed(cfg.seed, 0xC0417E), pc);
  write_json(dir / "certificate.json", {{"certificate", io::to_json(cert)}, {"convexity", io::to_json(conv)}});
  Outcome o;
  o.summary = {{"gap", cert.total_gap},
               {"tol", cert.tol},
               {"verdict", cert.passed ? "pass" : "fail"},
               {"cost", cert.cost.mean},
               {"cost_se", cert.cost.std_error},
               {"sufficient_hypotheses_hold", conv.all_passed()}};
  std::ostringstream os;
  os << "verify " << spec.name << ": " << (cert.passed ? "PASS" : "FAIL") << " (" << to_string(cert.kind)
     << ", gap = " << cert.total_gap << ", tol = " << cert.tol << ")";
  o.line = os.str();
  o.code = cert.passed ? kOk : kVerifyFailed;
  return o;
}

struct RawFlags {
  std::string problem, grid, step_rule, refinements, control, out, config;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  int steps = 0, basis_degree = 0, max_iters = 0;
  double gap_tol = 0.0;
  unsigned workers = 0;
};

struct FlagHandles {
  CLI::Option *problem, *seed, *paths, *steps, *grid, *basis_degree, *max_iters, *gap_tol, *step_rule, *refinements,
      *control, *out, *workers, *config;
};

FlagHandles add_flags(CLI::App& sub, RawFlags& f) {
  FlagHandles h;
  h.problem = sub.add_option("--problem", f.problem, "Builtin problem name, or 'inline' with --config");
  h.seed = sub.add_option("--seed", f.seed, "Base seed for the Brownian panel");
  h.paths = sub.add_option("--paths", f.paths, "Number of Monte-Carlo paths");
  h.steps = sub.add_option("--steps", f.steps, "Number of time steps K");
  h.grid = sub.add_option("--grid", f.grid, "Control grid: a,b,c or lattice:lo:hi:count");
  h.basis_degree = sub.add_option("--basis-degree", f.basis_degree, "Polynomial regression degree");
  h.max_iters = sub.add_option("--max-iters", f.max_iters, "Optimizer iteration cap");
  h.gap_tol = sub.add_option("--gap-tol", f.gap_tol, "Hamiltonian-gap tolerance");
  h.step_rule = sub.add_option("--step-rule", f.step_rule, "backtracking or harmonic");
  h.refinements = sub.add_option("--refinements", f.refinements, "Comma-separated chattering refinements");
  h.control = sub.add_option("--control", f.control, "constant:<v>, index:<j>, uniform or file:<csv>");
  h.out = sub.add_option("--out", f.out, "Output directory");
  h.workers = sub.add_option("--workers", f.workers, "Thread cap (results do not depend on it)");
  h.config = sub.add_option("--config", f.config, "Flat JSON config file; flags override it");
  return h;
}

RunConfig build_config(const RawFlags& f, const FlagHandles& h) {
  RunConfig cfg;
  if (h.config->count()) {
    std::ifstream in(f.config);
    if (!in) throw ConfigError("cannot open config file " + f.config);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    cfg = config_from_json(j);
  }
  if (h.problem->count()) cfg.problem = f.problem;
  if (h.seed->count()) cfg.seed = f.seed;
  if (h.paths->count()) cfg.paths = f.paths;
  if (h.steps->count()) cfg.steps = f.steps;
  if (h.grid->count()) cfg.grid = f.grid;
  if (h.basis_degree->count()) cfg.basis_degree = f.basis_degree;
  if (h.max_iters->count()) cfg.max_iters = f.max_iters;
  if (h.gap_tol->count()) cfg.gap_tol = f.gap_tol;
  if (h.step_rule->count()) cfg.step_rule = f.step_rule;
  if (h.refinements->count()) cfg.refinements = parse_refinements(f.refinements);
  if (h.control->count()) cfg.control = f.control;
  if (h.out->count()) cfg.out = f.out;
  return cfg;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal control of backward SDEs with relaxed and strict controls", "relaxbsde"};
  app.require_subcommand(1);
  RawFlags flags;
  const std::vector<std::string> names{"solve", "optimize", "gap", "chatter", "verify"};
  std::vector<std::pair<CLI::App*, FlagHandles>> subs;
  for (const auto& name : names) {
    auto* sub = app.add_subcommand(name, name == "solve"      ? "Solve the controlled BSDE and report the cost"
                                         : name == "optimize" ? "Conditional-gradient optimization over relaxed schedules"
                                         : name == "gap"      ? "Integrated Hamiltonian gap of a schedule"
                                         : name == "chatter"  ? "Compare relaxed and chattered strict costs"
                                                              : "Maximum-principle certificate (exit 3 on failure)");
    subs.emplace_back(sub, add_flags(*sub, flags));
  }
  auto* list = app.add_subcommand("list-problems", "List builtin problems");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kConfigFailure;
  }

  if (list->parsed()) {
    out << registry_listing();
    return kOk;
  }

  const auto it = std::find_if(subs.begin(), subs.end(), [](const auto& s) { return s.first->parsed(); });
  const std::string command = it->first->get_name();
  try {
    const RunConfig cfg = build_config(flags, it->second);
    if (it->second.workers->count()) set_worker_count(flags.workers);
    const ProblemSpec spec = resolve_problem(cfg);
    const auto dir = prepare_out(cfg);

    const auto start = std::chrono::steady_clock::now();
    Outcome o = command == "solve"      ? cmd_solve(cfg, spec, dir)
                : command == "optimize" ? cmd_optimize(cfg, spec, dir)
                : command == "gap"      ? cmd_gap(cfg, spec, dir)
                : command == "chatter"  ? cmd_chatter(cfg, spec, dir)
                                        : cmd_verify(cfg, spec, dir);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.summary["command"] = command;
    o.summary["problem"] = spec.name;
    o.summary["config"] = to_json(cfg);
    o.summary["wall_time_s"] = wall;
    write_json(dir / "summary.json", o.summary);
    out << o.line << "\n";
    return o.code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const std::exception& e) {
    err << "solver error: " << e.what() << "\n";
    return kSolverFailure;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace relaxbsde::cli
