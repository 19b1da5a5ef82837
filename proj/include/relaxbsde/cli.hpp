#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relaxbsde/io.hpp"
#include "relaxbsde/registry.hpp"

namespace relaxbsde::cli {

/// Everything that determines a run's numerical output. Worker count is
/// deliberately absent: it never changes results.
struct RunConfig {
  std::string problem = "P-QUAD";
  /// Used when problem == "inline".
  std::optional<PolynomialProblem> inline_problem;
  std::uint64_t seed = 7;
  std::size_t paths = 16384;
  int steps = 64;
  double horizon = 1.0;
  int basis_degree = 2;
  /// "" (problem default), "a,b,c" or "lattice:lo:hi:count".
  std::string grid;
  int max_iters = 50;
  /// Unset: 0.01 for optimize, 3 standard errors + 0.01 for verify.
  std::optional<double> gap_tol;
  std::string step_rule = "backtracking";
  std::vector<std::size_t> refinements{1, 2, 4, 8, 16};
  /// "" (command default), "constant:<v>", "index:<j>", "uniform" or "file:<csv>".
  std::string control;
  std::string out = "out";

  bool operator==(const RunConfig&) const = default;
};

nlohmann::json to_json(const RunConfig& cfg);
/// Applies the keys present in j on top of base. Unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});

ControlGrid parse_grid(const std::string& text);
std::vector<std::size_t> parse_refinements(const std::string& text);
ProblemSpec resolve_problem(const RunConfig& cfg);
io::AnySchedule parse_control(const std::string& text, const ProblemSpec& spec);

enum ExitCode : int { kOk = 0, kSolverFailure = 1, kConfigFailure = 2, kVerifyFailed = 3 };

/// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace relaxbsde::cli
