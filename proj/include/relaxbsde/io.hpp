#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "relaxbsde/adjoint.hpp"
#include "relaxbsde/bsde.hpp"
#include "relaxbsde/chattering.hpp"
#include "relaxbsde/hamiltonian.hpp"
#include "relaxbsde/optimizer.hpp"
#include "relaxbsde/paths.hpp"
#include "relaxbsde/problem.hpp"
#include "relaxbsde/verify.hpp"

namespace relaxbsde::io {

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

// Schedules: relaxed as `w0,...,w{m-1}`, strict as a single `index` column.
void write_schedule_csv(std::ostream& os, const RelaxedControlSchedule& s);
void write_schedule_csv(std::ostream& os, const StrictControlSchedule& s);
using AnySchedule = std::variant<StrictControlSchedule, RelaxedControlSchedule>;
/// Dispatches on the header. grid_size is needed for strict schedules.
AnySchedule read_schedule_csv(std::istream& is, std::size_t grid_size);

/// `path,step,dW_0..dW_{d-1}`
void write_paths_csv(std::ostream& os, const PathBundle& paths);
/// `path,step,y_0..y_{n-1},z_00..z_{(n-1)(d-1)}`; the terminal row has empty z cells.
void write_trajectory_csv(std::ostream& os, const TrajectoryBundle& traj);
/// `path,step,p_0..p_{n-1}`
void write_adjoint_csv(std::ostream& os, const AdjointBundle& adj);

/// `iter,cost,cost_se,gap,theta`
void write_iterations_csv(std::ostream& os, const std::vector<IterationRecord>& log);
/// `r,J_strict,J_strict_se,J_relaxed,J_relaxed_se,abs_gap`
void write_chatter_csv(std::ostream& os, const std::vector<ChatterResult>& results);

/// {"total_gap":..., "per_step":[...], "argmax":[...]} plus std_error and eps_num.
nlohmann::json to_json(const GapReport& gap);
nlohmann::json to_json(const Certificate& cert);
nlohmann::json to_json(const ConvexityReport& rep);
nlohmann::json to_json(const CostEstimate& cost);

}  // namespace relaxbsde::io
