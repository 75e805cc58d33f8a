#pragma once

#include <ostream>
#include <span>
#include <string>

#include "estkit/sim.hpp"

namespace estkit::cli {

// Shortest round-trippable text for a double (17 significant digits).
std::string format_double(double v);

/// Trajectory table. Header:
///   step,x_0..x_{n-1},u_0..u_{m-1},z_0..z_{k-1}
/// Row 0 holds the initial truth with empty control and measurement fields;
/// row t holds the truth, control and measurement of step t.
void write_trajectory_csv(std::ostream& out, const Trajectory& t);

/// Per-step estimates, one row per (filter, step), grouped by filter:
///   step,filter,x_hat_0..,P_diag_0..,nees,iterations,innovation_norm
/// followed by a summary block:
///   # summary
///   filter,rmse_0..,mean_nees,mean_iterations
///   <one row per filter>
void write_run_csv(std::ostream& out, std::span<const RunReport> reports);

}  // namespace estkit::cli
