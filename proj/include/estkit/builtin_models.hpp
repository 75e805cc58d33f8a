#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "estkit/models.hpp"

namespace estkit {

// Model identifiers accepted by builtin_model().
inline constexpr std::string_view kLinear1D = "linear-1d";
inline constexpr std::string_view kLinearCv2D = "linear-cv-2d";
inline constexpr std::string_view kRangeBearing2D = "range-bearing-2d";
inline constexpr std::string_view kHeadingRobot = "heading-robot-se2-lite";

std::span<const std::string_view> builtin_model_names();

/// Tunables for the built-in scenario library. Each model reads only its own
/// subset; see README for which keys apply where.
struct ModelParams {
  // linear-1d
  double sigma2_motion = 0.5;
  double sigma2_obs = 1.0;

  // linear-cv-2d: state (px, py, vx, vy), control (ax, ay), position fixes
  double accel_noise = 0.1;  // white-noise acceleration spectral density
  double position_noise = 0.05;

  // linear-cv-2d, range-bearing-2d, heading-robot-se2-lite
  double dt = 0.1;

  // range-bearing-2d, heading-robot-se2-lite: state (x, y, θ), control (v, ω)
  std::array<double, 3> motion_noise{1e-3, 1e-3, 1e-4};  // per-axis variances
  double range_noise = 1e-2;
  double bearing_noise = 1e-3;
  std::vector<std::array<double, 2>> landmarks{{5.0, 5.0}, {2.0, 8.0}};

  // Initial truth state; empty means the zero vector.
  Vector initial_state;
};

using AnyModel = std::variant<Linear1DModel, LinearModel, NonlinearModel, ErrorStateModel>;

/// Builds a fully populated model from the scenario library.
/// Throws UsageError listing the valid names when `name` is unknown.
AnyModel builtin_model(std::string_view name, const ModelParams& params = {});

// State / error-state / control / observation sizes of a built-in.
struct ModelDims {
  Eigen::Index state = 0;
  Eigen::Index error = 0;
  Eigen::Index control = 0;
  Eigen::Index obs = 0;
};
ModelDims builtin_model_dims(std::string_view name, const ModelParams& params = {});

// Control applied every step when a scenario does not give a schedule.
Vector default_control(std::string_view name);

// Unicycle pieces shared by range-bearing-2d and heading-robot-se2-lite.
Vector unicycle_step(const Vector& x, const Vector& u, double dt);
Matrix unicycle_jacobian(const Vector& x, const Vector& u, double dt);
Vector range_bearing(const Vector& x, std::span<const std::array<double, 2>> landmarks);
Matrix range_bearing_jacobian(const Vector& x, std::span<const std::array<double, 2>> landmarks);
// z − ẑ with every bearing component wrapped.
Vector range_bearing_residual(const Vector& z, const Vector& z_pred);
// a − b with the heading wrapped.
Vector pose_residual(const Vector& a, const Vector& b);

/// Worst finite-difference disagreement of one analytic Jacobian.
struct JacobianCheck {
  std::string jacobian;
  double max_rel_error = 0.0;
};

/// Compares every analytic Jacobian of a built-in model with central
/// differences at `points` random evaluation points drawn from `seed`.
/// Differences of angular outputs are wrapped so the check is smooth across ±π.
std::vector<JacobianCheck> check_model_jacobians(std::string_view name, const ModelParams& params,
                                                 int points, std::uint64_t seed);

}  // namespace estkit
