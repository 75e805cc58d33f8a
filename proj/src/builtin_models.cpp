#include "estkit/builtin_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "estkit/errors.hpp"

namespace estkit {
namespace {

constexpr std::array<std::string_view, 4> kNames{kLinear1D, kLinearCv2D, kRangeBearing2D,
                                                 kHeadingRobot};

std::string valid_names() {
  std::string out;
  for (auto n : kNames) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

LinearModel make_cv2d(const ModelParams& p) {
  const double dt = p.dt;
  LinearModel m;
  m.F = Matrix::Identity(4, 4);
  m.F(0, 2) = dt;
  m.F(1, 3) = dt;
  m.B = Matrix::Zero(4, 2);
  m.B(0, 0) = m.B(1, 1) = 0.5 * dt * dt;
  m.B(2, 0) = m.B(3, 1) = dt;
  m.H = Matrix::Zero(2, 4);
  m.H(0, 0) = m.H(1, 1) = 1.0;
  // Discretized continuous white-noise acceleration, per axis.
  m.Q = Matrix::Zero(4, 4);
  const double q = p.accel_noise;
  for (int axis = 0; axis < 2; ++axis) {
    m.Q(axis, axis) = q * dt * dt * dt / 3.0;
    m.Q(axis, axis + 2) = m.Q(axis + 2, axis) = q * dt * dt / 2.0;
    m.Q(axis + 2, axis + 2) = q * dt;
  }
  m.R = p.position_noise * Matrix::Identity(2, 2);
  return m;
}

Matrix pose_noise(const ModelParams& p) {
  return Vector(Eigen::Vector3d(p.motion_noise[0], p.motion_noise[1], p.motion_noise[2]))
      .asDiagonal();
}

Matrix range_bearing_noise(const ModelParams& p) {
  const auto k = static_cast<Eigen::Index>(2 * p.landmarks.size());
  Matrix r = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; i += 2) {
    r(i, i) = p.range_noise;
    r(i + 1, i + 1) = p.bearing_noise;
  }
  return r;
}

NonlinearModel make_range_bearing(const ModelParams& p) {
  if (p.landmarks.empty()) throw UsageError("range-bearing-2d needs at least one landmark");
  NonlinearModel m;
  m.name = std::string(kRangeBearing2D);
  m.state_dim = 3;
  m.control_dim = 2;
  m.obs_dim = static_cast<Eigen::Index>(2 * p.landmarks.size());
  const double dt = p.dt;
  const auto landmarks = p.landmarks;
  m.f = [dt](const Vector& x, const Vector& u, const Vector& w) -> Vector {
    Vector out = unicycle_step(x, u, dt) + w;
    out[2] = wrap_angle(out[2]);
    return out;
  };
  m.h = [landmarks](const Vector& x, const Vector& v) -> Vector {
    Vector z = range_bearing(x, landmarks) + v;
    for (Eigen::Index i = 1; i < z.size(); i += 2) z[i] = wrap_angle(z[i]);
    return z;
  };
  m.jac_f_x = [dt](const Vector& x, const Vector& u) -> Matrix { return unicycle_jacobian(x, u, dt); };
  m.jac_f_w = [](const Vector&, const Vector&) -> Matrix { return Matrix::Identity(3, 3); };
  m.jac_h_x = [landmarks](const Vector& x) -> Matrix { return range_bearing_jacobian(x, landmarks); };
  m.jac_h_v = [k = m.obs_dim](const Vector&) -> Matrix { return Matrix::Identity(k, k); };
  m.Q = pose_noise(p);
  m.R = range_bearing_noise(p);
  m.obs_residual = range_bearing_residual;
  m.state_residual = pose_residual;
  return m;
}

ErrorStateModel make_heading_robot(const ModelParams& p) {
  if (p.landmarks.empty()) throw UsageError("heading-robot-se2-lite needs at least one landmark");
  ErrorStateModel m;
  m.name = std::string(kHeadingRobot);
  m.nominal_dim = 3;
  m.error_dim = 3;
  m.control_dim = 2;
  m.obs_dim = static_cast<Eigen::Index>(2 * p.landmarks.size());
  const double dt = p.dt;
  const auto landmarks = p.landmarks;
  m.f_nominal = [dt](const Vector& x, const Vector& u) -> Vector {
    Vector out = unicycle_step(x, u, dt);
    out[2] = wrap_angle(out[2]);
    return out;
  };
  m.h_nominal = [landmarks](const Vector& x) -> Vector {
    Vector z = range_bearing(x, landmarks);
    for (Eigen::Index i = 1; i < z.size(); i += 2) z[i] = wrap_angle(z[i]);
    return z;
  };
  // x ⊞ δx adds componentwise, so ∂x_true/∂δx = I and the error-state
  // Jacobians coincide with the true-state ones.
  m.jac_f_dx = [dt](const Vector& x, const Vector& u) -> Matrix { return unicycle_jacobian(x, u, dt); };
  m.jac_f_w = [](const Vector&, const Vector&) -> Matrix { return Matrix::Identity(3, 3); };
  m.jac_h_dx = [landmarks](const Vector& x) -> Matrix { return range_bearing_jacobian(x, landmarks); };
  m.jac_h_v = [k = m.obs_dim](const Vector&) -> Matrix { return Matrix::Identity(k, k); };
  m.boxplus = [](const Vector& x, const Vector& dx) -> Vector {
    Vector out = x + dx;
    out[2] = wrap_angle(out[2]);
    return out;
  };
  m.boxminus = pose_residual;
  m.Q = pose_noise(p);
  m.R = range_bearing_noise(p);
  m.obs_residual = range_bearing_residual;
  return m;
}

struct Sampler {
  std::mt19937_64 gen;
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
  Vector box(Eigen::Index n, double half) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(-half, half);
    return v;
  }
};

Vector sample_pose(Sampler& s, std::span<const std::array<double, 2>> landmarks) {
  while (true) {
    Vector x(3);
    x << s.uniform(-10.0, 10.0), s.uniform(-10.0, 10.0), s.uniform(-std::numbers::pi, std::numbers::pi);
    bool clear = true;
    for (const auto& l : landmarks) clear = clear && std::hypot(l[0] - x[0], l[1] - x[1]) > 0.5;
    if (clear) return x;
  }
}

void record(std::vector<JacobianCheck>& out, std::size_t slot, double err) {
  out[slot].max_rel_error = std::max(out[slot].max_rel_error, err);
}

// Smooth "difference from base" maps whose Jacobian at the base point equals
// the analytic Jacobian under test.
std::vector<JacobianCheck> check_nonlinear(const NonlinearModel& m, int points, Sampler& s,
                                           std::span<const std::array<double, 2>> landmarks,
                                           bool pose_state) {
  std::vector<JacobianCheck> out{{"jac_f_x", 0.0}, {"jac_f_w", 0.0}, {"jac_h_x", 0.0}, {"jac_h_v", 0.0}};
  const Vector w0 = Vector::Zero(m.Q.rows());
  const Vector v0 = Vector::Zero(m.R.rows());
  for (int i = 0; i < points; ++i) {
    const Vector x0 = pose_state ? sample_pose(s, landmarks) : s.box(m.state_dim, 10.0);
    Vector u(m.control_dim);
    for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = s.uniform(j == 0 ? -2.0 : -1.0, j == 0 ? 2.0 : 1.0);
    const Vector fx0 = m.f(x0, u, w0);
    const Vector hx0 = m.h(x0, v0);
    record(out, 0,
           jacobian_relative_error(m.jac_f_x(x0, u), finite_difference_jacobian(
                                                          [&](const Vector& x) {
                                                            return m.state_residual(m.f(x, u, w0), fx0);
                                                          },
                                                          x0)));
    record(out, 1,
           jacobian_relative_error(m.jac_f_w(x0, u), finite_difference_jacobian(
                                                          [&](const Vector& w) {
                                                            return m.state_residual(m.f(x0, u, w), fx0);
                                                          },
                                                          w0)));
    record(out, 2,
           jacobian_relative_error(m.jac_h_x(x0), finite_difference_jacobian(
                                                      [&](const Vector& x) {
                                                        return m.obs_residual(m.h(x, v0), hx0);
                                                      },
                                                      x0)));
    record(out, 3,
           jacobian_relative_error(m.jac_h_v(x0), finite_difference_jacobian(
                                                      [&](const Vector& v) {
                                                        return m.obs_residual(m.h(x0, v), hx0);
                                                      },
                                                      v0)));
  }
  return out;
}

std::vector<JacobianCheck> check_error_state(const ErrorStateModel& m, int points, Sampler& s,
                                             std::span<const std::array<double, 2>> landmarks) {
  std::vector<JacobianCheck> out{{"jac_f_dx", 0.0},       {"jac_f_w", 0.0},   {"jac_h_dx", 0.0},
                                 {"jac_h_v", 0.0},        {"jac_retraction", 0.0}, {"jac_reset", 0.0}};
  const Vector zero = Vector::Zero(m.error_dim);
  const Vector v0 = Vector::Zero(m.R.rows());
  for (int i = 0; i < points; ++i) {
    const Vector x0 = sample_pose(s, landmarks);
    Vector u(2);
    u << s.uniform(-2.0, 2.0), s.uniform(-1.0, 1.0);
    const Vector fx0 = m.f_nominal(x0, u);
    const Vector hx0 = m.h_nominal(x0);
    record(out, 0,
           jacobian_relative_error(
               m.jac_f_dx(x0, u),
               finite_difference_jacobian(
                   [&](const Vector& dx) { return m.boxminus(m.f_nominal(m.boxplus(x0, dx), u), fx0); },
                   zero)));
    record(out, 1,
           jacobian_relative_error(
               m.jac_f_w(x0, u),
               finite_difference_jacobian([&](const Vector& w) { return m.boxminus(m.boxplus(fx0, w), fx0); },
                                          zero)));
    record(out, 2,
           jacobian_relative_error(
               m.jac_h_dx(x0),
               finite_difference_jacobian(
                   [&](const Vector& dx) { return m.obs_residual(m.h_nominal(m.boxplus(x0, dx)), hx0); },
                   zero)));
    // Observation noise enters additively.
    record(out, 3,
           jacobian_relative_error(
               m.jac_h_v(x0),
               finite_difference_jacobian([&](const Vector& v) { return m.obs_residual(hx0 + v, hx0); }, v0)));
    // J at an iterate displaced from the prior by a small error.
    const Vector x_prior = m.boxplus(x0, s.box(m.error_dim, 0.05));
    record(out, 4,
           jacobian_relative_error(
               m.retraction_jacobian(x0, x_prior),
               finite_difference_jacobian(
                   [&](const Vector& dx) { return m.boxminus(m.boxplus(x0, dx), x_prior); }, zero)));
    // g(δx) = δx − δx̂
    const Vector dx_hat = s.box(m.error_dim, 0.05);
    record(out, 5,
           jacobian_relative_error(
               m.reset_jacobian(x0, dx_hat),
               finite_difference_jacobian([&](const Vector& dx) -> Vector { return dx - dx_hat; }, dx_hat)));
  }
  return out;
}

}  // namespace

std::span<const std::string_view> builtin_model_names() { return kNames; }

AnyModel builtin_model(std::string_view name, const ModelParams& params) {
  if (name == kLinear1D) {
    Linear1DModel m{params.sigma2_motion, params.sigma2_obs};
    m.validate();
    return m;
  }
  if (name == kLinearCv2D) {
    LinearModel m = make_cv2d(params);
    m.validate();
    return m;
  }
  if (name == kRangeBearing2D) {
    NonlinearModel m = make_range_bearing(params);
    m.validate();
    return m;
  }
  if (name == kHeadingRobot) {
    ErrorStateModel m = make_heading_robot(params);
    m.validate();
    return m;
  }
  throw UsageError("unknown model '" + std::string(name) + "'; valid models: " + valid_names());
}

ModelDims builtin_model_dims(std::string_view name, const ModelParams& params) {
  const auto k = static_cast<Eigen::Index>(2 * params.landmarks.size());
  if (name == kLinear1D) return {1, 1, 1, 1};
  if (name == kLinearCv2D) return {4, 4, 2, 2};
  if (name == kRangeBearing2D || name == kHeadingRobot) return {3, 3, 2, k};
  throw UsageError("unknown model '" + std::string(name) + "'; valid models: " + valid_names());
}

Vector default_control(std::string_view name) {
  if (name == kLinear1D) return Vector::Constant(1, 1.0);
  if (name == kLinearCv2D) return Vector::Zero(2);
  if (name == kRangeBearing2D || name == kHeadingRobot) return Eigen::Vector2d(1.0, 0.1);
  throw UsageError("unknown model '" + std::string(name) + "'; valid models: " + valid_names());
}

Vector unicycle_step(const Vector& x, const Vector& u, double dt) {
  Vector out(3);
  out << x[0] + u[0] * dt * std::cos(x[2]), x[1] + u[0] * dt * std::sin(x[2]), x[2] + u[1] * dt;
  return out;
}

Matrix unicycle_jacobian(const Vector& x, const Vector& u, double dt) {
  Matrix f = Matrix::Identity(3, 3);
  f(0, 2) = -u[0] * dt * std::sin(x[2]);
  f(1, 2) = u[0] * dt * std::cos(x[2]);
  return f;
}

Vector range_bearing(const Vector& x, std::span<const std::array<double, 2>> landmarks) {
  Vector z(static_cast<Eigen::Index>(2 * landmarks.size()));
  for (std::size_t i = 0; i < landmarks.size(); ++i) {
    const double dx = landmarks[i][0] - x[0];
    const double dy = landmarks[i][1] - x[1];
    z[2 * i] = std::hypot(dx, dy);
    z[2 * i + 1] = std::atan2(dy, dx) - x[2];
  }
  return z;
}

Matrix range_bearing_jacobian(const Vector& x, std::span<const std::array<double, 2>> landmarks) {
  Matrix h = Matrix::Zero(static_cast<Eigen::Index>(2 * landmarks.size()), 3);
  for (std::size_t i = 0; i < landmarks.size(); ++i) {
    const double dx = landmarks[i][0] - x[0];
    const double dy = landmarks[i][1] - x[1];
    const double r2 = dx * dx + dy * dy;
    const double r = std::sqrt(r2);
    const auto row = static_cast<Eigen::Index>(2 * i);
    h(row, 0) = -dx / r;
    h(row, 1) = -dy / r;
    h(row + 1, 0) = dy / r2;
    h(row + 1, 1) = -dx / r2;
    h(row + 1, 2) = -1.0;
  }
  return h;
}

Vector range_bearing_residual(const Vector& z, const Vector& z_pred) {
  Vector r = subtract(z, z_pred);
  for (Eigen::Index i = 1; i < r.size(); i += 2) r[i] = wrap_angle(r[i]);
  return r;
}

Vector pose_residual(const Vector& a, const Vector& b) {
  Vector r = subtract(a, b);
  r[2] = wrap_angle(r[2]);
  return r;
}

std::vector<JacobianCheck> check_model_jacobians(std::string_view name, const ModelParams& params,
                                                 int points, std::uint64_t seed) {
  const AnyModel model = builtin_model(name, params);
  Sampler s{std::mt19937_64(seed)};
  std::span<const std::array<double, 2>> no_landmarks;
  return std::visit(
      [&](const auto& m) -> std::vector<JacobianCheck> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Linear1DModel>) {
          return check_nonlinear(wrap_linear(to_linear(m)), points, s, no_landmarks, false);
        } else if constexpr (std::is_same_v<T, LinearModel>) {
          return check_nonlinear(wrap_linear(m), points, s, no_landmarks, false);
        } else if constexpr (std::is_same_v<T, NonlinearModel>) {
          return check_nonlinear(m, points, s, params.landmarks, true);
        } else {
          return check_error_state(m, points, s, params.landmarks);
        }
      },
      model);
}

}  // namespace estkit
