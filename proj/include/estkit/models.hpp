#pragma once

#include <functional>
#include <string>

#include "estkit/gaussian.hpp"

namespace estkit {

using ResidualFn = std::function<Vector(const Vector& a, const Vector& b)>;

// Plain a − b; the residual used by every vector-space component.
Vector subtract(const Vector& a, const Vector& b);

// Wraps an angle into (−π, π].
double wrap_angle(double a);

/// x_t = F x_{t−1} + B u_t + w_t,  z_t = H x_t + v_t,  w ~ N(0, Q), v ~ N(0, R).
struct LinearModel {
  Matrix F;
  Matrix B;
  Matrix H;
  Matrix Q;
  Matrix R;

  Eigen::Index state_dim() const { return F.rows(); }
  Eigen::Index control_dim() const { return B.cols(); }
  Eigen::Index obs_dim() const { return H.rows(); }
  void validate() const;
};

// Scalar random walk with additive control: x_t = x_{t−1} + u_t + w, z_t = x_t + v.
struct Linear1DModel {
  double sigma2_motion = 0.0;
  double sigma2_obs = 1.0;

  void validate() const;
};

/// General nonlinear model. Jacobians are evaluated at zero noise:
/// jac_f_x = ∂f/∂x, jac_f_w = ∂f/∂w at (x, u, 0); jac_h_x = ∂h/∂x, jac_h_v = ∂h/∂v at (x, 0).
///
/// `obs_residual(z, z_pred)` forms the innovation (wrapping angular
/// components where the observation has them) and `state_residual(a, b)` the
/// state error used for NEES and RMSE.
struct NonlinearModel {
  std::string name;
  Eigen::Index state_dim = 0;
  Eigen::Index control_dim = 0;
  Eigen::Index obs_dim = 0;

  std::function<Vector(const Vector& x, const Vector& u, const Vector& w)> f;
  std::function<Vector(const Vector& x, const Vector& v)> h;
  std::function<Matrix(const Vector& x, const Vector& u)> jac_f_x;
  std::function<Matrix(const Vector& x, const Vector& u)> jac_f_w;
  std::function<Matrix(const Vector& x)> jac_h_x;
  std::function<Matrix(const Vector& x)> jac_h_v;
  Matrix Q;
  Matrix R;

  ResidualFn obs_residual = subtract;
  ResidualFn state_residual = subtract;

  void validate() const;
};

/// Nominal/error-state decomposition: x_true = x ⊞ δx.
///
/// The nominal functions are evaluated at δx = 0 and zero noise. Error-state
/// Jacobians are taken with respect to δx: jac_h_dx = ∂h(x ⊞ δx)/∂δx at
/// δx = 0, and likewise for jac_f_dx. `jac_retraction(x_iter, x_prior)` is
/// J = ∂((x_iter ⊞ δx) ⊟ x_prior)/∂δx at δx = 0 and `jac_reset(x, δx̂)` the
/// reset Jacobian G. Both default to identity when left empty.
struct ErrorStateModel {
  std::string name;
  Eigen::Index nominal_dim = 0;
  Eigen::Index error_dim = 0;
  Eigen::Index control_dim = 0;
  Eigen::Index obs_dim = 0;

  std::function<Vector(const Vector& x, const Vector& u)> f_nominal;
  std::function<Vector(const Vector& x)> h_nominal;
  std::function<Matrix(const Vector& x, const Vector& u)> jac_f_dx;
  std::function<Matrix(const Vector& x, const Vector& u)> jac_f_w;
  std::function<Matrix(const Vector& x)> jac_h_dx;
  std::function<Matrix(const Vector& x)> jac_h_v;

  std::function<Vector(const Vector& x, const Vector& dx)> boxplus =
      [](const Vector& x, const Vector& dx) -> Vector { return x + dx; };
  // Inverse retraction: boxminus(boxplus(x, dx), x) = dx.
  ResidualFn boxminus = subtract;
  std::function<Matrix(const Vector& x_iter, const Vector& x_prior)> jac_retraction;
  std::function<Matrix(const Vector& x, const Vector& dx)> jac_reset;
  Matrix Q;
  Matrix R;

  ResidualFn obs_residual = subtract;

  Matrix retraction_jacobian(const Vector& x_iter, const Vector& x_prior) const;
  Matrix reset_jacobian(const Vector& x, const Vector& dx) const;
  void validate() const;
};

LinearModel to_linear(const Linear1DModel& m);

// f = F x + B u + w, h = H x + v; all four Jacobians are the model matrices.
NonlinearModel wrap_linear(const LinearModel& m);

// Vector-space error state over a linear model: ⊞ = +, J = G = I.
ErrorStateModel wrap_linear_error_state(const LinearModel& m);

// Vector-space error state over a nonlinear model with the model's own
// Jacobians: ⊞ = +, ⊟ = −, J = G = I.
ErrorStateModel wrap_vector_space(const NonlinearModel& m);

using VectorFunction = std::function<Vector(const Vector&)>;

/// Central-difference Jacobian with a fixed step for every coordinate.
/// Throws NumericalError if fn returns a non-finite value.
Matrix finite_difference_jacobian(const VectorFunction& fn, const Vector& x, double step);

// Same, with the per-coordinate step 1e-6·(1 + |x_i|).
Matrix finite_difference_jacobian(const VectorFunction& fn, const Vector& x);

// max|A − N| / max(1, max|A|)
double jacobian_relative_error(const Matrix& analytic, const Matrix& numeric);

}  // namespace estkit
