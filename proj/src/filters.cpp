#include "estkit/filters.hpp"

#include <cmath>
#include <string>

#include "estkit/errors.hpp"

namespace estkit {
namespace {

void require_size(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw DimensionError(std::string(what) + " has " + std::to_string(v.size()) +
                         " entries, expected " + std::to_string(n));
  }
}

void require_square(const Matrix& m, Eigen::Index n, const char* what) {
  if (m.rows() != n || m.cols() != n) {
    throw DimensionError(std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(n) + "x" +
                         std::to_string(n));
  }
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NumericalError(std::string(what) + " is not finite");
}

// K = P Hᵀ S⁻¹ with S = H P Hᵀ + noise.
Matrix kalman_gain(const Matrix& P, const Matrix& H, const Matrix& obs_noise) {
  if (H.cols() != P.rows()) {
    throw DimensionError("observation Jacobian has " + std::to_string(H.cols()) +
                         " columns, state has " + std::to_string(P.rows()));
  }
  require_square(obs_noise, H.rows(), "observation noise");
  const Matrix S = H * P * H.transpose() + obs_noise;
  // Kᵀ = S⁻ᵀ H Pᵀ
  const CheckedLu lu(Matrix(S.transpose()), "innovation covariance");
  return lu.solve(Matrix(H * P.transpose())).transpose();
}

Matrix posterior_covariance(const Matrix& K, const Matrix& H, const Matrix& P) {
  const auto n = P.rows();
  return symmetrize((Matrix::Identity(n, n) - K * H) * P);
}

Matrix mapped_noise(const Matrix& Hv, const Matrix& R) { return Hv * R * Hv.transpose(); }

}  // namespace

void Belief::validate() const {
  Gaussian{x_hat, P}.validate();
}

ErrorBelief ErrorBelief::at(Vector x_nominal, Matrix P) {
  ErrorBelief b;
  b.dx_hat = Vector::Zero(P.rows());
  b.x_nominal = std::move(x_nominal);
  b.P = std::move(P);
  return b;
}

void IterationConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw UsageError("epsilon must be positive and finite");
  if (max_iters < 1) throw UsageError("max_iters must be >= 1");
}

Belief kf_predict(const Belief& b, const LinearModel& m, const Vector& u) {
  const auto n = m.state_dim();
  require_size(b.x_hat, n, "state mean");
  require_square(b.P, n, "state covariance");
  require_size(u, m.control_dim(), "control");
  Belief out;
  out.x_hat = m.F * b.x_hat + m.B * u;
  out.P = symmetrize(m.F * b.P * m.F.transpose() + m.Q);
  return out;
}

std::pair<Belief, CorrectionDiagnostics> kf_correct(const Belief& b, const LinearModel& m,
                                                    const Vector& z) {
  require_size(b.x_hat, m.state_dim(), "state mean");
  require_square(b.P, m.state_dim(), "state covariance");
  require_size(z, m.obs_dim(), "observation");
  CorrectionDiagnostics diag;
  diag.kalman_gain = kalman_gain(b.P, m.H, m.R);
  diag.innovation = z - m.H * b.x_hat;
  diag.error_update = diag.kalman_gain * diag.innovation;
  diag.final_step_norm = diag.error_update.norm();
  Belief out;
  out.x_hat = b.x_hat + diag.error_update;
  out.P = posterior_covariance(diag.kalman_gain, m.H, b.P);
  return {std::move(out), std::move(diag)};
}

Gaussian1D kf1d_predict(Gaussian1D b, const Linear1DModel& m, double u) {
  return {b.mean + u, b.var + m.sigma2_motion};
}

Gaussian1D kf1d_correct(Gaussian1D b, const Linear1DModel& m, double z) {
  const double total = b.var + m.sigma2_obs;
  if (!(total > 0.0)) {
    throw NumericalError("kf1d_correct: prior and observation variances are both zero");
  }
  const double gain = b.var / total;
  return {b.mean + gain * (z - b.mean), (1.0 - gain) * b.var};
}

Belief ekf_predict(const Belief& b, const NonlinearModel& m, const Vector& u) {
  require_size(b.x_hat, m.state_dim, "state mean");
  require_square(b.P, m.state_dim, "state covariance");
  const Matrix F = m.jac_f_x(b.x_hat, u);
  const Matrix Fw = m.jac_f_w(b.x_hat, u);
  Belief out;
  out.x_hat = m.f(b.x_hat, u, Vector::Zero(m.Q.rows()));
  require_finite(out.x_hat, "predicted state");
  out.P = symmetrize(F * b.P * F.transpose() + Fw * m.Q * Fw.transpose());
  return out;
}

std::pair<Belief, CorrectionDiagnostics> ekf_correct(const Belief& b, const NonlinearModel& m,
                                                     const Vector& z) {
  require_size(b.x_hat, m.state_dim, "state mean");
  require_square(b.P, m.state_dim, "state covariance");
  require_size(z, m.obs_dim, "observation");
  const Matrix H = m.jac_h_x(b.x_hat);
  const Matrix Hv = m.jac_h_v(b.x_hat);
  CorrectionDiagnostics diag;
  diag.kalman_gain = kalman_gain(b.P, H, mapped_noise(Hv, m.R));
  diag.innovation = m.obs_residual(z, m.h(b.x_hat, Vector::Zero(m.R.rows())));
  Belief out;
  out.x_hat = b.x_hat + diag.kalman_gain * diag.innovation;
  require_finite(out.x_hat, "corrected state");
  out.P = posterior_covariance(diag.kalman_gain, H, b.P);
  diag.error_update = out.x_hat - b.x_hat;
  diag.final_step_norm = diag.error_update.norm();
  return {std::move(out), std::move(diag)};
}

ErrorBelief eskf_predict(const ErrorBelief& b, const ErrorStateModel& m, const Vector& u) {
  require_size(b.x_nominal, m.nominal_dim, "nominal state");
  require_square(b.P, m.error_dim, "error covariance");
  const Matrix F = m.jac_f_dx(b.x_nominal, u);
  const Matrix Fw = m.jac_f_w(b.x_nominal, u);
  Vector x = m.f_nominal(b.x_nominal, u);
  require_finite(x, "predicted nominal state");
  // δx̂ = F·0 = 0 exactly.
  return ErrorBelief::at(std::move(x), symmetrize(F * b.P * F.transpose() + Fw * m.Q * Fw.transpose()));
}

std::pair<ErrorBelief, CorrectionDiagnostics> eskf_correct(const ErrorBelief& b,
                                                           const ErrorStateModel& m,
                                                           const Vector& z) {
  require_size(b.x_nominal, m.nominal_dim, "nominal state");
  require_square(b.P, m.error_dim, "error covariance");
  require_size(z, m.obs_dim, "observation");
  const Matrix H = m.jac_h_dx(b.x_nominal);
  const Matrix Hv = m.jac_h_v(b.x_nominal);
  CorrectionDiagnostics diag;
  diag.kalman_gain = kalman_gain(b.P, H, mapped_noise(Hv, m.R));
  diag.innovation = m.obs_residual(z, m.h_nominal(b.x_nominal));
  diag.error_update = diag.kalman_gain * diag.innovation;
  diag.final_step_norm = diag.error_update.norm();
  Vector x = m.boxplus(b.x_nominal, diag.error_update);
  require_finite(x, "corrected nominal state");
  const Matrix P = posterior_covariance(diag.kalman_gain, H, b.P);
  // Reset: δx̂ ← 0, P ← G P Gᵀ.
  const Matrix G = m.reset_jacobian(x, diag.error_update);
  return {ErrorBelief::at(std::move(x), symmetrize(G * P * G.transpose())), std::move(diag)};
}

std::pair<Belief, CorrectionDiagnostics> iekf_correct(const Belief& b, const NonlinearModel& m,
                                                      const Vector& z, const IterationConfig& cfg) {
  cfg.validate();
  require_size(b.x_hat, m.state_dim, "state mean");
  require_square(b.P, m.state_dim, "state covariance");
  require_size(z, m.obs_dim, "observation");
  const Vector& x_prior = b.x_hat;
  const Vector v0 = Vector::Zero(m.R.rows());

  CorrectionDiagnostics diag;
  diag.converged = false;
  Vector x_iter = x_prior;
  Matrix H;
  for (int j = 0; j < cfg.max_iters; ++j) {
    H = m.jac_h_x(x_iter);
    const Matrix Hv = m.jac_h_v(x_iter);
    diag.kalman_gain = kalman_gain(b.P, H, mapped_noise(Hv, m.R));
    diag.innovation = m.obs_residual(z, m.h(x_iter, v0));
    // The relinearization term H_j (x̂⁻ − x̂_j) vanishes on the first pass.
    const Vector corrected =
        j == 0 ? diag.innovation : Vector(diag.innovation - H * (x_prior - x_iter));
    Vector x_next = x_prior + diag.kalman_gain * corrected;
    require_finite(x_next, "iterated state");
    diag.final_step_norm = (x_next - x_iter).norm();
    diag.iterations = j + 1;
    x_iter = std::move(x_next);
    if (diag.final_step_norm < cfg.epsilon) {
      diag.converged = true;
      break;
    }
  }
  Belief out;
  out.x_hat = std::move(x_iter);
  out.P = posterior_covariance(diag.kalman_gain, H, b.P);
  diag.error_update = out.x_hat - x_prior;
  return {std::move(out), std::move(diag)};
}

IeskfStep ieskf_step(const Vector& x_prior, const Matrix& P, const ErrorStateModel& m,
                     const Vector& z, const Vector& x_iter, const Matrix& retraction_jacobian) {
  require_size(x_prior, m.nominal_dim, "prior nominal state");
  require_size(x_iter, m.nominal_dim, "iterate");
  require_square(P, m.error_dim, "error covariance");
  require_size(z, m.obs_dim, "observation");
  const Matrix J =
      retraction_jacobian.size() == 0 ? m.retraction_jacobian(x_iter, x_prior) : retraction_jacobian;
  require_square(J, m.error_dim, "retraction Jacobian");

  IeskfStep step;
  step.retraction_inverse = CheckedLu(J, "retraction Jacobian J").inverse();
  const Matrix& J_inv = step.retraction_inverse;
  step.H = m.jac_h_dx(x_iter);
  const Matrix Hv = m.jac_h_v(x_iter);
  step.P_bar = J_inv * P * J_inv.transpose();
  step.kalman_gain = kalman_gain(step.P_bar, step.H, mapped_noise(Hv, m.R));
  step.innovation = m.obs_residual(z, m.h_nominal(x_iter));
  // J⁻¹ (x_j ⊟ x⁻)
  const Vector offset = J_inv * m.boxminus(x_iter, x_prior);
  step.dx = step.kalman_gain * (step.innovation + step.H * offset) - offset;
  return step;
}

std::pair<ErrorBelief, CorrectionDiagnostics> ieskf_correct(const ErrorBelief& b,
                                                            const ErrorStateModel& m,
                                                            const Vector& z,
                                                            const IterationConfig& cfg) {
  cfg.validate();
  const Vector& x_prior = b.x_nominal;
  CorrectionDiagnostics diag;
  diag.converged = false;
  Vector x_iter = x_prior;
  Matrix first_J;
  IeskfStep step;
  for (int j = 0; j < cfg.max_iters; ++j) {
    if (cfg.recompute_retraction_jacobian || j == 0) {
      first_J = m.retraction_jacobian(x_iter, x_prior);
    }
    step = ieskf_step(x_prior, b.P, m, z, x_iter, first_J);
    Vector x_next = m.boxplus(x_iter, step.dx);
    require_finite(x_next, "iterated nominal state");
    diag.final_step_norm = step.dx.norm();
    diag.iterations = j + 1;
    x_iter = std::move(x_next);
    if (diag.final_step_norm < cfg.epsilon) {
      diag.converged = true;
      break;
    }
  }
  diag.kalman_gain = step.kalman_gain;
  diag.innovation = step.innovation;
  diag.error_update = step.dx;
  const Matrix P = posterior_covariance(step.kalman_gain, step.H, step.P_bar);
  const Matrix G = m.reset_jacobian(x_iter, step.dx);
  return {ErrorBelief::at(std::move(x_iter), symmetrize(G * P * G.transpose())), std::move(diag)};
}

}  // namespace estkit
