#include "estkit/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "estkit/errors.hpp"

namespace estkit {
namespace {

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
}

}  // namespace

Vector subtract(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw DimensionError("residual between vectors of length " + std::to_string(a.size()) +
                         " and " + std::to_string(b.size()));
  }
  return a - b;
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(a, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

void LinearModel::validate() const {
  const auto n = F.rows();
  require_shape(F, n, n, "F");
  if (B.rows() != n) require_shape(B, n, B.cols(), "B");
  if (H.cols() != n) require_shape(H, H.rows(), n, "H");
  require_shape(Q, n, n, "Q");
  require_shape(R, H.rows(), H.rows(), "R");
  check_covariance(Q, "Q");
  check_covariance(R, "R");
  CheckedLu(R, "R");
}

void Linear1DModel::validate() const {
  if (!(sigma2_motion >= 0.0) || !std::isfinite(sigma2_motion)) {
    throw NumericalError("sigma2_motion must be finite and >= 0");
  }
  if (!(sigma2_obs >= 0.0) || !std::isfinite(sigma2_obs)) {
    throw NumericalError("sigma2_obs must be finite and >= 0");
  }
}

void NonlinearModel::validate() const {
  if (!f || !h || !jac_f_x || !jac_f_w || !jac_h_x || !jac_h_v) {
    throw UsageError("NonlinearModel '" + name + "' has an unset function");
  }
  check_covariance(Q, "Q");
  check_covariance(R, "R");
}

Matrix ErrorStateModel::retraction_jacobian(const Vector& x_iter, const Vector& x_prior) const {
  if (jac_retraction) return jac_retraction(x_iter, x_prior);
  return Matrix::Identity(error_dim, error_dim);
}

Matrix ErrorStateModel::reset_jacobian(const Vector& x, const Vector& dx) const {
  if (jac_reset) return jac_reset(x, dx);
  return Matrix::Identity(error_dim, error_dim);
}

void ErrorStateModel::validate() const {
  if (!f_nominal || !h_nominal || !jac_f_dx || !jac_f_w || !jac_h_dx || !jac_h_v || !boxplus ||
      !boxminus) {
    throw UsageError("ErrorStateModel '" + name + "' has an unset function");
  }
  check_covariance(Q, "Q");
  check_covariance(R, "R");
}

LinearModel to_linear(const Linear1DModel& m) {
  LinearModel out;
  out.F = Matrix::Identity(1, 1);
  out.B = Matrix::Identity(1, 1);
  out.H = Matrix::Identity(1, 1);
  out.Q = Matrix::Constant(1, 1, m.sigma2_motion);
  out.R = Matrix::Constant(1, 1, m.sigma2_obs);
  return out;
}

NonlinearModel wrap_linear(const LinearModel& m) {
  NonlinearModel out;
  out.name = "linear";
  out.state_dim = m.state_dim();
  out.control_dim = m.control_dim();
  out.obs_dim = m.obs_dim();
  out.f = [m](const Vector& x, const Vector& u, const Vector& w) -> Vector {
    return m.F * x + m.B * u + w;
  };
  out.h = [m](const Vector& x, const Vector& v) -> Vector { return m.H * x + v; };
  out.jac_f_x = [m](const Vector&, const Vector&) -> Matrix { return m.F; };
  out.jac_f_w = [n = m.state_dim()](const Vector&, const Vector&) -> Matrix {
    return Matrix::Identity(n, n);
  };
  out.jac_h_x = [m](const Vector&) -> Matrix { return m.H; };
  out.jac_h_v = [k = m.obs_dim()](const Vector&) -> Matrix { return Matrix::Identity(k, k); };
  out.Q = m.Q;
  out.R = m.R;
  return out;
}

ErrorStateModel wrap_linear_error_state(const LinearModel& m) {
  ErrorStateModel out;
  out.name = "linear";
  out.nominal_dim = m.state_dim();
  out.error_dim = m.state_dim();
  out.control_dim = m.control_dim();
  out.obs_dim = m.obs_dim();
  out.f_nominal = [m](const Vector& x, const Vector& u) -> Vector { return m.F * x + m.B * u; };
  out.h_nominal = [m](const Vector& x) -> Vector { return m.H * x; };
  out.jac_f_dx = [m](const Vector&, const Vector&) -> Matrix { return m.F; };
  out.jac_f_w = [n = m.state_dim()](const Vector&, const Vector&) -> Matrix {
    return Matrix::Identity(n, n);
  };
  out.jac_h_dx = [m](const Vector&) -> Matrix { return m.H; };
  out.jac_h_v = [k = m.obs_dim()](const Vector&) -> Matrix { return Matrix::Identity(k, k); };
  out.Q = m.Q;
  out.R = m.R;
  return out;
}

ErrorStateModel wrap_vector_space(const NonlinearModel& m) {
  ErrorStateModel out;
  out.name = m.name;
  out.nominal_dim = m.state_dim;
  out.error_dim = m.state_dim;
  out.control_dim = m.control_dim;
  out.obs_dim = m.obs_dim;
  const Eigen::Index q = m.Q.rows();
  const Eigen::Index r = m.R.rows();
  out.f_nominal = [m, q](const Vector& x, const Vector& u) -> Vector {
    return m.f(x, u, Vector::Zero(q));
  };
  out.h_nominal = [m, r](const Vector& x) -> Vector { return m.h(x, Vector::Zero(r)); };
  out.jac_f_dx = m.jac_f_x;
  out.jac_f_w = m.jac_f_w;
  out.jac_h_dx = m.jac_h_x;
  out.jac_h_v = m.jac_h_v;
  out.Q = m.Q;
  out.R = m.R;
  out.obs_residual = m.obs_residual;
  return out;
}

Matrix finite_difference_jacobian(const VectorFunction& fn, const Vector& x, double step) {
  if (!(step > 0.0)) throw UsageError("finite_difference_jacobian: step must be positive");
  Matrix jac;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vector xp = x;
    Vector xm = x;
    xp[j] += step;
    xm[j] -= step;
    const Vector fp = fn(xp);
    const Vector fm = fn(xm);
    if (!fp.allFinite() || !fm.allFinite()) {
      throw NumericalError("finite_difference_jacobian: non-finite function value at column " +
                           std::to_string(j));
    }
    if (j == 0) jac.resize(fp.size(), x.size());
    jac.col(j) = (fp - fm) / (2.0 * step);
  }
  return jac;
}

Matrix finite_difference_jacobian(const VectorFunction& fn, const Vector& x) {
  Matrix jac;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = 1e-6 * (1.0 + std::abs(x[j]));
    Vector xp = x;
    Vector xm = x;
    xp[j] += step;
    xm[j] -= step;
    const Vector fp = fn(xp);
    const Vector fm = fn(xm);
    if (!fp.allFinite() || !fm.allFinite()) {
      throw NumericalError("finite_difference_jacobian: non-finite function value at column " +
                           std::to_string(j));
    }
    if (j == 0) jac.resize(fp.size(), x.size());
    // Use the realized step so representation error in x ± step cancels.
    jac.col(j) = (fp - fm) / (xp[j] - xm[j]);
  }
  return jac;
}

double jacobian_relative_error(const Matrix& analytic, const Matrix& numeric) {
  if (analytic.rows() != numeric.rows() || analytic.cols() != numeric.cols()) {
    throw DimensionError("jacobian_relative_error: shape mismatch");
  }
  if (analytic.size() == 0) return 0.0;
  const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

}  // namespace estkit
