#include "estkit/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "estkit/errors.hpp"

namespace estkit {
namespace {

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

}  // namespace

void Gaussian::validate() const {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw DimensionError("Gaussian: covariance is " + shape(cov) + " but mean has " +
                         std::to_string(mean.size()) + " entries");
  }
  if (!mean.allFinite()) throw NumericalError("Gaussian: mean is not finite");
  check_covariance(cov, "Gaussian covariance");
}

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(max_abs(m), 1e-300);
  return max_abs(m - m.transpose()) <= rel_tol * scale;
}

double min_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_psd(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  return min_eigenvalue(symmetrize(m)) >= -rel_tol * max_abs(m);
}

void check_covariance(const Matrix& cov, std::string_view what) {
  const std::string name(what);
  if (cov.rows() != cov.cols()) throw DimensionError(name + " is not square (" + shape(cov) + ")");
  if (!cov.allFinite()) throw NumericalError(name + " has non-finite entries");
  if (!is_symmetric(cov)) throw NumericalError(name + " is not symmetric");
  if (!is_psd(cov)) {
    std::ostringstream os;
    os << name << " is not positive semidefinite (min eigenvalue " << min_eigenvalue(symmetrize(cov))
       << ")";
    throw NumericalError(os.str());
  }
}

CheckedLu::CheckedLu(const Matrix& a, std::string what) : what_(std::move(what)) {
  if (a.rows() != a.cols()) {
    throw DimensionError(what_ + ": cannot invert non-square " + shape(a) + " matrix");
  }
  if (!a.allFinite()) {
    throw SingularMatrixError(what_, 0.0, what_ + " has non-finite entries");
  }
  if (a.size() == 0) {
    rcond_ = 1.0;
    return;
  }
  lu_.compute(a);
  rcond_ = lu_.rcond();
  if (!(rcond_ >= kSingularRcond)) {
    std::ostringstream os;
    os << what_ << " is singular (reciprocal condition estimate " << rcond_ << ")";
    throw SingularMatrixError(what_, rcond_, os.str());
  }
}

Matrix CheckedLu::solve(const Matrix& rhs) const {
  if (rhs.rows() != lu_.rows()) {
    throw DimensionError(what_ + ": right-hand side has " + std::to_string(rhs.rows()) +
                         " rows, expected " + std::to_string(lu_.rows()));
  }
  return lu_.solve(rhs);
}

Vector CheckedLu::solve(const Vector& rhs) const {
  if (rhs.size() != lu_.rows()) {
    throw DimensionError(what_ + ": right-hand side has " + std::to_string(rhs.size()) +
                         " entries, expected " + std::to_string(lu_.rows()));
  }
  return lu_.solve(rhs);
}

Matrix CheckedLu::inverse() const {
  if (lu_.rows() == 0) return Matrix(0, 0);
  return lu_.inverse();
}

Matrix checked_inverse(const Matrix& a, std::string what) { return CheckedLu(a, std::move(what)).inverse(); }

double mahalanobis_sq(const Vector& a, const Matrix& b) {
  if (b.rows() != b.cols() || b.rows() != a.size()) {
    throw DimensionError("mahalanobis_sq: vector of length " + std::to_string(a.size()) +
                         " against " + shape(b) + " metric");
  }
  return a.dot(b * a);
}

Matrix woodbury_inverse(const Matrix& a, const Matrix& u, const Matrix& c, const Matrix& v) {
  if (a.rows() != a.cols() || c.rows() != c.cols() || u.rows() != a.rows() ||
      u.cols() != c.rows() || v.rows() != c.cols() || v.cols() != a.cols()) {
    throw DimensionError("woodbury_inverse: non-conformable shapes A " + shape(a) + ", U " +
                         shape(u) + ", C " + shape(c) + ", V " + shape(v));
  }
  const Matrix a_inv = checked_inverse(a, "A");
  const Matrix c_inv = checked_inverse(c, "C");
  const Matrix inner = c_inv + v * a_inv * u;
  const CheckedLu inner_lu(inner, "inner term (C^-1 + V A^-1 U)");
  return a_inv - a_inv * u * inner_lu.solve(Matrix(v * a_inv));
}

Gaussian conditional_gaussian(const Vector& mean_x, const Vector& mean_z, const Matrix& cxx,
                              const Matrix& cxz, const Matrix& czz, const Vector& z) {
  const auto n = mean_x.size();
  const auto k = mean_z.size();
  if (cxx.rows() != n || cxx.cols() != n || cxz.rows() != n || cxz.cols() != k ||
      czz.rows() != k || czz.cols() != k || z.size() != k) {
    throw DimensionError("conditional_gaussian: block dimensions do not conform");
  }
  const CheckedLu czz_lu(czz, "Czz");
  // Czz⁻¹ Cxzᵀ, shared by both moments.
  const Matrix gain_t = czz_lu.solve(Matrix(cxz.transpose()));
  Gaussian out;
  out.mean = mean_x + gain_t.transpose() * (z - mean_z);
  out.cov = symmetrize(cxx - cxz * gain_t);
  return out;
}

Matrix symmetrize(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("symmetrize: matrix is " + shape(m));
  return 0.5 * (m + m.transpose());
}

Gaussian1D gaussian_product_1d(Gaussian1D a, Gaussian1D b) {
  if (a.var < 0.0 || b.var < 0.0) throw NumericalError("gaussian_product_1d: negative variance");
  const double total = a.var + b.var;
  if (!(total > 0.0)) {
    throw NumericalError("gaussian_product_1d: degenerate product of two zero-variance factors");
  }
  return {(b.mean * a.var + a.mean * b.var) / total, a.var * b.var / total};
}

}  // namespace estkit
