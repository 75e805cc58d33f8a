#pragma once

#include <string>
#include <string_view>

#include <Eigen/Core>
#include <Eigen/LU>

namespace estkit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Relative tolerance for symmetry and PSD checks, scaled by max |entry|.
inline constexpr double kCovarianceTolerance = 1e-9;

// Reciprocal condition below which a factorization is treated as singular.
inline constexpr double kSingularRcond = 1e-13;

struct Gaussian {
  Vector mean;
  Matrix cov;

  Eigen::Index dim() const { return mean.size(); }
  // Throws DimensionError / NumericalError if the invariants do not hold.
  void validate() const;
};

struct Gaussian1D {
  double mean = 0.0;
  double var = 0.0;
};

bool is_symmetric(const Matrix& m, double rel_tol = kCovarianceTolerance);
bool is_psd(const Matrix& m, double rel_tol = kCovarianceTolerance);
double min_eigenvalue(const Matrix& symmetric);

// Throws unless `cov` is square, finite, symmetric and PSD. `what` names the
// matrix in the message.
void check_covariance(const Matrix& cov, std::string_view what);

/// LU factorization that refuses to hand out an inverse of a singular matrix.
///
/// Every inverse in the library goes through this class. Construction throws
/// SingularMatrixError carrying the factor name and the 1-norm reciprocal
/// condition estimate when rcond < kSingularRcond or the input is not finite.
class CheckedLu {
 public:
  CheckedLu(const Matrix& a, std::string what);

  double rcond() const { return rcond_; }
  const std::string& what() const { return what_; }

  Matrix solve(const Matrix& rhs) const;
  Vector solve(const Vector& rhs) const;
  Matrix inverse() const;

 private:
  Eigen::PartialPivLU<Matrix> lu_;
  std::string what_;
  double rcond_ = 0.0;
};

Matrix checked_inverse(const Matrix& a, std::string what);

// aᵀ B a
double mahalanobis_sq(const Vector& a, const Matrix& b);

/// A⁻¹ − A⁻¹U(C⁻¹ + VA⁻¹U)⁻¹VA⁻¹, i.e. (A + UCV)⁻¹ via the matrix inversion
/// lemma. Singular A, C or inner term raise SingularMatrixError naming it.
Matrix woodbury_inverse(const Matrix& a, const Matrix& u, const Matrix& c, const Matrix& v);

/// Distribution of x given z for a jointly Gaussian (x, z):
///   mean = E[x] + Cxz Czz⁻¹ (z − E[z]),  cov = Cxx − Cxz Czz⁻¹ Cxzᵀ.
Gaussian conditional_gaussian(const Vector& mean_x, const Vector& mean_z, const Matrix& cxx,
                              const Matrix& cxz, const Matrix& czz, const Vector& z);

// (M + Mᵀ) / 2
Matrix symmetrize(const Matrix& m);

// Normalized product of two scalar Gaussian densities.
Gaussian1D gaussian_product_1d(Gaussian1D a, Gaussian1D b);

}  // namespace estkit
