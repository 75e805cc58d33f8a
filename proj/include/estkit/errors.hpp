#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace estkit {

// Root of every error the library throws.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

// Non-finite values, degenerate densities, grid leakage.
class NumericalError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

// Raised by the checked factorization when a matrix is (numerically) singular.
class SingularMatrixError : public NumericalError {
 public:
  SingularMatrixError(std::string factor, double rcond, const std::string& message)
      : NumericalError(message), factor_(std::move(factor)), rcond_(rcond) {}

  const std::string& factor() const { return factor_; }
  double rcond() const { return rcond_; }

 private:
  std::string factor_;
  double rcond_;
};

// A filter kind was paired with a model it cannot consume, or a name did not resolve.
class UsageError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

}  // namespace estkit
