#pragma once

#include <utility>

#include "estkit/gaussian.hpp"
#include "estkit/models.hpp"

namespace estkit {

// (x̂, P) between steps.
struct Belief {
  Vector x_hat;
  Matrix P;

  void validate() const;
};

/// Error-state filter state: nominal x̂, error mean δx̂ and error covariance P.
/// δx̂ is the exact zero vector after every predict and every correct.
struct ErrorBelief {
  Vector x_nominal;
  Vector dx_hat;
  Matrix P;

  static ErrorBelief at(Vector x_nominal, Matrix P);
};

struct IterationConfig {
  double epsilon = 1e-8;  // threshold on the Euclidean norm of the update
  int max_iters = 20;
  // Re-evaluate J at every iterate of the IESKF loop (otherwise J from the first iterate is kept).
  bool recompute_retraction_jacobian = true;

  void validate() const;
};

struct CorrectionDiagnostics {
  int iterations = 1;
  double final_step_norm = 0.0;
  bool converged = true;
  // Innovation z − h(x) at the final linearization point (angles wrapped).
  Vector innovation;
  Matrix kalman_gain;
  // Last update δx̂ before the error-state reset; equals x̂⁺ − x̂ for the other filters.
  Vector error_update;
};

Belief kf_predict(const Belief& b, const LinearModel& m, const Vector& u);
std::pair<Belief, CorrectionDiagnostics> kf_correct(const Belief& b, const LinearModel& m,
                                                    const Vector& z);

Gaussian1D kf1d_predict(Gaussian1D b, const Linear1DModel& m, double u);
Gaussian1D kf1d_correct(Gaussian1D b, const Linear1DModel& m, double z);

Belief ekf_predict(const Belief& b, const NonlinearModel& m, const Vector& u);
std::pair<Belief, CorrectionDiagnostics> ekf_correct(const Belief& b, const NonlinearModel& m,
                                                     const Vector& z);

ErrorBelief eskf_predict(const ErrorBelief& b, const ErrorStateModel& m, const Vector& u);
std::pair<ErrorBelief, CorrectionDiagnostics> eskf_correct(const ErrorBelief& b,
                                                           const ErrorStateModel& m,
                                                           const Vector& z);

/// Iterated EKF correction. Each pass relinearizes h at the current iterate
/// and re-solves from the prior:
///   x̂_{j+1} = x̂⁻ + K_j (z − h(x̂_j) − H_j (x̂⁻ − x̂_j))
/// stopping when ‖x̂_{j+1} − x̂_j‖ < ε or after max_iters passes. One pass is
/// the EKF correction, bit for bit. P⁺ = (I − K_n H_n) P⁻ from the last pass.
std::pair<Belief, CorrectionDiagnostics> iekf_correct(const Belief& b, const NonlinearModel& m,
                                                      const Vector& z, const IterationConfig& cfg);

/// One IESKF iteration, evaluated at iterate x_iter for prior (x_prior, P).
struct IeskfStep {
  Vector dx;            // closed-form update δx̂_j
  Matrix kalman_gain;   // K_j
  Matrix H;             // H_j
  Matrix P_bar;         // J⁻¹ P J⁻ᵀ
  Vector innovation;    // z − h(x_iter)
  Matrix retraction_inverse;  // J⁻¹
};

/// The closed-form IESKF update at one iterate:
///   S = H P̄ Hᵀ + H_v R H_vᵀ,  K = P̄ Hᵀ S⁻¹,  P̄ = J⁻¹ P J⁻ᵀ,
///   δx̂ = K (z − h(x_j) + H J⁻¹ (x_j ⊟ x⁻)) − J⁻¹ (x_j ⊟ x⁻).
/// `retraction_jacobian` overrides J when non-empty.
IeskfStep ieskf_step(const Vector& x_prior, const Matrix& P, const ErrorStateModel& m,
                     const Vector& z, const Vector& x_iter, const Matrix& retraction_jacobian = {});

std::pair<ErrorBelief, CorrectionDiagnostics> ieskf_correct(const ErrorBelief& b,
                                                            const ErrorStateModel& m,
                                                            const Vector& z,
                                                            const IterationConfig& cfg);

}  // namespace estkit
