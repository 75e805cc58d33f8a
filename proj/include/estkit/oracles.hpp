#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "estkit/filters.hpp"
#include "estkit/gaussian.hpp"
#include "estkit/models.hpp"

namespace estkit {

/// Discretized 1D density on N equally spaced nodes spanning [lo, hi].
/// Integrals use the trapezoidal rule.
struct GridBelief {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double spacing() const { return (hi - lo) / static_cast<double>(values.size() - 1); }
  double node(std::size_t i) const { return lo + spacing() * static_cast<double>(i); }
  double integral() const;
};

struct GridDomain {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t nodes = 4001;
};

// Density p(x | x_prev, u).
using MotionKernel = std::function<double(double x, double x_prev, double u)>;
// Likelihood p(z | x).
using Likelihood = std::function<double(double z, double x)>;

// Samples `density` on the domain and normalizes.
GridBelief grid_from_density(const GridDomain& domain, const std::function<double(double)>& density);

GridBelief grid_normalize(GridBelief b);

/// bel̄(x) = ∫ p(x | x', u) bel(x') dx' by trapezoidal quadrature over the
/// input grid, evaluated on `out` (defaults to the input grid), then
/// normalized. Throws NumericalError when more than 1e-4 of the probability
/// mass lands outside the output grid.
GridBelief grid_predict(const GridBelief& b, const MotionKernel& kernel, double u,
                        std::optional<GridDomain> out = std::nullopt);

/// bel(x) = η p(z | x) bel̄(x). Throws NumericalError if the product vanishes
/// everywhere on the grid.
GridBelief grid_correct(const GridBelief& b, const Likelihood& likelihood, double z);

// Trapezoidal mean and variance.
Gaussian1D grid_moments(const GridBelief& b);

inline constexpr double kGridLeakTolerance = 1e-4;

/// Single-step MAP problem: prior N(x̂⁻, P⁻) and observation z = h(x) + v,
/// v ~ N(0, R).
struct MapProblem {
  Belief prior;
  std::function<Vector(const Vector&)> h;
  std::function<Matrix(const Vector&)> jac_h;
  Matrix R;
  Vector z;
  ResidualFn obs_residual = subtract;

  static MapProblem from_model(const Belief& prior, const NonlinearModel& m, const Vector& z);
};

struct MapResult {
  Belief posterior;
  // Gauss-Newton updates applied before the step norm fell below ε; the solve
  // that confirms convergence is not counted.
  int iterations = 0;
  bool converged = false;
  // ‖Jᵀ P_e⁻¹ r‖ at the returned mean.
  double gradient_norm = 0.0;
};

/// Undamped Gauss-Newton on the stacked residual r = y − g(x), y = [x̂⁻; z],
/// g(x) = [x; h(x)], weight P_e = blkdiag(P⁻, R):
///   δx = (Jᵀ P_e⁻¹ J)⁻¹ Jᵀ P_e⁻¹ r,   J = [I; H].
/// Every solved step is applied. The returned covariance is (Jᵀ P_e⁻¹ J)⁻¹ at
/// the last linearization point.
MapResult map_correct_gn(const MapProblem& p, const IterationConfig& cfg);

/// Stacked-residual gradient Jᵀ P_e⁻¹ r of the MAP cost at x.
Vector map_gradient(const MapProblem& p, const Vector& x);

/// Minimizes the IESKF iteration cost
///   ‖z − h(x_j) − H δx‖²_{(H_v R H_vᵀ)⁻¹} + ‖(x_j ⊟ x⁻) + J δx‖²_{P⁻¹}
/// over δx by solving its normal equations directly, where x_j = x_init.
/// `retraction_jacobian` overrides J when non-empty.
Vector ieskf_cost_minimize(const Vector& x_prior, const Matrix& P, const ErrorStateModel& m,
                           const Vector& z, const Vector& x_init,
                           const Matrix& retraction_jacobian = {});

}  // namespace estkit
