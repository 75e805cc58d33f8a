#include "estkit/oracles.hpp"

#include <cmath>
#include <sstream>

#include "estkit/errors.hpp"

namespace estkit {
namespace {

double trapezoid_weight(std::size_t i, std::size_t n, double dx) {
  return (i == 0 || i + 1 == n) ? 0.5 * dx : dx;
}

void require_grid(const GridBelief& b, const char* what) {
  if (b.values.size() < 2) throw UsageError(std::string(what) + ": grid needs at least 2 nodes");
  if (!(b.hi > b.lo)) throw UsageError(std::string(what) + ": grid bounds must satisfy lo < hi");
}

}  // namespace

double GridBelief::integral() const {
  const std::size_t n = values.size();
  const double dx = spacing();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += trapezoid_weight(i, n, dx) * values[i];
  return sum;
}

GridBelief grid_normalize(GridBelief b) {
  require_grid(b, "grid_normalize");
  const double mass = b.integral();
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw NumericalError("grid density has no probability mass to normalize");
  }
  for (double& v : b.values) v /= mass;
  return b;
}

GridBelief grid_from_density(const GridDomain& domain, const std::function<double(double)>& density) {
  GridBelief b{domain.lo, domain.hi, std::vector<double>(domain.nodes)};
  require_grid(b, "grid_from_density");
  for (std::size_t i = 0; i < b.size(); ++i) b.values[i] = density(b.node(i));
  return grid_normalize(std::move(b));
}

GridBelief grid_predict(const GridBelief& b, const MotionKernel& kernel, double u,
                        std::optional<GridDomain> out_domain) {
  require_grid(b, "grid_predict");
  const GridDomain domain = out_domain.value_or(GridDomain{b.lo, b.hi, b.size()});
  GridBelief out{domain.lo, domain.hi, std::vector<double>(domain.nodes, 0.0)};
  require_grid(out, "grid_predict output");

  const std::size_t n_in = b.size();
  const double dx_in = b.spacing();
  std::vector<double> weighted(n_in);
  for (std::size_t j = 0; j < n_in; ++j) weighted[j] = trapezoid_weight(j, n_in, dx_in) * b.values[j];

  // Each output node is an independent sum in fixed order.
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = out.node(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < n_in; ++j) {
      if (weighted[j] != 0.0) acc += weighted[j] * kernel(x, b.node(j), u);
    }
    out.values[i] = acc;
  }

  const double mass = out.integral() / b.integral();
  if (!std::isfinite(mass) || 1.0 - mass > kGridLeakTolerance) {
    std::ostringstream os;
    os << "grid_predict: " << (1.0 - mass)
       << " of the probability mass leaves the grid [" << out.lo << ", " << out.hi
       << "]; widen the grid bounds";
    throw NumericalError(os.str());
  }
  return grid_normalize(std::move(out));
}

GridBelief grid_correct(const GridBelief& b, const Likelihood& likelihood, double z) {
  require_grid(b, "grid_correct");
  GridBelief out = b;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= likelihood(z, out.node(i));
  const double mass = out.integral();
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw NumericalError("grid_correct: posterior vanishes on the grid; the observation is "
                         "incompatible with the grid support");
  }
  for (double& v : out.values) v /= mass;
  return out;
}

Gaussian1D grid_moments(const GridBelief& b) {
  require_grid(b, "grid_moments");
  const std::size_t n = b.size();
  const double dx = b.spacing();
  double mass = 0.0;
  double first = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = trapezoid_weight(i, n, dx) * b.values[i];
    mass += w;
    first += w * b.node(i);
  }
  const double mean = first / mass;
  double second = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = b.node(i) - mean;
    second += trapezoid_weight(i, n, dx) * b.values[i] * d * d;
  }
  return {mean, second / mass};
}

MapProblem MapProblem::from_model(const Belief& prior, const NonlinearModel& m, const Vector& z) {
  MapProblem p;
  p.prior = prior;
  const Vector v0 = Vector::Zero(m.R.rows());
  p.h = [m, v0](const Vector& x) { return m.h(x, v0); };
  p.jac_h = m.jac_h_x;
  const Matrix Hv = m.jac_h_v(prior.x_hat);
  p.R = Hv * m.R * Hv.transpose();
  p.z = z;
  p.obs_residual = m.obs_residual;
  return p;
}

namespace {

struct NormalEquations {
  Matrix A;  // Jᵀ P_e⁻¹ J
  Vector g;  // Jᵀ P_e⁻¹ r
};

NormalEquations stacked_normal_equations(const MapProblem& p, const Matrix& P_inv, const Matrix& R_inv,
                                         const Vector& x) {
  const auto n = x.size();
  const Matrix H = p.jac_h(x);
  const auto k = H.rows();
  Matrix J(n + k, n);
  J << Matrix::Identity(n, n), H;
  Vector r(n + k);
  r << p.prior.x_hat - x, p.obs_residual(p.z, p.h(x));
  Matrix Pe_inv = Matrix::Zero(n + k, n + k);
  Pe_inv.topLeftCorner(n, n) = P_inv;
  Pe_inv.bottomRightCorner(k, k) = R_inv;
  return {J.transpose() * Pe_inv * J, J.transpose() * Pe_inv * r};
}

}  // namespace

Vector map_gradient(const MapProblem& p, const Vector& x) {
  const Matrix P_inv = checked_inverse(p.prior.P, "prior covariance");
  const Matrix R_inv = checked_inverse(p.R, "observation noise covariance");
  return stacked_normal_equations(p, P_inv, R_inv, x).g;
}

MapResult map_correct_gn(const MapProblem& p, const IterationConfig& cfg) {
  cfg.validate();
  p.prior.validate();
  const Matrix P_inv = checked_inverse(p.prior.P, "prior covariance");
  const Matrix R_inv = checked_inverse(p.R, "observation noise covariance");

  MapResult result;
  Vector x = p.prior.x_hat;
  Matrix cov;
  for (int it = 0; it < cfg.max_iters; ++it) {
    const NormalEquations ne = stacked_normal_equations(p, P_inv, R_inv, x);
    const CheckedLu lu(ne.A, "normal-equation matrix");
    const Vector step = lu.solve(ne.g);
    if (!step.allFinite()) throw NumericalError("map_correct_gn: non-finite step");
    cov = lu.inverse();
    x += step;
    if (step.norm() < cfg.epsilon) {
      result.converged = true;
      break;
    }
    result.iterations = it + 1;
  }
  result.posterior.x_hat = x;
  result.posterior.P = symmetrize(cov);
  result.gradient_norm = stacked_normal_equations(p, P_inv, R_inv, x).g.norm();
  return result;
}

Vector ieskf_cost_minimize(const Vector& x_prior, const Matrix& P, const ErrorStateModel& m,
                           const Vector& z, const Vector& x_init, const Matrix& retraction_jacobian) {
  const Matrix J =
      retraction_jacobian.size() == 0 ? m.retraction_jacobian(x_init, x_prior) : retraction_jacobian;
  const Matrix H = m.jac_h_dx(x_init);
  const Matrix Hv = m.jac_h_v(x_init);
  const Matrix W_obs = checked_inverse(Matrix(Hv * m.R * Hv.transpose()), "observation noise covariance");
  const Matrix W_prior = checked_inverse(P, "prior covariance");
  const Vector r = m.obs_residual(z, m.h_nominal(x_init));
  const Vector c = m.boxminus(x_init, x_prior);
  if (J.rows() != c.size() || J.cols() != c.size() || H.cols() != c.size()) {
    throw DimensionError("ieskf_cost_minimize: Jacobians do not match the error dimension");
  }
  // ∂cost/∂δx = 0  ⇔  (Hᵀ W_obs H + Jᵀ W_prior J) δx = Hᵀ W_obs r − Jᵀ W_prior c
  const Matrix A = H.transpose() * W_obs * H + J.transpose() * W_prior * J;
  const Vector rhs = H.transpose() * W_obs * r - J.transpose() * W_prior * c;
  return CheckedLu(A, "normal-equation matrix").solve(rhs);
}

}  // namespace estkit
