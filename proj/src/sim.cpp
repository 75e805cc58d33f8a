#include "estkit/sim.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "estkit/errors.hpp"

namespace estkit {
namespace {

constexpr std::array<std::string_view, 7> kFilterNames{"kf", "kf1d", "ekf", "iekf", "eskf", "ieskf", "dr"};

constexpr double kDefaultInitialVariance = 1e-2;

bool is_pose_model(std::string_view id) { return id == kRangeBearing2D || id == kHeadingRobot; }

// Ground-truth process: x_t = f(x_{t−1}, u_t, w_t), z_t = h(x_t, v_t).
NonlinearModel process_model(const AnyModel& model) {
  return std::visit(
      [](const auto& m) -> NonlinearModel {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Linear1DModel>) {
          return wrap_linear(to_linear(m));
        } else if constexpr (std::is_same_v<T, LinearModel>) {
          return wrap_linear(m);
        } else if constexpr (std::is_same_v<T, NonlinearModel>) {
          return m;
        } else {
          // Noise perturbs the nominal propagation through the retraction.
          NonlinearModel p;
          p.name = m.name;
          p.state_dim = m.nominal_dim;
          p.control_dim = m.control_dim;
          p.obs_dim = m.obs_dim;
          p.f = [m](const Vector& x, const Vector& u, const Vector& w) -> Vector {
            return m.boxplus(m.f_nominal(x, u), m.jac_f_w(x, u) * w);
          };
          p.h = [m](const Vector& x, const Vector& v) -> Vector {
            return m.h_nominal(x) + m.jac_h_v(x) * v;
          };
          p.Q = m.Q;
          p.R = m.R;
          return p;
        }
      },
      model);
}

ResidualFn state_residual_of(const AnyModel& model) {
  return std::visit(
      [](const auto& m) -> ResidualFn {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, NonlinearModel>) {
          return m.state_residual;
        } else if constexpr (std::is_same_v<T, ErrorStateModel>) {
          return m.boxminus;
        } else {
          return subtract;
        }
      },
      model);
}

struct StepOutput {
  Vector x_hat;
  Matrix P;
  std::optional<Vector> dx_hat;
  int iterations = 1;
  double innovation_norm = 0.0;
};

using Stepper = std::function<StepOutput(const Vector& u, const Vector& z)>;

[[noreturn]] void incompatible(FilterKind kind, std::string_view model_id, const char* need) {
  throw UsageError("filter '" + std::string(to_string(kind)) + "' requires " + need +
                   "; model '" + std::string(model_id) + "' does not provide one");
}

LinearModel linear_of(const AnyModel& model, FilterKind kind, std::string_view id) {
  if (const auto* m1 = std::get_if<Linear1DModel>(&model)) return to_linear(*m1);
  if (const auto* m = std::get_if<LinearModel>(&model)) return *m;
  incompatible(kind, id, "a linear model");
}

NonlinearModel nonlinear_of(const AnyModel& model, FilterKind kind, std::string_view id) {
  if (const auto* m = std::get_if<NonlinearModel>(&model)) return *m;
  if (std::holds_alternative<ErrorStateModel>(model)) incompatible(kind, id, "a nonlinear (full-state) model");
  return wrap_linear(linear_of(model, kind, id));
}

ErrorStateModel error_state_of(const AnyModel& model, FilterKind kind, std::string_view id) {
  if (const auto* m = std::get_if<ErrorStateModel>(&model)) return *m;
  if (std::holds_alternative<NonlinearModel>(model)) incompatible(kind, id, "an error-state model");
  return wrap_linear_error_state(linear_of(model, kind, id));
}

Stepper make_stepper(FilterKind kind, const AnyModel& model, std::string_view id, const Belief& init,
                     const IterationConfig& cfg) {
  switch (kind) {
    case FilterKind::kf: {
      const LinearModel m = linear_of(model, kind, id);
      return [m, b = init](const Vector& u, const Vector& z) mutable {
        auto [post, diag] = kf_correct(kf_predict(b, m, u), m, z);
        b = std::move(post);
        return StepOutput{b.x_hat, b.P, std::nullopt, 1, diag.innovation.norm()};
      };
    }
    case FilterKind::kf1d: {
      const auto* m = std::get_if<Linear1DModel>(&model);
      if (m == nullptr) incompatible(kind, id, "the linear-1d model");
      return [m = *m, g = Gaussian1D{init.x_hat[0], init.P(0, 0)}](const Vector& u, const Vector& z) mutable {
        const Gaussian1D prior = kf1d_predict(g, m, u[0]);
        g = kf1d_correct(prior, m, z[0]);
        return StepOutput{Vector::Constant(1, g.mean), Matrix::Constant(1, 1, g.var), std::nullopt, 1,
                          std::abs(z[0] - prior.mean)};
      };
    }
    case FilterKind::ekf:
    case FilterKind::iekf: {
      const NonlinearModel m = nonlinear_of(model, kind, id);
      const bool iterated = kind == FilterKind::iekf;
      return [m, cfg, iterated, b = init](const Vector& u, const Vector& z) mutable {
        const Belief prior = ekf_predict(b, m, u);
        auto [post, diag] = iterated ? iekf_correct(prior, m, z, cfg) : ekf_correct(prior, m, z);
        b = std::move(post);
        return StepOutput{b.x_hat, b.P, std::nullopt, diag.iterations, diag.innovation.norm()};
      };
    }
    case FilterKind::eskf:
    case FilterKind::ieskf: {
      const ErrorStateModel m = error_state_of(model, kind, id);
      const bool iterated = kind == FilterKind::ieskf;
      return [m, cfg, iterated, b = ErrorBelief::at(init.x_hat, init.P)](const Vector& u,
                                                                         const Vector& z) mutable {
        const ErrorBelief prior = eskf_predict(b, m, u);
        auto [post, diag] = iterated ? ieskf_correct(prior, m, z, cfg) : eskf_correct(prior, m, z);
        b = std::move(post);
        return StepOutput{b.x_nominal, b.P, b.dx_hat, diag.iterations, diag.innovation.norm()};
      };
    }
    case FilterKind::dead_reckoning: {
      return std::visit(
          [&](const auto& m) -> Stepper {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, NonlinearModel>) {
              return [m, b = init](const Vector& u, const Vector&) mutable {
                b = ekf_predict(b, m, u);
                return StepOutput{b.x_hat, b.P, std::nullopt, 0, 0.0};
              };
            } else if constexpr (std::is_same_v<T, ErrorStateModel>) {
              return [m, b = ErrorBelief::at(init.x_hat, init.P)](const Vector& u, const Vector&) mutable {
                b = eskf_predict(b, m, u);
                return StepOutput{b.x_nominal, b.P, b.dx_hat, 0, 0.0};
              };
            } else {
              return [m = linear_of(model, kind, id), b = init](const Vector& u, const Vector&) mutable {
                b = kf_predict(b, m, u);
                return StepOutput{b.x_hat, b.P, std::nullopt, 0, 0.0};
              };
            }
          },
          model);
    }
  }
  throw UsageError("unhandled filter kind");
}

bool same_bits(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         (a.size() == 0 || std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
}

bool same_bits(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.size() == 0 || std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
}

template <typename T>
bool same_bits(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if constexpr (std::is_arithmetic_v<T>) {
      if (std::memcmp(&a[i], &b[i], sizeof(T)) != 0) return false;
    } else if (!same_bits(a[i], b[i])) {
      return false;
    }
  }
  return true;
}

}  // namespace

double Rng::uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

double Rng::standard_normal() {
  if (spare_) {
    const double out = *spare_;
    spare_.reset();
    return out;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  return r * std::cos(angle);
}

Vector Rng::normal(const Matrix& factor) {
  Vector n(factor.cols());
  for (Eigen::Index i = 0; i < n.size(); ++i) n[i] = standard_normal();
  return factor * n;
}

Matrix covariance_factor(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(cov));
  const Vector roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal();
}

std::string_view to_string(FilterKind kind) {
  return kFilterNames[static_cast<std::size_t>(kind)];
}

FilterKind parse_filter_kind(std::string_view name) {
  for (std::size_t i = 0; i < kFilterNames.size(); ++i) {
    if (kFilterNames[i] == name) return static_cast<FilterKind>(i);
  }
  std::string valid;
  for (auto n : kFilterNames) valid += (valid.empty() ? "" : ", ") + std::string(n);
  throw UsageError("unknown filter '" + std::string(name) + "'; valid filters: " + valid);
}

std::span<const std::string_view> filter_kind_names() { return kFilterNames; }

bool filter_supports_model(FilterKind kind, std::string_view model_id) {
  switch (kind) {
    case FilterKind::kf1d:
      return model_id == kLinear1D;
    case FilterKind::kf:
      return model_id == kLinear1D || model_id == kLinearCv2D;
    case FilterKind::ekf:
    case FilterKind::iekf:
      return model_id != kHeadingRobot;
    case FilterKind::eskf:
    case FilterKind::ieskf:
      return model_id != kRangeBearing2D;
    case FilterKind::dead_reckoning:
      return true;
  }
  return false;
}

Belief Scenario::initial() const {
  if (initial_belief.x_hat.size() != 0) return initial_belief;
  const Eigen::Index n = builtin_model_dims(model_id, params).state;
  return {Vector::Zero(n), kDefaultInitialVariance * Matrix::Identity(n, n)};
}

Vector Scenario::control(int step) const {
  if (controls.empty()) return default_control(model_id);
  return controls.at(static_cast<std::size_t>(step - 1));
}

void Scenario::validate() const {
  const ModelDims dims = builtin_model_dims(model_id, params);
  if (horizon < 1) throw UsageError("horizon must be >= 1");
  if (!controls.empty() && controls.size() != static_cast<std::size_t>(horizon)) {
    throw DimensionError("control schedule has " + std::to_string(controls.size()) +
                         " entries, horizon is " + std::to_string(horizon));
  }
  for (const auto& u : controls) {
    if (u.size() != dims.control) {
      throw DimensionError("control has " + std::to_string(u.size()) + " entries, model expects " +
                           std::to_string(dims.control));
    }
  }
  if (params.initial_state.size() != 0 && params.initial_state.size() != dims.state) {
    throw DimensionError("initial_state has " + std::to_string(params.initial_state.size()) +
                         " entries, model state has " + std::to_string(dims.state));
  }
  const Belief b = initial();
  if (b.x_hat.size() != dims.state) {
    throw DimensionError("initial belief mean has " + std::to_string(b.x_hat.size()) +
                         " entries, model state has " + std::to_string(dims.state));
  }
  b.validate();
}

bool same_results(const RunReport& a, const RunReport& b) {
  if (a.filter != b.filter || a.beliefs.size() != b.beliefs.size()) return false;
  for (std::size_t i = 0; i < a.beliefs.size(); ++i) {
    if (!same_bits(a.beliefs[i].x_hat, b.beliefs[i].x_hat) || !same_bits(a.beliefs[i].P, b.beliefs[i].P)) {
      return false;
    }
  }
  return same_bits(a.error_means, b.error_means) && same_bits(a.nees, b.nees) &&
         same_bits(a.iterations, b.iterations) && same_bits(a.innovation_norm, b.innovation_norm) &&
         same_bits(a.rmse, b.rmse) && std::memcmp(&a.mean_nees, &b.mean_nees, sizeof(double)) == 0 &&
         std::memcmp(&a.mean_iterations, &b.mean_iterations, sizeof(double)) == 0;
}

Trajectory simulate(const Scenario& s) {
  s.validate();
  const AnyModel model = builtin_model(s.model_id, s.params);
  const NonlinearModel process = process_model(model);
  const Matrix q_factor = covariance_factor(process.Q);
  const Matrix r_factor = covariance_factor(process.R);
  Rng rng(s.seed);

  Vector x = s.params.initial_state.size() != 0 ? s.params.initial_state : Vector::Zero(process.state_dim);
  if (s.sample_initial_truth) {
    const Belief b = s.initial();
    x = b.x_hat + rng.normal(covariance_factor(b.P));
    if (is_pose_model(s.model_id)) x[2] = wrap_angle(x[2]);
  }

  Trajectory t;
  t.truth_states.reserve(static_cast<std::size_t>(s.horizon) + 1);
  t.truth_states.push_back(x);
  for (int step = 1; step <= s.horizon; ++step) {
    const Vector u = s.control(step);
    const Vector w = rng.normal(q_factor);
    const Vector v = rng.normal(r_factor);
    x = process.f(x, u, w);
    Vector z = process.h(x, v);
    if (!x.allFinite() || !z.allFinite()) {
      throw NumericalError("simulate: non-finite state or measurement at step " + std::to_string(step));
    }
    t.truth_states.push_back(x);
    t.measurements.push_back(std::move(z));
    t.controls.push_back(u);
  }
  return t;
}

double nees(const Vector& residual, const Matrix& P) {
  const CheckedLu lu(P, "state covariance");
  return residual.dot(lu.solve(residual));
}

RunReport run_filter(FilterKind kind, const Scenario& s, const Trajectory& t, const IterationConfig& cfg) {
  s.validate();
  cfg.validate();
  if (!filter_supports_model(kind, s.model_id)) {
    throw UsageError("filter '" + std::string(to_string(kind)) + "' cannot run on model '" + s.model_id + "'");
  }
  if (t.measurements.size() != static_cast<std::size_t>(s.horizon) ||
      t.truth_states.size() != t.measurements.size() + 1 || t.controls.size() != t.measurements.size()) {
    throw DimensionError("trajectory lengths do not match the scenario horizon");
  }
  const auto start = std::chrono::steady_clock::now();
  const AnyModel model = builtin_model(s.model_id, s.params);
  const ResidualFn residual = state_residual_of(model);
  Stepper step = make_stepper(kind, model, s.model_id, s.initial(), cfg);

  RunReport report;
  report.filter = kind;
  const std::size_t T = t.measurements.size();
  const Eigen::Index n = t.truth_states.front().size();
  Vector sq_err = Vector::Zero(n);
  for (std::size_t i = 0; i < T; ++i) {
    StepOutput out;
    try {
      out = step(t.controls[i], t.measurements[i]);
      const Vector err = residual(out.x_hat, t.truth_states[i + 1]);
      report.nees.push_back(nees(err, out.P));
      sq_err += err.cwiseAbs2();
    } catch (const SingularMatrixError& e) {
      throw SingularMatrixError(e.factor(), e.rcond(), "step " + std::to_string(i + 1) + ": " + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError("step " + std::to_string(i + 1) + ": " + e.what());
    }
    report.iterations.push_back(out.iterations);
    report.innovation_norm.push_back(out.innovation_norm);
    if (out.dx_hat) report.error_means.push_back(*out.dx_hat);
    report.beliefs.push_back({std::move(out.x_hat), std::move(out.P)});
  }
  report.rmse = (sq_err / static_cast<double>(T)).cwiseSqrt();
  double nees_sum = 0.0;
  double iter_sum = 0.0;
  for (std::size_t i = 0; i < T; ++i) {
    nees_sum += report.nees[i];
    iter_sum += report.iterations[i];
  }
  report.mean_nees = nees_sum / static_cast<double>(T);
  report.mean_iterations = iter_sum / static_cast<double>(T);
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<RunReport> compare_filters(std::span<const FilterKind> kinds, const Scenario& s,
                                       const IterationConfig& cfg) {
  if (kinds.empty()) throw UsageError("compare_filters needs at least one filter");
  const Trajectory t = simulate(s);
  std::vector<RunReport> out;
  out.reserve(kinds.size());
  for (FilterKind k : kinds) out.push_back(run_filter(k, s, t, cfg));
  return out;
}

}  // namespace estkit
