#include "estkit/validation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

#include "estkit/builtin_models.hpp"
#include "estkit/errors.hpp"
#include "estkit/filters.hpp"
#include "estkit/oracles.hpp"
#include "estkit/sim.hpp"

namespace estkit {
namespace {

constexpr std::array<std::string_view, 5> kSuiteNames{"grid-vs-kf", "gn-vs-iekf", "cost-vs-ieskf",
                                                      "linear-collapse", "jacobians"};

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double normal_pdf(double x, double var) {
  return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.standard_normal();
  }
  return m;
}

Vector random_vector(Rng& rng, Eigen::Index n) { return random_matrix(rng, n, 1); }

// Eigenvalues roughly within [floor, floor + spread].
Matrix random_spd(Rng& rng, Eigen::Index n, double floor, double spread) {
  const Matrix a = random_matrix(rng, n, n);
  return symmetrize(spread * a * a.transpose() / static_cast<double>(n) + floor * Matrix::Identity(n, n));
}

Eigen::Index random_size(Rng& rng, Eigen::Index max) {
  return 1 + static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(max));
}

struct RangeBearingInstance {
  Belief prior;
  Vector z;
};

// Pose prior away from the landmarks with a correlated covariance and an
// observation of a truth drawn from that prior.
RangeBearingInstance random_range_bearing(Rng& rng, const NonlinearModel& m) {
  RangeBearingInstance inst;
  Vector x(3);
  x << 4.0 * rng.uniform(), 4.0 * rng.uniform(), std::numbers::pi * (2.0 * rng.uniform() - 1.0);
  Matrix L = Matrix::Identity(3, 3) + 0.3 * random_matrix(rng, 3, 3);
  L = Vector((Vector(3) << 0.3, 0.3, 0.2).finished()).asDiagonal() * L;
  inst.prior = {x, symmetrize(L * L.transpose())};
  const Vector truth = x + L * random_vector(rng, 3);
  inst.z = m.h(truth, rng.normal(covariance_factor(m.R)));
  return inst;
}

}  // namespace

bool SuiteResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

CheckResult check_below(std::string name, double value, double bound) {
  return {std::move(name), value, "< " + number(bound), value < bound};
}

CheckResult check_at_least(std::string name, double value, double bound) {
  return {std::move(name), value, ">= " + number(bound), value >= bound};
}

CheckResult check_within(std::string name, double value, double lo, double hi) {
  return {std::move(name), value, "in [" + number(lo) + ", " + number(hi) + "]", value >= lo && value <= hi};
}

CheckResult check_true(std::string name, bool ok) { return {std::move(name), ok ? 1.0 : 0.0, "== 1", ok}; }

std::string format_check(const CheckResult& c) {
  char value[32];
  std::snprintf(value, sizeof value, "%.6g", c.value);
  return std::string(c.passed ? "PASS" : "FAIL") + "  " + c.name + "  value=" + value + "  (" + c.criterion + ")";
}

std::span<const std::string_view> validation_suite_names() { return kSuiteNames; }

SuiteResult run_validation_suite(std::string_view name) {
  if (name == "grid-vs-kf") return validate_grid_vs_kf();
  if (name == "gn-vs-iekf") return validate_gn_vs_iekf();
  if (name == "cost-vs-ieskf") return validate_cost_vs_ieskf();
  if (name == "linear-collapse") return validate_linear_collapse();
  if (name == "jacobians") return validate_jacobians();
  std::string valid;
  for (auto n : kSuiteNames) valid += (valid.empty() ? "" : ", ") + std::string(n);
  throw UsageError("unknown suite '" + std::string(name) + "'; valid suites: " + valid);
}

SuiteResult validate_grid_vs_kf(int steps, std::uint64_t seed, std::size_t nodes) {
  Scenario s;
  s.model_id = std::string(kLinear1D);
  s.horizon = steps;
  s.seed = seed;
  const Trajectory t = simulate(s);
  const auto m = std::get<Linear1DModel>(builtin_model(kLinear1D, s.params));
  const Belief b0 = s.initial();

  Gaussian1D kf{b0.x_hat[0], b0.P(0, 0)};
  const double sd0 = std::sqrt(kf.var);
  GridBelief grid = grid_from_density({kf.mean - 8.0 * sd0, kf.mean + 8.0 * sd0, nodes},
                                      [&](double x) { return normal_pdf(x - kf.mean, kf.var); });
  const MotionKernel kernel = [&](double x, double x_prev, double u) {
    return normal_pdf(x - x_prev - u, m.sigma2_motion);
  };
  const Likelihood likelihood = [&](double z, double x) { return normal_pdf(z - x, m.sigma2_obs); };

  double mean_dev = 0.0;
  double var_dev = 0.0;
  double mass_dev = 0.0;
  double min_density = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double u = t.controls[i][0];
    const double z = t.measurements[i][0];
    const Gaussian1D kf_pred = kf1d_predict(kf, m, u);
    const double sd = std::sqrt(kf_pred.var);
    grid = grid_predict(grid, kernel, u, GridDomain{kf_pred.mean - 8.0 * sd, kf_pred.mean + 8.0 * sd, nodes});
    mass_dev = std::max(mass_dev, std::abs(grid.integral() - 1.0));
    grid = grid_correct(grid, likelihood, z);
    mass_dev = std::max(mass_dev, std::abs(grid.integral() - 1.0));
    min_density = std::min(min_density, *std::min_element(grid.values.begin(), grid.values.end()));
    kf = kf1d_correct(kf_pred, m, z);
    const Gaussian1D g = grid_moments(grid);
    mean_dev = std::max(mean_dev, std::abs(g.mean - kf.mean));
    var_dev = std::max(var_dev, std::abs(g.var - kf.var));
  }
  return {"grid-vs-kf",
          {check_below("max |grid mean - kf mean|", mean_dev, 1e-3),
           check_below("max |grid var - kf var|", var_dev, 1e-3),
           check_below("max |grid mass - 1|", mass_dev, 1e-6),
           check_at_least("min grid density", min_density, 0.0)}};
}

SuiteResult validate_gn_vs_iekf(int instances, std::uint64_t seed) {
  const auto m = std::get<NonlinearModel>(builtin_model(kRangeBearing2D));
  IterationConfig cfg;
  cfg.epsilon = 1e-12;
  cfg.max_iters = 100;
  Rng rng(seed);

  double mean_dev = 0.0;
  double cov_dev = 0.0;
  double lemma_dev = 0.0;
  double grad = 0.0;
  bool converged = true;
  for (int i = 0; i < instances; ++i) {
    const RangeBearingInstance inst = random_range_bearing(rng, m);
    const auto [iekf, diag] = iekf_correct(inst.prior, m, inst.z, cfg);
    const MapProblem p = MapProblem::from_model(inst.prior, m, inst.z);
    const MapResult gn = map_correct_gn(p, cfg);
    converged = converged && diag.converged && gn.converged;
    mean_dev = std::max(mean_dev, (iekf.x_hat - gn.posterior.x_hat).cwiseAbs().maxCoeff());
    cov_dev = std::max(cov_dev, max_abs_diff(iekf.P, gn.posterior.P));
    grad = std::max(grad, gn.gradient_norm);

    // P − PHᵀ(HPHᵀ + R)⁻¹HP, linearized at the converged mean (within ε of
    // the last GN linearization point).
    const Matrix& P = inst.prior.P;
    const Matrix H = m.jac_h_x(gn.posterior.x_hat);
    const Matrix S = H * P * H.transpose() + p.R;
    const Matrix lemma = P - P * H.transpose() * CheckedLu(S, "S").solve(Matrix(H * P));
    lemma_dev = std::max(lemma_dev, max_abs_diff(lemma, gn.posterior.P));
  }

  // Linear observation: one GN update reproduces the KF correction.
  const auto cv = std::get<LinearModel>(builtin_model(kLinearCv2D));
  double linear_dev = 0.0;
  int max_linear_iters = 0;
  for (int i = 0; i < instances; ++i) {
    const Belief prior{random_vector(rng, 4), random_spd(rng, 4, 0.05, 1.0)};
    const Vector z = cv.H * prior.x_hat + random_vector(rng, cv.obs_dim());
    const auto kf = kf_correct(prior, cv, z).first;
    const MapResult gn = map_correct_gn(MapProblem::from_model(prior, wrap_linear(cv), z), IterationConfig{});
    max_linear_iters = std::max(max_linear_iters, gn.iterations);
    linear_dev = std::max({linear_dev, (kf.x_hat - gn.posterior.x_hat).cwiseAbs().maxCoeff(),
                           max_abs_diff(kf.P, gn.posterior.P)});
  }

  return {"gn-vs-iekf",
          {check_true("all iterations converged", converged),
           check_below("max |iekf mean - gn mean|", mean_dev, 1e-8),
           check_below("max |iekf cov - gn cov|", cov_dev, 1e-8),
           check_below("max |gn cov - inversion-lemma cov|", lemma_dev, 1e-8),
           check_below("max gn gradient norm", grad, 1e-8),
           check_within("max gn iterations on linear h", max_linear_iters, 1, 1),
           check_below("max |gn - kf| on linear h", linear_dev, 1e-10)}};
}

SuiteResult validate_cost_vs_ieskf(int instances, std::uint64_t seed) {
  Rng rng(seed);
  double closed_dev = 0.0;
  for (int i = 0; i < instances; ++i) {
    const Eigen::Index n = random_size(rng, 5);
    const Eigen::Index k = random_size(rng, 5);
    const Matrix A = random_matrix(rng, k, n);
    const Matrix B = random_matrix(rng, k, n);

    ErrorStateModel m;
    m.nominal_dim = n;
    m.error_dim = n;
    m.obs_dim = k;
    m.h_nominal = [A, B](const Vector& x) -> Vector { return A * x + 0.1 * (B * x).array().sin().matrix(); };
    m.jac_h_dx = [A, B](const Vector& x) -> Matrix {
      return A + 0.1 * (B * x).array().cos().matrix().asDiagonal() * B;
    };
    m.jac_h_v = [k](const Vector&) -> Matrix { return Matrix::Identity(k, k); };
    m.R = random_spd(rng, k, 0.1, 1.0);

    const Vector x_prior = random_vector(rng, n);
    const Vector x_iter = x_prior + 0.3 * random_vector(rng, n);
    const Matrix P = random_spd(rng, n, 0.1, 1.0);
    const Matrix J = Matrix::Identity(n, n) + 0.2 * random_matrix(rng, n, n);
    const Vector z = m.h_nominal(x_prior) + random_vector(rng, k);

    const Vector closed = ieskf_step(x_prior, P, m, z, x_iter, J).dx;
    const Vector direct = ieskf_cost_minimize(x_prior, P, m, z, x_iter, J);
    closed_dev = std::max(closed_dev, (closed - direct).cwiseAbs().maxCoeff());
  }

  // On the heading robot, starting at the prior, the minimizer is the ESKF update.
  const auto robot = std::get<ErrorStateModel>(builtin_model(kHeadingRobot));
  const auto rb = std::get<NonlinearModel>(builtin_model(kRangeBearing2D));
  double eskf_dev = 0.0;
  for (int i = 0; i < instances; ++i) {
    const RangeBearingInstance inst = random_range_bearing(rng, rb);
    const ErrorBelief b = ErrorBelief::at(inst.prior.x_hat, inst.prior.P);
    const Vector eskf_dx = eskf_correct(b, robot, inst.z).second.error_update;
    const Vector direct = ieskf_cost_minimize(b.x_nominal, b.P, robot, inst.z, b.x_nominal);
    eskf_dev = std::max(eskf_dev, (eskf_dx - direct).cwiseAbs().maxCoeff());
  }

  return {"cost-vs-ieskf",
          {check_below("max |closed-form dx - cost minimizer|", closed_dev, 1e-6),
           check_below("max |eskf dx - cost minimizer at prior|", eskf_dev, 1e-10)}};
}

SuiteResult validate_linear_collapse(int steps, std::uint64_t seed) {
  SuiteResult out{"linear-collapse", {}};
  for (std::string_view id : {kLinear1D, kLinearCv2D}) {
    Scenario s;
    s.model_id = std::string(id);
    s.horizon = steps;
    s.seed = seed;
    const Trajectory t = simulate(s);
    const RunReport ref = run_filter(FilterKind::kf, s, t, IterationConfig{});

    std::vector<std::pair<FilterKind, int>> runs{{FilterKind::ekf, 1}, {FilterKind::eskf, 1}};
    if (id == kLinear1D) runs.emplace_back(FilterKind::kf1d, 1);
    for (int iters : {1, 2, 3, 5, 20}) {
      runs.emplace_back(FilterKind::iekf, iters);
      runs.emplace_back(FilterKind::ieskf, iters);
    }
    double worst = 0.0;
    for (const auto& [kind, iters] : runs) {
      IterationConfig cfg;
      cfg.max_iters = iters;
      const RunReport r = run_filter(kind, s, t, cfg);
      for (std::size_t i = 0; i < r.beliefs.size(); ++i) {
        worst = std::max({worst, (r.beliefs[i].x_hat - ref.beliefs[i].x_hat).cwiseAbs().maxCoeff(),
                          max_abs_diff(r.beliefs[i].P, ref.beliefs[i].P)});
      }
    }
    out.checks.push_back(check_below("max per-step deviation from kf on " + std::string(id), worst, 1e-10));
  }
  return out;
}

SuiteResult validate_jacobians(int points, std::uint64_t seed) {
  SuiteResult out{"jacobians", {}};
  for (std::string_view id : builtin_model_names()) {
    for (const JacobianCheck& c : check_model_jacobians(id, ModelParams{}, points, seed)) {
      out.checks.push_back(check_below(std::string(id) + " " + c.jacobian, c.max_rel_error, 1e-5));
    }
  }
  return out;
}

SuiteResult validate_single_pass_equivalence(int instances, std::uint64_t seed) {
  const auto rb = std::get<NonlinearModel>(builtin_model(kRangeBearing2D));
  const auto robot = std::get<ErrorStateModel>(builtin_model(kHeadingRobot));
  IterationConfig one;
  one.max_iters = 1;
  Rng rng(seed);
  int iekf_mismatches = 0;
  int ieskf_mismatches = 0;
  for (int i = 0; i < instances; ++i) {
    const RangeBearingInstance inst = random_range_bearing(rng, rb);
    const auto ekf = ekf_correct(inst.prior, rb, inst.z).first;
    const auto iekf = iekf_correct(inst.prior, rb, inst.z, one).first;
    if (!bitwise_equal(ekf.x_hat, iekf.x_hat) || !bitwise_equal(ekf.P, iekf.P)) ++iekf_mismatches;

    const ErrorBelief b = ErrorBelief::at(inst.prior.x_hat, inst.prior.P);
    const auto eskf = eskf_correct(b, robot, inst.z).first;
    const auto ieskf = ieskf_correct(b, robot, inst.z, one).first;
    if (!bitwise_equal(eskf.x_nominal, ieskf.x_nominal) || !bitwise_equal(eskf.P, ieskf.P)) ++ieskf_mismatches;
  }
  return {"single-pass",
          {check_below("iekf@1 vs ekf bitwise mismatches", iekf_mismatches, 1),
           check_below("ieskf@1 vs eskf bitwise mismatches", ieskf_mismatches, 1)}};
}

SuiteResult validate_covariance_identities(int instances, std::uint64_t seed) {
  Rng rng(seed);
  double form_dev = 0.0;
  double woodbury_dev = 0.0;
  for (int i = 0; i < instances; ++i) {
    const Eigen::Index n = random_size(rng, 6);
    const Eigen::Index k = random_size(rng, 6);
    const Matrix P = random_spd(rng, n, 0.1, 1.0);
    const Matrix R = random_spd(rng, k, 0.1, 1.0);
    const Matrix H = random_matrix(rng, k, n);
    LinearModel m{Matrix::Identity(n, n), Matrix::Zero(n, 1), H, Matrix::Zero(n, n), R};
    const auto [post, diag] = kf_correct(Belief{Vector::Zero(n), P}, m, Vector::Zero(k));
    const Matrix information =
        checked_inverse(P, "P") + H.transpose() * checked_inverse(R, "R") * H;
    form_dev = std::max(form_dev, max_abs_diff(post.P, checked_inverse(information, "information")));

    const Matrix A = random_spd(rng, n, 0.5, 1.0);
    const Matrix U = random_matrix(rng, n, k);
    const Matrix C = random_spd(rng, k, 0.5, 1.0);
    const Matrix V = random_matrix(rng, k, n);
    woodbury_dev = std::max(woodbury_dev, max_abs_diff(woodbury_inverse(A, U, C, V),
                                                       checked_inverse(Matrix(A + U * C * V), "A + UCV")));
  }
  return {"covariance-identities",
          {check_below("max |(I-KH)P - (P^-1 + H'R^-1 H)^-1|", form_dev, 1e-8),
           check_below("max |woodbury - direct inverse|", woodbury_dev, 1e-9)}};
}

SuiteResult validate_error_state_reset(int seeds) {
  int nonzero = 0;
  int checked = 0;
  double kf_dev = 0.0;
  for (std::string_view id : {kLinear1D, kLinearCv2D, kHeadingRobot}) {
    for (int sd = 0; sd < seeds; ++sd) {
      Scenario s;
      s.model_id = std::string(id);
      s.seed = static_cast<std::uint64_t>(100 + sd);
      const Trajectory t = simulate(s);
      const AnyModel any = builtin_model(id, s.params);
      const ErrorStateModel m = std::holds_alternative<ErrorStateModel>(any)
                                    ? std::get<ErrorStateModel>(any)
                                    : wrap_linear_error_state(std::holds_alternative<LinearModel>(any)
                                                                  ? std::get<LinearModel>(any)
                                                                  : to_linear(std::get<Linear1DModel>(any)));
      for (bool iterated : {false, true}) {
        const Belief b0 = s.initial();
        ErrorBelief b = ErrorBelief::at(b0.x_hat, b0.P);
        for (std::size_t i = 0; i < t.measurements.size(); ++i) {
          b = eskf_predict(b, m, t.controls[i]);
          nonzero += (b.dx_hat.array() != 0.0).any() ? 1 : 0;
          b = iterated ? ieskf_correct(b, m, t.measurements[i], IterationConfig{}).first
                       : eskf_correct(b, m, t.measurements[i]).first;
          nonzero += (b.dx_hat.array() != 0.0).any() ? 1 : 0;
          checked += 2;
        }
      }
      if (id != kHeadingRobot) {
        const RunReport kf = run_filter(FilterKind::kf, s, t, IterationConfig{});
        const RunReport eskf = run_filter(FilterKind::eskf, s, t, IterationConfig{});
        for (std::size_t i = 0; i < kf.beliefs.size(); ++i) {
          kf_dev = std::max({kf_dev, (kf.beliefs[i].x_hat - eskf.beliefs[i].x_hat).cwiseAbs().maxCoeff(),
                             max_abs_diff(kf.beliefs[i].P, eskf.beliefs[i].P)});
        }
      }
    }
  }
  return {"error-state-reset",
          {check_below("nonzero error means after predict/correct", nonzero, 1),
           check_at_least("error means inspected", checked, 1),
           check_below("max |eskf - kf| on linear models", kf_dev, 1e-10)}};
}

SuiteResult validate_gain_monotonicity() {
  const std::array<double, 13> sweep{1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0, 3.0, 1e1, 3e1, 1e2, 3e2, 1e3};
  auto gain = [](double q, double r) {
    const LinearModel m = to_linear(Linear1DModel{q, r});
    const Belief prior = kf_predict(Belief{Vector::Zero(1), Matrix::Constant(1, 1, 1e-2)}, m, Vector::Zero(1));
    return kf_correct(prior, m, Vector::Zero(1)).second.kalman_gain(0, 0);
  };
  // Smallest successive change in the expected direction; positive means strict.
  double r_margin = INFINITY;
  double q_margin = INFINITY;
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    r_margin = std::min(r_margin, gain(0.5, sweep[i - 1]) - gain(0.5, sweep[i]));
    q_margin = std::min(q_margin, gain(sweep[i], 1.0) - gain(sweep[i - 1], 1.0));
  }
  return {"gain-monotonicity",
          {check_true("K strictly decreasing in R", r_margin > 0.0),
           check_true("K strictly increasing in Q", q_margin > 0.0)}};
}

SuiteResult validate_statistical_sanity(int seeds, int nees_runs) {
  SuiteResult out{"statistical-sanity", {}};
  const std::array<std::pair<std::string_view, std::vector<FilterKind>>, 4> cases{{
      {kLinear1D, {FilterKind::kf}},
      {kLinearCv2D, {FilterKind::kf}},
      {kRangeBearing2D, {FilterKind::ekf, FilterKind::iekf}},
      {kHeadingRobot, {FilterKind::eskf, FilterKind::ieskf}},
  }};
  for (const auto& [id, kinds] : cases) {
    std::vector<double> filtered(kinds.size(), 0.0);
    double dr = 0.0;
    for (int sd = 0; sd < seeds; ++sd) {
      Scenario s;
      s.model_id = std::string(id);
      s.seed = static_cast<std::uint64_t>(1000 + sd);
      const Trajectory t = simulate(s);
      dr += run_filter(FilterKind::dead_reckoning, s, t, IterationConfig{}).rmse.norm() / seeds;
      for (std::size_t k = 0; k < kinds.size(); ++k) {
        filtered[k] += run_filter(kinds[k], s, t, IterationConfig{}).rmse.norm() / seeds;
      }
    }
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      out.checks.push_back(check_below(std::string(id) + " " + std::string(to_string(kinds[k])) +
                                           " rmse / dead-reckoning rmse",
                                       filtered[k] / dr, 1.0));
    }
  }

  // Averaged over N runs, N·NEES_t ~ χ²(nN) for a consistent filter.
  const int n = 3;
  const boost::math::chi_squared chi2(n * nees_runs);
  const double lo = boost::math::quantile(chi2, 0.025) / nees_runs;
  const double hi = boost::math::quantile(chi2, 0.975) / nees_runs;
  std::vector<double> per_step;
  for (int r = 0; r < nees_runs; ++r) {
    Scenario s;
    s.model_id = std::string(kRangeBearing2D);
    s.seed = static_cast<std::uint64_t>(5000 + r);
    s.sample_initial_truth = true;
    const Trajectory t = simulate(s);
    const RunReport rep = run_filter(FilterKind::ekf, s, t, IterationConfig{});
    if (per_step.empty()) per_step.assign(rep.nees.size(), 0.0);
    for (std::size_t i = 0; i < rep.nees.size(); ++i) per_step[i] += rep.nees[i] / nees_runs;
  }
  double grand = 0.0;
  int inside = 0;
  for (double v : per_step) {
    grand += v / static_cast<double>(per_step.size());
    inside += (v >= lo && v <= hi) ? 1 : 0;
  }
  out.checks.push_back(check_within("range-bearing ekf mean NEES", grand, lo, hi));
  out.checks.push_back(check_at_least("fraction of steps with run-averaged NEES in band",
                                      static_cast<double>(inside) / static_cast<double>(per_step.size()),
                                      0.9));
  return out;
}

}  // namespace estkit
