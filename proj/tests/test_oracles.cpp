#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "estkit/builtin_models.hpp"
#include "estkit/errors.hpp"
#include "estkit/oracles.hpp"
#include "estkit/sim.hpp"
#include "estkit/validation.hpp"

using namespace estkit;

namespace {

double normal_pdf(double x, double var) {
  return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

void expect_suite_passes(const SuiteResult& r) {
  for (const CheckResult& c : r.checks) EXPECT_TRUE(c.passed) << format_check(c);
}

}  // namespace

TEST(Grid, SampledGaussianMoments) {
  const GridBelief g = grid_from_density({-6.0, 8.0, 2001}, [](double x) { return normal_pdf(x - 1.0, 2.0); });
  EXPECT_NEAR(g.integral(), 1.0, 1e-12);
  const Gaussian1D m = grid_moments(g);
  EXPECT_NEAR(m.mean, 1.0, 1e-6);
  EXPECT_NEAR(m.var, 2.0, 1e-4);
}

TEST(Grid, PredictMatchesAnalyticConvolution) {
  const GridBelief g = grid_from_density({-8.0, 8.0, 1601}, [](double x) { return normal_pdf(x, 1.0); });
  const MotionKernel kernel = [](double x, double x_prev, double u) { return normal_pdf(x - x_prev - u, 0.5); };
  const GridBelief p = grid_predict(g, kernel, 0.5, GridDomain{-9.0, 10.0, 1601});
  const Gaussian1D m = grid_moments(p);
  EXPECT_NEAR(m.mean, 0.5, 1e-6);
  EXPECT_NEAR(m.var, 1.5, 1e-4);
  EXPECT_NEAR(p.integral(), 1.0, 1e-12);
  EXPECT_GE(*std::min_element(p.values.begin(), p.values.end()), 0.0);
}

TEST(Grid, PredictReportsLeakage) {
  const GridBelief g = grid_from_density({-4.0, 4.0, 401}, [](double x) { return normal_pdf(x, 1.0); });
  const MotionKernel kernel = [](double x, double x_prev, double u) { return normal_pdf(x - x_prev - u, 0.5); };
  EXPECT_THROW(grid_predict(g, kernel, 3.0), NumericalError);
}

TEST(Grid, CorrectMatchesGaussianProduct) {
  const GridBelief g = grid_from_density({-10.0, 10.0, 4001}, [](double x) { return normal_pdf(x, 2.0); });
  const Likelihood like = [](double z, double x) { return normal_pdf(z - x, 1.0); };
  const Gaussian1D m = grid_moments(grid_correct(g, like, 1.5));
  const Gaussian1D exact = gaussian_product_1d({0.0, 2.0}, {1.5, 1.0});
  EXPECT_NEAR(m.mean, exact.mean, 1e-8);
  EXPECT_NEAR(m.var, exact.var, 1e-6);
}

TEST(Grid, VanishingPosteriorThrows) {
  const GridBelief g = grid_from_density({-1.0, 1.0, 101}, [](double x) { return normal_pdf(x, 0.1); });
  const Likelihood like = [](double z, double x) { return std::abs(z - x) < 1e-3 ? 1.0 : 0.0; };
  EXPECT_THROW(grid_correct(g, like, 50.0), NumericalError);
}

TEST(Grid, RejectsDegenerateGrids) {
  EXPECT_THROW(grid_normalize(GridBelief{0.0, 1.0, {1.0}}), UsageError);
  EXPECT_THROW(grid_normalize(GridBelief{1.0, 0.0, {1.0, 1.0}}), UsageError);
  EXPECT_THROW(grid_normalize(GridBelief{0.0, 1.0, {0.0, 0.0}}), NumericalError);
}

TEST(GaussNewton, LinearObservationTakesOneUpdate) {
  const auto lm = std::get<LinearModel>(builtin_model(kLinearCv2D));
  const Belief prior{vec({1, 2, 0.5, -0.5}), 0.3 * Matrix::Identity(4, 4)};
  const Vector z = vec({1.4, 1.7});
  const MapResult gn = map_correct_gn(MapProblem::from_model(prior, wrap_linear(lm), z), IterationConfig{});
  const Belief kf = kf_correct(prior, lm, z).first;
  EXPECT_TRUE(gn.converged);
  EXPECT_EQ(gn.iterations, 1);
  EXPECT_LT((gn.posterior.x_hat - kf.x_hat).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((gn.posterior.P - kf.P).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GaussNewton, StationaryAtConsistentObservation) {
  const auto m = std::get<NonlinearModel>(builtin_model(kRangeBearing2D));
  const Belief prior{vec({1.0, 1.0, 0.4}), 0.1 * Matrix::Identity(3, 3)};
  const MapProblem p = MapProblem::from_model(prior, m, m.h(prior.x_hat, Vector::Zero(4)));
  const MapResult gn = map_correct_gn(p, IterationConfig{});
  EXPECT_TRUE(gn.converged);
  EXPECT_EQ(gn.iterations, 0);
  EXPECT_LT((gn.posterior.x_hat - prior.x_hat).norm(), 1e-14);
  EXPECT_LT(map_gradient(p, prior.x_hat).norm(), 1e-12);
}

TEST(GaussNewton, AgreesWithConvergedIekf) {
  const auto m = std::get<NonlinearModel>(builtin_model(kRangeBearing2D));
  IterationConfig cfg;
  cfg.epsilon = 1e-12;
  cfg.max_iters = 100;
  const Belief prior{vec({0.5, 2.5, -0.3}), Vector(vec({0.4, 0.2, 0.05})).asDiagonal()};
  const Vector z = m.h(vec({1.0, 2.0, -0.2}), Vector::Zero(4));
  const MapResult gn = map_correct_gn(MapProblem::from_model(prior, m, z), cfg);
  const auto [iekf, diag] = iekf_correct(prior, m, z, cfg);
  EXPECT_EQ(gn.iterations + 1, diag.iterations);
  EXPECT_LT((gn.posterior.x_hat - iekf.x_hat).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((gn.posterior.P - iekf.P).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(gn.gradient_norm, 1e-8);
}

TEST(GaussNewton, SingularPriorIsReported) {
  const auto m = std::get<NonlinearModel>(builtin_model(kRangeBearing2D));
  const Belief prior{vec({1.0, 1.0, 0.4}), Matrix::Zero(3, 3)};
  EXPECT_THROW(map_correct_gn(MapProblem::from_model(prior, m, Vector::Zero(4)), IterationConfig{}),
               SingularMatrixError);
}

TEST(IeskfCost, UninformativeObservationKeepsPriorTerm) {
  ErrorStateModel m;
  m.nominal_dim = m.error_dim = 2;
  m.obs_dim = 1;
  m.h_nominal = [](const Vector&) { return Vector::Zero(1); };
  m.jac_h_dx = [](const Vector&) { return Matrix::Zero(1, 2); };
  m.jac_h_v = [](const Vector&) { return Matrix::Identity(1, 1); };
  m.R = Matrix::Identity(1, 1);
  Matrix J(2, 2);
  J << 1.2, 0.1, -0.3, 0.9;
  const Vector x_prior = vec({0.0, 1.0});
  const Vector x_iter = vec({0.4, 0.7});
  const Vector dx = ieskf_cost_minimize(x_prior, Matrix::Identity(2, 2), m, Vector::Constant(1, 3.0), x_iter, J);
  EXPECT_LT((dx + J.inverse() * (x_iter - x_prior)).norm(), 1e-14);
}

TEST(IeskfCost, AtPriorEqualsEskfUpdate) {
  const auto m = std::get<ErrorStateModel>(builtin_model(kHeadingRobot));
  const ErrorBelief b = ErrorBelief::at(vec({1.0, 2.0, 0.1}), 0.05 * Matrix::Identity(3, 3));
  const Vector z = m.h_nominal(vec({1.2, 1.9, 0.15}));
  const Vector eskf = eskf_correct(b, m, z).second.error_update;
  EXPECT_LT((ieskf_cost_minimize(b.x_nominal, b.P, m, z, b.x_nominal) - eskf).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ValidationSuites, SmallInstancesPass) {
  expect_suite_passes(validate_grid_vs_kf(5, 3, 801));
  expect_suite_passes(validate_gn_vs_iekf(20, 101));
  expect_suite_passes(validate_cost_vs_ieskf(20, 103));
  expect_suite_passes(validate_linear_collapse(30, 107));
  expect_suite_passes(validate_jacobians(10, 109));
}

TEST(ValidationSuites, UnknownSuiteListsNames) {
  try {
    run_validation_suite("nope");
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    for (auto name : validation_suite_names()) EXPECT_NE(std::string(e.what()).find(name), std::string::npos);
  }
}

TEST(CheckResult, Formatting) {
  const CheckResult ok = check_below("gap", 1e-12, 1e-10);
  EXPECT_TRUE(ok.passed);
  EXPECT_EQ(format_check(ok), "PASS  gap  value=1e-12  (< 1e-10)");
  EXPECT_FALSE(check_within("band", 5.0, 1.0, 4.0).passed);
  EXPECT_TRUE(check_at_least("n", 3.0, 3.0).passed);
  EXPECT_FALSE((SuiteResult{"s", {ok, check_true("flag", false)}}.passed()));
}
