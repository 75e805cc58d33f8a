#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "estkit/builtin_models.hpp"
#include "estkit/errors.hpp"
#include "estkit/models.hpp"

using namespace estkit;

constexpr double kPi = std::numbers::pi;

TEST(WrapAngle, MapsIntoHalfOpenInterval) {
  EXPECT_DOUBLE_EQ(wrap_angle(0.5), 0.5);
  EXPECT_NEAR(wrap_angle(2.0 * kPi + 0.25), 0.25, 1e-15);
  EXPECT_NEAR(wrap_angle(-kPi - 0.25), kPi - 0.25, 1e-15);
  for (double a = -20.0; a < 20.0; a += 0.37) {
    const double w = wrap_angle(a);
    EXPECT_LE(w, kPi);
    EXPECT_GE(w, -kPi);
    EXPECT_NEAR(std::cos(w), std::cos(a), 1e-12);
    EXPECT_NEAR(std::sin(w), std::sin(a), 1e-12);
  }
}

TEST(Subtract, RejectsMismatchedLengths) {
  EXPECT_THROW(subtract(Vector::Zero(2), Vector::Zero(3)), DimensionError);
}

TEST(FiniteDifference, ExactOnQuadratic) {
  const VectorFunction fn = [](const Vector& x) {
    Vector out(2);
    out << x[0] * x[0] + 3.0 * x[1], x[0] * x[1];
    return out;
  };
  Vector x(2);
  x << 1.5, -2.0;
  Matrix expected(2, 2);
  expected << 3.0, 3.0, -2.0, 1.5;
  EXPECT_LT(jacobian_relative_error(expected, finite_difference_jacobian(fn, x, 1e-4)), 1e-9);
  EXPECT_LT(jacobian_relative_error(expected, finite_difference_jacobian(fn, x)), 1e-8);
}

TEST(FiniteDifference, NonFiniteOutputThrows) {
  const VectorFunction fn = [](const Vector& x) { return Vector::Constant(1, std::log(x[0])); };
  EXPECT_THROW(finite_difference_jacobian(fn, Vector::Zero(1), 1e-6), NumericalError);
  EXPECT_THROW(finite_difference_jacobian(fn, Vector::Ones(1), 0.0), UsageError);
}

TEST(JacobianRelativeError, ScalesByLargestEntry) {
  Matrix a = Matrix::Constant(1, 1, 100.0);
  Matrix n = Matrix::Constant(1, 1, 101.0);
  EXPECT_DOUBLE_EQ(jacobian_relative_error(a, n), 0.01);
  EXPECT_DOUBLE_EQ(jacobian_relative_error(Matrix::Zero(1, 1), Matrix::Constant(1, 1, 0.5)), 0.5);
}

TEST(Linear1DModel, RejectsNegativeVariance) {
  EXPECT_THROW((Linear1DModel{-1.0, 1.0}.validate()), NumericalError);
  EXPECT_THROW((Linear1DModel{1.0, -1.0}.validate()), NumericalError);
  EXPECT_NO_THROW((Linear1DModel{0.0, 0.0}.validate()));
}

TEST(LinearModel, ToLinearMatchesScalarModel) {
  const LinearModel m = to_linear(Linear1DModel{0.5, 2.0});
  EXPECT_EQ(m.F, Matrix::Identity(1, 1));
  EXPECT_EQ(m.B, Matrix::Identity(1, 1));
  EXPECT_EQ(m.H, Matrix::Identity(1, 1));
  EXPECT_DOUBLE_EQ(m.Q(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(m.R(0, 0), 2.0);
}

TEST(LinearModel, ValidateCatchesShapeErrors) {
  LinearModel m = to_linear(Linear1DModel{0.5, 1.0});
  m.H = Matrix::Identity(1, 2);
  EXPECT_THROW(m.validate(), DimensionError);
}

TEST(WrapLinear, FunctionsReproduceMatrices) {
  const auto cv = std::get<LinearModel>(builtin_model(kLinearCv2D));
  const NonlinearModel nl = wrap_linear(cv);
  Vector x(4), u(2), w(4), v(2);
  x << 1, 2, 3, 4;
  u << 0.5, -0.5;
  w << 0.1, 0.2, 0.3, 0.4;
  v << -0.1, 0.1;
  EXPECT_LT((nl.f(x, u, w) - (cv.F * x + cv.B * u + w)).norm(), 1e-15);
  EXPECT_LT((nl.h(x, v) - (cv.H * x + v)).norm(), 1e-15);
  EXPECT_EQ(nl.jac_f_x(x, u), cv.F);
  EXPECT_EQ(nl.jac_h_x(x), cv.H);

  const ErrorStateModel es = wrap_linear_error_state(cv);
  EXPECT_EQ(es.retraction_jacobian(x, x), Matrix::Identity(4, 4));
  EXPECT_EQ(es.reset_jacobian(x, w), Matrix::Identity(4, 4));
  EXPECT_EQ(es.boxplus(x, w), x + w);
}

TEST(BuiltinModels, UnknownNameListsValidNames) {
  try {
    builtin_model("kalman-wonderland");
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    const std::string msg = e.what();
    for (auto name : builtin_model_names()) EXPECT_NE(msg.find(std::string(name)), std::string::npos);
  }
}

TEST(BuiltinModels, DimensionsMatchModels) {
  for (auto name : builtin_model_names()) {
    const ModelDims d = builtin_model_dims(name);
    EXPECT_GT(d.state, 0) << name;
    EXPECT_EQ(d.error, d.state) << name;
    EXPECT_EQ(default_control(name).size(), d.control) << name;
  }
  EXPECT_EQ(builtin_model_dims(kRangeBearing2D).obs, 4);
  ModelParams three;
  three.landmarks = {{1, 1}, {2, 2}, {3, 0}};
  EXPECT_EQ(builtin_model_dims(kHeadingRobot, three).obs, 6);
}

TEST(BuiltinModels, CvProcessNoiseIsWhiteAcceleration) {
  ModelParams p;
  p.dt = 0.5;
  p.accel_noise = 2.0;
  const auto m = std::get<LinearModel>(builtin_model(kLinearCv2D, p));
  EXPECT_NEAR(m.Q(0, 0), 2.0 * std::pow(0.5, 3) / 3.0, 1e-15);
  EXPECT_NEAR(m.Q(0, 2), 2.0 * std::pow(0.5, 2) / 2.0, 1e-15);
  EXPECT_NEAR(m.Q(2, 2), 2.0 * 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(m.Q(0, 1), 0.0);
}

TEST(RangeBearing, MeasurementOfKnownPose) {
  const std::array<std::array<double, 2>, 1> landmark{{{3.0, 4.0}}};
  Vector x(3);
  x << 0.0, 0.0, 0.5;
  const Vector z = range_bearing(x, landmark);
  EXPECT_DOUBLE_EQ(z[0], 5.0);
  EXPECT_NEAR(z[1], std::atan2(4.0, 3.0) - 0.5, 1e-15);
}

TEST(RangeBearing, ResidualWrapsBearingsOnly) {
  Vector z(4), zp(4);
  z << 1.0, kPi - 0.1, 2.0, 0.2;
  zp << 0.5, -kPi + 0.1, 1.0, 0.1;
  const Vector r = range_bearing_residual(z, zp);
  EXPECT_DOUBLE_EQ(r[0], 0.5);
  EXPECT_NEAR(r[1], -0.2, 1e-12);
  EXPECT_DOUBLE_EQ(r[2], 1.0);
  EXPECT_NEAR(r[3], 0.1, 1e-15);
}

TEST(PoseResidual, WrapsHeading) {
  Vector a(3), b(3);
  a << 1.0, 1.0, kPi - 0.05;
  b << 0.0, 2.0, -kPi + 0.05;
  const Vector r = pose_residual(a, b);
  EXPECT_DOUBLE_EQ(r[0], 1.0);
  EXPECT_DOUBLE_EQ(r[1], -1.0);
  EXPECT_NEAR(r[2], -0.1, 1e-12);
}

TEST(HeadingRobot, BoxplusBoxminusRoundTrip) {
  const auto m = std::get<ErrorStateModel>(builtin_model(kHeadingRobot));
  Vector x(3), dx(3);
  x << 1.0, -2.0, 3.1;
  dx << 0.1, 0.2, 0.2;
  const Vector y = m.boxplus(x, dx);
  EXPECT_LE(std::abs(y[2]), kPi);
  EXPECT_LT((m.boxminus(y, x) - dx).norm(), 1e-12);
}

TEST(NonlinearModel, ValidateRejectsUnsetFunctions) {
  NonlinearModel m;
  m.name = "empty";
  EXPECT_THROW(m.validate(), UsageError);
}

class BuiltinJacobians : public ::testing::TestWithParam<std::string_view> {};

TEST_P(BuiltinJacobians, MatchCentralDifferences) {
  for (const JacobianCheck& c : check_model_jacobians(GetParam(), ModelParams{}, 100, 2024)) {
    EXPECT_LT(c.max_rel_error, 1e-5) << GetParam() << " " << c.jacobian;
  }
}

INSTANTIATE_TEST_SUITE_P(AllModels, BuiltinJacobians,
                         ::testing::Values(kLinear1D, kLinearCv2D, kRangeBearing2D, kHeadingRobot),
                         [](const auto& info) {
                           std::string name(info.param);
                           for (char& c : name) {
                             if (c == '-') c = '_';
                           }
                           return name;
                         });
