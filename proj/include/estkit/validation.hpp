#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace estkit {

/// Outcome of one numeric check. `criterion` is the human-readable bound the
/// value was held to, e.g. "< 1e-10" or "in [2.36, 3.72]".
struct CheckResult {
  std::string name;
  double value = 0.0;
  std::string criterion;
  bool passed = false;
};

struct SuiteResult {
  std::string suite;
  std::vector<CheckResult> checks;

  bool passed() const;
};

CheckResult check_below(std::string name, double value, double bound);
CheckResult check_at_least(std::string name, double value, double bound);
CheckResult check_within(std::string name, double value, double lo, double hi);
// value is reported as 1 (true) or 0 (false).
CheckResult check_true(std::string name, bool ok);

// "PASS  name  value=...  (criterion)"
std::string format_check(const CheckResult& c);

// Suites reachable from `estkit validate`.
std::span<const std::string_view> validation_suite_names();
// Throws UsageError listing the valid names for an unknown suite.
SuiteResult run_validation_suite(std::string_view name);

/// Grid Bayes filter against the scalar Kalman filter on linear-1d.
/// Each predict lands on a grid of `nodes` points spanning ±8 standard
/// deviations of the analytic predicted belief; the correction reuses it.
SuiteResult validate_grid_vs_kf(int steps = 20, std::uint64_t seed = 7, std::size_t nodes = 4001);

/// Converged IEKF against Gauss-Newton MAP on random range-bearing
/// corrections, plus the one-iteration linear case and the
/// matrix-inversion-lemma form of the GN covariance.
SuiteResult validate_gn_vs_iekf(int instances = 100, std::uint64_t seed = 11);

/// Closed-form IESKF update against the direct minimizer of its quadratic
/// cost on random well-conditioned instances with state and observation
/// sizes up to 5.
SuiteResult validate_cost_vs_ieskf(int instances = 100, std::uint64_t seed = 13);

/// kf, kf1d, ekf, eskf, iekf and ieskf (several iteration caps) on the linear
/// built-ins; worst per-step deviation from kf.
SuiteResult validate_linear_collapse(int steps = 100, std::uint64_t seed = 3);

// Every built-in analytic Jacobian against central differences.
SuiteResult validate_jacobians(int points = 100, std::uint64_t seed = 17);

// iekf with max_iters = 1 against ekf (and ieskf@1 against eskf), bit for bit.
SuiteResult validate_single_pass_equivalence(int instances = 50, std::uint64_t seed = 19);

// (I − KH)P against (P⁻¹ + HᵀR⁻¹H)⁻¹ and the Woodbury inverse against a direct inverse.
SuiteResult validate_covariance_identities(int instances = 100, std::uint64_t seed = 23);

// δx̂ is exactly zero after every ESKF/IESKF predict and correct on every built-in it supports.
SuiteResult validate_error_state_reset(int seeds = 10);

// Scalar gain monotone in R (decreasing) and Q (increasing) over 1e-3 … 1e3.
SuiteResult validate_gain_monotonicity();

/// Filtered versus dead-reckoning RMSE over `seeds` seeds on every noisy
/// built-in, and range-bearing EKF NEES over `nees_runs` Monte Carlo runs
/// against the two-sided 95% chi-square band for the run-averaged NEES.
SuiteResult validate_statistical_sanity(int seeds = 20, int nees_runs = 50);

}  // namespace estkit
