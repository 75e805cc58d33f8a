#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "estkit/builtin_models.hpp"
#include "estkit/filters.hpp"

namespace estkit {

/// Seedable, portable random source.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the C++
/// standard. A uniform double in [0, 1) is (bits >> 11) · 2⁻⁵³. Standard
/// normals are produced in pairs by Box-Muller from two uniforms u1, u2:
///   r = sqrt(−2 ln(1 − u1)),  n1 = r cos(2π u2),  n2 = r sin(2π u2),
/// n1 returned first and n2 on the next call.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform();
  double standard_normal();
  // factor · n with n ~ N(0, I); draws factor.cols() normals.
  Vector normal(const Matrix& factor);

 private:
  std::mt19937_64 gen_;
  std::optional<double> spare_;
};

// L with L Lᵀ = cov; semidefinite input falls back to an eigen square root.
Matrix covariance_factor(const Matrix& cov);

enum class FilterKind { kf, kf1d, ekf, iekf, eskf, ieskf, dead_reckoning };

std::string_view to_string(FilterKind kind);
// Accepts kf, kf1d, ekf, iekf, eskf, ieskf, dr. Throws UsageError otherwise.
FilterKind parse_filter_kind(std::string_view name);
std::span<const std::string_view> filter_kind_names();

struct Scenario {
  std::string model_id{kLinear1D};
  ModelParams params;
  int horizon = 100;
  // One control per step; empty means default_control(model_id) every step.
  std::vector<Vector> controls;
  std::uint64_t seed = 0;
  // Empty mean means x̂₀ = 0, P₀ = 1e-2·I.
  Belief initial_belief;
  // Draw the initial truth from N(x̂₀, P₀) instead of using params.initial_state.
  bool sample_initial_truth = false;

  Belief initial() const;
  Vector control(int step) const;  // step in [1, horizon]
  void validate() const;
};

struct Trajectory {
  std::vector<Vector> truth_states;  // T + 1, index 0 is the initial state
  std::vector<Vector> measurements;  // T, measurements[t-1] observes truth_states[t]
  std::vector<Vector> controls;      // T, controls[t-1] drives step t
};

/// Per-step outputs of one filter over one trajectory. Index t−1 holds the
/// posterior after step t.
struct RunReport {
  FilterKind filter = FilterKind::kf;
  std::vector<Belief> beliefs;
  std::vector<Vector> error_means;  // δx̂ after each step, error-state filters only
  std::vector<double> nees;
  std::vector<int> iterations;
  std::vector<double> innovation_norm;
  Vector rmse;
  double mean_nees = 0.0;
  double mean_iterations = 0.0;
  double wall_time_s = 0.0;  // excluded from same_results()
};

// Bitwise comparison of every numeric output except wall time.
bool same_results(const RunReport& a, const RunReport& b);

/// Draws a ground-truth trajectory. The generator is seeded with s.seed and
/// consumed in a fixed order: the initial-truth draw (when sampled), then for
/// each step the process noise followed by the observation noise.
Trajectory simulate(const Scenario& s);

/// Alternates predict/correct over a trajectory and scores the estimates.
/// NEES uses the model's state residual (wrapped heading on pose models).
/// Throws UsageError when the filter cannot consume the scenario's model.
RunReport run_filter(FilterKind kind, const Scenario& s, const Trajectory& t,
                     const IterationConfig& cfg);

// Runs every kind on one shared trajectory; reports follow `kinds` order.
std::vector<RunReport> compare_filters(std::span<const FilterKind> kinds, const Scenario& s,
                                       const IterationConfig& cfg);

// (x̂ − x)ᵀ P⁻¹ (x̂ − x) given the residual; singular P throws.
double nees(const Vector& residual, const Matrix& P);

bool filter_supports_model(FilterKind kind, std::string_view model_id);

}  // namespace estkit
