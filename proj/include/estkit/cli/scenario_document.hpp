#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "estkit/errors.hpp"
#include "estkit/filters.hpp"
#include "estkit/sim.hpp"

namespace estkit::cli {

inline constexpr int kSchemaVersion = 1;

/// Invalid scenario document. `field()` is the dotted path of the offending
/// entry ("model_params.sigma2_obs", "controls[3]"), empty when the document
/// as a whole is at fault.
class ConfigError : public UsageError {
 public:
  ConfigError(std::string field, const std::string& message)
      : UsageError(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// A scenario plus the filter selection and iteration settings.
///
/// JSON layout (every key except schema_version and model is optional):
///
///   {
///     "schema_version": 1,
///     "model": "range-bearing-2d",
///     "model_params": {"range_noise": 0.01, "landmarks": [[5, 5], [2, 8]], ...},
///     "horizon": 100,
///     "seed": 42,
///     "controls": [[1.0, 0.1], ...],
///     "initial_belief": {"mean": [0, 0, 0], "cov": [[0.01, 0, 0], ...]},
///     "sample_initial_truth": false,
///     "filters": ["ekf", "iekf"],
///     "iteration": {"epsilon": 1e-8, "max_iters": 20, "recompute_retraction_jacobian": true}
///   }
///
/// Unknown keys are rejected.
struct ScenarioDocument {
  Scenario scenario;
  std::vector<FilterKind> filters;
  IterationConfig iteration;
};

ScenarioDocument parse_scenario_document(std::string_view json_text);
ScenarioDocument load_scenario_document(const std::filesystem::path& path);

}  // namespace estkit::cli
