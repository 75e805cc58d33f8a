#include "estkit/cli/commands.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "estkit/cli/report_io.hpp"
#include "estkit/cli/scenario_document.hpp"
#include "estkit/errors.hpp"
#include "estkit/sim.hpp"
#include "estkit/validation.hpp"

namespace estkit::cli {
namespace {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << error_json(kExitUsage, "config", e.what(), e.field()) << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << error_json(kExitUsage, "usage", e.what()) << '\n';
    return kExitUsage;
  } catch (const DimensionError& e) {
    err << error_json(kExitUsage, "dimension", e.what()) << '\n';
    return kExitUsage;
  } catch (const SingularMatrixError& e) {
    err << error_json(kExitRuntime, "singular_matrix", e.what(), e.factor()) << '\n';
    return kExitRuntime;
  } catch (const EstimationError& e) {
    err << error_json(kExitRuntime, "numerical", e.what()) << '\n';
    return kExitRuntime;
  } catch (const OutputError& e) {
    err << error_json(kExitRuntime, "io", e.what()) << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << error_json(kExitRuntime, "internal", e.what()) << '\n';
    return kExitRuntime;
  }
}

ScenarioDocument load(const CommandOptions& opts) {
  if (opts.config.empty()) throw UsageError("--config is required");
  ScenarioDocument doc = load_scenario_document(opts.config);
  if (opts.seed) doc.scenario.seed = *opts.seed;
  if (!opts.filters.empty()) {
    doc.filters.clear();
    for (const std::string& name : opts.filters) {
      const FilterKind k = parse_filter_kind(name);
      if (!filter_supports_model(k, doc.scenario.model_id)) {
        throw UsageError("filter '" + name + "' cannot run on model '" + doc.scenario.model_id + "'");
      }
      doc.filters.push_back(k);
    }
  }
  return doc;
}

// Renders the table in memory first so a failed run never leaves a partial file.
void emit(const CommandOptions& opts, std::ostream& out, const std::function<void(std::ostream&)>& write) {
  std::ostringstream buffer;
  write(buffer);
  if (opts.out.empty()) {
    out << buffer.str();
    return;
  }
  std::ofstream file(opts.out, std::ios::binary | std::ios::trunc);
  if (!file) throw OutputError("cannot open output file '" + opts.out.string() + "'");
  file << buffer.str();
  file.close();
  if (!file) throw OutputError("failed writing output file '" + opts.out.string() + "'");
}

void print_summary(std::ostream& out, const RunReport& r) {
  out << to_string(r.filter) << ": rmse=[";
  for (Eigen::Index i = 0; i < r.rmse.size(); ++i) out << (i ? ", " : "") << r.rmse[i];
  out << "] mean_nees=" << r.mean_nees << " mean_iterations=" << r.mean_iterations
      << " wall_time_s=" << r.wall_time_s << '\n';
}

}  // namespace

std::string error_json(int exit_code, std::string_view kind, std::string_view message, std::string_view field) {
  nlohmann::json e{{"exit_code", exit_code}, {"kind", kind}, {"message", message}};
  if (!field.empty()) e["field"] = field;
  return nlohmann::json{{"error", e}}.dump();
}

int validation_exit_code(const SuiteResult& result) {
  return result.passed() ? kExitOk : kExitValidationFailed;
}

int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ScenarioDocument doc = load(opts);
    const Trajectory t = simulate(doc.scenario);
    emit(opts, out, [&](std::ostream& os) { write_trajectory_csv(os, t); });
    if (!opts.quiet && !opts.out.empty()) {
      out << "wrote " << t.truth_states.size() << " truth rows to " << opts.out.string() << '\n';
    }
    return kExitOk;
  });
}

int cmd_run(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ScenarioDocument doc = load(opts);
    if (doc.filters.size() != 1) {
      throw UsageError("run takes exactly one filter (got " + std::to_string(doc.filters.size()) +
                       "); pass --filter or list one under \"filters\", or use compare");
    }
    const Trajectory t = simulate(doc.scenario);
    const RunReport r = run_filter(doc.filters.front(), doc.scenario, t, doc.iteration);
    emit(opts, out, [&](std::ostream& os) { write_run_csv(os, std::span(&r, 1)); });
    if (!opts.quiet && !opts.out.empty()) print_summary(out, r);
    return kExitOk;
  });
}

int cmd_compare(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ScenarioDocument doc = load(opts);
    if (doc.filters.empty()) {
      for (std::string_view name : filter_kind_names()) {
        const FilterKind k = parse_filter_kind(name);
        if (filter_supports_model(k, doc.scenario.model_id)) doc.filters.push_back(k);
      }
    }
    const std::vector<RunReport> reports = compare_filters(doc.filters, doc.scenario, doc.iteration);
    emit(opts, out, [&](std::ostream& os) { write_run_csv(os, reports); });
    if (!opts.quiet && !opts.out.empty()) {
      for (const RunReport& r : reports) print_summary(out, r);
    }
    return kExitOk;
  });
}

int cmd_validate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.suite.empty()) throw UsageError("--suite is required");
    const SuiteResult result = run_validation_suite(opts.suite);
    for (const CheckResult& c : result.checks) {
      if (!opts.quiet || !c.passed) out << format_check(c) << '\n';
    }
    out << "suite " << result.suite << ": " << (result.passed() ? "PASS" : "FAIL") << '\n';
    return validation_exit_code(result);
  });
}

}  // namespace estkit::cli
