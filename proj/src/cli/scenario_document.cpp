#include "estkit/cli/scenario_document.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <nlohmann/json.hpp>

#include "estkit/builtin_models.hpp"

namespace estkit::cli {
namespace {

using nlohmann::json;

std::string child(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(child(path, key), "unknown key");
    }
  }
}

double read_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

double read_nonnegative(const json& j, const std::string& path) {
  const double v = read_number(j, path);
  if (v < 0.0) throw ConfigError(path, "must be >= 0 (got " + j.dump() + ")");
  return v;
}

double read_positive(const json& j, const std::string& path) {
  const double v = read_number(j, path);
  if (!(v > 0.0)) throw ConfigError(path, "must be > 0 (got " + j.dump() + ")");
  return v;
}

long long read_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<long long>();
}

bool read_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  return j.get<bool>();
}

Vector read_vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = read_number(j[i], index(path, i));
  return v;
}

Matrix read_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = read_vector(j[r], index(path, r));
    if (static_cast<std::size_t>(row.size()) != cols) throw ConfigError(index(path, r), "ragged matrix row");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

void require_size(const Vector& v, Eigen::Index n, const std::string& path) {
  if (v.size() != n) {
    throw ConfigError(path, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
  }
}

ModelParams read_model_params(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j,
                 {"sigma2_motion", "sigma2_obs", "accel_noise", "position_noise", "dt", "motion_noise",
                  "range_noise", "bearing_noise", "landmarks", "initial_state"},
                 path);
  ModelParams p;
  if (j.contains("sigma2_motion")) p.sigma2_motion = read_nonnegative(j["sigma2_motion"], child(path, "sigma2_motion"));
  if (j.contains("sigma2_obs")) p.sigma2_obs = read_nonnegative(j["sigma2_obs"], child(path, "sigma2_obs"));
  if (j.contains("accel_noise")) p.accel_noise = read_nonnegative(j["accel_noise"], child(path, "accel_noise"));
  if (j.contains("position_noise")) {
    p.position_noise = read_nonnegative(j["position_noise"], child(path, "position_noise"));
  }
  if (j.contains("dt")) p.dt = read_positive(j["dt"], child(path, "dt"));
  if (j.contains("motion_noise")) {
    const std::string at = child(path, "motion_noise");
    const Vector v = read_vector(j["motion_noise"], at);
    require_size(v, 3, at);
    for (Eigen::Index i = 0; i < 3; ++i) {
      if (v[i] < 0.0) throw ConfigError(index(at, static_cast<std::size_t>(i)), "must be >= 0");
      p.motion_noise[static_cast<std::size_t>(i)] = v[i];
    }
  }
  if (j.contains("range_noise")) p.range_noise = read_nonnegative(j["range_noise"], child(path, "range_noise"));
  if (j.contains("bearing_noise")) {
    p.bearing_noise = read_nonnegative(j["bearing_noise"], child(path, "bearing_noise"));
  }
  if (j.contains("landmarks")) {
    const std::string at = child(path, "landmarks");
    const json& arr = j["landmarks"];
    if (!arr.is_array() || arr.empty()) throw ConfigError(at, "expected a non-empty array of [x, y] pairs");
    p.landmarks.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const Vector l = read_vector(arr[i], index(at, i));
      require_size(l, 2, index(at, i));
      p.landmarks.push_back({l[0], l[1]});
    }
  }
  if (j.contains("initial_state")) p.initial_state = read_vector(j["initial_state"], child(path, "initial_state"));
  return p;
}

}  // namespace

ScenarioDocument parse_scenario_document(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  require_object(doc, "");
  reject_unknown(doc,
                 {"schema_version", "model", "model_params", "horizon", "seed", "controls", "initial_belief",
                  "sample_initial_truth", "filters", "iteration"},
                 "");

  if (!doc.contains("schema_version")) throw ConfigError("schema_version", "missing");
  if (read_integer(doc["schema_version"], "schema_version") != kSchemaVersion) {
    throw ConfigError("schema_version", "unsupported version " + doc["schema_version"].dump() +
                                            " (this build reads version " + std::to_string(kSchemaVersion) + ")");
  }

  ScenarioDocument out;
  Scenario& s = out.scenario;
  if (!doc.contains("model")) throw ConfigError("model", "missing");
  if (!doc["model"].is_string()) throw ConfigError("model", "expected a string");
  s.model_id = doc["model"].get<std::string>();
  const auto names = builtin_model_names();
  if (std::find(names.begin(), names.end(), s.model_id) == names.end()) {
    std::string valid;
    for (auto n : names) valid += (valid.empty() ? "" : ", ") + std::string(n);
    throw ConfigError("model", "unknown model '" + s.model_id + "'; valid models: " + valid);
  }

  if (doc.contains("model_params")) s.params = read_model_params(doc["model_params"], "model_params");
  const ModelDims dims = builtin_model_dims(s.model_id, s.params);
  if (s.params.initial_state.size() != 0) {
    require_size(s.params.initial_state, dims.state, "model_params.initial_state");
  }

  if (doc.contains("horizon")) {
    const long long t = read_integer(doc["horizon"], "horizon");
    if (t < 1 || t > 10'000'000) throw ConfigError("horizon", "must be in [1, 10000000]");
    s.horizon = static_cast<int>(t);
  }
  if (doc.contains("seed")) {
    const json& seed = doc["seed"];
    if (!seed.is_number_unsigned()) throw ConfigError("seed", "expected a non-negative 64-bit integer");
    s.seed = seed.get<std::uint64_t>();
  }
  if (doc.contains("controls")) {
    const json& arr = doc["controls"];
    if (!arr.is_array()) throw ConfigError("controls", "expected an array of control vectors");
    if (arr.size() != static_cast<std::size_t>(s.horizon)) {
      throw ConfigError("controls", "expected one control per step (" + std::to_string(s.horizon) + "), got " +
                                        std::to_string(arr.size()));
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Vector u = read_vector(arr[i], index("controls", i));
      require_size(u, dims.control, index("controls", i));
      s.controls.push_back(std::move(u));
    }
  }
  if (doc.contains("initial_belief")) {
    const json& b = doc["initial_belief"];
    require_object(b, "initial_belief");
    reject_unknown(b, {"mean", "cov"}, "initial_belief");
    if (!b.contains("mean")) throw ConfigError("initial_belief.mean", "missing");
    if (!b.contains("cov")) throw ConfigError("initial_belief.cov", "missing");
    s.initial_belief.x_hat = read_vector(b["mean"], "initial_belief.mean");
    require_size(s.initial_belief.x_hat, dims.state, "initial_belief.mean");
    s.initial_belief.P = read_matrix(b["cov"], "initial_belief.cov");
    if (s.initial_belief.P.rows() != dims.state || s.initial_belief.P.cols() != dims.state) {
      throw ConfigError("initial_belief.cov", "expected a " + std::to_string(dims.state) + "x" +
                                                  std::to_string(dims.state) + " matrix");
    }
    try {
      check_covariance(s.initial_belief.P, "initial covariance");
    } catch (const EstimationError& e) {
      throw ConfigError("initial_belief.cov", e.what());
    }
  }
  if (doc.contains("sample_initial_truth")) {
    s.sample_initial_truth = read_bool(doc["sample_initial_truth"], "sample_initial_truth");
  }

  if (doc.contains("filters")) {
    const json& arr = doc["filters"];
    if (!arr.is_array()) throw ConfigError("filters", "expected an array of filter names");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string()) throw ConfigError(index("filters", i), "expected a string");
      FilterKind k;
      try {
        k = parse_filter_kind(arr[i].get<std::string>());
      } catch (const UsageError& e) {
        throw ConfigError(index("filters", i), e.what());
      }
      if (!filter_supports_model(k, s.model_id)) {
        throw ConfigError(index("filters", i), "filter '" + std::string(to_string(k)) + "' cannot run on model '" +
                                                   s.model_id + "'");
      }
      out.filters.push_back(k);
    }
  }

  if (doc.contains("iteration")) {
    const json& it = doc["iteration"];
    require_object(it, "iteration");
    reject_unknown(it, {"epsilon", "max_iters", "recompute_retraction_jacobian"}, "iteration");
    if (it.contains("epsilon")) out.iteration.epsilon = read_positive(it["epsilon"], "iteration.epsilon");
    if (it.contains("max_iters")) {
      const long long n = read_integer(it["max_iters"], "iteration.max_iters");
      if (n < 1 || n > 100000) throw ConfigError("iteration.max_iters", "must be in [1, 100000]");
      out.iteration.max_iters = static_cast<int>(n);
    }
    if (it.contains("recompute_retraction_jacobian")) {
      out.iteration.recompute_retraction_jacobian =
          read_bool(it["recompute_retraction_jacobian"], "iteration.recompute_retraction_jacobian");
    }
  }

  try {
    s.validate();
  } catch (const EstimationError& e) {
    throw ConfigError("", e.what());
  }
  return out;
}

ScenarioDocument load_scenario_document(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario_document(text.str());
}

}  // namespace estkit::cli
