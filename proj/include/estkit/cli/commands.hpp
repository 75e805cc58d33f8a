#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "estkit/validation.hpp"

namespace estkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidationFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

struct CommandOptions {
  std::filesystem::path config;
  // Empty writes the table to the `out` stream instead of a file.
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;  // overrides the document's seed
  std::vector<std::string> filters;   // overrides the document's filter list
  std::string suite;
  bool quiet = false;
};

/// Each command returns its exit code and never throws. Errors are written to
/// `err` as a single JSON object:
///   {"error": {"exit_code": 2, "kind": "config", "field": "...", "message": "..."}}
int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_run(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_compare(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_validate(const CommandOptions& opts, std::ostream& out, std::ostream& err);

// kExitOk when every check passed, kExitValidationFailed otherwise.
int validation_exit_code(const SuiteResult& result);

std::string error_json(int exit_code, std::string_view kind, std::string_view message,
                       std::string_view field = {});

}  // namespace estkit::cli
