// The verify, simulate, search and reduce commands.
//
// Commands compute everything in memory and return the files they want
// written; write_outputs then renames each file into place, so a failed run
// leaves no partial artifacts behind.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "envcert/config.hpp"

namespace envcert {

/// Exit codes shared by all commands.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int error = 1;
inline constexpr int negative = 2;  // infeasible, violations, empty region, refuted bound
inline constexpr int inconclusive = 3;
inline constexpr int blow_up = 4;
}  // namespace exit_code

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<double> horizon;
  std::optional<std::size_t> grid;
  std::optional<double> margin;
  std::optional<std::uint64_t> seed;
};

/// Throws ConfigError for values outside their domain.
void apply_overrides(RunConfig& cfg, const Overrides& overrides);

struct CommandOutput {
  int exit_code = exit_code::ok;
  /// (file name, contents) in write order.
  std::vector<std::pair<std::string, std::string>> files;
  /// One-paragraph summary for the terminal.
  std::string summary;
};

/// Usage problems (e.g. verify without an envelope) throw ConfigError;
/// evaluation failures propagate as the library's exceptions.
CommandOutput cmd_verify(const RunConfig& cfg);
CommandOutput cmd_simulate(const RunConfig& cfg);
CommandOutput cmd_search(const RunConfig& cfg);
CommandOutput cmd_reduce(const RunConfig& cfg);

/// Dispatches on "verify", "simulate", "search" or "reduce".
CommandOutput run_command(std::string_view name, const RunConfig& cfg);

/// Creates `dir` if needed and atomically writes every file of `output`.
void write_outputs(const std::filesystem::path& dir, const CommandOutput& output);

/// Loads the config, applies overrides, runs the command and writes its
/// files. Diagnostics go to `err`, the summary to `out`. Returns the exit code.
int run_cli(std::string_view command, const std::filesystem::path& config,
            const std::filesystem::path& out_dir, const Overrides& overrides, std::ostream& out,
            std::ostream& err);

}  // namespace envcert
