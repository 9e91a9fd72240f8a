// Run configuration files.
//
// Flat "key = value" text grouped under [section] headers, one assignment per
// line, '#' or ';' starting a comment. Expressions are double-quoted strings;
// bare numbers and comma-separated number lists are accepted wherever a
// constant or a table makes sense. docs/config_schema.md lists every key.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "envcert/continuous.hpp"
#include "envcert/discrete.hpp"
#include "envcert/reduction.hpp"
#include "envcert/search.hpp"

namespace envcert {

/// A problem with the configuration text. `line` is 1-based, 0 when the
/// error is not tied to a line (e.g. a missing section).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, std::string field, const std::string& message);
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

struct IniEntry {
  std::string key;
  std::string value;
  bool quoted = false;
  std::size_t line = 0;
};

struct IniSection {
  std::string name;
  std::size_t line = 0;
  std::vector<IniEntry> entries;
};

struct IniDocument {
  std::vector<IniSection> sections;
  const IniSection* find(std::string_view name) const;
};

/// Syntax only: sections, keys, quoting. Duplicate sections or keys are errors.
IniDocument parse_ini(std::string_view text);

enum class ProblemKind { Continuous, Discrete, Vector };
enum class Builder { None, Example1, Example2 };

const char* to_string(ProblemKind kind);

struct SimulateSettings {
  std::optional<double> horizon;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  /// Scalar ODE y' = rhs(t, y) instead of the extremal equation.
  std::optional<Expression> rhs;
  double y0 = 0.0;
  double t0 = 0.0;
  /// Discrete problems: number of recurrence steps (default n_max).
  std::optional<std::size_t> steps;
};

struct SearchConfig {
  EnvelopeFamily family;
  Objective objective = Objective::MaxDecay;
  std::optional<std::string> refine;
  double refine_tol = 1e-4;
  /// Per-parameter anchor for the refinement; missing entries come from the
  /// best lattice point.
  std::vector<std::optional<double>> anchor;
};

struct ReduceSettings {
  bool verify = false;
  std::optional<double> horizon;
  std::size_t samples = 16;
  std::vector<double> radii{0.125, 0.25, 0.5, 1.0, 2.0};
  std::size_t directions = 64;
};

struct RunConfig {
  ProblemKind kind = ProblemKind::Continuous;
  Builder builder = Builder::None;
  std::optional<Example1Shape> example1;
  std::optional<Example2Params> example2;

  ContinuousProblem continuous;
  DiscreteProblem discrete;
  std::optional<VectorSystem> vector;

  /// Explicit envelope (expression or table), or a family member.
  std::optional<Envelope> envelope;
  std::optional<DiscreteEnvelope> discrete_envelope;
  std::optional<FamilyKind> envelope_family;
  std::vector<double> envelope_params;

  std::optional<double> g0;
  /// Example-1 builder: initial value of u, giving g0 = u0^2.
  std::optional<double> u0;

  /// horizon 0 means "not given".
  VerifyOptions verify;
  SimulateSettings simulate;
  std::optional<SearchConfig> search;
  ReduceSettings reduce;
  std::uint64_t seed = 1;

  bool has_envelope() const {
    return envelope || discrete_envelope || envelope_family || builder == Builder::Example2;
  }
};

RunConfig parse_config(std::string_view text);
/// Reads and parses a file; I/O failures are reported as ConfigError.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace envcert
