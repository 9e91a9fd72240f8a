// Feasibility search over parametric envelope families.
//
// A lattice over the family's parameter box is verified point by point; a
// bisection along one axis then sharpens the feasibility boundary. For the
// power-law envelope of the g = u^2 problem with b = 1, three closed-form
// inequalities certify the envelope condition for every t >= 0.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "envcert/continuous.hpp"
#include "envcert/discrete.hpp"

namespace envcert {

enum class FamilyKind {
  PowerLaw,          // mu(t) = lambda (1+t)^nu
  Shifted,           // mu(t) = c + lambda (1+t)^(-b)
  ConstantDiscrete,  // mu_n = mu
  PowerDiscrete,     // mu_n = lambda (1+n)^nu
};

const char* to_string(FamilyKind kind);
FamilyKind parse_family_kind(std::string_view text);

struct ParamRange {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t points = 2;

  std::vector<double> values() const;
};

struct EnvelopeFamily {
  FamilyKind kind = FamilyKind::PowerLaw;
  /// One range per parameter, in the order of parameter_names(kind).
  std::vector<ParamRange> ranges;

  static std::vector<std::string> parameter_names(FamilyKind kind);
  bool discrete() const;
  /// Index of the parameter that max_decay maximizes.
  std::size_t decay_index() const;
  /// Throws std::invalid_argument on missing, empty or zero-width ranges,
  /// fewer than 2 points, or a range admitting nonpositive mu.
  void validate() const;

  Envelope continuous_envelope(std::span<const double> params) const;
  DiscreteEnvelope discrete_envelope(std::span<const double> params) const;
};

class WrongShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parameters of u' = -c/(1+t)^b u + (1+t)^(-m) u|u|^p + (1+t)^(-q).
struct Example1Shape {
  double b = 1.0;
  double c = 4.0;
  double m = 1.0;
  double p = 2.0;
  double q = 1.5;
};

/// m + p nu/2 >= 1, q - nu/2 >= 1 and sqrt(lambda) + lambda^(-p/2) <= c - nu/2.
bool powerlaw_closed_form_check(double m, double q, double c, double p, double lambda, double nu);
/// Same, throwing WrongShapeError unless shape.b == 1.
bool powerlaw_closed_form_check(const Example1Shape& shape, double lambda, double nu);

struct Example1 {
  Example1Shape shape;
  /// Inequality for g = u^2: gamma = 2c/(1+t)^b,
  /// alpha = 2(1+t)^(-m) y^(1+p/2) + 2(1+t)^(-q) y^(1/2), beta = 0.
  ContinuousProblem problem;
  /// Right-hand side of the u equation over {t, y}.
  Expression u_rhs;
};

Example1 build_example1(const Example1Shape& shape);
Envelope powerlaw_envelope(double lambda, double nu);

/// Grid verification plus the closed-form check; the report is marked
/// global (valid for all t >= 0) only when both pass.
CertificateReport certify_example1(const Example1Shape& shape, double lambda, double nu,
                                   double g0, const VerifyOptions& options);

enum class Objective { MaxDecay, MaxMargin };
Objective parse_objective(std::string_view text);

struct LatticePoint {
  std::vector<double> params;
  double min_residual = 0.0;
  double headroom = 0.0;  // 1 - mu(t0) g0
  bool feasible = false;
  std::string note;
};

struct FeasibleRegion {
  std::vector<std::string> names;
  std::vector<std::vector<double>> axes;
  /// Every lattice point in lexicographic order (first parameter slowest).
  std::vector<LatticePoint> lattice;
  std::optional<std::size_t> best;

  bool empty() const { return !best.has_value(); }
  std::vector<LatticePoint> feasible_points() const;
  const LatticePoint& best_point() const;
  /// True if `point` lies in a lattice cell whose corners are all feasible
  /// (a lattice point itself counts as a degenerate cell).
  bool contains(std::span<const double> point) const;
};

struct SearchSettings {
  double g0 = 0.0;
  /// Continuous families only.
  VerifyOptions verify;
  Objective objective = Objective::MaxDecay;
  /// When set (and b == 1) power-law points must also pass the closed-form
  /// check, so feasibility means certification for all t >= 0.
  std::optional<Example1Shape> closed_form;
};

class NoSignChangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FeasibilitySearch {
 public:
  FeasibilitySearch(ContinuousProblem problem, EnvelopeFamily family, SearchSettings settings);
  FeasibilitySearch(DiscreteProblem problem, EnvelopeFamily family, SearchSettings settings);

  LatticePoint evaluate(std::span<const double> params) const;
  FeasibleRegion search() const;

  /// Bisects along `param` with the other parameters at `anchor` (default:
  /// the best point) between the adjacent feasible/infeasible lattice pair
  /// closest to the anchor, until the bracket is narrower than `tol`.
  /// Returns the bracket midpoint.
  double refine_boundary(const FeasibleRegion& region, std::string_view param, double tol,
                         std::optional<std::vector<double>> anchor = std::nullopt) const;

  const EnvelopeFamily& family() const { return family_; }

 private:
  std::variant<ContinuousProblem, DiscreteProblem> problem_;
  EnvelopeFamily family_;
  SearchSettings settings_;
};

/// "param1,...,paramK,min_residual,headroom,feasible".
std::string region_csv(const FeasibleRegion& region);

}  // namespace envcert
