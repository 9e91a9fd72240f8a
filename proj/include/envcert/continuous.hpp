// Continuous differential inequality
//
//     g'(t) <= -gamma(t) g(t) + alpha(t, g(t)) + beta(t),   t >= t0,
//
// and grid verification of the envelope condition
//
//     alpha(t, 1/mu) + beta(t) <= (1/mu) (gamma(t) - mu'(t)/mu(t)),
//
// which, together with mu(t0) g(t0) < 1, bounds every nonnegative solution
// by 1/mu(t).

#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "envcert/expr.hpp"

namespace envcert {

/// A coefficient of time. Usually an expression in {t}; derived problems
/// (e.g. a minimal eigenvalue of A(t)) use an opaque callable instead.
class TimeFunction {
 public:
  TimeFunction();
  TimeFunction(Expression e);  // NOLINT: implicit on purpose
  TimeFunction(std::function<double(double)> fn, std::string description);

  double operator()(double t) const { return fn_(t); }
  const std::string& description() const { return description_; }
  const std::optional<Expression>& expression() const { return expr_; }

 private:
  std::function<double(double)> fn_;
  std::string description_;
  std::optional<Expression> expr_;
};

/// alpha(t, y), an expression in {t, y} or a callable.
class StateFunction {
 public:
  StateFunction();
  StateFunction(Expression e);  // NOLINT
  StateFunction(std::function<double(double, double)> fn, std::string description);

  double operator()(double t, double y) const { return fn_(t, y); }
  const std::string& description() const { return description_; }
  const std::optional<Expression>& expression() const { return expr_; }

 private:
  std::function<double(double, double)> fn_;
  std::string description_;
  std::optional<Expression> expr_;
};

struct ContinuousProblem {
  TimeFunction gamma;
  TimeFunction beta;
  StateFunction alpha;
  double t0 = 0.0;
};

/// Candidate envelope mu(t) > 0 together with its derivative.
struct Envelope {
  Expression mu;
  Expression mu_dot;
  std::string description;

  /// Differentiates `mu` symbolically.
  static Envelope from_mu(Expression mu, std::string description = {});
};

class EnvelopeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Verdict { CertifiedStrict, CertifiedNonstrict, Infeasible, Inconclusive };
enum class Mode { Strict, Nonstrict };

/// Which check decided a non-certified verdict.
enum class Failure { None, InitialCondition, Residual, Margin, Assumption };

const char* to_string(Verdict v);
const char* to_string(Failure f);
inline bool is_certified(Verdict v) {
  return v == Verdict::CertifiedStrict || v == Verdict::CertifiedNonstrict;
}

struct CertificateReport {
  Verdict verdict = Verdict::Inconclusive;
  Failure failure = Failure::None;
  double min_residual = 0.0;
  double argmin_t = 0.0;  // the index n for discrete reports
  std::string grid;
  double margin = 0.0;
  /// mu(t0) g0 (continuous) or mu_0 g0 (discrete).
  double initial_product = 0.0;
  bool initial_ok = false;
  /// Set when a closed-form argument extends the verdict to all t >= t0.
  bool global = false;
  std::vector<std::string> notes;
  /// (t, R(t)) in grid order.
  std::vector<std::pair<double, double>> residuals;
};

struct VerifyOptions {
  double horizon = 0.0;
  std::size_t grid_points = 2048;
  double margin = 0.0;
  Mode mode = Mode::Strict;
  /// User statement that alpha is locally Lipschitz in y. Required for
  /// nonstrict mode; it cannot be checked from an expression tree.
  bool lipschitz_attested = false;
  std::size_t alpha_t_samples = 16;
  std::size_t alpha_y_samples = 32;
};

/// R(t) = (1/mu)(gamma - mu'/mu) - alpha(t, 1/mu) - beta(t). R(t) >= 0 iff
/// the envelope condition holds at t.
double condition_residual(const ContinuousProblem& p, const Envelope& env, double t);

/// 1/mu(t).
double envelope_bound(const Envelope& env, double t);

/// Points t0 + s_i - 1 with s_i log-uniform on [1, 1 + horizon - t0]; the
/// first point is t0 and the last is horizon.
std::vector<double> log_grid(double t0, double horizon, std::size_t points);

CertificateReport verify_certificate(const ContinuousProblem& p, const Envelope& env, double g0,
                                     const VerifyOptions& options);

struct MonotonicityViolation {
  double t;
  double y1;
  double y2;
  double alpha1;
  double alpha2;
};

struct AssumptionReport {
  bool passed() const { return monotonicity.empty() && negative_alpha.empty() && negative_beta.empty(); }

  std::vector<MonotonicityViolation> monotonicity;
  std::vector<std::pair<double, double>> negative_alpha;  // (t, y)
  std::vector<double> negative_beta;                      // t
  /// Some sampled alpha(t, y) with y > 0 was exactly zero.
  bool alpha_vanishes = false;
};

/// Samples alpha on a (t, y) lattice, t log-spaced on [t0, t_end] and y
/// uniform on [0, y_max]. Flags alpha(t, y1) > alpha(t, y2) + 1e-12 for
/// y1 < y2, and negative alpha or beta values.
AssumptionReport check_alpha_assumptions(const ContinuousProblem& p, std::size_t t_samples,
                                         std::size_t y_samples, double y_max, double t_end);

/// Human-readable report.
std::string render_report(const CertificateReport& report);
/// "t,R" followed by one line per grid point.
std::string residuals_csv(const CertificateReport& report, const char* time_header = "t",
                          const char* residual_header = "R");

}  // namespace envcert
