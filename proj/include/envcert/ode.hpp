// Explicit Runge-Kutta oracle for the equality case of the inequality.
//
// The integrator is the Dormand-Prince 5(4) pair with FSAL, a PI step-size
// controller and the 4th-order continuous extension for dense output.

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "envcert/continuous.hpp"
#include "envcert/expr.hpp"

namespace envcert {

enum class TrajectoryStatus { Completed, BlewUp, DomainError };
const char* to_string(TrajectoryStatus s);

struct IntegratorOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  /// Project every accepted state onto y >= 0 componentwise.
  bool clamp_nonnegative = false;
  std::size_t max_steps = 5'000'000;
};

using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dy)>;

/// Dense output of one accepted step, valid on [t, t + h].
struct DenseStep {
  double t = 0.0;
  double h = 0.0;
  std::vector<double> coeffs;  // 5 * dim continuous-extension coefficients
};

/// Raw integrator output; states are stored row-wise per accepted step.
struct OdeSolution {
  std::size_t dim = 0;
  std::vector<double> times;
  std::vector<double> states;       // times.size() * dim
  std::vector<double> derivatives;  // times.size() * dim
  std::vector<DenseStep> dense;     // one entry per accepted step
  TrajectoryStatus status = TrajectoryStatus::Completed;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t clamp_events = 0;
  std::vector<std::string> notes;

  std::span<const double> state(std::size_t i) const { return {states.data() + i * dim, dim}; }
  std::span<const double> derivative(std::size_t i) const {
    return {derivatives.data() + i * dim, dim};
  }
  /// Interpolated state at t within [times.front(), times.back()].
  std::vector<double> interpolate(double t) const;
};

/// Integrates y' = f(t, y) from t0 to horizon. BlewUp is declared when some
/// component exceeds 1/abs_tol in magnitude or when the step size drops
/// below 1e-14 * (horizon - t0); the last stored sample is then the escape
/// point. A domain error at the initial point throws; later ones end the
/// run with status DomainError.
OdeSolution integrate_dopri5(const OdeRhs& rhs, double t0, std::span<const double> y0,
                             double horizon, const IntegratorOptions& options);

struct TrajectorySample {
  double t;
  double g;
  double g_dot;
};

/// Scalar trajectory with dense output.
struct Trajectory {
  std::vector<TrajectorySample> samples;
  double tolerance = 0.0;
  TrajectoryStatus status = TrajectoryStatus::Completed;
  std::vector<std::string> notes;

  /// Dense-output value; throws outside [samples.front().t, end_time()].
  double at(double t) const;
  double end_time() const { return samples.back().t; }

  std::function<double(double)> interpolant;
};

/// Equality case g' = -gamma(t) g + alpha(t, g) + beta(t), g(t0) = g0 >= 0.
/// States are clamped at 0 (alpha is evaluated at max(g, 0)); each clamp is
/// counted in the notes.
Trajectory integrate_extremal(const ContinuousProblem& p, double g0, double horizon,
                              double rel_tol, double abs_tol);

/// y' = rhs(t, y) for an expression over {t, y}; no clamping.
Trajectory integrate_scalar(const Expression& rhs, double y0, double t0, double horizon,
                            double rel_tol, double abs_tol);

struct EnvelopeViolation {
  double t;
  double g;
  double bound;
};

struct EnvelopeCheck {
  std::vector<EnvelopeViolation> violations;
  double worst_slack = 0.0;  // min over checked t of 1/mu(t) - g(t)
  double worst_t = 0.0;
  std::size_t checked = 0;
  bool clean() const { return violations.empty(); }
};

/// Compares g against 1/mu at every accepted sample and at the optional
/// extra times (through dense output). Strict: violation when g >= 1/mu.
/// Nonstrict: violation when g > 1/mu + tol.
EnvelopeCheck check_envelope(const Trajectory& traj, const Envelope& env, bool strict,
                             double tol = 0.0, std::span<const double> extra_times = {});

/// "t,g,g_dot" with full precision.
std::string trajectory_csv(const Trajectory& traj);

}  // namespace envcert
