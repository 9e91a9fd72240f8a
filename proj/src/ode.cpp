#include "envcert/ode.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>

#include "envcert/format.hpp"

namespace envcert {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension (Hairer, Norsett & Wanner, dopri5).
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

// PI controller constants.
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;
constexpr double kSafety = 0.9;
constexpr double kMinShrink = 0.2;
constexpr double kMaxGrow = 10.0;

struct StepFailure {
  bool domain = false;
  DomainErrorKind kind = DomainErrorKind::NonFinite;
  std::string message;
};

double scaled_rms(std::span<const double> v, std::span<const double> y,
                  std::span<const double> y_other, const IntegratorOptions& o) {
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double scale = o.abs_tol + o.rel_tol * std::max(std::fabs(y[i]), std::fabs(y_other[i]));
    const double r = v[i] / scale;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(v.size()));
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

const char* to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::Completed: return "Completed";
    case TrajectoryStatus::BlewUp: return "BlewUp";
    case TrajectoryStatus::DomainError: return "DomainError";
  }
  return "?";
}

std::vector<double> OdeSolution::interpolate(double t) const {
  if (times.empty()) throw std::logic_error("empty solution");
  if (t < times.front() || t > times.back()) {
    throw std::out_of_range("interpolation time " + format_double(t) + " outside [" +
                            format_double(times.front()) + ", " + format_double(times.back()) +
                            "]");
  }
  if (dense.empty() || t == times.front()) {
    auto s = state(0);
    return {s.begin(), s.end()};
  }
  auto it = std::upper_bound(dense.begin(), dense.end(), t,
                             [](double value, const DenseStep& s) { return value < s.t; });
  const DenseStep& step = it == dense.begin() ? dense.front() : *std::prev(it);
  const double theta = std::clamp((t - step.t) / step.h, 0.0, 1.0);
  const double theta1 = 1.0 - theta;
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double* r = step.coeffs.data() + 5 * i;
    out[i] = r[0] + theta * (r[1] + theta1 * (r[2] + theta * (r[3] + theta1 * r[4])));
  }
  return out;
}

OdeSolution integrate_dopri5(const OdeRhs& rhs, double t0, std::span<const double> y0,
                             double horizon, const IntegratorOptions& options) {
  if (!(horizon > t0)) throw std::invalid_argument("horizon must exceed t0");
  if (!(options.rel_tol > 0.0) || !(options.abs_tol > 0.0)) {
    throw std::invalid_argument("tolerances must be positive");
  }
  const std::size_t n = y0.size();
  if (n == 0) throw std::invalid_argument("empty state");

  OdeSolution sol;
  sol.dim = n;
  const double span = horizon - t0;
  const double h_min = 1e-14 * span;
  const double blowup = 1.0 / options.abs_tol;

  std::vector<double> y(y0.begin(), y0.end());
  if (options.clamp_nonnegative) {
    for (double& v : y) v = std::max(v, 0.0);
  }
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);

  rhs(t0, y, k1);  // a domain error here propagates to the caller
  if (!all_finite(k1)) throw DomainError(DomainErrorKind::NonFinite, "non-finite initial slope");

  auto record = [&](double t, std::span<const double> state, std::span<const double> slope) {
    sol.times.push_back(t);
    sol.states.insert(sol.states.end(), state.begin(), state.end());
    sol.derivatives.insert(sol.derivatives.end(), slope.begin(), slope.end());
  };
  record(t0, y, k1);

  // Initial step size (Hairer's heuristic).
  double h = 0.0;
  {
    const double d0 = scaled_rms(y, y, y, options);
    const double d1n = scaled_rms(k1, y, y, options);
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1n;
    h0 = std::min(h0, span);
    double h1 = h0;
    try {
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h0 * k1[i];
      rhs(t0 + h0, ytmp, k2);
      for (std::size_t i = 0; i < n; ++i) err[i] = (k2[i] - k1[i]) / h0;
      const double d2 = scaled_rms(err, y, y, options);
      const double dm = std::max(d1n, d2);
      h1 = dm <= 1e-15 ? std::max(1e-6 * span, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    } catch (const DomainError&) {
      h1 = h0;
    }
    h = std::min({100.0 * h0, h1, span});
    h = std::max(h, h_min);
  }

  double t = t0;
  double err_old = 1e-4;
  bool last_rejected = false;
  std::optional<StepFailure> failure;

  while (t < horizon) {
    if (sol.accepted_steps + sol.rejected_steps >= options.max_steps) {
      throw std::runtime_error("integrator exceeded " + std::to_string(options.max_steps) +
                               " steps");
    }
    if (h < h_min) {
      if (failure && failure->domain && failure->kind != DomainErrorKind::NonFinite) {
        sol.status = TrajectoryStatus::DomainError;
        sol.notes.push_back("domain error near t = " + format_double(t) + ": " + failure->message);
      } else {
        sol.status = TrajectoryStatus::BlewUp;
        sol.notes.push_back("step size underflow at t = " + format_double(t));
      }
      return sol;
    }
    const bool final_step = t + h >= horizon;
    if (final_step) h = horizon - t;

    bool stage_ok = true;
    try {
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
      rhs(t + c2 * h, ytmp, k2);
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
      rhs(t + c3 * h, ytmp, k3);
      for (std::size_t i = 0; i < n; ++i)
        ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      rhs(t + c4 * h, ytmp, k4);
      for (std::size_t i = 0; i < n; ++i)
        ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      rhs(t + c5 * h, ytmp, k5);
      for (std::size_t i = 0; i < n; ++i)
        ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      rhs(t + h, ytmp, k6);
      for (std::size_t i = 0; i < n; ++i)
        ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
      rhs(t + h, ynew, k7);
      stage_ok = all_finite(ynew) && all_finite(k7);
      if (!stage_ok) failure = StepFailure{false, DomainErrorKind::NonFinite, "non-finite stage"};
    } catch (const DomainError& e) {
      stage_ok = false;
      failure = StepFailure{true, e.kind(), e.what()};
    }
    if (!stage_ok) {
      ++sol.rejected_steps;
      h *= 0.25;
      last_rejected = true;
      continue;
    }

    for (std::size_t i = 0; i < n; ++i) {
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    }
    const double err_norm = scaled_rms(err, y, ynew, options);
    const double fac11 = std::pow(err_norm, kExpo);

    if (err_norm <= 1.0) {
      failure.reset();
      DenseStep step;
      step.t = t;
      step.h = h;
      step.coeffs.resize(5 * n);
      for (std::size_t i = 0; i < n; ++i) {
        const double ydiff = ynew[i] - y[i];
        const double bspl = h * k1[i] - ydiff;
        double* r = step.coeffs.data() + 5 * i;
        r[0] = y[i];
        r[1] = ydiff;
        r[2] = bspl;
        r[3] = ydiff - h * k7[i] - bspl;
        r[4] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      sol.dense.push_back(std::move(step));

      t = final_step ? horizon : t + h;
      y.swap(ynew);
      if (options.clamp_nonnegative) {
        bool clamped = false;
        for (double& v : y) {
          if (v < 0.0) {
            v = 0.0;
            clamped = true;
          }
        }
        if (clamped) {
          ++sol.clamp_events;
          try {
            rhs(t, y, k7);
          } catch (const DomainError& e) {
            sol.status = TrajectoryStatus::DomainError;
            sol.notes.push_back(std::string("domain error after clamping: ") + e.what());
            return sol;
          }
        }
      }
      k1.swap(k7);
      ++sol.accepted_steps;
      record(t, y, k1);

      const double peak = std::fabs(*std::max_element(
          y.begin(), y.end(), [](double a, double b) { return std::fabs(a) < std::fabs(b); }));
      if (peak > blowup) {
        sol.status = TrajectoryStatus::BlewUp;
        sol.notes.push_back("|y| exceeded " + format_double(blowup) + " at t = " + format_double(t));
        return sol;
      }

      double fac = fac11 / std::pow(err_old, kBeta);
      fac = std::clamp(fac / kSafety, 1.0 / kMaxGrow, 1.0 / kMinShrink);
      double h_new = h / fac;
      if (last_rejected) h_new = std::min(h_new, h);
      err_old = std::max(err_norm, 1e-4);
      last_rejected = false;
      h = h_new;
    } else {
      ++sol.rejected_steps;
      last_rejected = true;
      h /= std::min(1.0 / kMinShrink, fac11 / kSafety);
    }
  }
  if (sol.clamp_events > 0) {
    sol.notes.push_back("state clamped at 0 after " + std::to_string(sol.clamp_events) +
                        " accepted step(s)");
  }
  return sol;
}

namespace {

Trajectory to_trajectory(std::shared_ptr<const OdeSolution> sol, double tolerance) {
  Trajectory traj;
  traj.tolerance = tolerance;
  traj.status = sol->status;
  traj.notes = sol->notes;
  traj.samples.reserve(sol->times.size());
  for (std::size_t i = 0; i < sol->times.size(); ++i) {
    traj.samples.push_back({sol->times[i], sol->state(i)[0], sol->derivative(i)[0]});
  }
  traj.interpolant = [sol](double t) { return sol->interpolate(t)[0]; };
  return traj;
}

}  // namespace

double Trajectory::at(double t) const {
  if (!interpolant) throw std::logic_error("trajectory has no dense output");
  return interpolant(t);
}

Trajectory integrate_extremal(const ContinuousProblem& p, double g0, double horizon,
                              double rel_tol, double abs_tol) {
  if (!(g0 >= 0.0)) throw std::invalid_argument("g0 must be >= 0");
  OdeRhs rhs = [&p](double t, std::span<const double> y, std::span<double> dy) {
    const double g = std::max(y[0], 0.0);
    dy[0] = -p.gamma(t) * y[0] + p.alpha(t, g) + p.beta(t);
  };
  IntegratorOptions options;
  options.rel_tol = rel_tol;
  options.abs_tol = abs_tol;
  options.clamp_nonnegative = true;
  const double y0[1] = {g0};
  auto sol = std::make_shared<OdeSolution>(integrate_dopri5(rhs, p.t0, y0, horizon, options));
  return to_trajectory(std::move(sol), abs_tol);
}

Trajectory integrate_scalar(const Expression& rhs_expr, double y0, double t0, double horizon,
                            double rel_tol, double abs_tol) {
  if (rhs_expr.variables().size() != 2) {
    throw std::invalid_argument("scalar right-hand side must be an expression over {t, y}");
  }
  OdeRhs rhs = [&rhs_expr](double t, std::span<const double> y, std::span<double> dy) {
    dy[0] = rhs_expr(t, y[0]);
  };
  IntegratorOptions options;
  options.rel_tol = rel_tol;
  options.abs_tol = abs_tol;
  const double init[1] = {y0};
  auto sol = std::make_shared<OdeSolution>(integrate_dopri5(rhs, t0, init, horizon, options));
  return to_trajectory(std::move(sol), abs_tol);
}

EnvelopeCheck check_envelope(const Trajectory& traj, const Envelope& env, bool strict, double tol,
                             std::span<const double> extra_times) {
  EnvelopeCheck check;
  bool first = true;
  auto visit = [&](double t, double g) {
    const double bound = envelope_bound(env, t);
    const double slack = bound - g;
    ++check.checked;
    if (first || slack < check.worst_slack) {
      check.worst_slack = slack;
      check.worst_t = t;
      first = false;
    }
    const bool violated = strict ? g >= bound : g > bound + tol;
    if (violated) check.violations.push_back({t, g, bound});
  };
  for (const auto& s : traj.samples) visit(s.t, s.g);
  for (double t : extra_times) {
    if (t < traj.samples.front().t || t > traj.end_time()) continue;
    visit(t, traj.at(t));
  }
  return check;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,g,g_dot\n";
  for (const auto& s : traj.samples) {
    out += format_double(s.t) + ',' + format_double(s.g) + ',' + format_double(s.g_dot) + '\n';
  }
  return out;
}

}  // namespace envcert
