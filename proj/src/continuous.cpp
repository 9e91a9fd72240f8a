#include "envcert/continuous.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "envcert/format.hpp"
#include "envcert/parallel.hpp"

namespace envcert {

namespace {

constexpr double kMonotoneTolerance = 1e-12;

double positive_mu(const Envelope& env, double t) {
  const double mu = env.mu(t);
  if (!(mu > 0.0)) {
    throw EnvelopeError("envelope mu(t) = " + format_double(mu) + " is not positive at t = " +
                        format_double(t));
  }
  return mu;
}

}  // namespace

TimeFunction::TimeFunction() : TimeFunction(Expression::constant(0.0, {"t"})) {}

TimeFunction::TimeFunction(Expression e)
    : fn_([e](double t) { return e(t); }), description_(e.to_string()), expr_(std::move(e)) {}

TimeFunction::TimeFunction(std::function<double(double)> fn, std::string description)
    : fn_(std::move(fn)), description_(std::move(description)) {}

StateFunction::StateFunction() : StateFunction(Expression::constant(0.0, {"t", "y"})) {}

StateFunction::StateFunction(Expression e)
    : fn_([e](double t, double y) { return e(t, y); }),
      description_(e.to_string()),
      expr_(std::move(e)) {}

StateFunction::StateFunction(std::function<double(double, double)> fn, std::string description)
    : fn_(std::move(fn)), description_(std::move(description)) {}

Envelope Envelope::from_mu(Expression mu, std::string description) {
  Expression mu_dot = diff_expr(mu, mu.variables().front());
  if (description.empty()) description = "mu(t) = " + mu.to_string();
  return Envelope{std::move(mu), std::move(mu_dot), std::move(description)};
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::CertifiedStrict: return "CertifiedStrict";
    case Verdict::CertifiedNonstrict: return "CertifiedNonstrict";
    case Verdict::Infeasible: return "Infeasible";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

const char* to_string(Failure f) {
  switch (f) {
    case Failure::None: return "none";
    case Failure::InitialCondition: return "initial-condition";
    case Failure::Residual: return "residual";
    case Failure::Margin: return "margin";
    case Failure::Assumption: return "assumption";
  }
  return "?";
}

double condition_residual(const ContinuousProblem& p, const Envelope& env, double t) {
  const double mu = positive_mu(env, t);
  const double bound = 1.0 / mu;
  return bound * (p.gamma(t) - env.mu_dot(t) / mu) - p.alpha(t, bound) - p.beta(t);
}

double envelope_bound(const Envelope& env, double t) { return 1.0 / positive_mu(env, t); }

std::vector<double> log_grid(double t0, double horizon, std::size_t points) {
  if (points < 2) throw std::invalid_argument("grid needs at least 2 points");
  if (!(horizon > t0)) throw std::invalid_argument("horizon must exceed t0");
  std::vector<double> grid(points);
  const double log_span = std::log1p(horizon - t0);
  for (std::size_t i = 0; i < points; ++i) {
    const double s = std::expm1(log_span * static_cast<double>(i) / static_cast<double>(points - 1));
    grid[i] = t0 + s;
  }
  grid.front() = t0;
  grid.back() = horizon;
  return grid;
}

AssumptionReport check_alpha_assumptions(const ContinuousProblem& p, std::size_t t_samples,
                                         std::size_t y_samples, double y_max, double t_end) {
  if (t_samples < 2 || y_samples < 2) throw std::invalid_argument("sample counts must be >= 2");
  if (!(y_max > 0.0)) throw std::invalid_argument("y_max must be positive");
  AssumptionReport report;
  const auto ts = t_end > p.t0 ? log_grid(p.t0, t_end, t_samples) : std::vector<double>{p.t0};
  for (double t : ts) {
    if (p.beta(t) < 0.0) report.negative_beta.push_back(t);
    double prev_y = 0.0;
    double prev_alpha = 0.0;
    for (std::size_t j = 0; j < y_samples; ++j) {
      const double y = y_max * static_cast<double>(j) / static_cast<double>(y_samples - 1);
      const double a = p.alpha(t, y);
      if (a < 0.0) report.negative_alpha.emplace_back(t, y);
      if (a == 0.0 && y > 0.0) report.alpha_vanishes = true;
      if (j > 0 && prev_alpha > a + kMonotoneTolerance) {
        report.monotonicity.push_back({t, prev_y, y, prev_alpha, a});
      }
      prev_y = y;
      prev_alpha = a;
    }
  }
  return report;
}

CertificateReport verify_certificate(const ContinuousProblem& p, const Envelope& env, double g0,
                                     const VerifyOptions& options) {
  if (!(g0 >= 0.0)) throw std::invalid_argument("initial value g0 must be >= 0");
  if (!(options.margin >= 0.0)) throw std::invalid_argument("margin must be >= 0");
  if (options.mode == Mode::Nonstrict && !options.lipschitz_attested) {
    throw std::invalid_argument(
        "nonstrict mode requires the attestation that alpha is locally Lipschitz in y");
  }
  const std::vector<double> grid = log_grid(p.t0, options.horizon, options.grid_points);

  CertificateReport report;
  report.margin = options.margin;
  {
    std::ostringstream desc;
    desc << options.grid_points << " points, log-uniform in 1+(t-t0) on ["
         << format_double(p.t0) << ", " << format_double(options.horizon) << "]";
    report.grid = desc.str();
  }

  std::vector<double> residuals(grid.size());
  std::vector<double> bounds(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    residuals[i] = condition_residual(p, env, grid[i]);
    bounds[i] = envelope_bound(env, grid[i]);
  });

  report.residuals.reserve(grid.size());
  report.min_residual = residuals.front();
  report.argmin_t = grid.front();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    report.residuals.emplace_back(grid[i], residuals[i]);
    if (residuals[i] < report.min_residual) {
      report.min_residual = residuals[i];
      report.argmin_t = grid[i];
    }
  }

  report.initial_product = positive_mu(env, p.t0) * g0;
  bool initial_boundary = false;
  if (options.mode == Mode::Strict) {
    report.initial_ok = report.initial_product < 1.0;
    initial_boundary = report.initial_product == 1.0;
  } else {
    report.initial_ok = report.initial_product <= 1.0;
  }

  const double y_max = *std::max_element(bounds.begin(), bounds.end());
  const AssumptionReport assumptions = check_alpha_assumptions(
      p, options.alpha_t_samples, options.alpha_y_samples, y_max, options.horizon);

  if (report.min_residual < 0.0) {
    report.verdict = Verdict::Infeasible;
    report.failure = Failure::Residual;
    report.notes.push_back("envelope condition fails: R(" + format_double(report.argmin_t) +
                           ") = " + format_double(report.min_residual));
  } else if (!report.initial_ok && !initial_boundary) {
    report.verdict = Verdict::Infeasible;
    report.failure = Failure::InitialCondition;
    report.notes.push_back("initial condition fails: mu(t0)*g0 = " +
                           format_double(report.initial_product) +
                           (options.mode == Mode::Strict ? " is not < 1" : " is not <= 1"));
  } else if (initial_boundary) {
    report.verdict = Verdict::Inconclusive;
    report.failure = Failure::InitialCondition;
    report.notes.push_back(
        "mu(t0)*g0 = 1 exactly: the strict bound needs mu(t0)*g0 < 1; rerun in nonstrict mode "
        "with the Lipschitz attestation for the bound g <= 1/mu");
  } else if (!assumptions.passed()) {
    report.verdict = Verdict::Inconclusive;
    report.failure = Failure::Assumption;
    if (!assumptions.monotonicity.empty()) {
      const auto& v = assumptions.monotonicity.front();
      report.notes.push_back("alpha is not nondecreasing in y: alpha(" + format_double(v.t) + ", " +
                             format_double(v.y1) + ") > alpha(" + format_double(v.t) + ", " +
                             format_double(v.y2) + ")");
    }
    if (!assumptions.negative_alpha.empty()) report.notes.push_back("alpha takes negative values");
    if (!assumptions.negative_beta.empty()) report.notes.push_back("beta takes negative values");
  } else if (report.min_residual < options.margin) {
    report.verdict = Verdict::Inconclusive;
    report.failure = Failure::Margin;
    report.notes.push_back("min residual " + format_double(report.min_residual) +
                           " is below the requested margin " + format_double(options.margin));
  } else {
    report.verdict =
        options.mode == Mode::Strict ? Verdict::CertifiedStrict : Verdict::CertifiedNonstrict;
    report.notes.push_back(std::string("bound g(t) ") +
                           (options.mode == Mode::Strict ? "<" : "<=") +
                           " 1/mu(t) holds on [" + format_double(p.t0) + ", " +
                           format_double(options.horizon) +
                           "] only; the condition was checked on a finite grid");
  }

  if (options.mode == Mode::Nonstrict) {
    report.notes.push_back("alpha attested locally Lipschitz in y by the user");
    if (assumptions.alpha_vanishes) {
      report.notes.push_back(
          "alpha vanishes at sampled points; the nonstrict bound assumes alpha > 0, "
          "regions with alpha = 0 were admitted");
    }
  }
  return report;
}

std::string render_report(const CertificateReport& report) {
  std::ostringstream out;
  out << "verdict: " << to_string(report.verdict) << '\n';
  out << "failure: " << to_string(report.failure) << '\n';
  out << "min_residual: " << format_double(report.min_residual) << '\n';
  out << "argmin: " << format_double(report.argmin_t) << '\n';
  out << "margin: " << format_double(report.margin) << '\n';
  out << "initial_product: " << format_double(report.initial_product) << '\n';
  out << "initial_ok: " << (report.initial_ok ? "true" : "false") << '\n';
  out << "global: " << (report.global ? "true" : "false") << '\n';
  out << "grid: " << report.grid << '\n';
  for (const auto& note : report.notes) out << "note: " << note << '\n';
  return out.str();
}

std::string residuals_csv(const CertificateReport& report, const char* time_header,
                          const char* residual_header) {
  std::string out = std::string(time_header) + "," + residual_header + "\n";
  for (const auto& [t, r] : report.residuals) {
    out += format_double(t);
    out += ',';
    out += format_double(r);
    out += '\n';
  }
  return out;
}

}  // namespace envcert
