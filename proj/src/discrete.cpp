#include "envcert/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "envcert/format.hpp"
#include "envcert/parallel.hpp"

namespace envcert {

namespace {

constexpr std::size_t kAlphaIndexSamples = 64;
constexpr std::size_t kAlphaYSamples = 32;
constexpr double kMonotoneTolerance = 1e-12;

double positive_mu(const DiscreteEnvelope& env, std::size_t n) {
  const double mu = env.mu(n);
  if (!(mu > 0.0)) {
    throw EnvelopeError("envelope mu_" + std::to_string(n) + " = " + format_double(mu) +
                        " is not positive");
  }
  return mu;
}

}  // namespace

Sequence::Sequence() : Sequence(constant(0.0)) {}

Sequence::Sequence(Expression e) : expr_(std::move(e)) {}

Sequence::Sequence(std::vector<double> table) : table_(std::move(table)) {
  if (table_.empty()) throw std::invalid_argument("sequence table is empty");
}

Sequence Sequence::constant(double v) { return Sequence(Expression::constant(v, {"n"})); }

double Sequence::operator()(std::size_t n) const {
  if (expr_) return (*expr_)(static_cast<double>(n));
  if (n >= table_.size()) {
    throw std::out_of_range("sequence table has no entry for n = " + std::to_string(n));
  }
  return table_[n];
}

std::optional<std::size_t> Sequence::length() const {
  if (expr_) return std::nullopt;
  return table_.size();
}

std::string Sequence::description() const {
  if (expr_) return expr_->to_string();
  return "table[" + std::to_string(table_.size()) + "]";
}

std::size_t effective_n_max(const DiscreteProblem& p, const DiscreteEnvelope* env) {
  std::size_t n = p.n_max;
  for (const Sequence* s : {&p.gamma, &p.beta, &p.h}) {
    if (auto len = s->length()) n = std::min(n, *len - 1);
  }
  if (env) {
    if (auto len = env->mu.length()) {
      if (*len < 2) throw std::invalid_argument("envelope table needs at least 2 entries");
      n = std::min(n, *len - 2);
    }
  }
  return n;
}

double discrete_residual(const DiscreteProblem& p, const DiscreteEnvelope& env, std::size_t n) {
  const double mu = positive_mu(env, n);
  const double mu_next = positive_mu(env, n + 1);
  const double h = p.h(n);
  const double bound = 1.0 / mu;
  return bound * (p.gamma(n) - (mu_next - mu) / (mu * h)) -
         p.alpha(static_cast<double>(n), bound) - p.beta(n);
}

CertificateReport verify_discrete_certificate(const DiscreteProblem& p,
                                              const DiscreteEnvelope& env, double g0) {
  if (!(g0 >= 0.0)) throw std::invalid_argument("initial value g0 must be >= 0");
  const std::size_t n_max = effective_n_max(p, &env);

  for (std::size_t n = 0; n <= n_max; ++n) {
    const double h = p.h(n);
    const double hg = h * p.gamma(n);
    if (!(h > 0.0)) {
      throw PreconditionError("h_" + std::to_string(n) + " = " + format_double(h) + " is not > 0", n);
    }
    if (!(hg > 0.0 && hg < 1.0)) {
      throw PreconditionError("h_n*gamma_n = " + format_double(hg) + " at n = " +
                                  std::to_string(n) + " is outside (0, 1)",
                              n);
    }
  }

  CertificateReport report;
  report.grid = "n = 0.." + std::to_string(n_max);

  std::vector<double> residuals(n_max + 1);
  std::vector<double> bounds(n_max + 1);
  parallel_for(n_max + 1, [&](std::size_t n) {
    residuals[n] = discrete_residual(p, env, n);
    bounds[n] = 1.0 / positive_mu(env, n);
  });
  report.residuals.reserve(residuals.size());
  report.min_residual = residuals.front();
  report.argmin_t = 0.0;
  for (std::size_t n = 0; n <= n_max; ++n) {
    report.residuals.emplace_back(static_cast<double>(n), residuals[n]);
    if (residuals[n] < report.min_residual) {
      report.min_residual = residuals[n];
      report.argmin_t = static_cast<double>(n);
    }
  }

  const double mu0 = positive_mu(env, 0);
  report.initial_product = mu0 * g0;
  report.initial_ok = g0 <= 1.0 / mu0;

  // Spot checks of the standing assumptions on a log-spaced subset of n.
  const double y_max = *std::max_element(bounds.begin(), bounds.end());
  std::vector<std::string> assumption_notes;
  {
    std::vector<std::size_t> indices;
    for (std::size_t k = 0; k < kAlphaIndexSamples; ++k) {
      const double frac = static_cast<double>(k) / static_cast<double>(kAlphaIndexSamples - 1);
      indices.push_back(static_cast<std::size_t>(
          std::llround(std::expm1(frac * std::log1p(static_cast<double>(n_max))))));
    }
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    for (std::size_t n : indices) {
      if (p.beta(n) < 0.0) {
        assumption_notes.push_back("beta_" + std::to_string(n) + " is negative");
        break;
      }
    }
    for (std::size_t n : indices) {
      double prev = 0.0;
      bool bad = false;
      for (std::size_t j = 0; j < kAlphaYSamples && !bad; ++j) {
        const double y = y_max * static_cast<double>(j) / static_cast<double>(kAlphaYSamples - 1);
        const double a = p.alpha(static_cast<double>(n), y);
        if (a < 0.0) {
          assumption_notes.push_back("alpha(" + std::to_string(n) + ", " + format_double(y) +
                                     ") is negative");
          bad = true;
        } else if (j > 0 && prev > a + kMonotoneTolerance) {
          assumption_notes.push_back("alpha(" + std::to_string(n) +
                                     ", y) is not nondecreasing near y = " + format_double(y));
          bad = true;
        }
        prev = a;
      }
      if (bad) break;
    }
  }

  if (report.min_residual < 0.0) {
    report.verdict = Verdict::Infeasible;
    report.failure = Failure::Residual;
    report.notes.push_back("envelope condition fails at n = " +
                           format_double(report.argmin_t) + ": residual " +
                           format_double(report.min_residual));
  } else if (!report.initial_ok) {
    report.verdict = Verdict::Infeasible;
    report.failure = Failure::InitialCondition;
    report.notes.push_back("initial condition fails: g0 = " + format_double(g0) +
                           " > 1/mu_0 = " + format_double(1.0 / mu0));
  } else if (!assumption_notes.empty()) {
    report.verdict = Verdict::Inconclusive;
    report.failure = Failure::Assumption;
    report.notes = assumption_notes;
  } else {
    report.verdict = Verdict::CertifiedNonstrict;
    report.notes.push_back("bound g_n <= 1/mu_n holds for n <= " + std::to_string(n_max) +
                           " only; the condition was checked up to that index");
  }
  return report;
}

RecurrenceResult run_recurrence(const DiscreteProblem& p, double g0, std::size_t steps) {
  if (!(g0 >= 0.0)) throw std::invalid_argument("initial value g0 must be >= 0");
  if (steps > p.n_max) throw std::invalid_argument("steps exceed n_max");
  RecurrenceResult result;
  result.g.reserve(steps + 1);
  result.g.push_back(g0);
  double g = g0;
  for (std::size_t n = 0; n < steps; ++n) {
    const double h = p.h(n);
    double next = 0.0;
    try {
      next = g * (1.0 - h * p.gamma(n)) + h * p.alpha(static_cast<double>(n), g) + h * p.beta(n);
    } catch (const DomainError& e) {
      if (e.kind() != DomainErrorKind::NonFinite) throw;
      next = std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(next)) {
      result.status = TrajectoryStatus::BlewUp;
      return result;
    }
    g = next;
    result.g.push_back(g);
  }
  return result;
}

DiscreteProblem unit_step_view(const DiscreteProblem& p) {
  DiscreteProblem out = p;
  out.h = Sequence::constant(1.0);
  return out;
}

std::string sequence_csv(const DiscreteProblem& p, const DiscreteEnvelope* env,
                         const std::vector<double>& g) {
  std::string out = "n,g_n,bound_n,residual_n\n";
  const std::size_t limit = env ? effective_n_max(p, env) : 0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    out += std::to_string(n) + ',' + format_double(g[n]) + ',';
    if (env) {
      if (!env->mu.length() || n < *env->mu.length()) out += format_double(1.0 / env->mu(n));
      out += ',';
      if (n <= limit) out += format_double(discrete_residual(p, *env, n));
    } else {
      out += ',';
    }
    out += '\n';
  }
  return out;
}

}  // namespace envcert
