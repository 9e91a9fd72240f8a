// Difference inequality
//
//     (g_{n+1} - g_n) / h_n <= -gamma_n g_n + alpha(n, g_n) + beta_n,
//     h_n > 0,  0 < h_n gamma_n < 1,
//
// its envelope condition on mu_n and the extremal recurrence.

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "envcert/continuous.hpp"
#include "envcert/expr.hpp"
#include "envcert/ode.hpp"

namespace envcert {

/// A real sequence: either a closed form in {n} or an explicit table
/// indexed from n = 0.
class Sequence {
 public:
  Sequence();
  Sequence(Expression e);            // NOLINT
  Sequence(std::vector<double> table);  // NOLINT
  static Sequence constant(double v);

  double operator()(std::size_t n) const;
  /// Number of entries for a table, nullopt for a closed form.
  std::optional<std::size_t> length() const;
  std::string description() const;

 private:
  std::optional<Expression> expr_;
  std::vector<double> table_;
};

struct DiscreteProblem {
  Sequence gamma;
  Sequence beta;
  Sequence h = Sequence::constant(1.0);
  StateFunction alpha;  // alpha(n, y)
  std::size_t n_max = 100000;
};

struct DiscreteEnvelope {
  Sequence mu;
};

/// Raised when h_n <= 0 or h_n gamma_n lies outside (0, 1).
class PreconditionError : public std::invalid_argument {
 public:
  PreconditionError(const std::string& what, std::size_t n)
      : std::invalid_argument(what), n_(n) {}
  std::size_t index() const { return n_; }

 private:
  std::size_t n_;
};

/// n_max reduced to what the tables of `p` and `env` can supply: the
/// coefficient tables need entries 0..n_max, the envelope 0..n_max+1.
std::size_t effective_n_max(const DiscreteProblem& p, const DiscreteEnvelope* env = nullptr);

/// (1/mu_n)(gamma_n - (mu_{n+1} - mu_n)/(mu_n h_n)) - alpha(n, 1/mu_n) - beta_n.
double discrete_residual(const DiscreteProblem& p, const DiscreteEnvelope& env, std::size_t n);

/// Checks g0 <= 1/mu_0, the step preconditions and a nonnegative residual
/// for every n <= effective_n_max. Certification is CertifiedNonstrict
/// (g_n <= 1/mu_n) and is limited to the checked range.
CertificateReport verify_discrete_certificate(const DiscreteProblem& p,
                                              const DiscreteEnvelope& env, double g0);

struct RecurrenceResult {
  std::vector<double> g;  // g_0 .. g_N (shorter on blow-up)
  TrajectoryStatus status = TrajectoryStatus::Completed;
};

/// g_{n+1} = g_n (1 - h_n gamma_n) + h_n alpha(n, g_n) + h_n beta_n.
RecurrenceResult run_recurrence(const DiscreteProblem& p, double g0, std::size_t steps);

/// The same problem with h_n = 1. gamma and beta are not rescaled.
DiscreteProblem unit_step_view(const DiscreteProblem& p);

/// "n,g_n,bound_n,residual_n". Without an envelope the last two columns are
/// left empty, as are entries past the envelope's checkable range.
std::string sequence_csv(const DiscreteProblem& p, const DiscreteEnvelope* env,
                         const std::vector<double>& g);

}  // namespace envcert
