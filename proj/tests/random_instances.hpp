// Random instances shared by the unit tests and the acceptance binary.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "envcert/continuous.hpp"
#include "envcert/discrete.hpp"

namespace envcert::testing {

struct DiscreteInstance {
  DiscreteProblem problem;
  DiscreteEnvelope envelope;
  double g0 = 0.0;
};

// gamma_n in (0.05, 1), h_n gamma_n in (0.05, 0.95), mu_n constant or
// lambda (1+n)^nu with nu < 0.05 so that (mu_{n+1}-mu_n)/mu_n < h_n gamma_n.
// alpha = a y^p and beta_n take at most 90% of the remaining slack each, so
// the residual is nonnegative by construction.
inline DiscreteInstance random_discrete_instance(std::mt19937_64& rng, std::size_t n_max) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t len = n_max + 2;
  std::vector<double> gamma(len), h(len), mu(len), beta(len);
  const bool power = rng() % 2 == 0;
  const double lambda = 1.0 + 4.0 * u(rng);
  const double nu = power ? 0.05 * u(rng) : 0.0;
  for (std::size_t n = 0; n < len; ++n) {
    gamma[n] = 0.05 + 0.95 * u(rng);
    h[n] = (0.05 + 0.9 * u(rng)) / gamma[n];
    mu[n] = lambda * std::pow(1.0 + static_cast<double>(n), nu);
  }
  const double p = 1.0 + 2.0 * u(rng);
  std::vector<double> slack(len - 1);
  double a = INFINITY;
  for (std::size_t n = 0; n + 1 < len; ++n) {
    slack[n] = (1.0 / mu[n]) * (gamma[n] - (mu[n + 1] - mu[n]) / (mu[n] * h[n]));
    a = std::min(a, slack[n] * std::pow(mu[n], p));
  }
  const double frac = 0.9 * u(rng);
  a *= frac;
  for (std::size_t n = 0; n + 1 < len; ++n) beta[n] = 0.9 * (1.0 - frac) * slack[n] * u(rng);
  beta[len - 1] = 0.0;

  DiscreteInstance inst;
  inst.problem.gamma = Sequence(gamma);
  inst.problem.h = Sequence(h);
  inst.problem.beta = Sequence(beta);
  inst.problem.alpha = StateFunction(
      [a, p](double, double y) { return a * std::pow(std::max(y, 0.0), p); },
      "a*y^p");
  inst.problem.n_max = n_max;
  inst.envelope.mu = Sequence(mu);
  inst.g0 = u(rng) / mu[0];
  return inst;
}

struct ContinuousInstance {
  ContinuousProblem problem;
  double ga = 0.0;
  double gb = 0.0;
};

// gamma = c/(1+t), alpha = a (1+t)^(-2) y^p nondecreasing in y, beta =
// bb (1+t)^(-2); initial values small enough to stay bounded on [0, 100].
inline ContinuousInstance random_continuous_instance(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::map<std::string, double> k{{"c", 0.5 + 2.5 * u(rng)},
                                  {"a", u(rng)},
                                  {"p", 1.0 + 2.0 * u(rng)},
                                  {"bb", u(rng)}};
  ContinuousInstance inst;
  inst.problem.gamma = parse_expr("c/(1+t)", {"t"}, k);
  inst.problem.alpha = parse_expr("a*(1+t)^(-2)*y^p", {"t", "y"}, k);
  inst.problem.beta = parse_expr("bb*(1+t)^(-2)", {"t"}, k);
  inst.ga = 0.4 * u(rng);
  inst.gb = inst.ga + 0.4 * u(rng) + 1e-3;
  return inst;
}

}  // namespace envcert::testing
