// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eigen_oracle.hpp"
#include "envcert/continuous.hpp"
#include "envcert/discrete.hpp"
#include "envcert/ode.hpp"
#include "envcert/reduction.hpp"
#include "envcert/search.hpp"
#include "random_instances.hpp"

using namespace envcert;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

VerifyOptions grid_options(double horizon, std::size_t points) {
  VerifyOptions o;
  o.horizon = horizon;
  o.grid_points = points;
  return o;
}

void example1(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  const Example1Shape shape;  // b = 1, c = 4, m = 1, p = 2, q = 1.5
  const double lambda = 4.0, nu = 1.0, u0 = 0.4;
  o.require(powerlaw_closed_form_check(shape, lambda, nu), "closed form");

  const Example1 ex = build_example1(shape);
  const Envelope env = powerlaw_envelope(lambda, nu);
  const CertificateReport r = verify_certificate(ex.problem, env, u0 * u0, grid_options(1e4, 2048));
  o.require(r.verdict == Verdict::CertifiedStrict, "verdict");
  o.require(r.min_residual >= 0.0, "min_residual");

  // The u equation itself, compared with the bound u^2 < 1/(4(1+t)).
  const Trajectory u = integrate_scalar(ex.u_rhs, u0, 0.0, 1e4, 1e-8, 1e-10);
  o.require(u.status == TrajectoryStatus::Completed, "trajectory completed");
  double worst = INFINITY;
  auto visit = [&](double t, double value) {
    worst = std::min(worst, 1.0 / (4.0 * (1.0 + t)) - value * value);
  };
  for (const auto& s : u.samples) visit(s.t, s.g);
  for (double t : log_grid(0.0, u.end_time(), 2048)) visit(t, u.at(t));
  o.require(worst >= -1e-8, "trajectory slack");

  const double elapsed = seconds_since(start);
  o.require(elapsed < 5.0, "runtime");
  o.detail << "verdict " << to_string(r.verdict) << ", min_residual " << r.min_residual
           << ", trajectory samples " << u.samples.size() << ", worst slack " << worst << ", "
           << elapsed << " s";
}

void example1_gate(Outcome& o) {
  Example1Shape shape;
  shape.q = 1.2;
  o.require(!powerlaw_closed_form_check(shape, 4.0, 1.0), "closed form must reject q = 1.2");
  const CertificateReport shortrun = certify_example1(shape, 4.0, 1.0, 0.16, grid_options(1e4, 2048));
  const CertificateReport longrun = certify_example1(shape, 4.0, 1.0, 0.16, grid_options(1e6, 2048));
  o.require(!shortrun.global && !longrun.global, "no global certificate");
  o.require(longrun.min_residual < 0.0 || longrun.verdict == Verdict::Inconclusive,
            "long horizon must expose the failure");
  o.detail << "horizon 1e4: " << to_string(shortrun.verdict) << " (global "
           << (shortrun.global ? "true" : "false") << "), horizon 1e6: " << to_string(longrun.verdict)
           << " with min_residual " << longrun.min_residual << " at t = " << longrun.argmin_t;
}

void example2(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  Example2Params prm;  // c = lambda = b = 1, theta = 0.5, p = 2
  const Example2 ex = build_example2(prm);
  o.require(ex.big_c == 1.0, "C = 1");
  const double g0 = 0.4;
  const CertificateReport r = verify_certificate(ex.problem, ex.envelope, g0, grid_options(1e4, 2048));
  o.require(r.verdict == Verdict::CertifiedStrict, "verdict");
  for (double t : log_grid(0.0, 1e4, 2048)) {
    if (!(envelope_bound(ex.envelope, t) < 1.0)) {
      o.require(false, "1/mu < 1");
      break;
    }
  }

  const Trajectory g = integrate_extremal(ex.problem, g0, 1e4, 1e-10, 1e-12);
  o.require(g.status == TrajectoryStatus::Completed, "trajectory completed");
  const EnvelopeCheck check = check_envelope(g, ex.envelope, true, 0.0, log_grid(0.0, 1e4, 2048));
  o.require(check.clean(), "trajectory under the envelope");
  const DecayReport d = check_gdot_decay(g, prm.b, 1.0 / prm.c);
  o.require(d.bounded, "window statistic bounded");
  o.require(d.g_limit <= 1.0 + 1e-6, "g(inf) <= 1 + 1e-6");

  const double elapsed = seconds_since(start);
  o.require(elapsed < 5.0, "runtime");
  o.detail << "verdict " << to_string(r.verdict) << ", windows";
  for (const auto& w : d.windows) o.detail << ' ' << w.sup;
  o.detail << ", growth exponent " << d.growth_exponent << ", g(inf) ~ " << d.g_limit << ", "
           << elapsed << " s";
}

void discrete_soundness(Outcome& o) {
  std::mt19937_64 rng(2024);
  int certified = 0, violations = 0;
  for (int k = 0; k < 200; ++k) {
    const auto inst = testing::random_discrete_instance(rng, 10000);
    const CertificateReport r = verify_discrete_certificate(inst.problem, inst.envelope, inst.g0);
    if (!is_certified(r.verdict)) continue;
    ++certified;
    const RecurrenceResult run = run_recurrence(inst.problem, inst.g0, 10000);
    if (run.status != TrajectoryStatus::Completed) ++violations;
    for (std::size_t n = 0; n < run.g.size(); ++n) {
      if (run.g[n] > 1.0 / inst.envelope.mu(n) + 1e-12) {
        ++violations;
        break;
      }
    }
  }
  o.require(violations == 0, "zero violations");
  o.require(certified == 200, "every constructed instance certifies");
  o.detail << certified << "/200 certified, " << violations << " instances with violations";
}

void discrete_worked(Outcome& o) {
  DiscreteProblem p;
  p.gamma = Sequence::constant(0.5);
  p.h = Sequence::constant(1.0);
  p.beta = Sequence::constant(0.0);
  p.alpha = parse_expr("y^2", {"n", "y"});
  p.n_max = 100000;
  const DiscreteEnvelope env{Sequence::constant(4.0)};
  const CertificateReport r = verify_discrete_certificate(p, env, 0.25);
  o.require(is_certified(r.verdict), "certified");
  const RecurrenceResult run = run_recurrence(p, 0.25, 100000);
  o.require(run.g.size() == 100001, "all steps");
  o.require(run.g.size() > 1 && run.g[1] == 0.1875, "g_1 = 0.1875 exactly");
  const double peak = *std::max_element(run.g.begin(), run.g.end());
  o.require(peak <= 0.25, "g_n <= 0.25");
  o.detail << "verdict " << to_string(r.verdict) << ", g_1 = " << (run.g.size() > 1 ? run.g[1] : NAN)
           << ", max g_n = " << peak;
}

void integrator_order(Outcome& o) {
  const Expression rhs = parse_expr("-y", {"t", "y"});
  auto error = [&](double rtol, double atol) {
    const Trajectory tr = integrate_scalar(rhs, 1.0, 0.0, 1.0, rtol, atol);
    return std::fabs(tr.samples.back().g - std::exp(-1.0));
  };
  const double e8 = error(1e-8, 1e-10), e9 = error(1e-9, 1e-11), e10 = error(1e-10, 1e-12);
  o.require(e8 <= 1e-6, "endpoint error");
  o.require(e8 / e9 >= 8.0 && e9 / e10 >= 8.0, "8x per decade");
  o.detail << "errors " << e8 << ", " << e9 << ", " << e10 << "; ratios " << e8 / e9 << ", "
           << e9 / e10;
}

void comparison(Outcome& o) {
  std::mt19937_64 rng(7);
  const double rtol = 1e-8, atol = 1e-10;
  int worse = 0;
  double worst_gap = -INFINITY;
  for (int k = 0; k < 50; ++k) {
    const auto inst = testing::random_continuous_instance(rng);
    const Trajectory a = integrate_extremal(inst.problem, inst.ga, 100.0, rtol, atol);
    const Trajectory b = integrate_extremal(inst.problem, inst.gb, 100.0, rtol, atol);
    if (a.status != TrajectoryStatus::Completed || b.status != TrajectoryStatus::Completed) {
      ++worse;
      continue;
    }
    bool ordered = true;
    for (const auto& s : a.samples) {
      worst_gap = std::max(worst_gap, s.g - b.at(s.t));
      ordered = ordered && s.g <= b.at(s.t) + 10 * atol;
    }
    for (const auto& s : b.samples) {
      worst_gap = std::max(worst_gap, a.at(s.t) - s.g);
      ordered = ordered && a.at(s.t) <= s.g + 10 * atol;
    }
    if (!ordered) ++worse;
  }
  o.require(worse == 0, "ordered trajectories");
  o.detail << "50 instances, " << worse << " out of order, max g_a - g_b = " << worst_gap;
}

void eigen_check(Outcome& o) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 1 + rng() % 8;
    Matrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = 5.0 * u(rng);
    }
    const double ref = n <= 3 ? testing::charpoly_min_eigenvalue(m) : testing::sturm_min_eigenvalue(m);
    const double rel = std::fabs(min_eigenvalue(m) - ref) / std::fabs(ref);
    worst = std::max(worst, rel);
  }
  o.require(worst <= 1e-9, "relative error");
  o.detail << "100 matrices, d <= 8, worst relative error " << worst;
}

void search_recovery(Outcome& o) {
  const Example1Shape shape;
  SearchSettings s;
  s.g0 = 0.16;
  s.verify = grid_options(1e4, 2048);
  s.closed_form = shape;
  const EnvelopeFamily family{FamilyKind::PowerLaw, {{"lambda", 1.0, 8.0, 33}, {"nu", 0.25, 2.0, 29}}};
  const FeasibilitySearch search(build_example1(shape).problem, family, s);
  const FeasibleRegion region = search.search();
  o.require(!region.empty(), "nonempty region");
  const std::vector<double> target{4.0, 1.0};
  o.require(region.contains(target), "contains (4, 1)");

  // Largest nu allowed by each closed-form constraint at lambda = 4.
  const double lambda = 4.0;
  const double by_q = 2.0 * (shape.q - 1.0);
  const double by_c = 2.0 * (shape.c - std::sqrt(lambda) - std::pow(lambda, -shape.p / 2.0));
  const double binding = std::min(by_q, by_c);
  double boundary = NAN;
  try {
    boundary = search.refine_boundary(region, "nu", 1e-4, std::vector<double>{lambda, 1.0});
  } catch (const std::exception& e) {
    o.detail << "refine failed: " << e.what() << "; ";
  }
  o.require(std::fabs(boundary - binding) <= 1e-3, "boundary within 1e-3");
  o.detail << region.feasible_points().size() << "/" << region.lattice.size()
           << " feasible, refined nu boundary " << boundary << " vs binding " << binding;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria{
      {"example 1 reproduction", example1},
      {"example 1 closed-form gate", example1_gate},
      {"example 2 reproduction", example2},
      {"discrete induction soundness", discrete_soundness},
      {"worked discrete instance", discrete_worked},
      {"integrator order", integrator_order},
      {"comparison property", comparison},
      {"eigenvalue check", eigen_check},
      {"search recovery", search_recovery},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    if (!o.pass) ++failed;
    std::printf("criterion %zu (%s): %s - %s\n", i + 1, criteria[i].name, o.pass ? "PASS" : "FAIL",
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
