#include <cmath>
#include <random>

#include "doctest.h"
#include "eigen_oracle.hpp"
#include "envcert/reduction.hpp"

using namespace envcert;

namespace {

const std::vector<std::string> kT{"t"};

Expression tconst(double v) { return Expression::constant(v, kT); }

// Linear system u' + A u = 0 with constant A.
VectorSystem linear_system(const Matrix& a, std::vector<double> u0) {
  VectorSystem sys;
  sys.dim = a.size();
  for (double v : a.data()) sys.a.push_back(tconst(v));
  const auto vars = state_variables(sys.dim);
  for (std::size_t i = 0; i < sys.dim; ++i) {
    sys.h.push_back(Expression::constant(0.0, vars));
    sys.f.push_back(tconst(0.0));
  }
  sys.alpha_bound = parse_expr("0", {"t", "y"});
  sys.u0 = std::move(u0);
  return sys;
}

Matrix random_symmetric(std::mt19937_64& rng, std::size_t n, double spread) {
  std::uniform_real_distribution<double> u(-spread, spread);
  Matrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = u(rng);
  return m;
}

}  // namespace

TEST_CASE("min_eigenvalue examples") {
  CHECK(min_eigenvalue(Matrix::identity(3)) == doctest::Approx(1.0).epsilon(1e-14));
  std::vector<double> d{2.0, 5.0};
  CHECK(min_eigenvalue(Matrix::diagonal(d)) == 2.0);
  CHECK(min_eigenvalue(Matrix(2, {2.0, 1.0, 1.0, 2.0})) == doctest::Approx(1.0).epsilon(1e-14));
  auto all = symmetric_eigenvalues(Matrix(2, {2.0, 1.0, 1.0, 2.0}));
  CHECK(all[1] == doctest::Approx(3.0));
  CHECK_THROWS_AS(min_eigenvalue(Matrix(2, {1.0, 0.5, 0.4, 1.0})), AsymmetricMatrixError);
  CHECK_NOTHROW(min_eigenvalue(Matrix(2, {1.0, 0.5, 0.5 + 1e-13, 1.0})));
}

TEST_CASE("min_eigenvalue agrees with the characteristic polynomial") {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 300; ++k) {
    std::size_t n = 1 + rng() % 3;
    Matrix m = random_symmetric(rng, n, 5.0);
    double ref = testing::charpoly_min_eigenvalue(m);
    CHECK(std::fabs(min_eigenvalue(m) - ref) <= 1e-10 * std::max(1.0, m.norm()));
  }
  // Analytic cases.
  CHECK(testing::charpoly_min_eigenvalue(Matrix(3, {2, -1, 0, -1, 2, -1, 0, -1, 2})) ==
        doctest::Approx(2.0 - std::sqrt(2.0)));
  CHECK(std::fabs(min_eigenvalue(Matrix(3, {2, -1, 0, -1, 2, -1, 0, -1, 2})) - (2.0 - std::sqrt(2.0))) <
        1e-12);
}

TEST_CASE("min_eigenvalue agrees with Sturm bisection up to d = 8") {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 200; ++k) {
    std::size_t n = 1 + rng() % 8;
    Matrix m = random_symmetric(rng, n, 3.0);
    double ref = testing::sturm_min_eigenvalue(m);
    CHECK(std::fabs(min_eigenvalue(m) - ref) <= 1e-10 * std::max(1.0, m.norm()));
  }
}

TEST_CASE("reduce_to_scalar examples") {
  SUBCASE("identity") {
    ContinuousProblem p = reduce_to_scalar(linear_system(Matrix::identity(2), {1.0, 0.0}));
    for (double t : {0.0, 3.0, 100.0}) {
      CHECK(p.gamma(t) == doctest::Approx(1.0));
      CHECK(p.beta(t) == 0.0);
      CHECK(p.alpha(t, 2.0) == 0.0);
    }
  }
  SUBCASE("coupled") {
    ContinuousProblem p = reduce_to_scalar(linear_system(Matrix(2, {2, 1, 1, 2}), {1.0, 0.0}));
    CHECK(p.gamma(0.0) == doctest::Approx(1.0));
  }
  SUBCASE("scalar power nonlinearity with forcing") {
    VectorSystem sys;
    sys.dim = 1;
    sys.a = {tconst(0.0)};
    sys.h = {parse_expr("(1+t)^(-2)*u1*abs(u1)^2", state_variables(1))};
    sys.f = {parse_expr("(1+t)^(-2)", kT)};
    sys.alpha_bound = parse_expr("(1+t)^(-2)*y^3", {"t", "y"});
    sys.u0 = {0.1};
    ContinuousProblem p = reduce_to_scalar(sys);
    CHECK(p.gamma(5.0) == 0.0);
    CHECK(p.beta(1.0) == doctest::Approx(0.25));
    CHECK(p.alpha(1.0, 2.0) == doctest::Approx(2.0));
  }
  SUBCASE("time-varying A") {
    VectorSystem sys = linear_system(Matrix::identity(2), {1.0, 1.0});
    sys.a[0] = parse_expr("1+t", kT);
    sys.a[3] = parse_expr("3", kT);
    sys.a[1] = sys.a[2] = parse_expr("0.5*t", kT);
    ContinuousProblem p = reduce_to_scalar(sys);
    for (double t : {0.0, 1.0, 4.0}) {
      Matrix m(2, {1 + t, 0.5 * t, 0.5 * t, 3.0});
      CHECK(p.gamma(t) == doctest::Approx(testing::charpoly_min_eigenvalue(m)));
      CHECK(p.gamma(t) == p.gamma(t));
    }
  }
  SUBCASE("malformed") {
    VectorSystem sys = linear_system(Matrix::identity(2), {1.0, 1.0});
    sys.f.pop_back();
    CHECK_THROWS_AS(reduce_to_scalar(sys), std::invalid_argument);
    VectorSystem asym = linear_system(Matrix(2, {1, 2, 0, 1}), {1.0, 1.0});
    CHECK_THROWS_AS(reduce_to_scalar(asym), AsymmetricMatrixError);
  }
}

TEST_CASE("coercivity holds for the derived gamma") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> z;
  for (int k = 0; k < 50; ++k) {
    std::size_t n = 1 + rng() % 6;
    Matrix a = random_symmetric(rng, n, 2.0);
    double gamma = reduce_to_scalar(linear_system(a, std::vector<double>(n, 1.0))).gamma(0.0);
    for (int s = 0; s < 20; ++s) {
      std::vector<double> u(n);
      for (auto& x : u) x = z(rng);
      double quad = 0.0, norm2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        norm2 += u[i] * u[i];
        for (std::size_t j = 0; j < n; ++j) quad += u[i] * a(i, j) * u[j];
      }
      CHECK(quad >= gamma * norm2 - 1e-12 * (1.0 + a.norm()) * norm2);
    }
  }
}

TEST_CASE("integrate_vector examples") {
  VectorTrajectory diag = integrate_vector(linear_system(Matrix::identity(2), {3.0, 4.0}), 5.0, 1e-8, 1e-10);
  REQUIRE(diag.status == TrajectoryStatus::Completed);
  for (const auto& s : diag.samples) CHECK(std::fabs(s.norm - 5.0 * std::exp(-s.t)) <= 1e-6);

  VectorTrajectory rest = integrate_vector(linear_system(Matrix::identity(3), {0.0, 0.0, 0.0}), 5.0, 1e-8, 1e-10);
  for (const auto& s : rest.samples) CHECK(s.norm == 0.0);

  const double atol = 1e-10;
  VectorTrajectory coupled = integrate_vector(linear_system(Matrix(2, {2, 1, 1, 2}), {1.0, 0.0}), 10.0, 1e-8, atol);
  for (const auto& s : coupled.samples) CHECK(s.norm <= std::exp(-s.t) + 10 * atol);

  Trajectory norm = diag.norm_trajectory();
  CHECK(norm.at(1.234) == doctest::Approx(5.0 * std::exp(-1.234)).epsilon(1e-7));
  CHECK(norm.samples[3].g_dot == doctest::Approx(-norm.samples[3].g).epsilon(1e-6));

  std::string csv = vector_trajectory_csv(rest);
  CHECK(csv.rfind("t,u_1,u_2,u_3,norm\n0,0,0,0,0\n", 0) == 0);
}

TEST_CASE("linear systems decay at the coercivity rate") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double atol = 1e-10;
  for (int k = 0; k < 50; ++k) {
    std::size_t n = 1 + rng() % 6;
    // Symmetric positive definite: B B^T + 0.1 I.
    Matrix b = random_symmetric(rng, n, 1.0);
    Matrix a(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t l = 0; l < n; ++l) s += b(i, l) * b(j, l);
        a(i, j) = s + (i == j ? 0.1 : 0.0);
      }
    std::vector<double> u0(n);
    double n0 = 0.0;
    for (auto& x : u0) {
      x = u(rng);
      n0 += x * x;
    }
    n0 = std::sqrt(n0);
    VectorSystem sys = linear_system(a, u0);
    double gamma = reduce_to_scalar(sys).gamma(0.0);
    VectorTrajectory tr = integrate_vector(sys, 5.0, 1e-8, atol);
    REQUIRE(tr.status == TrajectoryStatus::Completed);
    for (const auto& s : tr.samples) CHECK(s.norm <= n0 * std::exp(-gamma * s.t) + 10 * atol);
  }
}

TEST_CASE("example 2 construction") {
  Example2Params prm;
  Example2 ex = build_example2(prm);
  CHECK(ex.big_c == 1.0);
  CHECK(ex.problem.gamma(3.0) == 0.0);
  CHECK(ex.problem.alpha(0.0, 0.5) == doctest::Approx(0.5 * 0.25 * 1.0 / 2.0));
  CHECK(ex.problem.beta(0.0) == doctest::Approx(0.5 / 4.0));
  CHECK(envelope_bound(ex.envelope, 0.0) == doctest::Approx(0.5));

  VerifyOptions o;
  o.horizon = 1e4;
  CertificateReport r = verify_certificate(ex.problem, ex.envelope, 0.4, o);
  CHECK(r.verdict == Verdict::CertifiedStrict);
  CHECK(envelope_bound(ex.envelope, 1e4) < 1.0);

  CHECK(example2_constant({2.0, 1.0, 1.0, 0.5, 1.0}) == 1.0);
  CHECK(example2_constant({2.0, 1.0, 1.0, 0.5, 3.0}) == 4.0);
  CHECK(example2_constant({2.0, 1.0, 1.0, 0.5, 0.5}) == doctest::Approx(std::pow(3.0, -0.5)));

  Example2 full = build_example2({1.0, 1.0, 1.0, 1.0, 2.0});
  CHECK(full.problem.beta(2.0) == 0.0);
  CHECK(is_certified(verify_certificate(full.problem, full.envelope, 0.4, o).verdict));

  CHECK_THROWS(build_example2({1.0, 1.0, 1.0, 0.0, 2.0}));
  CHECK_THROWS(build_example2({1.0, 1.0, 1.0, 1.5, 2.0}));
  CHECK_THROWS(build_example2({0.0, 1.0, 1.0, 0.5, 2.0}));
  CHECK_THROWS(build_example2({1.0, 1.0, -1.0, 0.5, 2.0}));
}

TEST_CASE("example 2 verification chain") {
  // Each step of the hand argument, asserted separately, then the residual.
  for (Example2Params prm : {Example2Params{}, Example2Params{2.0, 3.0, 0.5, 0.3, 0.7},
                             Example2Params{0.5, 2.0, 2.0, 0.9, 3.0}, Example2Params{1.0, 4.0, 1.5, 0.6, 1.0}}) {
    Example2 ex = build_example2(prm);
    const double c = prm.c, lam = prm.lambda, b = prm.b, th = prm.theta, p = prm.p, cc = ex.big_c;
    CHECK(cc * std::max(std::pow(c, 1 - p), std::pow(c + lam, 1 - p)) <= 1.0 + 1e-15);
    for (double t : log_grid(0.0, 1e4, 200)) {
      const double mu = ex.envelope.mu(t);
      const double s = std::pow(1 + t, b);
      const double target = (1 / mu) * b * lam / ((1 + t) * (lam + c * s));
      CHECK(mu > c);
      CHECK(mu <= c + lam);
      // Forcing step.
      const double beta_bound = (1 - th) * b * lam / ((c + lam) * (c + lam) * (1 + t) * s);
      CHECK(ex.problem.beta(t) <= beta_bound * (1 + 1e-12));
      CHECK(beta_bound <= (1 - th) * target * (1 + 1e-12));
      // Power step.
      CHECK(cc / std::pow(mu, p - 1) <= 1.0 + 1e-12);
      // Nonlinearity step.
      const double a = ex.problem.alpha(t, 1 / mu);
      const double first = th * cc * (1 / mu) * std::pow(mu, 1 - p) * b * lam / ((1 + t) * (lam * s + c * s));
      CHECK(a <= first * (1 + 1e-12));
      CHECK(first <= th * target * (1 + 1e-12));
      // Conclusion, independently.
      CHECK(condition_residual(ex.problem, ex.envelope, t) >= -1e-15 * target);
      CHECK(-ex.envelope.mu_dot(t) / (mu * mu) == doctest::Approx(target).epsilon(1e-12));
    }
  }
}

TEST_CASE("example 2 vector system") {
  Example2Params prm;
  VectorSystem sys = example2_system(prm, 3, {0.3, 0.2, 0.1});
  ContinuousProblem red = reduce_to_scalar(sys);
  Example2 ex = build_example2(prm);
  for (double t : {0.0, 1.0, 50.0}) {
    CHECK(red.gamma(t) == 0.0);
    CHECK(red.beta(t) == doctest::Approx(ex.problem.beta(t)).epsilon(1e-14));
  }
  std::vector<double> times{0.0, 1.0, 10.0}, radii{0.1, 0.5, 1.0};
  CHECK(falsify_alpha_bound(sys, times, radii, 64, 1).empty());

  VectorTrajectory tr = integrate_vector(sys, 1e3, 1e-8, 1e-10);
  REQUIRE(tr.status == TrajectoryStatus::Completed);
  for (const auto& s : tr.samples) {
    CHECK(s.norm <= envelope_bound(ex.envelope, s.t));
    CHECK(s.norm < 1.0 / prm.c);
  }
}

TEST_CASE("falsify_alpha_bound rejects a bound that is too small") {
  VectorSystem sys = example2_system({}, 2, {0.1, 0.0});
  sys.alpha_bound = parse_expr("0.1*(1+t)^(-2)*y^2", {"t", "y"});  // true bound has 0.25
  std::vector<double> times{0.0, 2.0}, radii{0.5, 1.0};
  auto cex = falsify_alpha_bound(sys, times, radii, 16, 7);
  REQUIRE_FALSE(cex.empty());
  CHECK(cex.front().h_norm > cex.front().alpha);
  auto again = falsify_alpha_bound(sys, times, radii, 16, 7);
  REQUIRE(again.size() == cex.size());
  CHECK(again.front().u == cex.front().u);
}

TEST_CASE("check_gdot_decay examples") {
  Example2Params prm;
  Example2 ex = build_example2(prm);
  Trajectory tr = integrate_extremal(ex.problem, 0.4, 1e4, 1e-10, 1e-12);
  REQUIRE(tr.status == TrajectoryStatus::Completed);
  DecayReport d = check_gdot_decay(tr, prm.b, 1.0 / prm.c);
  CHECK(d.bounded);
  CHECK(d.limit_ok);
  CHECK(d.g_limit <= 1.0 + 1e-6);
  CHECK(d.windows.size() >= 2);

  ContinuousProblem still;
  Trajectory flat = integrate_extremal(still, 0.3, 1e3, 1e-8, 1e-10);
  DecayReport f = check_gdot_decay(flat, 1.0);
  CHECK(f.bounded);
  CHECK(f.g_limit == doctest::Approx(0.3));

  CHECK_THROWS_AS(check_gdot_decay(flat, 0.0), std::invalid_argument);
  Trajectory short_run = integrate_extremal(still, 0.3, 50.0, 1e-8, 1e-10);
  CHECK_THROWS_AS(check_gdot_decay(short_run, 1.0), std::invalid_argument);
}
