#include "envcert/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <unordered_map>

#include "envcert/format.hpp"

namespace envcert {

namespace {

constexpr double kSymmetryTolerance = 1e-12;
constexpr int kMaxSweeps = 100;

double euclidean_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Memoized min-eigenvalue of A(t); lookups take a shared lock.
class GammaCache {
 public:
  explicit GammaCache(VectorSystem sys) : sys_(std::move(sys)) {}

  double operator()(double t) {
    {
      std::shared_lock lock(mutex_);
      if (auto it = cache_.find(t); it != cache_.end()) return it->second;
    }
    const double value = min_eigenvalue(sys_.a_at(t));
    std::unique_lock lock(mutex_);
    cache_.emplace(t, value);
    return value;
  }

 private:
  VectorSystem sys_;
  std::shared_mutex mutex_;
  std::unordered_map<double, double> cache_;
};

}  // namespace

Matrix::Matrix(std::size_t n, std::vector<double> row_major) : n_(n), data_(std::move(row_major)) {
  if (data_.size() != n * n) throw std::invalid_argument("matrix data size mismatch");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

double Matrix::asymmetry() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      worst = std::max(worst, std::fabs((*this)(i, j) - (*this)(j, i)));
    }
  }
  return worst;
}

double Matrix::norm() const { return euclidean_norm(data_); }

std::vector<double> symmetric_eigenvalues(const Matrix& m) {
  const std::size_t n = m.size();
  if (n == 0) throw std::invalid_argument("empty matrix");
  if (m.asymmetry() > kSymmetryTolerance) {
    throw AsymmetricMatrixError("matrix is not symmetric (asymmetry " +
                                format_double(m.asymmetry()) + ")");
  }
  Matrix a = m;
  // Work on the exactly symmetric part.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = s;
      a(j, i) = s;
    }
  }
  const double scale = a.norm();

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    }
    if (off == 0.0 || std::sqrt(off) <= 1e-17 * scale) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::fabs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
      }
    }
  }

  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

double min_eigenvalue(const Matrix& m) { return symmetric_eigenvalues(m).front(); }

std::vector<std::string> state_variables(std::size_t dim) {
  std::vector<std::string> vars{"t"};
  for (std::size_t i = 1; i <= dim; ++i) vars.push_back("u" + std::to_string(i));
  return vars;
}

bool VectorSystem::constant_a() const {
  return std::all_of(a.begin(), a.end(), [](const Expression& e) { return !e.depends_on(0); });
}

Matrix VectorSystem::a_at(double t) const {
  Matrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) m(i, j) = a[i * dim + j](t);
  }
  return m;
}

void VectorSystem::validate() const {
  if (dim == 0) throw std::invalid_argument("system dimension must be >= 1");
  if (a.size() != dim * dim) {
    throw std::invalid_argument("A needs " + std::to_string(dim * dim) + " entries, got " +
                                std::to_string(a.size()));
  }
  if (h.size() != dim || f.size() != dim || u0.size() != dim) {
    throw std::invalid_argument("h, f and u0 must each have " + std::to_string(dim) +
                                " components");
  }
  const auto vars = state_variables(dim);
  for (const auto& e : h) {
    if (e.variables() != vars) throw std::invalid_argument("h components must be over {t, u1..ud}");
  }
  for (const auto& e : f) {
    if (e.variables().size() != 1) throw std::invalid_argument("f components must be over {t}");
  }
  for (const auto& e : a) {
    if (e.variables().size() != 1) throw std::invalid_argument("A entries must be over {t}");
  }
}

ContinuousProblem reduce_to_scalar(const VectorSystem& sys) {
  sys.validate();
  ContinuousProblem p;
  p.t0 = sys.t0;
  if (sys.constant_a()) {
    const double gamma = min_eigenvalue(sys.a_at(sys.t0));
    p.gamma = TimeFunction([gamma](double) { return gamma; },
                           "min_eig(A) = " + format_double(gamma));
  } else {
    auto cache = std::make_shared<GammaCache>(sys);
    min_eigenvalue(sys.a_at(sys.t0));  // fail early on an asymmetric A(t0)
    p.gamma = TimeFunction([cache](double t) { return (*cache)(t); }, "min_eig(A(t))");
  }
  std::vector<Expression> f = sys.f;
  std::string f_desc = "|f(t)|, f = (";
  for (std::size_t i = 0; i < f.size(); ++i) f_desc += (i ? ", " : "") + f[i].to_string();
  f_desc += ")";
  p.beta = TimeFunction(
      [f](double t) {
        double s = 0.0;
        for (const auto& e : f) {
          const double v = e(t);
          s += v * v;
        }
        return std::sqrt(s);
      },
      f_desc);
  p.alpha = sys.alpha_bound;
  return p;
}

Trajectory VectorTrajectory::norm_trajectory() const {
  Trajectory traj;
  traj.status = status;
  traj.notes = notes;
  traj.samples.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    double g_dot = 0.0;
    if (solution && s.norm > 0.0) {
      const auto du = solution->derivative(i);
      double dot = 0.0;
      for (std::size_t k = 0; k < du.size(); ++k) dot += s.u[k] * du[k];
      g_dot = dot / s.norm;
    }
    traj.samples.push_back({s.t, s.norm, g_dot});
  }
  if (solution) {
    auto sol = solution;
    traj.interpolant = [sol](double t) { return euclidean_norm(sol->interpolate(t)); };
  }
  return traj;
}

VectorTrajectory integrate_vector(const VectorSystem& sys, double horizon, double rel_tol,
                                  double abs_tol) {
  sys.validate();
  const std::size_t d = sys.dim;
  const bool constant = sys.constant_a();
  const Matrix a_const = constant ? sys.a_at(sys.t0) : Matrix(d);

  OdeRhs rhs = [&sys, d, constant, &a_const](double t, std::span<const double> u,
                                             std::span<double> du) {
    const Matrix a = constant ? a_const : sys.a_at(t);
    std::vector<double> args(d + 1);
    args[0] = t;
    std::copy(u.begin(), u.end(), args.begin() + 1);
    for (std::size_t i = 0; i < d; ++i) {
      double au = 0.0;
      for (std::size_t j = 0; j < d; ++j) au += a(i, j) * u[j];
      du[i] = -au + sys.h[i].eval(args) + sys.f[i](t);
    }
  };
  IntegratorOptions options;
  options.rel_tol = rel_tol;
  options.abs_tol = abs_tol;
  auto sol = std::make_shared<OdeSolution>(
      integrate_dopri5(rhs, sys.t0, sys.u0, horizon, options));

  VectorTrajectory traj;
  traj.status = sol->status;
  traj.notes = sol->notes;
  traj.samples.reserve(sol->times.size());
  for (std::size_t i = 0; i < sol->times.size(); ++i) {
    const auto u = sol->state(i);
    traj.samples.push_back({sol->times[i], {u.begin(), u.end()}, euclidean_norm(u)});
  }
  traj.solution = std::move(sol);
  return traj;
}

std::string vector_trajectory_csv(const VectorTrajectory& traj) {
  std::string out = "t";
  const std::size_t d = traj.samples.empty() ? 0 : traj.samples.front().u.size();
  for (std::size_t i = 1; i <= d; ++i) out += ",u_" + std::to_string(i);
  out += ",norm\n";
  for (const auto& s : traj.samples) {
    out += format_double(s.t);
    for (double v : s.u) out += ',' + format_double(v);
    out += ',' + format_double(s.norm) + '\n';
  }
  return out;
}

std::vector<AlphaBoundCounterexample> falsify_alpha_bound(const VectorSystem& sys,
                                                          std::span<const double> times,
                                                          std::span<const double> radii,
                                                          std::size_t directions,
                                                          std::uint64_t seed) {
  sys.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<AlphaBoundCounterexample> found;
  std::vector<double> args(sys.dim + 1);
  for (double t : times) {
    for (double r : radii) {
      const double alpha = sys.alpha_bound(t, r);
      for (std::size_t k = 0; k < directions; ++k) {
        std::vector<double> u(sys.dim);
        double len = 0.0;
        while (len == 0.0) {
          for (double& x : u) x = normal(rng);
          len = euclidean_norm(u);
        }
        for (double& x : u) x *= r / len;
        args[0] = t;
        std::copy(u.begin(), u.end(), args.begin() + 1);
        std::vector<double> hv(sys.dim);
        for (std::size_t i = 0; i < sys.dim; ++i) hv[i] = sys.h[i].eval(args);
        const double hn = euclidean_norm(hv);
        if (hn > alpha + 1e-12) found.push_back({t, r, u, hn, alpha});
      }
    }
  }
  return found;
}

double example2_constant(const Example2Params& params) {
  return params.p > 1.0 ? std::pow(params.c, params.p - 1.0)
                        : std::pow(params.lambda + params.c, params.p - 1.0);
}

namespace {

void check_example2(const Example2Params& e) {
  if (!(e.c > 0.0)) throw std::invalid_argument("c must be > 0");
  if (!(e.lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (!(e.b > 0.0)) throw std::invalid_argument("b must be > 0");
  if (!(e.theta > 0.0 && e.theta <= 1.0)) throw std::invalid_argument("theta must be in (0, 1]");
  if (!(e.p > 0.0)) throw std::invalid_argument("p must be > 0");
}

std::map<std::string, double> example2_constants(const Example2Params& e) {
  return {{"c", e.c},         {"lambda", e.lambda}, {"b", e.b},
          {"theta", e.theta}, {"p", e.p},           {"C", example2_constant(e)}};
}

}  // namespace

Example2 build_example2(const Example2Params& params) {
  check_example2(params);
  const auto k = example2_constants(params);
  Example2 ex;
  ex.params = params;
  ex.big_c = example2_constant(params);
  ex.problem.t0 = 0.0;
  ex.problem.gamma = Expression::constant(0.0, {"t"});
  ex.problem.alpha = parse_expr(
      "theta*C*abs(y)^p*b*lambda/((lambda + c)*(1 + t)^(1 + b))", {"t", "y"}, k);
  ex.problem.beta =
      parse_expr("(1 - theta)*b*lambda/((c + lambda)^2*(1 + t)^(1 + b))", {"t"}, k);
  ex.envelope = Envelope::from_mu(parse_expr("c + lambda*(1 + t)^(-b)", {"t"}, k),
                                  "mu(t) = c + lambda*(1+t)^(-b)");
  return ex;
}

VectorSystem example2_system(const Example2Params& params, std::size_t dim,
                             std::vector<double> u0) {
  check_example2(params);
  if (dim == 0) throw std::invalid_argument("dimension must be >= 1");
  auto k = example2_constants(params);
  k["q"] = (params.p - 1.0) / 2.0;
  VectorSystem sys;
  sys.dim = dim;
  sys.u0 = std::move(u0);
  sys.a.assign(dim * dim, Expression::constant(0.0, {"t"}));
  std::string norm2;
  for (std::size_t i = 1; i <= dim; ++i) norm2 += (i > 1 ? " + u" : "u") + std::to_string(i) + "^2";
  const auto vars = state_variables(dim);
  for (std::size_t i = 1; i <= dim; ++i) {
    sys.h.push_back(parse_expr("theta*C*b*lambda/((lambda + c)*(1 + t)^(1 + b))*u" +
                                   std::to_string(i) + "*(" + norm2 + ")^q",
                               vars, k));
    sys.f.push_back(i == 1 ? parse_expr("(1 - theta)*b*lambda/((c + lambda)^2*(1 + t)^(1 + b))",
                                        {"t"}, k)
                           : Expression::constant(0.0, {"t"}));
  }
  sys.alpha_bound = build_example2(params).problem.alpha;
  sys.validate();
  return sys;
}

DecayReport check_gdot_decay(const Trajectory& traj, double b, std::optional<double> limit_bound,
                             double limit_tol) {
  if (!(b > 0.0)) throw std::invalid_argument("decay exponent b must be > 0");
  if (traj.samples.size() < 2) throw std::invalid_argument("trajectory is too short");
  if (traj.status != TrajectoryStatus::Completed) {
    throw std::invalid_argument("trajectory did not complete");
  }
  const double start = 1.0 + traj.samples.front().t;
  const double end = 1.0 + traj.end_time();
  if (!(start > 0.0) || end / start < 100.0) {
    throw std::invalid_argument("trajectory must span at least two decades of 1+t");
  }

  DecayReport report;
  for (double hi = end; hi / 10.0 >= start * (1.0 - 1e-12); hi /= 10.0) {
    report.windows.push_back({hi / 10.0 - 1.0, hi - 1.0, 0.0});
  }
  std::reverse(report.windows.begin(), report.windows.end());
  for (const auto& s : traj.samples) {
    const double stat = std::fabs(s.g_dot) * std::pow(1.0 + s.t, 1.0 + b);
    for (auto& w : report.windows) {
      if (s.t >= w.t_begin && s.t <= w.t_end) w.sup = std::max(w.sup, stat);
    }
  }
  const double last = report.windows.back().sup;
  const double prev = report.windows[report.windows.size() - 2].sup;
  if (last == 0.0) {
    report.growth_exponent = 0.0;
  } else if (prev == 0.0) {
    report.growth_exponent = std::numeric_limits<double>::infinity();
  } else {
    report.growth_exponent = std::log10(last / prev);
  }
  report.bounded = report.growth_exponent <= 0.05;

  report.g_end = traj.samples.back().g;
  report.tail = last * std::pow(end, -b) / b;
  report.g_limit = report.g_end + report.tail;
  report.limit_bound = limit_bound;
  report.limit_ok = !limit_bound || report.g_limit <= *limit_bound + limit_tol;
  return report;
}

}  // namespace envcert
