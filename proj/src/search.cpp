#include "envcert/search.hpp"

#include <algorithm>
#include <cmath>

#include "envcert/format.hpp"
#include "envcert/parallel.hpp"

namespace envcert {

const char* to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::PowerLaw: return "power_law";
    case FamilyKind::Shifted: return "shifted";
    case FamilyKind::ConstantDiscrete: return "constant_discrete";
    case FamilyKind::PowerDiscrete: return "power_discrete";
  }
  return "?";
}

FamilyKind parse_family_kind(std::string_view text) {
  for (auto k : {FamilyKind::PowerLaw, FamilyKind::Shifted, FamilyKind::ConstantDiscrete,
                 FamilyKind::PowerDiscrete}) {
    if (text == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown envelope family '" + std::string(text) + "'");
}

Objective parse_objective(std::string_view text) {
  if (text == "max_decay") return Objective::MaxDecay;
  if (text == "max_margin") return Objective::MaxMargin;
  throw std::invalid_argument("unknown objective '" + std::string(text) + "'");
}

std::vector<double> ParamRange::values() const {
  std::vector<double> v(points);
  for (std::size_t i = 0; i < points; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  v.back() = hi;
  return v;
}

std::vector<std::string> EnvelopeFamily::parameter_names(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::PowerLaw: return {"lambda", "nu"};
    case FamilyKind::Shifted: return {"c", "lambda", "b"};
    case FamilyKind::ConstantDiscrete: return {"mu"};
    case FamilyKind::PowerDiscrete: return {"lambda", "nu"};
  }
  return {};
}

bool EnvelopeFamily::discrete() const {
  return kind == FamilyKind::ConstantDiscrete || kind == FamilyKind::PowerDiscrete;
}

std::size_t EnvelopeFamily::decay_index() const {
  switch (kind) {
    case FamilyKind::PowerLaw: return 1;       // nu
    case FamilyKind::Shifted: return 2;        // b
    case FamilyKind::ConstantDiscrete: return 0;  // mu
    case FamilyKind::PowerDiscrete: return 1;  // nu
  }
  return 0;
}

void EnvelopeFamily::validate() const {
  const auto names = parameter_names(kind);
  if (ranges.size() != names.size()) {
    throw std::invalid_argument(std::string(to_string(kind)) + " family needs " +
                                std::to_string(names.size()) + " parameter ranges");
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& r = ranges[i];
    if (r.name != names[i]) {
      throw std::invalid_argument("expected range for '" + names[i] + "', got '" + r.name + "'");
    }
    if (!(r.hi > r.lo)) {
      throw std::invalid_argument("range for '" + r.name + "' must have lo < hi");
    }
    if (r.points < 2) {
      throw std::invalid_argument("range for '" + r.name + "' needs at least 2 points");
    }
  }
  // Positivity of mu over the box.
  auto positive = [&](const std::string& name) {
    for (const auto& r : ranges) {
      if (r.name == name && !(r.lo > 0.0)) {
        throw std::invalid_argument("parameter '" + name + "' must be > 0 over its range");
      }
    }
  };
  switch (kind) {
    case FamilyKind::PowerLaw:
    case FamilyKind::PowerDiscrete: positive("lambda"); break;
    case FamilyKind::Shifted:
      positive("c");
      positive("lambda");
      positive("b");
      break;
    case FamilyKind::ConstantDiscrete: positive("mu"); break;
  }
}

Envelope powerlaw_envelope(double lambda, double nu) {
  return Envelope::from_mu(
      parse_expr("lambda*(1 + t)^nu", {"t"}, {{"lambda", lambda}, {"nu", nu}}),
      "mu(t) = " + format_double(lambda) + "*(1+t)^" + format_double(nu));
}

Envelope EnvelopeFamily::continuous_envelope(std::span<const double> params) const {
  switch (kind) {
    case FamilyKind::PowerLaw: return powerlaw_envelope(params[0], params[1]);
    case FamilyKind::Shifted:
      return Envelope::from_mu(parse_expr("c + lambda*(1 + t)^(-b)", {"t"},
                                          {{"c", params[0]}, {"lambda", params[1]}, {"b", params[2]}}),
                               "mu(t) = " + format_double(params[0]) + " + " +
                                   format_double(params[1]) + "*(1+t)^(-" +
                                   format_double(params[2]) + ")");
    default: throw std::invalid_argument("family is discrete");
  }
}

DiscreteEnvelope EnvelopeFamily::discrete_envelope(std::span<const double> params) const {
  switch (kind) {
    case FamilyKind::ConstantDiscrete: return {Sequence::constant(params[0])};
    case FamilyKind::PowerDiscrete:
      return {Sequence(parse_expr("lambda*(1 + n)^nu", {"n"},
                                  {{"lambda", params[0]}, {"nu", params[1]}}))};
    default: throw std::invalid_argument("family is continuous");
  }
}

bool powerlaw_closed_form_check(double m, double q, double c, double p, double lambda, double nu) {
  return m + 0.5 * p * nu >= 1.0 && q - 0.5 * nu >= 1.0 &&
         std::sqrt(lambda) + std::pow(lambda, -0.5 * p) <= c - 0.5 * nu;
}

bool powerlaw_closed_form_check(const Example1Shape& shape, double lambda, double nu) {
  if (shape.b != 1.0) {
    throw WrongShapeError("the closed-form check applies only to b = 1 (got b = " +
                          format_double(shape.b) + ")");
  }
  return powerlaw_closed_form_check(shape.m, shape.q, shape.c, shape.p, lambda, nu);
}

Example1 build_example1(const Example1Shape& shape) {
  const std::map<std::string, double> k{
      {"b", shape.b}, {"c", shape.c}, {"m", shape.m}, {"p", shape.p}, {"q", shape.q}};
  Example1 ex;
  ex.shape = shape;
  ex.problem.t0 = 0.0;
  ex.problem.gamma = parse_expr("2*c/(1 + t)^b", {"t"}, k);
  ex.problem.alpha =
      parse_expr("2*(1 + t)^(-m)*y^(1 + 0.5*p) + 2*(1 + t)^(-q)*y^0.5", {"t", "y"}, k);
  ex.problem.beta = Expression::constant(0.0, {"t"});
  ex.u_rhs = parse_expr("-c/(1 + t)^b*y + (1 + t)^(-m)*y*abs(y)^p + (1 + t)^(-q)", {"t", "y"}, k);
  return ex;
}

CertificateReport certify_example1(const Example1Shape& shape, double lambda, double nu,
                                   double g0, const VerifyOptions& options) {
  const Example1 ex = build_example1(shape);
  CertificateReport report = verify_certificate(ex.problem, powerlaw_envelope(lambda, nu), g0, options);
  if (shape.b != 1.0) {
    report.notes.push_back("closed-form check not applicable (b != 1)");
    return report;
  }
  const bool closed = powerlaw_closed_form_check(shape, lambda, nu);
  if (closed && is_certified(report.verdict)) {
    report.global = true;
    report.notes.erase(std::remove_if(report.notes.begin(), report.notes.end(),
                                      [](const std::string& n) {
                                        return n.find("only;") != std::string::npos;
                                      }),
                       report.notes.end());
    report.notes.push_back("closed-form check passed: the bound holds for all t >= 0");
  } else if (!closed) {
    report.notes.push_back("closed-form check failed: no certificate beyond the grid horizon");
  }
  return report;
}

std::vector<LatticePoint> FeasibleRegion::feasible_points() const {
  std::vector<LatticePoint> out;
  for (const auto& p : lattice) {
    if (p.feasible) out.push_back(p);
  }
  return out;
}

const LatticePoint& FeasibleRegion::best_point() const {
  if (!best) throw std::logic_error("feasible region is empty");
  return lattice[*best];
}

bool FeasibleRegion::contains(std::span<const double> point) const {
  if (point.size() != axes.size()) throw std::invalid_argument("point dimension mismatch");
  // Per axis: candidate lattice indices (one if on a lattice value, else two).
  std::vector<std::vector<std::size_t>> candidates(axes.size());
  for (std::size_t k = 0; k < axes.size(); ++k) {
    const auto& axis = axes[k];
    const double x = point[k];
    if (x < axis.front() || x > axis.back()) return false;
    auto it = std::lower_bound(axis.begin(), axis.end(), x);
    const auto i = static_cast<std::size_t>(it - axis.begin());
    if (*it == x) {
      candidates[k] = {i};
    } else {
      candidates[k] = {i - 1, i};
    }
  }
  std::vector<std::size_t> stride(axes.size(), 1);
  for (std::size_t k = axes.size(); k-- > 1;) stride[k - 1] = stride[k] * axes[k].size();

  std::vector<std::size_t> choice(axes.size(), 0);
  for (;;) {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < axes.size(); ++k) flat += candidates[k][choice[k]] * stride[k];
    if (!lattice[flat].feasible) return false;
    std::size_t k = axes.size();
    for (;;) {
      if (k == 0) return true;
      --k;
      if (++choice[k] < candidates[k].size()) break;
      choice[k] = 0;
    }
  }
}

FeasibilitySearch::FeasibilitySearch(ContinuousProblem problem, EnvelopeFamily family,
                                     SearchSettings settings)
    : problem_(std::move(problem)), family_(std::move(family)), settings_(std::move(settings)) {
  family_.validate();
  if (family_.discrete()) throw std::invalid_argument("continuous problem needs a continuous family");
}

FeasibilitySearch::FeasibilitySearch(DiscreteProblem problem, EnvelopeFamily family,
                                     SearchSettings settings)
    : problem_(std::move(problem)), family_(std::move(family)), settings_(std::move(settings)) {
  family_.validate();
  if (!family_.discrete()) throw std::invalid_argument("discrete problem needs a discrete family");
}

LatticePoint FeasibilitySearch::evaluate(std::span<const double> params) const {
  LatticePoint point;
  point.params.assign(params.begin(), params.end());
  try {
    CertificateReport report;
    if (const auto* cp = std::get_if<ContinuousProblem>(&problem_)) {
      const Envelope env = family_.continuous_envelope(params);
      report = verify_certificate(*cp, env, settings_.g0, settings_.verify);
      point.headroom = 1.0 - env.mu(cp->t0) * settings_.g0;
    } else {
      const auto& dp = std::get<DiscreteProblem>(problem_);
      const DiscreteEnvelope env = family_.discrete_envelope(params);
      report = verify_discrete_certificate(dp, env, settings_.g0);
      point.headroom = 1.0 - env.mu(0) * settings_.g0;
    }
    point.min_residual = report.min_residual;
    point.feasible = is_certified(report.verdict);
    if (!point.feasible) point.note = to_string(report.failure);
    if (point.feasible && settings_.closed_form && family_.kind == FamilyKind::PowerLaw &&
        settings_.closed_form->b == 1.0) {
      if (!powerlaw_closed_form_check(*settings_.closed_form, params[0], params[1])) {
        point.feasible = false;
        point.note = "closed-form";
      }
    }
  } catch (const std::exception& e) {
    point.feasible = false;
    point.note = e.what();
  }
  return point;
}

namespace {

// True if a is preferred over b.
bool better(const LatticePoint& a, const LatticePoint& b, Objective objective,
            std::size_t decay_index) {
  const double ka = objective == Objective::MaxDecay ? a.params[decay_index] : a.min_residual;
  const double kb = objective == Objective::MaxDecay ? b.params[decay_index] : b.min_residual;
  if (ka != kb) return ka > kb;
  if (a.headroom != b.headroom) return a.headroom > b.headroom;
  return std::lexicographical_compare(a.params.begin(), a.params.end(), b.params.begin(),
                                      b.params.end());
}

}  // namespace

FeasibleRegion FeasibilitySearch::search() const {
  FeasibleRegion region;
  std::size_t total = 1;
  for (const auto& r : family_.ranges) {
    region.names.push_back(r.name);
    region.axes.push_back(r.values());
    total *= r.points;
  }
  region.lattice.resize(total);
  parallel_for(total, [&](std::size_t flat) {
    std::vector<double> params(region.axes.size());
    std::size_t rest = flat;
    for (std::size_t k = region.axes.size(); k-- > 0;) {
      params[k] = region.axes[k][rest % region.axes[k].size()];
      rest /= region.axes[k].size();
    }
    region.lattice[flat] = evaluate(params);
  });
  for (std::size_t i = 0; i < total; ++i) {
    if (!region.lattice[i].feasible) continue;
    if (!region.best ||
        better(region.lattice[i], region.lattice[*region.best], settings_.objective,
               family_.decay_index())) {
      region.best = i;
    }
  }
  return region;
}

double FeasibilitySearch::refine_boundary(const FeasibleRegion& region, std::string_view param,
                                          double tol,
                                          std::optional<std::vector<double>> anchor) const {
  if (region.empty()) throw std::invalid_argument("feasible region is empty");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  const auto it = std::find(region.names.begin(), region.names.end(), param);
  if (it == region.names.end()) {
    throw std::invalid_argument("unknown parameter '" + std::string(param) + "'");
  }
  const auto axis_index = static_cast<std::size_t>(it - region.names.begin());
  std::vector<double> base = anchor ? *anchor : region.best_point().params;
  if (base.size() != region.names.size()) throw std::invalid_argument("anchor dimension mismatch");

  auto feasible_at = [&](double v) {
    std::vector<double> params = base;
    params[axis_index] = v;
    return evaluate(params).feasible;
  };

  const auto& axis = region.axes[axis_index];
  std::vector<char> flags(axis.size());
  for (std::size_t i = 0; i < axis.size(); ++i) flags[i] = feasible_at(axis[i]) ? 1 : 0;

  std::optional<std::size_t> pair;
  double best_distance = 0.0;
  for (std::size_t i = 0; i + 1 < axis.size(); ++i) {
    if (flags[i] == flags[i + 1]) continue;
    const double distance = std::fabs(0.5 * (axis[i] + axis[i + 1]) - base[axis_index]);
    if (!pair || distance < best_distance) {
      pair = i;
      best_distance = distance;
    }
  }
  if (!pair) {
    throw NoSignChangeError("no feasibility change along '" + std::string(param) + "'");
  }
  double good = flags[*pair] ? axis[*pair] : axis[*pair + 1];
  double bad = flags[*pair] ? axis[*pair + 1] : axis[*pair];
  while (std::fabs(bad - good) > tol) {
    const double mid = 0.5 * (good + bad);
    if (feasible_at(mid)) {
      good = mid;
    } else {
      bad = mid;
    }
  }
  return 0.5 * (good + bad);
}

std::string region_csv(const FeasibleRegion& region) {
  std::string out;
  for (const auto& n : region.names) out += n + ',';
  out += "min_residual,headroom,feasible\n";
  for (const auto& p : region.lattice) {
    for (double v : p.params) out += format_double(v) + ',';
    out += format_double(p.min_residual) + ',' + format_double(p.headroom) + ',' +
           (p.feasible ? "1" : "0") + '\n';
  }
  return out;
}

}  // namespace envcert
