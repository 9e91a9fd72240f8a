#include "envcert/commands.hpp"

#include <cmath>
#include <exception>
#include <ostream>
#include <sstream>

#include "envcert/format.hpp"
#include "envcert/ode.hpp"

namespace envcert {

namespace {

constexpr std::size_t kListedViolations = 1000;

[[noreturn]] void usage(const std::string& field, const std::string& message) {
  throw ConfigError(0, field, message);
}

double require_g0(const RunConfig& cfg) {
  if (!cfg.g0) usage("[initial] g0", "required by this command");
  return *cfg.g0;
}

double require_horizon(const RunConfig& cfg) {
  if (!(cfg.verify.horizon > 0.0)) usage("[verify] horizon", "required for continuous problems");
  return cfg.verify.horizon;
}

ContinuousProblem scalar_problem(const RunConfig& cfg) {
  return cfg.vector ? reduce_to_scalar(*cfg.vector) : cfg.continuous;
}

int verdict_code(Verdict v) {
  switch (v) {
    case Verdict::CertifiedStrict:
    case Verdict::CertifiedNonstrict: return exit_code::ok;
    case Verdict::Infeasible: return exit_code::negative;
    case Verdict::Inconclusive: return exit_code::inconclusive;
  }
  return exit_code::error;
}

std::string describe_problem(const RunConfig& cfg, const ContinuousProblem& p) {
  std::ostringstream out;
  out << "kind: " << to_string(cfg.kind) << '\n';
  out << "gamma: " << p.gamma.description() << '\n';
  out << "alpha: " << p.alpha.description() << '\n';
  out << "beta: " << p.beta.description() << '\n';
  out << "t0: " << format_double(p.t0) << '\n';
  return out.str();
}

std::string describe_problem(const DiscreteProblem& p) {
  std::ostringstream out;
  out << "kind: discrete\n";
  out << "gamma: " << p.gamma.description() << '\n';
  out << "alpha: " << p.alpha.description() << '\n';
  out << "beta: " << p.beta.description() << '\n';
  out << "h: " << p.h.description() << '\n';
  return out.str();
}

std::string verify_header(const RunConfig& cfg) {
  std::ostringstream out;
  out << "mode: " << (cfg.verify.mode == Mode::Strict ? "strict" : "nonstrict") << '\n';
  out << "lipschitz_attested: " << (cfg.verify.lipschitz_attested ? "true" : "false") << '\n';
  return out.str();
}

// Continuous verification shared by verify and the chained reduce step.
CertificateReport verify_continuous(const RunConfig& cfg, const ContinuousProblem& p,
                                    std::string& header) {
  if (!cfg.envelope) usage("[envelope]", "verify needs an envelope");
  const double g0 = require_g0(cfg);
  VerifyOptions options = cfg.verify;
  options.horizon = require_horizon(cfg);
  header += describe_problem(cfg, p);
  header += "envelope: " + cfg.envelope->description + '\n';
  header += "g0: " + format_double(g0) + '\n';
  header += "horizon: " + format_double(options.horizon) + '\n';
  header += "grid_points: " + std::to_string(options.grid_points) + '\n';
  header += verify_header(cfg);
  if (cfg.builder == Builder::Example1 && cfg.envelope_family == FamilyKind::PowerLaw) {
    return certify_example1(*cfg.example1, cfg.envelope_params[0], cfg.envelope_params[1], g0,
                            options);
  }
  return verify_certificate(p, *cfg.envelope, g0, options);
}

// Scalar trajectory of the problem's extremal equation; the Example-1
// builder with u0 integrates the u equation and squares it.
Trajectory simulate_scalar(const RunConfig& cfg, double horizon) {
  const SimulateSettings& s = cfg.simulate;
  if (s.rhs) return integrate_scalar(*s.rhs, s.y0, s.t0, horizon, s.rel_tol, s.abs_tol);
  if (cfg.builder == Builder::Example1 && cfg.u0) {
    const Example1 ex = build_example1(*cfg.example1);
    const Trajectory u = integrate_scalar(ex.u_rhs, *cfg.u0, 0.0, horizon, s.rel_tol, s.abs_tol);
    Trajectory g;
    g.tolerance = u.tolerance;
    g.status = u.status;
    g.notes = u.notes;
    g.notes.push_back("g = u^2 from the u equation");
    for (const auto& x : u.samples) g.samples.push_back({x.t, x.g * x.g, 2.0 * x.g * x.g_dot});
    g.interpolant = [u](double t) {
      const double v = u.at(t);
      return v * v;
    };
    return g;
  }
  return integrate_extremal(cfg.continuous, require_g0(cfg), horizon, s.rel_tol, s.abs_tol);
}

std::string status_line(TrajectoryStatus status, double end) {
  return std::string("status: ") + to_string(status) + "\nend: " + format_double(end) + '\n';
}

CommandOutput simulate_continuous(const RunConfig& cfg) {
  CommandOutput out;
  double horizon = cfg.simulate.horizon.value_or(cfg.verify.horizon);
  if (!(horizon > 0.0)) usage("[simulate] horizon", "required (or [verify] horizon)");
  const double t0 = cfg.simulate.rhs ? cfg.simulate.t0 : (cfg.vector ? cfg.vector->t0 : cfg.continuous.t0);
  if (!(horizon > t0)) usage("[simulate] horizon", "must exceed t0");

  Trajectory traj;
  if (cfg.vector && !cfg.simulate.rhs) {
    // The file keeps the components; the norm drives the envelope check.
    const VectorTrajectory v =
        integrate_vector(*cfg.vector, horizon, cfg.simulate.rel_tol, cfg.simulate.abs_tol);
    traj = v.norm_trajectory();
    out.files.emplace_back("trajectory.csv", vector_trajectory_csv(v));
  } else {
    traj = simulate_scalar(cfg, horizon);
    out.files.emplace_back("trajectory.csv", trajectory_csv(traj));
  }

  std::ostringstream summary;
  summary << status_line(traj.status, traj.end_time());
  summary << "samples: " << traj.samples.size() << '\n';
  for (const auto& note : traj.notes) summary << "note: " << note << '\n';

  bool violated = false;
  if (cfg.envelope && !cfg.simulate.rhs) {
    const std::vector<double> extra = log_grid(traj.samples.front().t, traj.end_time(), cfg.verify.grid_points);
    const bool strict = cfg.verify.mode == Mode::Strict;
    const double tol = strict ? 0.0 : 10.0 * cfg.simulate.abs_tol;
    const EnvelopeCheck check = check_envelope(traj, *cfg.envelope, strict, tol, extra);
    violated = !check.clean();
    std::ostringstream rep;
    rep << "envelope: " << cfg.envelope->description << '\n';
    rep << "check: " << (strict ? "strict, g < 1/mu" : "nonstrict, g <= 1/mu + " + format_double(tol)) << '\n';
    rep << "checked: " << check.checked << '\n';
    rep << "violations: " << check.violations.size() << '\n';
    rep << "worst_slack: " << format_double(check.worst_slack) << '\n';
    rep << "worst_t: " << format_double(check.worst_t) << '\n';
    if (!check.violations.empty()) rep << "t,g,bound\n";
    for (std::size_t i = 0; i < check.violations.size() && i < kListedViolations; ++i) {
      const auto& v = check.violations[i];
      rep << format_double(v.t) << ',' << format_double(v.g) << ',' << format_double(v.bound) << '\n';
    }
    if (check.violations.size() > kListedViolations) {
      rep << "(" << check.violations.size() - kListedViolations << " more not listed)\n";
    }
    out.files.emplace_back("violations.txt", rep.str());
    summary << "violations: " << check.violations.size() << '\n';
  }

  if (traj.status == TrajectoryStatus::BlewUp) {
    out.exit_code = exit_code::blow_up;
  } else if (traj.status == TrajectoryStatus::DomainError) {
    out.exit_code = exit_code::error;
  } else if (violated) {
    out.exit_code = exit_code::negative;
  }
  out.summary = summary.str();
  return out;
}

CommandOutput simulate_discrete(const RunConfig& cfg) {
  CommandOutput out;
  const double g0 = require_g0(cfg);
  const std::size_t steps = cfg.simulate.steps.value_or(cfg.discrete.n_max);
  const RecurrenceResult run = run_recurrence(cfg.discrete, g0, steps);
  const DiscreteEnvelope* env = cfg.discrete_envelope ? &*cfg.discrete_envelope : nullptr;
  out.files.emplace_back("trajectory.csv", sequence_csv(cfg.discrete, env, run.g));

  std::ostringstream summary;
  summary << status_line(run.status, static_cast<double>(run.g.size() - 1));
  bool violated = false;
  if (env) {
    constexpr double tol = 1e-12;
    std::ostringstream rows;
    std::size_t count = 0, checked = 0;
    double worst = INFINITY;
    std::size_t worst_n = 0;
    const std::size_t limit = std::min(run.g.size(), effective_n_max(cfg.discrete, env) + 1);
    for (std::size_t n = 0; n < limit; ++n) {
      const double bound = 1.0 / env->mu(n);
      const double slack = bound - run.g[n];
      ++checked;
      if (slack < worst) {
        worst = slack;
        worst_n = n;
      }
      if (run.g[n] > bound + tol) {
        if (count < kListedViolations) rows << n << ',' << format_double(run.g[n]) << ',' << format_double(bound) << '\n';
        ++count;
      }
    }
    violated = count > 0;
    std::ostringstream rep;
    rep << "envelope: " << env->mu.description() << '\n';
    rep << "check: g_n <= 1/mu_n + " << format_double(tol) << '\n';
    rep << "checked: " << checked << '\n';
    rep << "violations: " << count << '\n';
    rep << "worst_slack: " << format_double(worst) << '\n';
    rep << "worst_n: " << worst_n << '\n';
    if (count > 0) rep << "n,g,bound\n" << rows.str();
    if (count > kListedViolations) rep << "(" << count - kListedViolations << " more not listed)\n";
    out.files.emplace_back("violations.txt", rep.str());
    summary << "violations: " << count << '\n';
  }
  if (run.status == TrajectoryStatus::BlewUp) {
    out.exit_code = exit_code::blow_up;
  } else if (run.status == TrajectoryStatus::DomainError) {
    out.exit_code = exit_code::error;
  } else if (violated) {
    out.exit_code = exit_code::negative;
  }
  out.summary = summary.str();
  return out;
}

std::string params_text(const std::vector<std::string>& names, const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < names.size(); ++i) {
    s += (i ? ", " : "") + names[i] + " = " + format_double(values[i]);
  }
  return s;
}

}  // namespace

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.horizon) {
    const double h = *o.horizon;
    if (cfg.kind == ProblemKind::Discrete) {
      if (!(h >= 1.0) || h != std::floor(h) || h > 1e12) usage("--horizon", "discrete problems need a whole number of steps >= 1");
      cfg.discrete.n_max = static_cast<std::size_t>(h);
      cfg.simulate.steps = static_cast<std::size_t>(h);
    } else {
      const double t0 = cfg.vector ? cfg.vector->t0 : cfg.continuous.t0;
      if (!(h > t0) || !std::isfinite(h)) usage("--horizon", "must exceed t0");
      cfg.verify.horizon = h;
      cfg.simulate.horizon = h;
      cfg.reduce.horizon = h;
    }
  }
  if (o.grid) {
    if (*o.grid < 2) usage("--grid", "needs at least 2 points");
    cfg.verify.grid_points = *o.grid;
  }
  if (o.margin) {
    if (!(*o.margin >= 0.0) || !std::isfinite(*o.margin)) usage("--margin", "must be >= 0");
    cfg.verify.margin = *o.margin;
  }
  if (o.seed) cfg.seed = *o.seed;
}

CommandOutput cmd_verify(const RunConfig& cfg) {
  CommandOutput out;
  std::string header = "command: verify\n";
  CertificateReport report;
  const char* time_header = "t";
  if (cfg.kind == ProblemKind::Discrete) {
    if (!cfg.discrete_envelope) usage("[envelope]", "verify needs an envelope");
    const double g0 = require_g0(cfg);
    header += describe_problem(cfg.discrete);
    header += "envelope: " + cfg.discrete_envelope->mu.description() + '\n';
    header += "g0: " + format_double(g0) + '\n';
    header += "n_max: " + std::to_string(effective_n_max(cfg.discrete, &*cfg.discrete_envelope)) + '\n';
    report = verify_discrete_certificate(cfg.discrete, *cfg.discrete_envelope, g0);
    time_header = "n";
  } else {
    report = verify_continuous(cfg, scalar_problem(cfg), header);
  }
  out.exit_code = verdict_code(report.verdict);
  out.files.emplace_back("report.txt", header + render_report(report));
  out.files.emplace_back("residuals.csv", residuals_csv(report, time_header));
  out.summary = std::string("verdict: ") + to_string(report.verdict) + "\nmin_residual: " +
                format_double(report.min_residual) + '\n';
  return out;
}

CommandOutput cmd_simulate(const RunConfig& cfg) {
  return cfg.kind == ProblemKind::Discrete ? simulate_discrete(cfg) : simulate_continuous(cfg);
}

CommandOutput cmd_search(const RunConfig& cfg) {
  if (!cfg.search) usage("[search]", "search needs a [search] section");
  const SearchConfig& sc = *cfg.search;
  SearchSettings settings;
  settings.g0 = require_g0(cfg);
  settings.objective = sc.objective;
  if (cfg.kind != ProblemKind::Discrete) {
    settings.verify = cfg.verify;
    settings.verify.horizon = require_horizon(cfg);
  }
  if (cfg.builder == Builder::Example1) settings.closed_form = cfg.example1;

  const FeasibilitySearch search =
      cfg.kind == ProblemKind::Discrete
          ? FeasibilitySearch(cfg.discrete, sc.family, settings)
          : FeasibilitySearch(scalar_problem(cfg), sc.family, settings);
  const FeasibleRegion region = search.search();

  CommandOutput out;
  std::ostringstream best;
  best << "command: search\n";
  best << "family: " << to_string(sc.family.kind) << '\n';
  for (const auto& r : sc.family.ranges) {
    best << "range: " << r.name << " in [" << format_double(r.lo) << ", " << format_double(r.hi)
         << "], " << r.points << " points\n";
  }
  best << "objective: " << (sc.objective == Objective::MaxDecay ? "max_decay" : "max_margin") << '\n';
  best << "g0: " << format_double(settings.g0) << '\n';
  if (cfg.kind != ProblemKind::Discrete) {
    best << "horizon: " << format_double(settings.verify.horizon) << '\n';
    best << "grid_points: " << settings.verify.grid_points << '\n';
  }
  best << "closed_form: " << (settings.closed_form ? "required" : "not used") << '\n';
  best << "lattice_points: " << region.lattice.size() << '\n';
  best << "feasible_points: " << region.feasible_points().size() << '\n';

  if (region.empty()) {
    best << "region: empty\n";
    out.exit_code = exit_code::negative;
  } else {
    const LatticePoint& p = region.best_point();
    best << "region: nonempty\n";
    best << "best: " << params_text(region.names, p.params) << '\n';
    best << "best_min_residual: " << format_double(p.min_residual) << '\n';
    best << "best_headroom: " << format_double(p.headroom) << '\n';
    if (sc.refine) {
      std::vector<double> anchor = p.params;
      for (std::size_t i = 0; i < anchor.size() && i < sc.anchor.size(); ++i) {
        if (sc.anchor[i]) anchor[i] = *sc.anchor[i];
      }
      best << "refine: " << *sc.refine << " at " << params_text(region.names, anchor) << '\n';
      best << "refine_tol: " << format_double(sc.refine_tol) << '\n';
      try {
        const double boundary = search.refine_boundary(region, *sc.refine, sc.refine_tol, anchor);
        best << "boundary: " << format_double(boundary) << '\n';
      } catch (const NoSignChangeError& e) {
        best << "boundary: none (" << e.what() << ")\n";
      }
    }
  }
  out.files.emplace_back("region.csv", region_csv(region));
  out.files.emplace_back("best.txt", best.str());
  out.summary = best.str();
  return out;
}

CommandOutput cmd_reduce(const RunConfig& cfg) {
  if (!cfg.vector) usage("[problem] kind", "reduce needs kind = vector");
  const VectorSystem& sys = *cfg.vector;
  const ContinuousProblem p = reduce_to_scalar(sys);
  const ReduceSettings& rs = cfg.reduce;
  double horizon = rs.horizon.value_or(cfg.verify.horizon);
  if (!(horizon > sys.t0)) usage("[reduce] horizon", "required (or [verify] horizon) and must exceed t0");
  const std::vector<double> times = log_grid(sys.t0, horizon, rs.samples);

  std::ostringstream text;
  text << "command: reduce\n";
  text << "dim: " << sys.dim << '\n';
  text << "t0: " << format_double(sys.t0) << '\n';
  if (sys.constant_a()) {
    text << "gamma: " << format_double(p.gamma(sys.t0)) << '\n';
  } else {
    text << "gamma: min eigenvalue of A(t), sampled below\n";
  }
  text << "alpha: " << p.alpha.description() << '\n';
  text << "beta: " << p.beta.description() << '\n';

  std::string table = "t,gamma,beta\n";
  for (double t : times) {
    table += format_double(t) + ',' + format_double(p.gamma(t)) + ',' + format_double(p.beta(t)) + '\n';
  }
  text << "samples:\n" << table;

  const auto counter = falsify_alpha_bound(sys, times, rs.radii, rs.directions, cfg.seed);
  text << "falsifier_seed: " << cfg.seed << '\n';
  text << "falsifier_directions: " << rs.directions << '\n';
  text << "falsifier_radii:";
  for (double r : rs.radii) text << ' ' << format_double(r);
  text << '\n';
  text << "falsifier_counterexamples: " << counter.size() << '\n';
  for (std::size_t i = 0; i < counter.size() && i < kListedViolations; ++i) {
    const auto& c = counter[i];
    text << "counterexample: t = " << format_double(c.t) << ", radius = " << format_double(c.radius)
         << ", |h| = " << format_double(c.h_norm) << ", alpha = " << format_double(c.alpha) << '\n';
  }

  CommandOutput out;
  std::ostringstream summary;
  summary << "falsifier_counterexamples: " << counter.size() << '\n';
  if (!counter.empty()) {
    out.exit_code = exit_code::negative;
  } else if (rs.verify) {
    std::string header = "command: reduce + verify\n";
    const CertificateReport report = verify_continuous(cfg, p, header);
    out.exit_code = verdict_code(report.verdict);
    text << "verify: " << to_string(report.verdict) << '\n';
    out.files.emplace_back("report.txt", header + render_report(report));
    out.files.emplace_back("residuals.csv", residuals_csv(report));
    summary << "verdict: " << to_string(report.verdict) << '\n';
  }
  out.files.insert(out.files.begin(), {"coefficients.csv", table});
  out.files.insert(out.files.begin(), {"reduced.txt", text.str()});
  out.summary = summary.str();
  return out;
}

CommandOutput run_command(std::string_view name, const RunConfig& cfg) {
  if (name == "verify") return cmd_verify(cfg);
  if (name == "simulate") return cmd_simulate(cfg);
  if (name == "search") return cmd_search(cfg);
  if (name == "reduce") return cmd_reduce(cfg);
  throw std::invalid_argument("unknown command '" + std::string(name) + "'");
}

void write_outputs(const std::filesystem::path& dir, const CommandOutput& output) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, contents] : output.files) write_file_atomic(dir / name, contents);
}

int run_cli(std::string_view command, const std::filesystem::path& config,
            const std::filesystem::path& out_dir, const Overrides& overrides, std::ostream& out,
            std::ostream& err) {
  try {
    RunConfig cfg = load_config(config);
    apply_overrides(cfg, overrides);
    const CommandOutput result = run_command(command, cfg);
    write_outputs(out_dir, result);
    out << result.summary;
    for (const auto& f : result.files) out << "wrote: " << (out_dir / f.first).string() << '\n';
    return result.exit_code;
  } catch (const ConfigError& e) {
    err << config.string() << ": " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return exit_code::error;
}

}  // namespace envcert
