#include "envcert/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace envcert {

namespace {

std::string describe(std::size_t line, const std::string& field, const std::string& message) {
  std::string out;
  if (line > 0) out += "line " + std::to_string(line) + ": ";
  if (!field.empty()) out += field + ": ";
  return out + message;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::optional<double> to_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = s.find(',', start);
    parts.push_back(trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

// Typed, consumption-tracking access to one section.
class Section {
 public:
  Section(const IniSection* s, std::string name) : s_(s), name_(std::move(name)) {}

  bool present() const { return s_ != nullptr; }
  std::size_t line() const { return s_ ? s_->line : 0; }
  std::string field(std::string_view key) const { return "[" + name_ + "] " + std::string(key); }

  const IniEntry* get(std::string_view key) {
    if (!s_) return nullptr;
    for (const auto& e : s_->entries) {
      if (e.key == key) {
        used_.insert(e.key);
        return &e;
      }
    }
    return nullptr;
  }

  [[noreturn]] void fail(const IniEntry& e, const std::string& message) const {
    throw ConfigError(e.line, field(e.key), message);
  }

  std::optional<double> number(std::string_view key) {
    const IniEntry* e = get(key);
    if (!e) return std::nullopt;
    auto v = e->quoted ? std::nullopt : to_number(e->value);
    if (!v) fail(*e, "expected a number, got '" + e->value + "'");
    return v;
  }

  std::optional<double> positive(std::string_view key) {
    auto v = number(key);
    if (v && !(*v > 0.0)) fail(*get(key), "must be > 0");
    return v;
  }

  std::optional<std::size_t> count(std::string_view key, std::size_t min_value) {
    auto v = number(key);
    if (!v) return std::nullopt;
    const IniEntry& e = *get(key);
    if (*v != std::floor(*v) || *v < static_cast<double>(min_value) || *v > 1e12) {
      fail(e, "expected an integer >= " + std::to_string(min_value));
    }
    return static_cast<std::size_t>(*v);
  }

  std::optional<std::string> word(std::string_view key) {
    const IniEntry* e = get(key);
    if (!e) return std::nullopt;
    return e->value;
  }

  std::optional<bool> flag(std::string_view key) {
    const IniEntry* e = get(key);
    if (!e) return std::nullopt;
    const std::string& v = e->value;
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    fail(*e, "expected true or false, got '" + v + "'");
  }

  std::vector<double> numbers(const IniEntry& e) const {
    if (e.quoted) fail(e, "expected a comma-separated list of numbers");
    std::vector<double> out;
    for (auto part : split_commas(e.value)) {
      auto v = to_number(part);
      if (!v) fail(e, "'" + std::string(part) + "' is not a number");
      out.push_back(*v);
    }
    return out;
  }

  /// A quoted expression or a bare number.
  Expression expression(const IniEntry& e, const std::vector<std::string>& vars,
                        const std::map<std::string, double>& constants) const {
    if (!e.quoted) {
      auto v = to_number(e.value);
      if (!v) fail(e, "expressions must be double-quoted");
      return Expression::constant(*v, vars);
    }
    try {
      return parse_expr(e.value, vars, constants);
    } catch (const ParseError& err) {
      fail(e, std::string("cannot parse expression: ") + err.what());
    }
  }

  std::optional<Expression> expression(std::string_view key, const std::vector<std::string>& vars,
                                       const std::map<std::string, double>& constants) {
    const IniEntry* e = get(key);
    if (!e) return std::nullopt;
    return expression(*e, vars, constants);
  }

  /// Quoted expression in n, a single number, or a table.
  std::optional<Sequence> sequence(std::string_view key,
                                   const std::map<std::string, double>& constants) {
    const IniEntry* e = get(key);
    if (!e) return std::nullopt;
    if (e->quoted) return Sequence(expression(*e, {"n"}, constants));
    std::vector<double> values = numbers(*e);
    if (values.size() == 1) return Sequence::constant(values.front());
    return Sequence(std::move(values));
  }

  std::vector<const IniEntry*> entries() const {
    std::vector<const IniEntry*> out;
    if (s_) {
      for (const auto& e : s_->entries) out.push_back(&e);
    }
    return out;
  }

  void mark(const std::string& key) { used_.insert(key); }

  void finish() const {
    if (!s_) return;
    for (const auto& e : s_->entries) {
      if (!used_.count(e.key)) throw ConfigError(e.line, field(e.key), "unknown key");
    }
  }

 private:
  const IniSection* s_;
  std::string name_;
  std::set<std::string> used_;
};

// "A_2_3" -> (2, 3); "h_4" -> 4.
std::optional<std::vector<std::size_t>> indices(std::string_view key, std::string_view prefix,
                                                std::size_t count) {
  if (key.substr(0, prefix.size()) != prefix) return std::nullopt;
  key.remove_prefix(prefix.size());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < count; ++i) {
    if (key.empty() || key.front() != '_') return std::nullopt;
    key.remove_prefix(1);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), v);
    if (ec != std::errc() || ptr == key.data()) return std::nullopt;
    key.remove_prefix(static_cast<std::size_t>(ptr - key.data()));
    out.push_back(v);
  }
  if (!key.empty()) return std::nullopt;
  return out;
}

const std::set<std::string> kKnownSections{"problem", "params",   "envelope", "initial",
                                           "verify",  "simulate", "search",   "reduce",
                                           "example1", "example2"};

void reject_coefficients(Section& problem, std::initializer_list<const char*> keys,
                         const char* builder) {
  for (const char* k : keys) {
    if (const IniEntry* e = problem.get(k)) {
      problem.fail(*e, std::string("not allowed together with builder = ") + builder);
    }
  }
}

}  // namespace

ConfigError::ConfigError(std::size_t line, std::string field, const std::string& message)
    : std::runtime_error(describe(line, field, message)), line_(line), field_(std::move(field)) {}

const IniSection* IniDocument::find(std::string_view name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

IniDocument parse_ini(std::string_view text) {
  IniDocument doc;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;

    if (line.front() == '[') {
      const std::size_t close = line.find(']');
      if (close == std::string_view::npos) throw ConfigError(line_no, "", "unterminated section header");
      std::string_view after = trim(line.substr(close + 1));
      if (!after.empty() && after.front() != '#' && after.front() != ';') {
        throw ConfigError(line_no, "", "unexpected text after section header");
      }
      std::string name(trim(line.substr(1, close - 1)));
      if (!is_identifier(name)) throw ConfigError(line_no, "", "invalid section name '" + name + "'");
      if (doc.find(name)) throw ConfigError(line_no, "[" + name + "]", "duplicate section");
      doc.sections.push_back({name, line_no, {}});
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "", "expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    if (!is_identifier(key)) throw ConfigError(line_no, "", "invalid key '" + key + "'");
    if (doc.sections.empty()) throw ConfigError(line_no, key, "assignment before any [section]");
    IniSection& section = doc.sections.back();
    const std::string field = "[" + section.name + "] " + key;
    for (const auto& e : section.entries) {
      if (e.key == key) {
        throw ConfigError(line_no, field, "duplicate key (first set on line " + std::to_string(e.line) + ")");
      }
    }

    std::string_view value = trim(line.substr(eq + 1));
    IniEntry entry{key, {}, false, line_no};
    if (!value.empty() && value.front() == '"') {
      const std::size_t close = value.find('"', 1);
      if (close == std::string_view::npos) throw ConfigError(line_no, field, "unterminated string");
      std::string_view rest = trim(value.substr(close + 1));
      if (!rest.empty() && rest.front() != '#' && rest.front() != ';') {
        throw ConfigError(line_no, field, "unexpected text after closing quote");
      }
      entry.value = std::string(value.substr(1, close - 1));
      entry.quoted = true;
    } else {
      const std::size_t hash = value.find_first_of("#;");
      entry.value = std::string(trim(value.substr(0, hash)));
      if (entry.value.empty()) throw ConfigError(line_no, field, "missing value");
    }
    section.entries.push_back(std::move(entry));
  }
  return doc;
}

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Continuous: return "continuous";
    case ProblemKind::Discrete: return "discrete";
    case ProblemKind::Vector: return "vector";
  }
  return "?";
}

RunConfig parse_config(std::string_view text) {
  const IniDocument doc = parse_ini(text);
  for (const auto& s : doc.sections) {
    if (!kKnownSections.count(s.name)) throw ConfigError(s.line, "[" + s.name + "]", "unknown section");
  }
  RunConfig cfg;

  // Named constants, substituted into every expression.
  std::map<std::string, double> constants;
  Section params(doc.find("params"), "params");
  for (const IniEntry* e : params.entries()) {
    params.mark(e->key);
    if (e->key == "t" || e->key == "y" || e->key == "n" || indices(e->key, "u", 1)) {
      params.fail(*e, "name clashes with a variable");
    }
    auto v = e->quoted ? std::nullopt : to_number(e->value);
    if (!v) params.fail(*e, "expected a number");
    constants[e->key] = *v;
  }

  Section problem(doc.find("problem"), "problem");
  if (!problem.present()) throw ConfigError(0, "[problem]", "section is required");
  const IniEntry* kind = problem.get("kind");
  if (!kind) throw ConfigError(problem.line(), "[problem] kind", "required");
  if (kind->value == "continuous") {
    cfg.kind = ProblemKind::Continuous;
  } else if (kind->value == "discrete") {
    cfg.kind = ProblemKind::Discrete;
  } else if (kind->value == "vector") {
    cfg.kind = ProblemKind::Vector;
  } else {
    problem.fail(*kind, "expected continuous, discrete or vector, got '" + kind->value + "'");
  }

  if (const IniEntry* b = problem.get("builder")) {
    if (b->value == "example1") {
      if (cfg.kind != ProblemKind::Continuous) problem.fail(*b, "example1 needs kind = continuous");
      cfg.builder = Builder::Example1;
    } else if (b->value == "example2") {
      if (cfg.kind == ProblemKind::Discrete) problem.fail(*b, "example2 needs kind = continuous or vector");
      cfg.builder = Builder::Example2;
    } else {
      problem.fail(*b, "expected example1 or example2, got '" + b->value + "'");
    }
  }

  Section ex1(doc.find("example1"), "example1");
  Section ex2(doc.find("example2"), "example2");
  if (ex1.present() && cfg.builder != Builder::Example1) {
    throw ConfigError(ex1.line(), "[example1]", "section needs builder = example1");
  }
  if (ex2.present() && cfg.builder != Builder::Example2) {
    throw ConfigError(ex2.line(), "[example2]", "section needs builder = example2");
  }

  const std::vector<std::string> t_vars{"t"};
  const std::vector<std::string> ty_vars{"t", "y"};

  if (cfg.builder == Builder::Example1) {
    reject_coefficients(problem, {"gamma", "alpha", "beta", "t0"}, "example1");
    Example1Shape shape;
    shape.b = ex1.positive("b").value_or(shape.b);
    shape.c = ex1.positive("c").value_or(shape.c);
    shape.m = ex1.number("m").value_or(shape.m);
    shape.p = ex1.positive("p").value_or(shape.p);
    shape.q = ex1.number("q").value_or(shape.q);
    cfg.example1 = shape;
    cfg.continuous = build_example1(shape).problem;
  } else if (cfg.builder == Builder::Example2) {
    reject_coefficients(problem, {"gamma", "alpha", "beta", "t0", "alpha_bound"}, "example2");
    Example2Params prm;
    prm.c = ex2.positive("c").value_or(prm.c);
    prm.lambda = ex2.positive("lambda").value_or(prm.lambda);
    prm.b = ex2.positive("b").value_or(prm.b);
    if (auto th = ex2.number("theta")) {
      if (!(*th > 0.0 && *th <= 1.0)) ex2.fail(*ex2.get("theta"), "must lie in (0, 1]");
      prm.theta = *th;
    }
    prm.p = ex2.positive("p").value_or(prm.p);
    cfg.example2 = prm;
    const Example2 built = build_example2(prm);
    cfg.continuous = built.problem;
    cfg.envelope = built.envelope;
  } else if (cfg.kind == ProblemKind::Continuous) {
    cfg.continuous.gamma = problem.expression("gamma", t_vars, constants).value_or(Expression::constant(0.0, t_vars));
    cfg.continuous.beta = problem.expression("beta", t_vars, constants).value_or(Expression::constant(0.0, t_vars));
    cfg.continuous.alpha = problem.expression("alpha", ty_vars, constants).value_or(Expression::constant(0.0, ty_vars));
    cfg.continuous.t0 = problem.number("t0").value_or(0.0);
  }

  Section initial(doc.find("initial"), "initial");

  if (cfg.kind == ProblemKind::Discrete) {
    if (auto s = problem.sequence("gamma", constants)) cfg.discrete.gamma = *s;
    if (auto s = problem.sequence("beta", constants)) cfg.discrete.beta = *s;
    if (auto s = problem.sequence("h", constants)) cfg.discrete.h = *s;
    cfg.discrete.alpha = problem.expression("alpha", {"n", "y"}, constants)
                             .value_or(Expression::constant(0.0, {"n", "y"}));
    if (auto n = problem.count("n_max", 0)) cfg.discrete.n_max = *n;
  }

  if (cfg.kind == ProblemKind::Vector) {
    std::size_t dim = problem.count("dim", 1).value_or(cfg.builder == Builder::Example2 ? 1 : 0);
    if (dim == 0) throw ConfigError(problem.line(), "[problem] dim", "required for kind = vector");
    std::vector<double> u0(dim, 0.0);
    for (const IniEntry* e : initial.entries()) {
      if (auto idx = indices(e->key, "u0", 1)) {
        initial.mark(e->key);
        if ((*idx)[0] < 1 || (*idx)[0] > dim) initial.fail(*e, "index out of range 1.." + std::to_string(dim));
        auto v = e->quoted ? std::nullopt : to_number(e->value);
        if (!v) initial.fail(*e, "expected a number");
        u0[(*idx)[0] - 1] = *v;
      }
    }
    if (cfg.builder == Builder::Example2) {
      cfg.vector = example2_system(*cfg.example2, dim, u0);
    } else {
      VectorSystem sys;
      sys.dim = dim;
      sys.u0 = u0;
      sys.t0 = problem.number("t0").value_or(0.0);
      const auto vars = state_variables(dim);
      sys.a.assign(dim * dim, Expression::constant(0.0, t_vars));
      sys.h.assign(dim, Expression::constant(0.0, vars));
      sys.f.assign(dim, Expression::constant(0.0, t_vars));
      for (const IniEntry* e : problem.entries()) {
        if (auto ij = indices(e->key, "A", 2)) {
          problem.mark(e->key);
          auto [i, j] = std::pair{(*ij)[0], (*ij)[1]};
          if (i < 1 || j < 1 || i > dim || j > dim) problem.fail(*e, "index out of range 1.." + std::to_string(dim));
          sys.a[(i - 1) * dim + (j - 1)] = problem.expression(*e, t_vars, constants);
        } else if (auto hi = indices(e->key, "h", 1)) {
          problem.mark(e->key);
          if ((*hi)[0] < 1 || (*hi)[0] > dim) problem.fail(*e, "index out of range 1.." + std::to_string(dim));
          sys.h[(*hi)[0] - 1] = problem.expression(*e, vars, constants);
        } else if (auto fi = indices(e->key, "f", 1)) {
          problem.mark(e->key);
          if ((*fi)[0] < 1 || (*fi)[0] > dim) problem.fail(*e, "index out of range 1.." + std::to_string(dim));
          sys.f[(*fi)[0] - 1] = problem.expression(*e, t_vars, constants);
        }
      }
      const IniEntry* ab = problem.get("alpha_bound");
      if (!ab) throw ConfigError(problem.line(), "[problem] alpha_bound", "required for kind = vector");
      sys.alpha_bound = problem.expression(*ab, ty_vars, constants);
      try {
        sys.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(problem.line(), "[problem]", e.what());
      }
      cfg.vector = std::move(sys);
    }
  }

  // Envelope.
  Section envelope(doc.find("envelope"), "envelope");
  if (envelope.present()) {
    // With a family, keys name its parameters (constant_discrete has one called mu).
    const IniEntry* family = envelope.get("family");
    const IniEntry* mu = family ? nullptr : envelope.get("mu");
    if (!mu && !family) throw ConfigError(envelope.line(), "[envelope]", "needs mu or family");
    if (mu) {
      if (cfg.kind == ProblemKind::Discrete) {
        cfg.discrete_envelope = DiscreteEnvelope{*envelope.sequence("mu", constants)};
      } else {
        Expression m = envelope.expression(*mu, t_vars, constants);
        const std::string& desc = mu->value;
        if (auto md = envelope.expression("mu_dot", t_vars, constants)) {
          cfg.envelope = Envelope{m, *md, "mu(t) = " + desc};
        } else {
          try {
            cfg.envelope = Envelope::from_mu(m, "mu(t) = " + desc);
          } catch (const NotDifferentiableError& e) {
            envelope.fail(*mu, std::string(e.what()) + "; supply mu_dot");
          }
        }
      }
    } else {
      FamilyKind fk{};
      try {
        fk = parse_family_kind(family->value);
      } catch (const std::invalid_argument& e) {
        envelope.fail(*family, e.what());
      }
      EnvelopeFamily probe{fk, {}};
      if (probe.discrete() != (cfg.kind == ProblemKind::Discrete)) {
        envelope.fail(*family, std::string("family '") + to_string(fk) + "' does not match kind = " +
                                   to_string(cfg.kind));
      }
      cfg.envelope_family = fk;
      for (const auto& name : EnvelopeFamily::parameter_names(fk)) {
        auto v = envelope.number(name);
        if (!v) throw ConfigError(envelope.line(), envelope.field(name), "required for family " + family->value);
        cfg.envelope_params.push_back(*v);
      }
      EnvelopeFamily one{fk, {}};
      for (std::size_t i = 0; i < cfg.envelope_params.size(); ++i) {
        one.ranges.push_back({EnvelopeFamily::parameter_names(fk)[i], cfg.envelope_params[i],
                              cfg.envelope_params[i] + 1.0, 2});
      }
      try {
        one.validate();
      } catch (const std::invalid_argument& e) {
        envelope.fail(*family, e.what());
      }
      if (probe.discrete()) {
        cfg.discrete_envelope = one.discrete_envelope(cfg.envelope_params);
      } else {
        cfg.envelope = one.continuous_envelope(cfg.envelope_params);
      }
    }
    envelope.finish();
  }

  // Initial values.
  cfg.g0 = initial.number("g0");
  if (cfg.g0 && *cfg.g0 < 0.0) initial.fail(*initial.get("g0"), "must be >= 0");
  if (const IniEntry* u = initial.get("u0")) {
    if (cfg.builder != Builder::Example1) initial.fail(*u, "only used with builder = example1");
    if (cfg.g0) initial.fail(*u, "give either g0 or u0, not both");
    cfg.u0 = initial.number("u0");
    cfg.g0 = *cfg.u0 * *cfg.u0;
  }
  if (!cfg.g0 && cfg.vector) {
    double s = 0.0;
    for (double x : cfg.vector->u0) s += x * x;
    cfg.g0 = std::sqrt(s);
  }

  // Verification.
  Section verify(doc.find("verify"), "verify");
  if (auto h = verify.number("horizon")) cfg.verify.horizon = *h;
  if (auto g = verify.count("grid", 2)) cfg.verify.grid_points = *g;
  if (auto m = verify.number("margin")) {
    if (*m < 0.0) verify.fail(*verify.get("margin"), "must be >= 0");
    cfg.verify.margin = *m;
  }
  if (const IniEntry* mode = verify.get("mode")) {
    if (mode->value == "strict") {
      cfg.verify.mode = Mode::Strict;
    } else if (mode->value == "nonstrict") {
      cfg.verify.mode = Mode::Nonstrict;
    } else {
      verify.fail(*mode, "expected strict or nonstrict");
    }
  }
  cfg.verify.lipschitz_attested = verify.flag("lipschitz").value_or(false);
  if (cfg.verify.mode == Mode::Nonstrict && !cfg.verify.lipschitz_attested) {
    verify.fail(*verify.get("mode"), "nonstrict mode needs lipschitz = true");
  }
  if (cfg.verify.horizon != 0.0 && cfg.kind != ProblemKind::Discrete) {
    const double t0 = cfg.vector ? cfg.vector->t0 : cfg.continuous.t0;
    if (!(cfg.verify.horizon > t0)) verify.fail(*verify.get("horizon"), "must exceed t0");
  }

  // Simulation.
  Section simulate(doc.find("simulate"), "simulate");
  cfg.simulate.horizon = simulate.positive("horizon");
  cfg.simulate.rel_tol = simulate.positive("rel_tol").value_or(cfg.simulate.rel_tol);
  cfg.simulate.abs_tol = simulate.positive("abs_tol").value_or(cfg.simulate.abs_tol);
  if (const IniEntry* rhs = simulate.get("rhs")) {
    if (cfg.kind != ProblemKind::Continuous) simulate.fail(*rhs, "only for kind = continuous");
    cfg.simulate.rhs = simulate.expression(*rhs, ty_vars, constants);
  }
  cfg.simulate.y0 = simulate.number("y0").value_or(0.0);
  cfg.simulate.t0 = simulate.number("t0").value_or(0.0);
  cfg.simulate.steps = simulate.count("steps", 1);

  // Search.
  Section search(doc.find("search"), "search");
  if (search.present()) {
    SearchConfig sc;
    const IniEntry* family = search.get("family");
    if (!family) throw ConfigError(search.line(), "[search] family", "required");
    try {
      sc.family.kind = parse_family_kind(family->value);
    } catch (const std::invalid_argument& e) {
      search.fail(*family, e.what());
    }
    if (sc.family.discrete() != (cfg.kind == ProblemKind::Discrete)) {
      search.fail(*family, std::string("family '") + family->value + "' does not match kind = " +
                               to_string(cfg.kind));
    }
    for (const auto& name : EnvelopeFamily::parameter_names(sc.family.kind)) {
      const IniEntry* e = search.get(name);
      if (!e) throw ConfigError(search.line(), search.field(name), "range 'lo, hi, points' required");
      auto v = search.numbers(*e);
      if (v.size() != 3) search.fail(*e, "expected 'lo, hi, points'");
      if (v[2] != std::floor(v[2]) || v[2] < 0) search.fail(*e, "points must be a whole number");
      ParamRange r{name, v[0], v[1], static_cast<std::size_t>(v[2])};
      if (!(r.hi > r.lo)) search.fail(*e, "range must have lo < hi");
      if (r.points < 2) search.fail(*e, "range needs at least 2 points");
      sc.family.ranges.push_back(r);
      sc.anchor.push_back(search.number("anchor_" + name));
    }
    try {
      sc.family.validate();
    } catch (const std::invalid_argument& e) {
      search.fail(*family, e.what());
    }
    if (const IniEntry* obj = search.get("objective")) {
      try {
        sc.objective = parse_objective(obj->value);
      } catch (const std::invalid_argument& e) {
        search.fail(*obj, e.what());
      }
    }
    if (const IniEntry* refine = search.get("refine")) {
      const auto names = EnvelopeFamily::parameter_names(sc.family.kind);
      if (std::find(names.begin(), names.end(), refine->value) == names.end()) {
        search.fail(*refine, "not a parameter of family " + family->value);
      }
      sc.refine = refine->value;
    }
    sc.refine_tol = search.positive("refine_tol").value_or(sc.refine_tol);
    cfg.search = std::move(sc);
    search.finish();
  }

  // Reduction.
  Section reduce(doc.find("reduce"), "reduce");
  if (reduce.present() && cfg.kind != ProblemKind::Vector) {
    throw ConfigError(reduce.line(), "[reduce]", "only for kind = vector");
  }
  cfg.reduce.verify = reduce.flag("verify").value_or(false);
  cfg.reduce.horizon = reduce.positive("horizon");
  cfg.reduce.samples = reduce.count("samples", 2).value_or(cfg.reduce.samples);
  cfg.reduce.directions = reduce.count("directions", 1).value_or(cfg.reduce.directions);
  if (const IniEntry* radii = reduce.get("radii")) {
    cfg.reduce.radii = reduce.numbers(*radii);
    for (double r : cfg.reduce.radii) {
      if (!(r > 0.0)) reduce.fail(*radii, "radii must be > 0");
    }
  }
  if (auto seed = reduce.count("seed", 0)) cfg.seed = *seed;

  problem.finish();
  initial.finish();
  verify.finish();
  simulate.finish();
  reduce.finish();
  ex1.finish();
  ex2.finish();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, path.string(), "cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace envcert
