#include "blockade/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "blockade/analytics.hpp"
#include "blockade/dynamics.hpp"

namespace blockade {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> Range::grid() const {
  if (points < 1) throw std::invalid_argument("Range: points < 1");
  std::vector<double> g(points);
  if (points == 1) {
    g[0] = from;
    return g;
  }
  for (int i = 0; i < points; ++i)
    g[i] = from + (to - from) * static_cast<double>(i) / (points - 1);
  return g;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& i : issues) os << i.field << ": " << i.message << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// vocabulary

const std::vector<std::string>& known_observables() {
  static const std::vector<std::string> v = {
      "g2_aplus",          "g2_aminus",          "g2_b",
      "g2_a",              "g2_m",               "n_aplus",
      "n_aminus",          "n_b",                "n_a",
      "n_m",               "g2_aplus_analytic",  "g2_aminus_analytic",
      "g2_a_analytic",     "g2_m_analytic"};
  return v;
}

const std::vector<std::string>& known_modes() {
  static const std::vector<std::string> v = {"aplus", "aminus", "b", "a", "m"};
  return v;
}

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

bool is_analytic_observable(const std::string& name) {
  return name.size() > 9 && name.ends_with("_analytic");
}

// ---------------------------------------------------------------------------
// parsing

double require_double(const YAML::Node& n, const std::string& field,
                      const std::string& path) {
  if (!n[field])
    throw ScenarioParseError(path + "." + field + ": missing required field");
  try {
    return n[field].as<double>();
  } catch (const YAML::Exception&) {
    throw ScenarioParseError(path + "." + field + ": not a number");
  }
}

double optional_double(const YAML::Node& n, const std::string& field,
                       double fallback, const std::string& path) {
  if (!n[field]) return fallback;
  try {
    return n[field].as<double>();
  } catch (const YAML::Exception&) {
    throw ScenarioParseError(path + "." + field + ": not a number");
  }
}

Range parse_range(const YAML::Node& n, const std::string& path) {
  if (!n.IsMap())
    throw ScenarioParseError(path + ": expected a {from, to, points} map");
  Range r;
  r.from = require_double(n, "from", path);
  r.to = require_double(n, "to", path);
  if (!n["points"])
    throw ScenarioParseError(path + ".points: missing required field");
  try {
    r.points = n["points"].as<int>();
  } catch (const YAML::Exception&) {
    throw ScenarioParseError(path + ".points: not an integer");
  }
  return r;
}

DeltaSpec parse_delta(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar())
    throw ScenarioParseError(path + ": expected a number or token");
  const std::string s = n.as<std::string>();
  DeltaSpec d;
  if (s == "beta1") {
    d.kind = DeltaSpec::kBeta1;
    return d;
  }
  if (s == "ub_aplus") {
    d.kind = DeltaSpec::kUbAplus;
    return d;
  }
  if (s == "ub_aminus") {
    d.kind = DeltaSpec::kUbAminus;
    return d;
  }
  try {
    size_t used = 0;
    d.value = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("");
  } catch (const std::exception&) {
    throw ScenarioParseError(path + ": expected a number or one of "
                             "beta1/ub_aplus/ub_aminus, got '" + s + "'");
  }
  return d;
}

std::vector<std::string> parse_string_list(const YAML::Node& n,
                                           const std::string& path) {
  if (!n.IsSequence()) throw ScenarioParseError(path + ": expected a list");
  std::vector<std::string> out;
  for (const auto& e : n) out.push_back(e.as<std::string>());
  return out;
}

}  // namespace

Scenario parse_scenario(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ScenarioParseError(std::string("yaml: ") + e.what());
  }
  if (!root.IsMap()) throw ScenarioParseError("top level: expected a map");

  Scenario s;
  if (!root["name"]) throw ScenarioParseError("name: missing required field");
  s.name = root["name"].as<std::string>();

  const YAML::Node p = root["params"];
  if (!p || !p.IsMap())
    throw ScenarioParseError("params: missing or not a map");
  s.eta = require_double(p, "eta", "params");
  s.eta_a = require_double(p, "eta_a", "params");
  s.Omega_e = require_double(p, "Omega_e", "params");
  s.G_m = require_double(p, "G_m", "params");
  s.kappa = optional_double(p, "kappa", 1.0, "params");
  s.kappa_b = optional_double(p, "kappa_b", 0.0, "params");
  s.n_th = optional_double(p, "n_th", 0.0, "params");

  if (const YAML::Node sol = root["solver"]) {
    if (!sol.IsMap()) throw ScenarioParseError("solver: not a map");
    if (sol["truncation"]) s.solver.truncation = sol["truncation"].as<int>();
    s.solver.tol = optional_double(sol, "tol", s.solver.tol, "solver");
    s.solver.ode_rel_tol =
        optional_double(sol, "ode_rel_tol", s.solver.ode_rel_tol, "solver");
    s.solver.ode_abs_tol =
        optional_double(sol, "ode_abs_tol", s.solver.ode_abs_tol, "solver");
  }

  const YAML::Node jobs = root["jobs"];
  if (!jobs || !jobs.IsSequence())
    throw ScenarioParseError("jobs: missing or not a list");
  int ji = 0;
  for (const auto& jn : jobs) {
    const std::string path = "jobs[" + std::to_string(ji++) + "]";
    if (!jn.IsMap()) throw ScenarioParseError(path + ": expected a map");
    Job j;
    if (!jn["kind"]) throw ScenarioParseError(path + ".kind: missing");
    j.kind = jn["kind"].as<std::string>();
    if (!jn["output"]) throw ScenarioParseError(path + ".output: missing");
    j.output = jn["output"].as<std::string>();
    if (jn["delta_range"])
      j.delta_range = parse_range(jn["delta_range"], path + ".delta_range");
    if (jn["delta"]) j.delta = parse_delta(jn["delta"], path + ".delta");
    if (jn["tau"]) j.tau = parse_range(jn["tau"], path + ".tau");
    if (jn["time"]) j.time = parse_range(jn["time"], path + ".time");
    if (jn["eta_a_range"])
      j.eta_a_range = parse_range(jn["eta_a_range"], path + ".eta_a_range");
    if (jn["nth"]) j.nth = parse_range(jn["nth"], path + ".nth");
    if (jn["observables"])
      j.observables = parse_string_list(jn["observables"], path + ".observables");
    if (jn["modes"]) j.modes = parse_string_list(jn["modes"], path + ".modes");
    if (jn["observable"]) j.observable = jn["observable"].as<std::string>();
    s.jobs.push_back(std::move(j));
  }
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioParseError("cannot open scenario file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_scenario(os.str());
}

// ---------------------------------------------------------------------------
// validation

namespace {

void check_range(const Range& r, int min_points, const std::string& field,
                 std::vector<ValidationIssue>& out) {
  if (!std::isfinite(r.from) || !std::isfinite(r.to))
    out.push_back({field, "range bounds must be finite"});
  else if (r.from > r.to)
    out.push_back({field, "range must be ordered (from <= to)"});
  else if (r.points > 1 && r.from == r.to)
    out.push_back({field, "degenerate range with points > 1"});
  if (r.points < min_points)
    out.push_back({field, "needs at least " + std::to_string(min_points) +
                              " points"});
}

void check_observable(const std::string& name, const std::string& field,
                      std::vector<ValidationIssue>& out) {
  if (name == "g2_b_analytic") {
    out.push_back({field,
                   "the phonon correlator is numeric-only (no analytic form; "
                   "phonon decay is dropped in the closed-form treatment); "
                   "use g2_b"});
    return;
  }
  if (!contains(known_observables(), name))
    out.push_back({field, "unknown observable '" + name + "'"});
}

}  // namespace

ValidationReport validate_scenario(const Scenario& s) {
  ValidationReport rep;
  auto& out = rep.issues;
  if (s.name.empty()) out.push_back({"name", "must be non-empty"});
  const std::pair<const char*, double> numeric[] = {
      {"params.eta", s.eta},         {"params.eta_a", s.eta_a},
      {"params.Omega_e", s.Omega_e}, {"params.G_m", s.G_m},
      {"params.kappa", s.kappa},     {"params.kappa_b", s.kappa_b},
      {"params.n_th", s.n_th}};
  for (const auto& [f, v] : numeric)
    if (!std::isfinite(v)) out.push_back({f, "must be finite"});
  if (s.kappa <= 0.0) out.push_back({"params.kappa", "must be > 0"});
  if (s.kappa_b < 0.0) out.push_back({"params.kappa_b", "must be >= 0"});
  if (s.n_th < 0.0) out.push_back({"params.n_th", "must be >= 0"});
  if (s.solver.truncation < 2)
    out.push_back({"solver.truncation", "must be >= 2"});
  if (s.solver.tol <= 0.0) out.push_back({"solver.tol", "must be > 0"});
  if (s.jobs.empty()) out.push_back({"jobs", "must contain at least one job"});

  int ji = 0;
  for (const Job& j : s.jobs) {
    const std::string path = "jobs[" + std::to_string(ji++) + "]";
    if (j.output.empty()) out.push_back({path + ".output", "must be non-empty"});
    if (j.kind == "delta_sweep") {
      check_range(j.delta_range, 1, path + ".delta_range", out);
      if (j.observables.empty())
        out.push_back({path + ".observables", "must be non-empty"});
      for (const auto& o : j.observables)
        check_observable(o, path + ".observables", out);
    } else if (j.kind == "y_histogram") {
      if (j.modes.empty()) out.push_back({path + ".modes", "must be non-empty"});
      for (const auto& m : j.modes)
        if (m != "aplus" && m != "aminus" && m != "b")
          out.push_back({path + ".modes",
                         "'" + m + "': Fock histograms exist only for the "
                         "subsystem modes aplus/aminus/b"});
    } else if (j.kind == "g2_tau") {
      check_range(j.tau, 2, path + ".tau", out);
      if (j.tau.from < 0.0)
        out.push_back({path + ".tau", "delays must be >= 0"});
      if (j.modes.empty()) out.push_back({path + ".modes", "must be non-empty"});
      for (const auto& m : j.modes)
        if (!contains(known_modes(), m))
          out.push_back({path + ".modes", "unknown mode '" + m + "'"});
    } else if (j.kind == "evolution") {
      check_range(j.time, 2, path + ".time", out);
      if (j.time.from < 0.0) out.push_back({path + ".time", "must start >= 0"});
    } else if (j.kind == "map") {
      check_range(j.eta_a_range, 1, path + ".eta_a_range", out);
      check_range(j.delta_range, 1, path + ".delta_range", out);
      if (j.observable.empty()) {
        out.push_back({path + ".observable", "must be set"});
      } else {
        check_observable(j.observable, path + ".observable", out);
        if (!is_analytic_observable(j.observable) &&
            j.observable != "g2_b_analytic")
          out.push_back({path + ".observable",
                         "map cells are analytic-only (grid too large for "
                         "master-equation solves); pick *_analytic"});
      }
    } else if (j.kind == "nth_sweep") {
      check_range(j.nth, 1, path + ".nth", out);
      if (j.nth.from < 0.0) out.push_back({path + ".nth", "must be >= 0"});
      if (j.observables.empty())
        out.push_back({path + ".observables", "must be non-empty"});
      for (const auto& o : j.observables)
        check_observable(o, path + ".observables", out);
    } else {
      out.push_back({path + ".kind", "unknown job kind '" + j.kind + "'"});
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// bundled scenarios

namespace {

const std::map<std::string, std::string>& bundled_map() {
  static const std::map<std::string, std::string> m = {
      {"fig2", R"(name: fig2
params: {eta: 5.0, eta_a: 4.242640687119285, Omega_e: 0.1, G_m: 200.0, kappa: 1.0, kappa_b: 0.0, n_th: 0.0}
solver: {truncation: 6}
jobs:
  - kind: evolution
    output: validity
    delta: 0.0
    time: {from: 0.0, to: 20.0, points: 801}
)"},
      {"fig3", R"(name: fig3
params: {eta: 15.0, eta_a: 28.284271247461902, Omega_e: 0.1, G_m: 800.0, kappa: 1.0, kappa_b: 0.05, n_th: 0.0}
solver: {truncation: 6}
jobs:
  - kind: delta_sweep
    output: g2
    delta_range: {from: -35.0, to: 35.0, points: 201}
    observables: [g2_aplus, g2_aminus, g2_b, n_aplus, n_aminus, n_b, g2_aplus_analytic, g2_aminus_analytic]
  - kind: y_histogram
    output: yA
    delta: beta1
    modes: [aplus, aminus]
  - kind: y_histogram
    output: yB
    delta: ub_aplus
    modes: [aplus, aminus]
)"},
      {"fig4", R"(name: fig4
params: {eta: 15.0, eta_a: 28.284271247461902, Omega_e: 0.1, G_m: 800.0, kappa: 1.0, kappa_b: 0.05, n_th: 0.0}
solver: {truncation: 6}
jobs:
  - kind: delta_sweep
    output: bare
    delta_range: {from: -35.0, to: 35.0, points: 201}
    observables: [g2_a, g2_m, g2_a_analytic]
)"},
      {"fig5", R"(name: fig5
params: {eta: 15.0, eta_a: 28.284271247461902, Omega_e: 0.1, G_m: 800.0, kappa: 1.0, kappa_b: 0.05, n_th: 0.0}
solver: {truncation: 6}
jobs:
  - kind: g2_tau
    output: tau
    delta: beta1
    tau: {from: 0.0, to: 10.0, points: 401}
    modes: [aplus, aminus, b, a, m]
)"},
      {"fig6", R"(name: fig6
params: {eta: 15.0, eta_a: 28.284271247461902, Omega_e: 0.1, G_m: 800.0, kappa: 1.0, kappa_b: 0.05, n_th: 0.0}
solver: {truncation: 6}
jobs:
  - kind: map
    output: map
    eta_a_range: {from: 0.5, to: 28.284271247461902, points: 101}
    delta_range: {from: -80.0, to: 80.0, points: 101}
    observable: g2_a_analytic
)"},
      {"fig_add", R"(name: fig_add
params: {eta: 0.2, eta_a: 14.142135623730951, Omega_e: 0.8, G_m: 800.0, kappa: 1.0, kappa_b: 1.0, n_th: 0.0}
solver: {truncation: 6}
jobs:
  - kind: delta_sweep
    output: weak
    delta_range: {from: -30.0, to: 30.0, points: 201}
    observables: [g2_a, g2_m, g2_b]
  - kind: nth_sweep
    output: thermal
    delta: beta1
    nth: {from: 0.0, to: 2.0, points: 21}
    observables: [g2_a, g2_m, g2_b]
)"},
      {"smoke", R"(name: smoke
params: {eta: 15.0, eta_a: 28.284271247461902, Omega_e: 0.1, G_m: 800.0, kappa: 1.0, kappa_b: 0.05, n_th: 0.0}
solver: {truncation: 3}
jobs:
  - kind: delta_sweep
    output: scan
    delta_range: {from: 31.0, to: 33.0, points: 3}
    observables: [g2_aplus, g2_aminus, g2_aplus_analytic, g2_aminus_analytic]
)"}};
  return m;
}

}  // namespace

std::vector<std::string> bundled_scenario_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : bundled_map()) out.push_back(k);
  return out;
}

bool is_bundled_scenario(const std::string& name) {
  return bundled_map().count(name) > 0;
}

std::string bundled_scenario_text(const std::string& name) {
  auto it = bundled_map().find(name);
  if (it == bundled_map().end())
    throw std::out_of_range("no bundled scenario named '" + name + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// running

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Precomputed operators and the Delta-affine rotated-frame Liouvillian
// L(Delta) = L0 + Delta * Lgrad. The rotated (fast) frame subtracts
// 2 G_m (n_b - n_-) from H_eff: dissipation channels are invariant and the
// unique steady state is unchanged, while the remaining Hamiltonian scale is
// Delta instead of G_m, which is what makes propagation and preconditioning
// affordable. g2(tau) readouts restore the exact rotation via `frame`.
struct Engine {
  CompositeSpace space;
  SparseOperator ap, am, b, sigma, bare_a, bare_m, frame;
  Liouvillian L0;
  SparseMatrixXc Lgrad;

  Liouvillian at(double Delta) const {
    return Liouvillian{space,
                       SparseMatrixXc(L0.superoperator + Delta * Lgrad)};
  }

  const SparseOperator& mode_op(const std::string& mode) const {
    if (mode == "aplus") return ap;
    if (mode == "aminus") return am;
    if (mode == "b") return b;
    if (mode == "a") return bare_a;
    if (mode == "m") return bare_m;
    throw std::invalid_argument("unknown mode '" + mode + "'");
  }
};

Engine make_engine(const Scenario& s, int truncation) {
  Engine e;
  e.space = make_space(truncation, Layout::Supermode);
  e.ap = annihilator(e.space, 1);
  e.am = annihilator(e.space, 2);
  e.b = annihilator(e.space, 3);
  e.sigma = annihilator(e.space, 0);
  BareModeOperators bare = bare_mode_operators(e.space);
  e.bare_a = bare.a;
  e.bare_m = bare.m;

  const SystemParams p0 = s.params_at(0.0);
  e.frame = fast_frame_generator(p0, e.space);
  SparseOperator h0 = build_effective_hamiltonian(p0, e.space) - e.frame;
  std::vector<DissipatorSpec> diss = build_dissipators(p0, e.space);
  e.L0 = build_liouvillian(h0, diss);
  SparseOperator ngrad = number_operator(e.space, 1) +
                         number_operator(e.space, 2) +
                         number_operator(e.space, 0);
  e.Lgrad = build_liouvillian(ngrad, {}).superoperator;
  return e;
}

SteadyStateOptions solver_options(const SolverConfig& cfg) {
  SteadyStateOptions o;
  o.tol = cfg.tol;
  return o;
}

// golden-section minimum of f on [a, b]
double golden_minimize(const std::function<double(double)>& f, double a,
                       double b, double tol) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 80 && (b - a) > tol; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return (a + b) / 2.0;
}

double resolve_delta(const Scenario& s, const DeltaSpec& spec,
                     const Engine& eng, const SolverConfig& cfg) {
  switch (spec.kind) {
    case DeltaSpec::kNumber:
      return spec.value;
    case DeltaSpec::kBeta1:
      return betas(s.eta, s.eta_a).beta1;
    case DeltaSpec::kUbAplus:
    case DeltaSpec::kUbAminus: {
      const bool plus = spec.kind == DeltaSpec::kUbAplus;
      const double center = plus ? interference_dip_aplus(s.eta, s.eta_a)
                                 : interference_dip_aminus(s.eta, s.eta_a);
      if (std::isnan(center))
        throw std::runtime_error(
            "resolve_delta: no interference dip exists at these couplings");
      SteadyStateSolver solver(solver_options(cfg));
      const SparseOperator& c = plus ? eng.ap : eng.am;
      auto f = [&](double Delta) {
        return g2_zero(solver.solve(eng.at(Delta)), c);
      };
      return golden_minimize(f, center - 2.0 * s.kappa, center + 2.0 * s.kappa,
                             1e-3 * s.kappa);
    }
  }
  throw std::logic_error("resolve_delta: unreachable");
}

// per-cell observable evaluation; rho may be null for analytic-only rows
double evaluate_observable(const std::string& name, const Scenario& s,
                           double Delta, const Engine& eng,
                           const DensityMatrix* rho) {
  if (is_analytic_observable(name)) {
    try {
      const AnalyticG2 g = analytic_g2(s.params_at(Delta));
      if (name == "g2_aplus_analytic") return g.aplus_exact;
      if (name == "g2_aminus_analytic") return g.aminus_exact;
      if (name == "g2_a_analytic" || name == "g2_m_analytic")
        return g.bare_approx;
    } catch (const std::exception&) {
      return kNaN;  // pole of the closed form or vanishing population
    }
    throw std::invalid_argument("unknown analytic observable '" + name + "'");
  }
  if (!rho) throw std::logic_error("numeric observable without steady state");
  try {
    if (name == "g2_aplus") return g2_zero(*rho, eng.ap);
    if (name == "g2_aminus") return g2_zero(*rho, eng.am);
    if (name == "g2_b") return g2_zero(*rho, eng.b);
    if (name == "g2_a") return g2_zero(*rho, eng.bare_a);
    if (name == "g2_m") return g2_zero(*rho, eng.bare_m);
    if (name == "n_aplus") return mean_occupation(*rho, eng.ap);
    if (name == "n_aminus") return mean_occupation(*rho, eng.am);
    if (name == "n_b") return mean_occupation(*rho, eng.b);
    if (name == "n_a") return mean_occupation(*rho, eng.bare_a);
    if (name == "n_m") return mean_occupation(*rho, eng.bare_m);
  } catch (const std::runtime_error&) {
    return kNaN;  // undefined correlator (occupation underflow), not a failure
  }
  throw std::invalid_argument("unknown observable '" + name + "'");
}

bool needs_steady_state(const std::vector<std::string>& observables) {
  for (const auto& o : observables)
    if (!is_analytic_observable(o)) return true;
  return false;
}

struct CellResult {
  std::vector<double> values;
  bool failed = false;
};

// contiguous block partition so cached ILUT preconditioners stay useful
void run_cells(int n, int threads,
               const std::function<void(int first, int last)>& block) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    block(0, n);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    const int first = static_cast<int>(static_cast<long>(n) * t / threads);
    const int last = static_cast<int>(static_cast<long>(n) * (t + 1) / threads);
    pool.emplace_back(block, first, last);
  }
  for (auto& th : pool) th.join();
}

struct Emitter {
  std::filesystem::path outdir;
  std::string scenario_name;
  RunResult* result;
  bool quiet;

  void progress(const std::string& msg) const {
    if (!quiet) std::fprintf(stderr, "[%s] %s\n", scenario_name.c_str(),
                             msg.c_str());
  }

  std::string write(const std::string& suffix, const std::string& content) {
    const std::filesystem::path p = outdir / (scenario_name + "_" + suffix);
    std::ofstream out(p, std::ios::binary);
    out << content;
    out.close();
    if (!out) {
      result->io_failure = true;
      return {};
    }
    result->files_written.push_back(p.string());
    return p.filename().string();
  }
};

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string make_csv(const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  for (size_t i = 0; i < header.size(); ++i)
    os << (i ? "," : "") << csv_escape(header[i]);
  os << "\n";
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_escape(r[i]);
    os << "\n";
  }
  return os.str();
}

std::string plot_preamble(const std::string& csv_name) {
  return "#!/usr/bin/env python3\nimport os\nimport matplotlib\n"
         "matplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n"
         "import pandas as pd\n\n"
         "here = os.path.dirname(os.path.abspath(__file__))\n"
         "df = pd.read_csv(os.path.join(here, \"" + csv_name + "\"))\n";
}

// ---- job runners ----------------------------------------------------------

void run_delta_sweep(const Scenario& s, const Job& job, const Engine& eng,
                     const SolverConfig& cfg, int threads, Emitter& em) {
  const std::vector<double> grid = job.delta_range.grid();
  const int n = static_cast<int>(grid.size());
  const bool numeric = needs_steady_state(job.observables);
  std::vector<CellResult> cells(n);
  std::atomic<int> done{0};

  run_cells(n, numeric ? threads : 1, [&](int first, int last) {
    SteadyStateSolver solver(solver_options(cfg));
    for (int i = first; i < last; ++i) {
      CellResult& cell = cells[i];
      DensityMatrix rho;
      const DensityMatrix* rho_p = nullptr;
      if (numeric) {
        try {
          rho = solver.solve(eng.at(grid[i]));
          rho_p = &rho;
        } catch (const std::exception&) {
          cell.failed = true;
        }
      }
      for (const auto& o : job.observables) {
        if (cell.failed && !is_analytic_observable(o)) {
          cell.values.push_back(kNaN);
          continue;
        }
        cell.values.push_back(evaluate_observable(o, s, grid[i], eng, rho_p));
      }
      const int d = ++done;
      if (d % std::max(1, n / 10) == 0)
        em.progress(job.output + ": " + std::to_string(d) + "/" +
                    std::to_string(n) + " cells");
    }
  });

  std::vector<std::string> header = {"delta"};
  header.insert(header.end(), job.observables.begin(), job.observables.end());
  header.push_back("status");
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> r = {fmt(grid[i])};
    for (double v : cells[i].values) r.push_back(fmt(v));
    r.push_back(cells[i].failed ? "failed" : "ok");
    rows.push_back(std::move(r));
    em.result->cells_total++;
    if (cells[i].failed) em.result->cells_failed++;
  }
  const std::string csv = em.write(job.output + ".csv",
                                   make_csv(header, rows));
  if (csv.empty()) return;

  std::ostringstream py;
  py << plot_preamble(csv)
     << "g2_cols = [c for c in df.columns if c.startswith(\"g2_\")]\n"
        "n_cols = [c for c in df.columns if c.startswith(\"n_\") and c != \"n_th\"]\n"
        "fig, axes = plt.subplots(1, 2 if n_cols else 1, figsize=(10, 4))\n"
        "axes = axes if n_cols else [axes]\n"
        "for c in g2_cols:\n"
        "    style = \"o\" if c.endswith(\"_analytic\") else \"-\"\n"
        "    axes[0].semilogy(df[\"delta\"], df[c], style, label=c, markersize=3)\n"
        "axes[0].axhline(1.0, color=\"gray\", lw=0.5)\n"
        "axes[0].set_xlabel(r\"$\\Delta/\\kappa$\")\n"
        "axes[0].set_ylabel(r\"$g^{(2)}(0)$\")\n"
        "axes[0].legend(fontsize=7)\n"
        "if n_cols:\n"
        "    for c in n_cols:\n"
        "        axes[1].semilogy(df[\"delta\"], df[c], label=c)\n"
        "    axes[1].set_xlabel(r\"$\\Delta/\\kappa$\")\n"
        "    axes[1].set_ylabel(\"mean occupation\")\n"
        "    axes[1].legend(fontsize=7)\n"
        "fig.tight_layout()\n"
        "fig.savefig(os.path.join(here, \""
     << em.scenario_name << "_" << job.output << ".png\"), dpi=160)\n";
  em.write(job.output + ".py", py.str());
}

void run_nth_sweep(const Scenario& s, const Job& job, const Engine& eng,
                   const SolverConfig& cfg, Emitter& em) {
  const double Delta = resolve_delta(s, job.delta, eng, cfg);
  const std::vector<double> grid = job.nth.grid();
  std::vector<std::string> header = {"n_th"};
  header.insert(header.end(), job.observables.begin(), job.observables.end());
  header.push_back("status");
  std::vector<std::vector<std::string>> rows;

  for (size_t i = 0; i < grid.size(); ++i) {
    Scenario sv = s;
    sv.n_th = grid[i];
    Engine cell_eng = make_engine(sv, eng.space.dim(1));
    std::vector<std::string> r = {fmt(grid[i])};
    bool failed = false;
    DensityMatrix rho;
    const DensityMatrix* rho_p = nullptr;
    if (needs_steady_state(job.observables)) {
      try {
        rho = steady_state(cell_eng.at(Delta), solver_options(cfg));
        rho_p = &rho;
      } catch (const std::exception&) {
        failed = true;
      }
    }
    for (const auto& o : job.observables)
      r.push_back((failed && !is_analytic_observable(o))
                      ? "nan"
                      : fmt(evaluate_observable(o, sv, Delta, cell_eng, rho_p)));
    r.push_back(failed ? "failed" : "ok");
    rows.push_back(std::move(r));
    em.result->cells_total++;
    if (failed) em.result->cells_failed++;
    em.progress(job.output + ": n_th=" + fmt(grid[i]));
  }
  const std::string csv = em.write(job.output + ".csv", make_csv(header, rows));
  if (csv.empty()) return;

  std::ostringstream py;
  py << plot_preamble(csv)
     << "for c in df.columns:\n"
        "    if c.startswith(\"g2_\"):\n"
        "        plt.plot(df[\"n_th\"], df[c], \"-o\", label=c, markersize=3)\n"
        "plt.axhline(1.0, color=\"gray\", lw=0.5)\n"
        "plt.xlabel(r\"$n_{th}$\")\n"
        "plt.ylabel(r\"$g^{(2)}(0)$\")\n"
        "plt.legend()\nplt.tight_layout()\n"
        "plt.savefig(os.path.join(here, \""
     << em.scenario_name << "_" << job.output << ".png\"), dpi=160)\n";
  em.write(job.output + ".py", py.str());
}

void run_y_histogram(const Scenario& s, const Job& job, const Engine& eng,
                     const SolverConfig& cfg, Emitter& em) {
  const double Delta = resolve_delta(s, job.delta, eng, cfg);
  DensityMatrix rho = steady_state(eng.at(Delta), solver_options(cfg));
  std::vector<std::vector<std::string>> rows;
  for (const auto& mode : job.modes) {
    const int subsystem = mode == "aplus" ? 1 : mode == "aminus" ? 2 : 3;
    const YHistogram h = y_of_N(rho, subsystem);
    for (int N = 0; N < h.P.size(); ++N)
      rows.push_back({mode, std::to_string(N), fmt(h.P[N]), fmt(h.y[N]),
                      h.defined[N] ? "1" : "0"});
  }
  em.result->cells_total++;
  const std::string csv = em.write(
      job.output + ".csv",
      make_csv({"mode", "N", "P", "y", "defined"}, rows));
  if (csv.empty()) return;

  std::ostringstream py;
  py << plot_preamble(csv)
     << "modes = df[\"mode\"].unique()\n"
        "w = 0.8 / len(modes)\n"
        "for i, m in enumerate(modes):\n"
        "    sub = df[(df[\"mode\"] == m) & (df[\"defined\"] == 1)]\n"
        "    plt.bar(sub[\"N\"] + i * w, sub[\"y\"], width=w, label=m)\n"
        "plt.axhline(0.0, color=\"gray\", lw=0.5)\n"
        "plt.xlabel(\"N\")\nplt.ylabel(r\"$y(N)=\\log_{10} P(N)/P_p(N)$\")\n"
        "plt.legend()\nplt.tight_layout()\n"
        "plt.savefig(os.path.join(here, \""
     << em.scenario_name << "_" << job.output << ".png\"), dpi=160)\n";
  em.write(job.output + ".py", py.str());
}

void run_g2_tau(const Scenario& s, const Job& job, const Engine& eng,
                const SolverConfig& cfg, Emitter& em) {
  const double Delta = resolve_delta(s, job.delta, eng, cfg);
  const Liouvillian L = eng.at(Delta);
  DensityMatrix rho = steady_state(L, solver_options(cfg));
  const std::vector<double> grid = job.tau.grid();

  std::vector<std::string> header = {"tau"};
  std::vector<G2TauSeries> series;
  for (const auto& mode : job.modes) {
    em.progress(job.output + ": propagating mode " + mode);
    series.push_back(g2_tau(L, rho, eng.mode_op(mode), grid, &eng.frame,
                            cfg.ode_rel_tol, cfg.ode_abs_tol));
    header.push_back("g2_" + mode);
    em.result->cells_total++;
  }
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < grid.size(); ++i) {
    std::vector<std::string> r = {fmt(grid[i])};
    for (const auto& ser : series) r.push_back(fmt(ser.g2[i]));
    rows.push_back(std::move(r));
  }
  const std::string csv = em.write(job.output + ".csv", make_csv(header, rows));
  if (csv.empty()) return;

  std::ostringstream py;
  py << plot_preamble(csv)
     << "for c in df.columns[1:]:\n"
        "    plt.semilogy(df[\"tau\"], df[c], label=c, lw=0.9)\n"
        "plt.axhline(1.0, color=\"gray\", lw=0.5)\n"
        "plt.xlabel(r\"$\\tau\\kappa$\")\nplt.ylabel(r\"$g^{(2)}(\\tau)$\")\n"
        "plt.legend()\nplt.tight_layout()\n"
        "plt.savefig(os.path.join(here, \""
     << em.scenario_name << "_" << job.output << ".png\"), dpi=160)\n";
  em.write(job.output + ".py", py.str());
}

void run_evolution(const Scenario& s, const Job& job, const Engine& eng,
                   const SolverConfig& cfg, Emitter& em) {
  const double Delta = resolve_delta(s, job.delta, eng, cfg);
  const SystemParams p = s.params_at(Delta);
  const std::vector<double> grid = job.time.grid();
  const int trunc = eng.space.dim(1);

  // effective Hamiltonian run on the supermode layout
  const SparseOperator h_eff = build_effective_hamiltonian(p, eng.space);
  StateVector psi0_eff = StateVector::basis_state(eng.space, {0, 1, 0, 0});
  const std::array<long, 2> idx = {eng.space.index({0, 1, 0, 0}),
                                   eng.space.index({0, 2, 0, 0})};
  em.progress(job.output + ": effective-Hamiltonian evolution");
  SchrodingerSeries eff =
      evolve_schrodinger(h_eff, psi0_eff, grid, std::span<const long>(idx),
                         cfg.ode_rel_tol, cfg.ode_abs_tol);

  // full Hamiltonian on the bare layout, tracking the supermode labels
  const CompositeSpace bare = make_space(trunc, Layout::Bare);
  const SparseOperator h_full = build_full_hamiltonian(p, bare);
  StateVector psi0_full = supermode_state_in_bare(bare, 0, 1, 0, 0);
  const std::array<StateVector, 2> proj = {
      supermode_state_in_bare(bare, 0, 1, 0, 0),
      supermode_state_in_bare(bare, 0, 2, 0, 0)};
  em.progress(job.output + ": full-Hamiltonian evolution");
  SchrodingerSeries full =
      evolve_schrodinger(h_full, psi0_full, grid,
                         std::span<const StateVector>(proj), cfg.ode_rel_tol,
                         cfg.ode_abs_tol);
  em.result->cells_total += 2;

  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < grid.size(); ++i)
    rows.push_back({fmt(grid[i]), fmt(full.prob(i, 0)), fmt(full.prob(i, 1)),
                    fmt(eff.prob(i, 0)), fmt(eff.prob(i, 1))});
  const std::string csv = em.write(
      job.output + ".csv",
      make_csv({"t", "P_g100_full", "P_g200_full", "P_g100_eff", "P_g200_eff"},
               rows));
  if (csv.empty()) return;

  std::ostringstream py;
  py << plot_preamble(csv)
     << "fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)\n"
        "ax1.plot(df[\"t\"], df[\"P_g100_full\"], label=\"full H\")\n"
        "ax1.plot(df[\"t\"], df[\"P_g100_eff\"], \"--\", label=\"effective H\")\n"
        "ax1.set_ylabel(r\"$P_{g100}$\")\nax1.legend()\n"
        "ax2.plot(df[\"t\"], df[\"P_g200_full\"], label=\"full H\")\n"
        "ax2.plot(df[\"t\"], df[\"P_g200_eff\"], \"--\", label=\"effective H\")\n"
        "ax2.set_ylabel(r\"$P_{g200}$\")\nax2.set_xlabel(r\"$t\\kappa$\")\n"
        "ax2.legend()\nfig.tight_layout()\n"
        "fig.savefig(os.path.join(here, \""
     << em.scenario_name << "_" << job.output << ".png\"), dpi=160)\n";
  em.write(job.output + ".py", py.str());
}

void run_map(const Scenario& s, const Job& job, Emitter& em) {
  const std::vector<double> xs = job.eta_a_range.grid();
  const std::vector<double> ys = job.delta_range.grid();
  std::vector<std::vector<std::string>> rows;
  for (double x : xs) {
    Scenario sv = s;
    sv.eta_a = x;
    for (double d : ys) {
      double v = kNaN;
      try {
        const AnalyticG2 g = analytic_g2(sv.params_at(d));
        if (job.observable == "g2_aplus_analytic") v = g.aplus_exact;
        else if (job.observable == "g2_aminus_analytic") v = g.aminus_exact;
        else v = g.bare_approx;
      } catch (const std::exception&) {
      }
      rows.push_back({fmt(x), fmt(d), fmt(v)});
      em.result->cells_total++;
    }
  }
  const std::string csv = em.write(
      job.output + ".csv",
      make_csv({"eta_a", "delta", job.observable}, rows));
  if (csv.empty()) return;

  std::ostringstream py;
  py << plot_preamble(csv) << "import numpy as np\n"
     << "p = df.pivot(index=\"delta\", columns=\"eta_a\", values=\""
     << job.observable << "\")\n"
        "plt.pcolormesh(p.columns, p.index, np.log10(p.values),\n"
        "               shading=\"auto\", cmap=\"viridis\")\n"
        "plt.colorbar(label=r\"$\\log_{10} g^{(2)}(0)$\")\n"
        "plt.xlabel(r\"$\\eta_a/\\kappa$\")\nplt.ylabel(r\"$\\Delta/\\kappa$\")\n"
        "plt.tight_layout()\n"
        "plt.savefig(os.path.join(here, \""
     << em.scenario_name << "_" << job.output << ".png\"), dpi=160)\n";
  em.write(job.output + ".py", py.str());
}

std::string make_manifest(const Scenario& s, const SolverConfig& cfg,
                          const RunResult& result) {
  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "name" << YAML::Value << s.name;
  y << YAML::Key << "version" << YAML::Value << BLOCKADESIM_VERSION;
  y << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "eta" << YAML::Value << s.eta;
  y << YAML::Key << "eta_a" << YAML::Value << s.eta_a;
  y << YAML::Key << "Omega_e" << YAML::Value << s.Omega_e;
  y << YAML::Key << "G_m" << YAML::Value << s.G_m;
  y << YAML::Key << "kappa" << YAML::Value << s.kappa;
  y << YAML::Key << "kappa_b" << YAML::Value << s.kappa_b;
  y << YAML::Key << "n_th" << YAML::Value << s.n_th;
  y << YAML::EndMap;
  y << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "truncation" << YAML::Value << cfg.truncation;
  y << YAML::Key << "tol" << YAML::Value << cfg.tol;
  y << YAML::Key << "ode_rel_tol" << YAML::Value << cfg.ode_rel_tol;
  y << YAML::Key << "ode_abs_tol" << YAML::Value << cfg.ode_abs_tol;
  y << YAML::EndMap;
  y << YAML::Key << "cells_total" << YAML::Value << result.cells_total;
  y << YAML::Key << "cells_failed" << YAML::Value << result.cells_failed;
  y << YAML::Key << "files" << YAML::Value << YAML::BeginSeq;
  for (const auto& f : result.files_written)
    y << std::filesystem::path(f).filename().string();
  y << YAML::EndSeq << YAML::EndMap;
  return std::string(y.c_str()) + "\n";
}

}  // namespace

RunResult run_scenario(const Scenario& s, const RunOptions& opts) {
  const ValidationReport rep = validate_scenario(s);
  if (!rep.ok())
    throw std::invalid_argument("invalid scenario:\n" + rep.to_string());

  SolverConfig cfg = s.solver;
  if (opts.truncation_override > 0) cfg.truncation = opts.truncation_override;
  if (opts.tol_override > 0.0) cfg.tol = opts.tol_override;

  RunResult result;
  std::error_code ec;
  std::filesystem::create_directories(opts.outdir, ec);
  if (ec) {
    result.io_failure = true;
    return result;
  }
  Emitter em{opts.outdir, s.name, &result, opts.quiet};

  Engine eng = make_engine(s, cfg.truncation);
  for (const Job& job : s.jobs) {
    em.progress("job " + job.output + " (" + job.kind + ")");
    try {
      if (job.kind == "delta_sweep")
        run_delta_sweep(s, job, eng, cfg, opts.threads, em);
      else if (job.kind == "nth_sweep")
        run_nth_sweep(s, job, eng, cfg, em);
      else if (job.kind == "y_histogram")
        run_y_histogram(s, job, eng, cfg, em);
      else if (job.kind == "g2_tau")
        run_g2_tau(s, job, eng, cfg, em);
      else if (job.kind == "evolution")
        run_evolution(s, job, eng, cfg, em);
      else if (job.kind == "map")
        run_map(s, job, em);
    } catch (const std::exception& e) {
      // solver failure in a point job: record, keep going with other jobs
      em.progress("job " + job.output + " failed: " + e.what());
      result.cells_total++;
      result.cells_failed++;
    }
  }
  em.write("manifest.yaml", make_manifest(s, cfg, result));
  return result;
}

}  // namespace blockade
