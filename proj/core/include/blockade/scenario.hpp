#pragma once

#include <string>
#include <vector>

#include "blockade/model.hpp"

namespace blockade {

/// Declarative experiment description. Numeric values in units of kappa.
///
/// Config format (YAML):
///   name: fig3
///   params: {eta, eta_a, Omega_e, G_m, kappa, kappa_b, n_th}
///   solver: {truncation, tol, ode_rel_tol, ode_abs_tol}
///   jobs:
///     - kind: delta_sweep | y_histogram | evolution | g2_tau | map | nth_sweep
///       output: <basename>
///       ... kind-specific fields, see the Job comments below
///
/// Single-point Delta fields accept a number or one of the tokens
/// "beta1" (single-excitation resonance), "ub_aplus" / "ub_aminus"
/// (grid-located then golden-section-refined minima of the master-equation
/// g2 of the respective supermode).

struct Range {
  double from = 0.0;
  double to = 0.0;
  int points = 0;

  std::vector<double> grid() const;
};

struct DeltaSpec {
  enum Kind { kNumber, kBeta1, kUbAplus, kUbAminus };
  Kind kind = kNumber;
  double value = 0.0;
};

struct SolverConfig {
  int truncation = 6;        // Fock levels per bosonic mode
  double tol = 1e-12;        // steady-state relative residual target
  double ode_rel_tol = 1e-9;
  double ode_abs_tol = 1e-12;
};

struct Job {
  std::string kind;
  std::string output;  // file basename; files written as <name>_<output>.*

  Range delta_range;                     // delta_sweep, map (y axis)
  DeltaSpec delta;                       // y_histogram, evolution, g2_tau, nth_sweep
  Range tau;                             // g2_tau
  Range time;                            // evolution
  Range eta_a_range;                     // map (x axis)
  Range nth;                             // nth_sweep
  std::vector<std::string> observables;  // delta_sweep / nth_sweep columns
  std::vector<std::string> modes;        // y_histogram / g2_tau
  std::string observable;                // map (analytic observables only)
};

struct Scenario {
  std::string name;
  double eta = 0.0;
  double eta_a = 0.0;
  double Omega_e = 0.0;
  double G_m = 0.0;
  double kappa = 1.0;
  double kappa_b = 0.0;
  double n_th = 0.0;
  SolverConfig solver;
  std::vector<Job> jobs;

  SystemParams params_at(double Delta) const {
    return SystemParams::constrained(Delta, eta, eta_a, Omega_e, G_m, kappa_b,
                                     n_th, kappa);
  }
};

struct ValidationIssue {
  std::string field;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string to_string() const;
};

/// Parse errors carry the offending field path in what().
class ScenarioParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Scenario parse_scenario(const std::string& yaml_text);
Scenario load_scenario_file(const std::string& path);
ValidationReport validate_scenario(const Scenario& s);

/// Bundled figure scenarios: fig2..fig6, fig_add, plus "smoke".
std::vector<std::string> bundled_scenario_names();
bool is_bundled_scenario(const std::string& name);
std::string bundled_scenario_text(const std::string& name);

/// Implemented observable/mode vocabularies (for validation and CLI help).
const std::vector<std::string>& known_observables();
const std::vector<std::string>& known_modes();

struct RunOptions {
  std::string outdir = ".";
  int truncation_override = 0;   // 0: use the scenario's value
  double tol_override = 0.0;     // 0: use the scenario's value
  int threads = 1;               // work-pool width for sweep cells
  bool quiet = false;            // suppress progress lines on stderr
};

struct RunResult {
  std::vector<std::string> files_written;
  int cells_total = 0;
  int cells_failed = 0;  // solver failures, marked in the CSV status column
  bool io_failure = false;
};

/// Executes every job, writing one CSV + one plot script per job and a
/// manifest for the scenario. Solver failures mark the affected cell as
/// failed in the output instead of aborting. Deterministic: identical config
/// gives byte-identical CSV.
RunResult run_scenario(const Scenario& s, const RunOptions& opts);

}  // namespace blockade
