// blockadesim: scenario runner for the hybrid photon-magnon-phonon blockade
// toolkit. Verbs:
//   run <scenario>    execute a bundled scenario name or a YAML file
//   list              enumerate bundled scenarios
//   validate <file>   parse + validate a config without running
// Exit codes: 0 success, 1 validation failure, 2 solver failure in any cell,
// 3 I/O failure.

#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include "blockade/scenario.hpp"

namespace {

blockade::Scenario load(const std::string& arg) {
  if (blockade::is_bundled_scenario(arg))
    return blockade::parse_scenario(blockade::bundled_scenario_text(arg));
  return blockade::load_scenario_file(arg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"blockadesim: simultaneous photon/magnon/phonon blockade "
               "scenario runner"};
  app.require_subcommand(1);

  std::string scenario_arg, outdir = ".";
  int truncation = 0, threads = 1;
  double tol = 0.0;
  bool quiet = false;

  CLI::App* run = app.add_subcommand("run", "execute a scenario");
  run->add_option("scenario", scenario_arg,
                  "bundled scenario name or path to a YAML config")
      ->required();
  run->add_option("-o,--outdir", outdir, "output directory (default: .)");
  run->add_option("-t,--truncation", truncation,
                  "override Fock levels per bosonic mode");
  run->add_option("-j,--threads", threads, "work-pool width for sweep cells");
  run->add_option("--tol", tol, "override steady-state residual tolerance");
  run->add_flag("-q,--quiet", quiet, "suppress progress output");

  CLI::App* list = app.add_subcommand("list", "list bundled scenarios");
  (void)list;

  std::string validate_arg;
  CLI::App* validate =
      app.add_subcommand("validate", "validate a config without running");
  validate->add_option("file", validate_arg, "path to a YAML config or "
                       "bundled name")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("list")) {
      for (const auto& name : blockade::bundled_scenario_names())
        std::printf("%s\n", name.c_str());
      return 0;
    }
    if (app.got_subcommand("validate")) {
      blockade::Scenario s;
      try {
        s = load(validate_arg);
      } catch (const blockade::ScenarioParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 1;
      }
      const blockade::ValidationReport rep = blockade::validate_scenario(s);
      if (!rep.ok()) {
        std::fprintf(stderr, "%s", rep.to_string().c_str());
        return 1;
      }
      std::printf("%s: valid (%zu jobs)\n", s.name.c_str(), s.jobs.size());
      return 0;
    }

    // run
    blockade::Scenario s;
    try {
      s = load(scenario_arg);
    } catch (const blockade::ScenarioParseError& e) {
      std::fprintf(stderr, "parse error: %s\n", e.what());
      return 1;
    }
    const blockade::ValidationReport rep = blockade::validate_scenario(s);
    if (!rep.ok()) {
      std::fprintf(stderr, "%s", rep.to_string().c_str());
      return 1;
    }
    blockade::RunOptions opts;
    opts.outdir = outdir;
    opts.truncation_override = truncation;
    opts.threads = threads;
    opts.tol_override = tol;
    opts.quiet = quiet;
    const blockade::RunResult result = blockade::run_scenario(s, opts);
    if (result.io_failure) {
      std::fprintf(stderr, "I/O failure writing outputs to %s\n",
                   outdir.c_str());
      return 3;
    }
    for (const auto& f : result.files_written) std::printf("%s\n", f.c_str());
    if (result.cells_failed > 0) {
      std::fprintf(stderr, "%d/%d cells failed (marked in output)\n",
                   result.cells_failed, result.cells_total);
      return 2;
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
