#include "fex/cli.hpp"

#include "fex/config.hpp"
#include "fex/errors.hpp"
#include "fex/integrator.hpp"
#include "fex/ode_lemmas.hpp"
#include "fex/output.hpp"
#include "fex/sweep.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <ostream>

namespace fex {

namespace {

int simulate(const std::string& path, const std::string& out_override, std::ostream& out) {
  auto cfg = parse_config(read_text_file(path));
  if (!out_override.empty()) cfg.output.dir = out_override;
  const auto grid = cfg.grid();
  const auto traj = run_simulation(cfg.init, cfg.params, grid, cfg.time, cfg.diagnostics);
  const auto summary = summarize(traj, cfg.params, grid, cfg.diagnostics);

  write_timeseries(traj, cfg.output.dir);
  write_summary(summary, cfg.output.dir);
  if (cfg.output.write_snapshots) {
    for (const auto& snap : traj.snapshots) write_snapshot(snap, grid, cfg.output.dir);
    write_snapshot(traj.final_state, grid, cfg.output.dir);
  }

  out << "termination: " << to_string(summary.termination) << "\n"
      << "t_final: " << format_double(summary.t_final) << "\n"
      << "steps: " << summary.steps << "\n"
      << "final linf deviations (u, v, w): " << format_double(summary.final_deviation.linf_u) << ", "
      << format_double(summary.final_deviation.linf_v) << ", " << format_double(summary.final_deviation.linf_w) << "\n"
      << "outputs written to " << cfg.output.dir << "\n";
  if (traj.termination == Termination::Error) throw InvariantViolation(traj.error);
  return kExitOk;
}

int stability(const std::string& path, std::ostream& out) {
  const auto cfg = parse_config(read_text_file(path));
  const auto grid = cfg.grid();
  const auto state = init_state(cfg.init, grid);
  const auto eq = equilibrium_of(state, cfg.params, grid);
  const auto m = stability_margin(cfg.params, eq.ubar0, eq.vbar0, grid);
  out << "ubar0: " << format_double(eq.ubar0) << "\n"
      << "vbar0: " << format_double(eq.vbar0) << "\n"
      << "wstar: " << format_double(eq.wstar) << "\n"
      << "margin: " << format_double(m.margin) << "\n"
      << "normalized: " << (m.normalized ? "true" : "false") << "\n"
      << "prediction: " << (m.margin > 0.0 ? "homogenization" : "possible instability") << "\n";
  return kExitOk;
}

int sweep(const std::string& path, const std::string& out_override, std::ostream& out) {
  auto spec = parse_sweep(read_text_file(path));
  if (!out_override.empty()) spec.base.output.dir = out_override;
  const auto points = run_sweep(spec, sweep_workers_from_env());
  const auto report = write_sweep_report(spec, points, spec.base.output.dir);
  int converged = 0;
  for (const auto& p : points) converged += p.converged ? 1 : 0;
  out << "points: " << points.size() << "\n"
      << "converged: " << converged << "\n"
      << "report: " << report.string() << "\n";
  return kExitOk;
}

int verify_lemmas(int samples, int count, std::uint64_t seed, std::ostream& out) {
  // Closed-form extremal solution for kappa = 2, alpha = 1, a = b = 1, y0 = 0.
  odi::OdiInstance example;
  example.kappa = 2.0;
  example.alpha = 1.0;
  example.a = 1.0;
  example.b = 1.0;
  example.T = 10.0;
  const auto ex = odi::verify_odi_bound(example, samples);

  const auto suite = odi::run_lemma_suite(count, samples, seed);
  out << "pointwise instances: " << suite.pointwise_instances << "\n"
      << "averaged instances: " << suite.averaged_instances << " (uniform and front-loaded forcing)\n"
      << "violations: " << suite.violations << "\n"
      << "max scaled violation (y - bound) / (1 + bound): " << format_double(suite.max_violation) << "\n"
      << "largest scaled excess on: " << suite.worst << "\n"
      << "reference instance max scaled violation: " << format_double(ex.max_violation) << "\n";
  if (suite.violations > 0 || !ex.ok) throw InvariantViolation("comparison bound violated");
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Forager-exploiter chemotaxis simulator and verification harness", "fex"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  auto* sim = app.add_subcommand("simulate", "run one simulation and write timeseries.csv and summary.json");
  sim->add_option("config", config_path, "configuration file")->required();
  sim->add_option("--out", out_dir, "override output.dir");

  auto* stab = app.add_subcommand("stability", "print the formal homogenization margin");
  stab->add_option("config", config_path, "configuration file")->required();

  auto* sw = app.add_subcommand("sweep", "run a parameter sweep and write sweep.csv");
  sw->add_option("sweepspec", config_path, "sweep specification file")->required();
  sw->add_option("--out", out_dir, "override output.dir");

  int samples = 200;
  int count = 500;
  std::uint64_t seed = 20170521;
  auto* lem = app.add_subcommand("verify-lemmas", "check the ODE comparison bounds on random instances");
  lem->add_option("--samples", samples, "minimum checked nodes per trajectory")->check(CLI::Range(100, 100000000));
  lem->add_option("--count", count, "random instances per lemma")->check(CLI::Range(1, 1000000));
  lem->add_option("--seed", seed, "random seed");

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (sim->parsed()) return simulate(config_path, out_dir, out);
    if (stab->parsed()) return stability(config_path, out);
    if (sw->parsed()) return sweep(config_path, out_dir, out);
    if (lem->parsed()) return verify_lemmas(samples, count, seed, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const InvariantViolation& e) {
    err << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitValidation;
}

}  // namespace fex
