#include "fex/integrator.hpp"

#include "fex/discretization.hpp"
#include "fex/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fex {

namespace {

// Largest per-cell sum of outward face speeds chi * |grad|.
double outflow_rate(const Field& potential, double chi, const Grid& grid) {
  const Eigen::Index n = potential.size();
  double rate = 0.0;
  double from_left = 0.0;  // outward speed through face i - 1/2
  for (Eigen::Index i = 0; i < n; ++i) {
    const double speed = i + 1 < n ? chi * (potential[i + 1] - potential[i]) / grid.dx() : 0.0;
    rate = std::max(rate, from_left + std::max(speed, 0.0));
    from_left = std::max(-speed, 0.0);
  }
  return rate;
}

void check_density(const Field& f, const char* name, double t) {
  Eigen::Index cell = 0;
  if (f.minCoeff(&cell) < -kNegativeTolerance) {
    throw InvariantViolation(std::string("negative density ") + name + "[" + std::to_string(cell) +
                             "] = " + std::to_string(f[cell]) + " at t = " + std::to_string(t));
  }
}

bool close_to(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

}  // namespace

void StepControl::validate() const {
  if (!(safety > 0.0 && safety <= 1.0)) throw ValidationError("time.safety must lie in (0, 1]");
  if (!(dt_max > 0.0)) throw ValidationError("time.dt_max must be positive");
  if (!(t_end > 0.0)) throw ValidationError("time.t_end must be positive");
  if (!(output_every > 0.0)) throw ValidationError("time.output_every must be positive");
  for (double s : snapshot_times) {
    if (!(s >= 0.0)) throw ValidationError("time.snapshot_times must be nonnegative");
  }
}

double cfl_dt(const FieldState& state, const ModelParams& params, const Grid& grid, const StepControl& control) {
  const double rate = std::max({outflow_rate(state.w, params.chi1, grid), outflow_rate(state.u, params.chi2, grid), 1e-30});
  return std::min(control.dt_max, control.safety * grid.dx() / rate);
}

FieldState imex_step(const FieldState& state, const ModelParams& params, const Grid& grid, double dt) {
  if (!(dt > 0.0)) throw ValidationError("imex_step requires dt > 0");
  const Eigen::Index n = grid.n();
  const Field zeros = Field::Zero(n);

  const auto taxis_u = taxis_divergence(state.u, state.w, params.chi1, grid);
  const auto taxis_v = taxis_divergence(state.v, state.u, params.chi2, grid);
  const Field u_star = state.u + dt * taxis_u.tendency;
  const Field v_star = state.v + dt * taxis_v.tendency;

  FieldState next;
  next.t = state.t + dt;
  next.u = thomas_solve(assemble_diffusion_system(u_star, 1.0, dt, grid, zeros, zeros));
  next.v = thomas_solve(assemble_diffusion_system(v_star, 1.0, dt, grid, zeros, zeros));

  check_density(next.u, "u", next.t);
  check_density(next.v, "v", next.t);

  const Field absorption = (params.lambda * (next.u + next.v).array() + params.mu).matrix();
  next.w = thomas_solve(assemble_diffusion_system(state.w, params.d, dt, grid, absorption,
                                                  Field::Constant(n, params.r)));
  next.check_invariants(grid, kNegativeTolerance);
  return next;
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::ReachedTEnd: return "reached_t_end";
    case Termination::SteadyState: return "steady_state";
    case Termination::Error: return "error";
  }
  return "unknown";
}

Trajectory run_simulation(const InitialCondition& ic, const ModelParams& params, const Grid& grid,
                          const StepControl& control, const EnergyConfig& diag) {
  return run_simulation(init_state(ic, grid), params, grid, control, diag);
}

Trajectory run_simulation(FieldState state, const ModelParams& params, const Grid& grid, const StepControl& control,
                          const EnergyConfig& diag) {
  params.validate();
  control.validate();
  diag.validate();
  state.check_invariants(grid);

  Trajectory traj;
  traj.equilibrium = equilibrium_of(state, params, grid);
  traj.w0_max = state.w.maxCoeff();
  traj.mass_u0 = mass_and_mean(state.u, grid).mass;
  traj.mass_v0 = mass_and_mean(state.v, grid).mass;

  std::vector<double> snapshot_times = control.snapshot_times;
  std::sort(snapshot_times.begin(), snapshot_times.end());
  std::size_t next_snapshot = 0;

  SupBounds running{0.0, 0.0, 0.0};
  int quiet_records = 0;
  const auto emit = [&](const FieldState& s) {
    running.Lu = std::max(running.Lu, s.u.maxCoeff());
    running.Lv = std::max(running.Lv, s.v.maxCoeff());
    running.Lw = std::max(running.Lw, s.w.maxCoeff());
    const auto b = choose_b(params, running, diag.b_mode, diag.fixed_b);
    traj.records.push_back(make_record(s, params, grid, traj.equilibrium, traj.w0_max, b));
    const auto& rec = traj.records.back();
    const bool quiet = rec.linf_dev_u < diag.steady_tol && rec.linf_dev_v < diag.steady_tol &&
                       rec.linf_dev_w < diag.steady_tol;
    quiet_records = quiet ? quiet_records + 1 : 0;
    return diag.steady_tol > 0.0 && quiet_records >= 2;
  };
  const auto take_snapshots = [&](const FieldState& s) {
    while (next_snapshot < snapshot_times.size() &&
           (snapshot_times[next_snapshot] < s.t || close_to(s.t, snapshot_times[next_snapshot]))) {
      if (close_to(s.t, snapshot_times[next_snapshot])) traj.snapshots.push_back(s);
      ++next_snapshot;
    }
  };

  take_snapshots(state);
  bool steady = emit(state);
  long output_index = 1;
  traj.final_state = state;

  try {
    while (!steady && state.t < control.t_end && !close_to(state.t, control.t_end)) {
      const double next_output = output_index * control.output_every;
      double target = std::min(next_output, control.t_end);
      if (next_snapshot < snapshot_times.size()) target = std::min(target, snapshot_times[next_snapshot]);

      const double dt_cfl = cfl_dt(state, params, grid, control);
      const bool lands = dt_cfl >= target - state.t;
      state = imex_step(state, params, grid, lands ? target - state.t : dt_cfl);
      if (lands || close_to(state.t, target)) state.t = target;
      ++traj.steps;
      traj.final_state = state;

      take_snapshots(state);
      const bool at_output = close_to(state.t, next_output);
      const bool at_end = close_to(state.t, control.t_end) || state.t >= control.t_end;
      if (at_output) ++output_index;
      if (at_output || at_end) steady = emit(state);
    }
  } catch (const InvariantViolation& e) {
    traj.termination = Termination::Error;
    traj.error = e.what();
    return traj;
  }
  traj.termination = steady ? Termination::SteadyState : Termination::ReachedTEnd;
  return traj;
}

}  // namespace fex
