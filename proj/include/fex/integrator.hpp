#pragma once

#include "fex/core.hpp"
#include "fex/diagnostics.hpp"

#include <string>
#include <vector>

namespace fex {

struct StepControl {
  double safety = 0.9;
  double dt_max = 1e-2;
  double t_end = 1.0;
  double output_every = 0.1;
  std::vector<double> snapshot_times;

  void validate() const;

  friend bool operator==(const StepControl&, const StepControl&) = default;
};

/// Largest admissible step: min(dt_max, safety * dx / rate) where rate is the
/// largest summed outward taxis face speed of any cell, for both species
/// (u driven by w, v driven by u), floored at 1e-30.
double cfl_dt(const FieldState& state, const ModelParams& params, const Grid& grid, const StepControl& control);

/// Densities may dip to -1e-12 from rounding before a step is rejected.
inline constexpr double kNegativeTolerance = 1e-12;

/// One Lie-split IMEX step:
///  1. explicit donor-cell taxis for u (by w) and v (by the pre-step u);
///  2. backward-Euler diffusion of u and v;
///  3. backward-Euler diffusion of w with absorption lambda (u + v) + mu taken
///     implicitly at the new densities and supply r on the right-hand side.
/// Throws InvariantViolation naming the field and cell if the result leaves the
/// admissible set.
FieldState imex_step(const FieldState& state, const ModelParams& params, const Grid& grid, double dt);

enum class Termination { ReachedTEnd, SteadyState, Error };

const char* to_string(Termination t);

struct Trajectory {
  std::vector<DiagnosticsRecord> records;
  std::vector<FieldState> snapshots;
  FieldState final_state;  // last good state, also on error
  Termination termination = Termination::ReachedTEnd;
  std::string error;
  EquilibriumInfo equilibrium;
  double w0_max = 0.0;
  double mass_u0 = 0.0;
  double mass_v0 = 0.0;
  long steps = 0;
};

/// Runs from the initial condition until t_end, or until every sup deviation
/// from (ubar0, vbar0, w*) stays below steady_tol on two consecutive records.
/// Records are written at t = 0, every output_every, and at the final time.
Trajectory run_simulation(const InitialCondition& ic, const ModelParams& params, const Grid& grid,
                          const StepControl& control, const EnergyConfig& diag);

/// Same, starting from an explicit state.
Trajectory run_simulation(FieldState initial, const ModelParams& params, const Grid& grid, const StepControl& control,
                          const EnergyConfig& diag);

}  // namespace fex
