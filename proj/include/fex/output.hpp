#pragma once

#include "fex/config.hpp"
#include "fex/diagnostics.hpp"
#include "fex/integrator.hpp"

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace fex {

inline constexpr const char* kTimeseriesHeader =
    "t,mass_u,mass_v,min_u,max_u,min_v,max_v,min_w,max_w,linf_dev_u,linf_dev_v,linf_dev_w,l1_dev_u,l1_dev_v,"
    "kl_u,kl_v,grad_l2_u,grad_l2_v,grad_l2_w,F,D,b_used,b_feasible,w_bound_slack";

/// Relative mass drift above which a record counts as a conservation violation.
inline constexpr double kMassDriftTolerance = 1e-10;
/// w_bound_slack below -1e-8 (r/mu + max w0) counts as a nutrient-bound violation.
inline constexpr double kWBoundTolerance = 1e-8;

struct ViolationCounts {
  int mass_u = 0;
  int mass_v = 0;
  int positivity = 0;
  int w_bound = 0;
  int csiszar_kullback = 0;
  int energy_dissipation = 0;
};

struct RunSummary {
  Termination termination = Termination::ReachedTEnd;
  std::string error;
  double t_final = 0.0;
  long steps = 0;
  std::size_t records = 0;
  EquilibriumInfo equilibrium;
  DeviationNorms final_deviation;
  std::optional<DecayFit> fit;  // on linf_dev_u + linf_dev_v + linf_dev_w over the tail
  std::string fit_error;
  std::optional<StabilityMargin> margin;
  std::string margin_error;
  EnergyAudit energy;
  std::size_t feasible_records = 0;
  ViolationCounts violations;
  double max_mass_drift_u = 0.0;
  double max_mass_drift_v = 0.0;
  double min_w_bound_slack = 0.0;

  bool converged() const { return termination == Termination::SteadyState; }
};

RunSummary summarize(const Trajectory& traj, const ModelParams& params, const Grid& grid, const EnergyConfig& diag);

nlohmann::ordered_json summary_to_json(const RunSummary& summary);

std::string timeseries_row(const DiagnosticsRecord& rec);

/// Writes <dir>/timeseries.csv; throws IoError naming the path on failure.
std::filesystem::path write_timeseries(const Trajectory& traj, const std::filesystem::path& dir);

/// Writes <dir>/summary.json.
std::filesystem::path write_summary(const RunSummary& summary, const std::filesystem::path& dir);

/// Writes <dir>/snapshot_<t>.csv with columns x,u,v,w.
std::filesystem::path write_snapshot(const FieldState& state, const Grid& grid, const std::filesystem::path& dir);

}  // namespace fex
