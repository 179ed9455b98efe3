#pragma once

#include "fex/config.hpp"
#include "fex/output.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fex {

struct SweepPoint {
  std::vector<double> coords;  // one value per axis
  double ubar0 = 0.0;
  double vbar0 = 0.0;
  double margin = 0.0;  // NaN when the threshold is undefined (r = 0)
  bool normalized = false;
  Termination termination = Termination::ReachedTEnd;
  bool converged = false;
  double fitted_alpha = 0.0;  // NaN when no fit was possible
  double fit_r_squared = 0.0;
  DeviationNorms final_deviation;
  bool b_feasible = false;
  std::string error;
};

/// Base configuration with the sweep coordinates applied. Mean axes rescale the
/// constant or cosine profile of u or v; other profile kinds are rejected.
SimConfig sweep_point_config(const SweepSpec& spec, const std::vector<double>& coords);

/// All points in row-major order (last axis fastest).
std::vector<std::vector<double>> sweep_coordinates(const SweepSpec& spec);

SweepPoint run_sweep_point(const SweepSpec& spec, const std::vector<double>& coords);

/// Runs every point with `workers` threads; results are in coordinate order and
/// independent of the worker count.
std::vector<SweepPoint> run_sweep(const SweepSpec& spec, int workers);

/// Worker count from FEX_SWEEP_WORKERS (default 1).
int sweep_workers_from_env();

std::string sweep_header(const SweepSpec& spec);
std::string sweep_row(const SweepPoint& point);

/// Writes <dir>/sweep.csv.
std::filesystem::path write_sweep_report(const SweepSpec& spec, const std::vector<SweepPoint>& points,
                                         const std::filesystem::path& dir);

}  // namespace fex
