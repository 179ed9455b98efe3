#pragma once

// Run configuration: a small TOML-style document.
//
//   [domain]       length = 1.0, n = 128
//   [params]       chi1, chi2, d, lambda, mu, r           (all required)
//   [init.u] [init.v] [init.w]
//                  kind = "constant"             value
//                         "constant_plus_cosine" base, amplitude, mode
//                         "gaussian_bump"        center, width, height, baseline
//                         "from_file"            path
//   [time]         t_end (required), safety = 0.9, dt_max = 0.01,
//                  output_every = 0.1, snapshot_times = []
//   [diagnostics]  b_mode = "auto" | "fixed", b, tail_fraction = 0.5, steady_tol = 1e-9
//   [output]       dir = "out", write_snapshots = false
//
// A sweep document adds
//   [sweep]        axis1 = "chi2", values1 = [...], axis2 = "vbar0", values2 = [...],
//                  keep_total_mean = false
// Unknown sections and keys are rejected.

#include "fex/core.hpp"
#include "fex/diagnostics.hpp"
#include "fex/integrator.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace fex {

struct OutputConfig {
  std::string dir = "out";
  bool write_snapshots = false;

  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct SimConfig {
  double length = 1.0;
  int n = 128;
  ModelParams params;
  InitialCondition init;
  StepControl time;
  EnergyConfig diagnostics;
  OutputConfig output;

  Grid grid() const { return Grid(n, length); }

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

enum class SweepAxis { Chi2, Ubar0, Vbar0, R, Lambda };

const char* to_string(SweepAxis axis);

struct SweepDimension {
  SweepAxis axis;
  std::vector<double> values;
};

struct SweepSpec {
  SimConfig base;
  std::vector<SweepDimension> axes;  // one or two
  // When one of the means is swept, adjust the other so ubar0 + vbar0 keeps its base value.
  bool keep_total_mean = false;
};

SimConfig parse_config(std::string_view text);
SweepSpec parse_sweep(std::string_view text);

std::string serialize_config(const SimConfig& config);

std::string read_text_file(const std::string& path);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

}  // namespace fex
