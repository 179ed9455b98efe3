#include "fex/sweep.hpp"

#include "fex/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <thread>

namespace fex {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double profile_mean(const FieldProfile& p, const char* name) {
  if (const auto* c = std::get_if<ic::Constant>(&p)) return c->value;
  if (const auto* c = std::get_if<ic::ConstantPlusCosine>(&p)) return c->base;
  throw ValidationError(std::string("sweeping a mean requires init.") + name + " to be constant or constant_plus_cosine");
}

void set_profile_mean(FieldProfile& p, double mean, const char* name) {
  if (auto* c = std::get_if<ic::Constant>(&p)) {
    c->value = mean;
  } else if (auto* c = std::get_if<ic::ConstantPlusCosine>(&p)) {
    c->base = mean;
  } else {
    throw ValidationError(std::string("sweeping a mean requires init.") + name + " to be constant or constant_plus_cosine");
  }
}

}  // namespace

SimConfig sweep_point_config(const SweepSpec& spec, const std::vector<double>& coords) {
  SimConfig cfg = spec.base;
  const bool mean_axis_u = std::any_of(spec.axes.begin(), spec.axes.end(), [](const auto& a) { return a.axis == SweepAxis::Ubar0; });
  const bool mean_axis_v = std::any_of(spec.axes.begin(), spec.axes.end(), [](const auto& a) { return a.axis == SweepAxis::Vbar0; });
  double total = 0.0;
  if (spec.keep_total_mean && (mean_axis_u != mean_axis_v)) {
    total = profile_mean(cfg.init.u, "u") + profile_mean(cfg.init.v, "v");
  }
  for (std::size_t k = 0; k < spec.axes.size(); ++k) {
    const double x = coords.at(k);
    switch (spec.axes[k].axis) {
      case SweepAxis::Chi2: cfg.params.chi2 = x; break;
      case SweepAxis::R: cfg.params.r = x; break;
      case SweepAxis::Lambda: cfg.params.lambda = x; break;
      case SweepAxis::Ubar0: set_profile_mean(cfg.init.u, x, "u"); break;
      case SweepAxis::Vbar0: set_profile_mean(cfg.init.v, x, "v"); break;
    }
  }
  if (total > 0.0) {
    if (mean_axis_v) {
      const double rest = total - profile_mean(cfg.init.v, "v");
      if (!(rest > 0.0)) throw ValidationError("keep_total_mean leaves no mass for u");
      set_profile_mean(cfg.init.u, rest, "u");
    } else {
      const double rest = total - profile_mean(cfg.init.u, "u");
      if (!(rest > 0.0)) throw ValidationError("keep_total_mean leaves no mass for v");
      set_profile_mean(cfg.init.v, rest, "v");
    }
  }
  return cfg;
}

std::vector<std::vector<double>> sweep_coordinates(const SweepSpec& spec) {
  std::vector<std::vector<double>> out{{}};
  for (const auto& axis : spec.axes) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : out) {
      for (double v : axis.values) {
        auto c = prefix;
        c.push_back(v);
        next.push_back(std::move(c));
      }
    }
    out = std::move(next);
  }
  return out;
}

SweepPoint run_sweep_point(const SweepSpec& spec, const std::vector<double>& coords) {
  SweepPoint pt;
  pt.coords = coords;
  pt.margin = kNaN;
  pt.fitted_alpha = kNaN;
  pt.fit_r_squared = kNaN;
  try {
    const auto cfg = sweep_point_config(spec, coords);
    const auto grid = cfg.grid();
    const auto traj = run_simulation(cfg.init, cfg.params, grid, cfg.time, cfg.diagnostics);
    const auto summary = summarize(traj, cfg.params, grid, cfg.diagnostics);
    pt.ubar0 = summary.equilibrium.ubar0;
    pt.vbar0 = summary.equilibrium.vbar0;
    if (summary.margin) {
      pt.margin = summary.margin->margin;
      pt.normalized = summary.margin->normalized;
    }
    pt.termination = summary.termination;
    pt.converged = summary.converged();
    if (summary.fit) {
      pt.fitted_alpha = summary.fit->alpha;
      pt.fit_r_squared = summary.fit->r_squared;
    }
    pt.final_deviation = summary.final_deviation;
    pt.b_feasible = summary.energy.feasible;
    pt.error = summary.error;
  } catch (const std::exception& e) {
    pt.termination = Termination::Error;
    pt.error = e.what();
  }
  return pt;
}

std::vector<SweepPoint> run_sweep(const SweepSpec& spec, int workers) {
  const auto coords = sweep_coordinates(spec);
  std::vector<SweepPoint> points(coords.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t k = next++; k < coords.size(); k = next++) points[k] = run_sweep_point(spec, coords[k]);
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(coords.size())));
  {
    // Joined at the end of this scope, before `points` is handed back.
    std::vector<std::jthread> pool;
    for (int k = 1; k < n; ++k) pool.emplace_back(work);
    work();
  }
  return points;
}

int sweep_workers_from_env() {
  const char* raw = std::getenv("FEX_SWEEP_WORKERS");
  if (!raw || !*raw) return 1;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024) throw ValidationError("FEX_SWEEP_WORKERS must be an integer in [1, 1024]");
  return static_cast<int>(v);
}

std::string sweep_header(const SweepSpec& spec) {
  std::string h;
  for (const auto& axis : spec.axes) h += std::string("axis_") + to_string(axis.axis) + ',';
  h += "ubar0,vbar0,margin,normalized,termination,converged,fitted_alpha,fit_r_squared,"
       "final_linf_dev_u,final_linf_dev_v,final_linf_dev_w,b_feasible";
  return h;
}

std::string sweep_row(const SweepPoint& p) {
  const auto num = [](double v) { return std::isfinite(v) ? format_double(v) : std::string("nan"); };
  std::string row;
  for (double c : p.coords) row += format_double(c) + ',';
  row += num(p.ubar0) + ',' + num(p.vbar0) + ',' + num(p.margin) + ',' + (p.normalized ? "1" : "0") + ',' +
         to_string(p.termination) + ',' + (p.converged ? "1" : "0") + ',' + num(p.fitted_alpha) + ',' +
         num(p.fit_r_squared) + ',' + num(p.final_deviation.linf_u) + ',' + num(p.final_deviation.linf_v) + ',' +
         num(p.final_deviation.linf_w) + ',' + (p.b_feasible ? "1" : "0");
  return row;
}

std::filesystem::path write_sweep_report(const SweepSpec& spec, const std::vector<SweepPoint>& points,
                                         const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  const auto path = dir / "sweep.csv";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << sweep_header(spec) << '\n';
  for (const auto& p : points) out << sweep_row(p) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
  return path;
}

}  // namespace fex
