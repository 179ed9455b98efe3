#include "fex/output.hpp"

#include "fex/errors.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace fex {

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

RunSummary summarize(const Trajectory& traj, const ModelParams& params, const Grid& grid, const EnergyConfig& diag) {
  RunSummary s;
  s.termination = traj.termination;
  s.error = traj.error;
  s.t_final = traj.final_state.t;
  s.steps = traj.steps;
  s.records = traj.records.size();
  s.equilibrium = traj.equilibrium;
  const auto& eq = traj.equilibrium;
  s.final_deviation = deviation_norms(traj.final_state, eq.ubar0, eq.vbar0, eq.wstar, grid);

  std::vector<double> times;
  std::vector<double> devs;
  const double w_scale = params.r / params.mu + traj.w0_max;
  s.min_w_bound_slack = std::numeric_limits<double>::infinity();
  for (const auto& rec : traj.records) {
    times.push_back(rec.t);
    devs.push_back(rec.linf_dev_u + rec.linf_dev_v + rec.linf_dev_w);
    const double drift_u = std::abs(rec.mass_u - traj.mass_u0) / traj.mass_u0;
    const double drift_v = std::abs(rec.mass_v - traj.mass_v0) / traj.mass_v0;
    s.max_mass_drift_u = std::max(s.max_mass_drift_u, drift_u);
    s.max_mass_drift_v = std::max(s.max_mass_drift_v, drift_v);
    if (drift_u > kMassDriftTolerance) ++s.violations.mass_u;
    if (drift_v > kMassDriftTolerance) ++s.violations.mass_v;
    if (rec.min_u < 0.0 || rec.min_v < 0.0 || !(rec.min_w > 0.0)) ++s.violations.positivity;
    s.min_w_bound_slack = std::min(s.min_w_bound_slack, rec.w_bound_slack);
    if (rec.w_bound_slack < -kWBoundTolerance * w_scale) ++s.violations.w_bound;
    const auto ck_tol = [](double l1) { return -1e-12 * (1.0 + l1 * l1); };
    if (rec.ck_slack.u < ck_tol(rec.l1_dev_u) || rec.ck_slack.v < ck_tol(rec.l1_dev_v)) ++s.violations.csiszar_kullback;
    if (rec.b_feasible) ++s.feasible_records;
  }
  if (traj.termination == Termination::Error) ++s.violations.positivity;

  try {
    s.fit = fit_decay_rate(times, devs, diag.tail_fraction);
  } catch (const ValidationError& e) {
    s.fit_error = e.what();
  }
  try {
    s.margin = stability_margin(params, eq.ubar0, eq.vbar0, grid);
  } catch (const ValidationError& e) {
    s.margin_error = e.what();
  }
  s.energy = energy_dissipation_audit(traj.records, params, diag);
  s.violations.energy_dissipation = static_cast<int>(s.energy.violations);
  return s;
}

nlohmann::ordered_json summary_to_json(const RunSummary& s) {
  using json = nlohmann::ordered_json;
  json j;
  j["termination"] = to_string(s.termination);
  j["converged"] = s.converged();
  j["error"] = s.error.empty() ? json(nullptr) : json(s.error);
  j["t_final"] = s.t_final;
  j["steps"] = s.steps;
  j["records"] = s.records;
  j["ubar0"] = s.equilibrium.ubar0;
  j["vbar0"] = s.equilibrium.vbar0;
  j["wstar"] = s.equilibrium.wstar;
  j["final_deviation"] = {{"linf_u", s.final_deviation.linf_u}, {"linf_v", s.final_deviation.linf_v},
                          {"linf_w", s.final_deviation.linf_w}, {"l1_u", s.final_deviation.l1_u},
                          {"l1_v", s.final_deviation.l1_v},     {"l1_w", s.final_deviation.l1_w}};
  if (s.fit) {
    j["fit"] = {{"series", "linf_dev_u+linf_dev_v+linf_dev_w"},
                {"alpha", number_or_null(s.fit->alpha)},
                {"c", number_or_null(s.fit->c)},
                {"r_squared", number_or_null(s.fit->r_squared)},
                {"t_start", s.fit->t_start},
                {"t_end", s.fit->t_end},
                {"points", s.fit->points},
                {"error", nullptr}};
  } else {
    j["fit"] = {{"series", "linf_dev_u+linf_dev_v+linf_dev_w"}, {"alpha", nullptr}, {"c", nullptr},
                {"r_squared", nullptr}, {"t_start", nullptr}, {"t_end", nullptr}, {"points", 0},
                {"error", s.fit_error}};
  }
  if (s.margin) {
    j["stability"] = {{"margin", s.margin->margin}, {"normalized", s.margin->normalized}, {"error", nullptr}};
  } else {
    j["stability"] = {{"margin", nullptr}, {"normalized", false}, {"error", s.margin_error}};
  }
  j["energy"] = {{"tail_b", s.energy.b},
                 {"tail_feasible", s.energy.feasible},
                 {"Lu", s.energy.sup.Lu},
                 {"Lv", s.energy.sup.Lv},
                 {"Lw", s.energy.sup.Lw},
                 {"pairs", s.energy.pairs},
                 {"violation_fraction", s.energy.violation_fraction()},
                 {"max_excess", s.energy.max_excess},
                 {"max_F_over_D", s.energy.max_f_over_d},
                 {"feasible_records", s.feasible_records}};
  j["max_mass_drift_u"] = s.max_mass_drift_u;
  j["max_mass_drift_v"] = s.max_mass_drift_v;
  j["min_w_bound_slack"] = number_or_null(s.min_w_bound_slack);
  j["violations"] = {{"mass_u", s.violations.mass_u},
                     {"mass_v", s.violations.mass_v},
                     {"positivity", s.violations.positivity},
                     {"w_bound", s.violations.w_bound},
                     {"csiszar_kullback", s.violations.csiszar_kullback},
                     {"energy_dissipation", s.violations.energy_dissipation}};
  return j;
}

std::string timeseries_row(const DiagnosticsRecord& r) {
  const double values[] = {r.t,          r.mass_u,     r.mass_v,     r.min_u,      r.max_u,     r.min_v,
                           r.max_v,      r.min_w,      r.max_w,      r.linf_dev_u, r.linf_dev_v, r.linf_dev_w,
                           r.l1_dev_u,   r.l1_dev_v,   r.kl_u,       r.kl_v,       r.grad_l2_u, r.grad_l2_v,
                           r.grad_l2_w,  r.F,          r.D,          r.b_used};
  std::string row;
  for (double v : values) {
    row += format_double(v);
    row += ',';
  }
  row += r.b_feasible ? "1" : "0";
  row += ',';
  row += format_double(r.w_bound_slack);
  return row;
}

std::filesystem::path write_timeseries(const Trajectory& traj, const std::filesystem::path& dir) {
  ensure_dir(dir);
  std::string text = kTimeseriesHeader;
  text += '\n';
  for (const auto& rec : traj.records) {
    text += timeseries_row(rec);
    text += '\n';
  }
  const auto path = dir / "timeseries.csv";
  write_file(path, text);
  return path;
}

std::filesystem::path write_summary(const RunSummary& summary, const std::filesystem::path& dir) {
  ensure_dir(dir);
  const auto path = dir / "summary.json";
  write_file(path, summary_to_json(summary).dump(2) + "\n");
  return path;
}

std::filesystem::path write_snapshot(const FieldState& state, const Grid& grid, const std::filesystem::path& dir) {
  ensure_dir(dir);
  std::string text = "x,u,v,w\n";
  for (int i = 0; i < grid.n(); ++i) {
    text += format_double(grid.center(i)) + ',' + format_double(state.u[i]) + ',' + format_double(state.v[i]) + ',' +
            format_double(state.w[i]) + '\n';
  }
  const auto path = dir / ("snapshot_" + format_double(state.t) + ".csv");
  write_file(path, text);
  return path;
}

}  // namespace fex
