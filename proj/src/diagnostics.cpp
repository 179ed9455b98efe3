#include "fex/diagnostics.hpp"

#include "fex/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fex {

void EnergyConfig::validate() const {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) {
    throw ValidationError("diagnostics.tail_fraction must lie in (0, 1)");
  }
  if (b_mode == BMode::Fixed && !(fixed_b > 0.0)) throw ValidationError("diagnostics.b must be positive");
  if (!(steady_tol >= 0.0)) throw ValidationError("diagnostics.steady_tol must be nonnegative");
}

DeviationNorms deviation_norms(const FieldState& state, double ubar0, double vbar0, double wstar, const Grid& grid) {
  const auto du = (state.u.array() - ubar0).abs();
  const auto dv = (state.v.array() - vbar0).abs();
  const auto dw = (state.w.array() - wstar).abs();
  DeviationNorms out;
  out.linf_u = du.maxCoeff();
  out.linf_v = dv.maxCoeff();
  out.linf_w = dw.maxCoeff();
  out.l1_u = grid.dx() * du.sum();
  out.l1_v = grid.dx() * dv.sum();
  out.l1_w = grid.dx() * dw.sum();
  return out;
}

double kl_entropy(const Field& field, double mean, const Grid& grid) {
  if (!(mean > 0.0)) throw ValidationError("relative entropy needs a positive mean");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < field.size(); ++i) {
    const double f = field[i];
    if (f > 0.0) sum += f * std::log(f / mean);
  }
  return grid.dx() * sum;
}

double relative_fisher(const Field& field, const Grid& grid) {
  const double dx = grid.dx();
  double sum = 0.0;
  for (Eigen::Index i = 0; i + 1 < field.size(); ++i) {
    const double a = field[i];
    const double b = field[i + 1];
    const double grad = (b - a) / dx;
    if (grad == 0.0) continue;
    const double harmonic = a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0;
    sum += grad * grad / std::max(harmonic, 1e-30);
  }
  return dx * sum;
}

double gradient_l2(const Field& field, const Grid& grid) {
  const Eigen::Index n = field.size();
  if (n < 2) return 0.0;
  const double dx = grid.dx();
  const Field grad = (field.tail(n - 1) - field.head(n - 1)) / dx;
  return std::sqrt(dx * grad.squaredNorm());
}

BChoice choose_b(const ModelParams& params, const SupBounds& sup, BMode mode, double fixed_b) {
  if (!(sup.Lu > 0.0) || !(sup.Lv > 0.0) || !(sup.Lw > 0.0)) {
    throw ValidationError("choose_b needs positive sup norms Lu, Lv, Lw");
  }
  BChoice out;
  out.lower = 4.0 * params.chi1 * params.lambda * sup.Lv * sup.Lw / params.mu;
  out.upper = 1.0 / (2.0 * params.chi2 * params.chi2 * sup.Lu * sup.Lv);
  if (mode == BMode::Fixed) {
    out.b = fixed_b;
    out.feasible = out.lower <= fixed_b && fixed_b <= out.upper;
  } else {
    out.feasible = out.lower <= out.upper;
    out.b = out.feasible ? std::sqrt(out.lower * out.upper) : out.lower;
  }
  return out;
}

EnergyParts energy_parts(const FieldState& state, double ubar0, double vbar0, const Grid& grid) {
  if (!(state.w.minCoeff() > 0.0)) throw ValidationError("energy terms need w > 0 in every cell");
  EnergyParts parts;
  parts.kl_u = kl_entropy(state.u, ubar0, grid);
  parts.kl_v = kl_entropy(state.v, vbar0, grid);
  parts.fisher_u = relative_fisher(state.u, grid);
  parts.fisher_v = relative_fisher(state.v, grid);
  parts.fisher_w = relative_fisher(state.w, grid);
  return parts;
}

double energy_F(const FieldState& state, double ubar0, double vbar0, double b, const ModelParams& params,
                const Grid& grid) {
  if (!(b > 0.0)) throw ValidationError("energy weight b must be positive");
  if (!(state.w.minCoeff() > 0.0)) throw ValidationError("energy needs w > 0 in every cell");
  return kl_entropy(state.u, ubar0, grid) + b * kl_entropy(state.v, vbar0, grid) +
         params.chi1 / (2.0 * params.lambda) * relative_fisher(state.w, grid);
}

double dissipation_D(const FieldState& state, double b, const ModelParams& params, const Grid& grid) {
  if (!(b > 0.0)) throw ValidationError("energy weight b must be positive");
  if (!(state.w.minCoeff() > 0.0)) throw ValidationError("dissipation needs w > 0 in every cell");
  return 0.5 * relative_fisher(state.u, grid) + 0.5 * b * relative_fisher(state.v, grid) +
         params.chi1 * params.mu / (4.0 * params.lambda) * relative_fisher(state.w, grid);
}

double w_upper_bound(const ModelParams& params, double w0_max, double t) {
  return params.r / params.mu + w0_max * std::exp(-params.mu * t);
}

double w_bound_check(const DiagnosticsRecord& record, const ModelParams& params, double w0_max) {
  return w_upper_bound(params, w0_max, record.t) - record.max_w;
}

CkSlack csiszar_kullback_check(const FieldState& state, double ubar0, double vbar0, const Grid& grid) {
  const auto slack = [&](const Field& f, double mean) {
    const double mass = grid.dx() * f.sum();
    const double l1 = grid.dx() * (f.array() - mean).abs().sum();
    return 2.0 * mass * kl_entropy(f, mean, grid) - l1 * l1;
  };
  return {slack(state.u, ubar0), slack(state.v, vbar0)};
}

DiagnosticsRecord make_record(const FieldState& state, const ModelParams& params, const Grid& grid,
                              const EquilibriumInfo& eq, double w0_max, const BChoice& b) {
  DiagnosticsRecord rec;
  rec.t = state.t;
  rec.mass_u = mass_and_mean(state.u, grid).mass;
  rec.mass_v = mass_and_mean(state.v, grid).mass;
  rec.min_u = state.u.minCoeff();
  rec.max_u = state.u.maxCoeff();
  rec.min_v = state.v.minCoeff();
  rec.max_v = state.v.maxCoeff();
  rec.min_w = state.w.minCoeff();
  rec.max_w = state.w.maxCoeff();

  const auto dev = deviation_norms(state, eq.ubar0, eq.vbar0, eq.wstar, grid);
  rec.linf_dev_u = dev.linf_u;
  rec.linf_dev_v = dev.linf_v;
  rec.linf_dev_w = dev.linf_w;
  rec.l1_dev_u = dev.l1_u;
  rec.l1_dev_v = dev.l1_v;
  rec.l1_dev_w = dev.l1_w;

  rec.parts = energy_parts(state, eq.ubar0, eq.vbar0, grid);
  rec.kl_u = rec.parts.kl_u;
  rec.kl_v = rec.parts.kl_v;
  rec.grad_l2_u = gradient_l2(state.u, grid);
  rec.grad_l2_v = gradient_l2(state.v, grid);
  rec.grad_l2_w = gradient_l2(state.w, grid);

  rec.b_used = b.b;
  rec.b_feasible = b.feasible;
  rec.F = rec.parts.energy(b.b, params);
  rec.D = rec.parts.dissipation(b.b, params);
  rec.w_bound_slack = w_bound_check(rec, params, w0_max);
  rec.ck_slack = csiszar_kullback_check(state, eq.ubar0, eq.vbar0, grid);
  return rec;
}

DecayFit fit_decay_rate(std::span<const double> times, std::span<const double> values, double tail_fraction) {
  if (times.size() != values.size()) throw ValidationError("decay fit: times and values differ in length");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw ValidationError("decay fit: tail fraction must be in (0, 1]");
  if (times.empty()) throw ValidationError("decay fit: empty series");

  const double t_first = times.front();
  const double t_last = times.back();
  const double cut = t_last - tail_fraction * (t_last - t_first);

  double n = 0.0, st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  DecayFit fit;
  fit.t_start = t_last;
  fit.t_end = t_last;
  std::vector<std::pair<double, double>> window;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < cut) continue;
    if (!(values[k] > 0.0)) {
      throw ValidationError("decay fit: non-positive value " + std::to_string(values[k]) + " at t = " +
                            std::to_string(times[k]));
    }
    window.emplace_back(times[k], std::log(values[k]));
    fit.t_start = std::min(fit.t_start, times[k]);
  }
  if (window.size() < 8) {
    throw ValidationError("decay fit: need at least 8 points in the window, have " + std::to_string(window.size()));
  }
  for (const auto& [t, y] : window) {
    n += 1.0;
    st += t;
    sy += y;
  }
  const double tm = st / n;
  const double ym = sy / n;
  double syy = 0.0;
  for (const auto& [t, y] : window) {
    stt += (t - tm) * (t - tm);
    sty += (t - tm) * (y - ym);
    syy += (y - ym) * (y - ym);
  }
  if (!(stt > 0.0)) throw ValidationError("decay fit: window has no time spread");
  const double slope = sty / stt;
  const double intercept = ym - slope * tm;
  fit.alpha = -slope;
  fit.c = std::exp(intercept);
  fit.points = window.size();
  // A spread at the level of rounding in the mean is a constant series.
  const double flat = std::numeric_limits<double>::epsilon() * 64.0 * (1.0 + std::abs(ym));
  if (syy <= n * flat * flat) {
    fit.r_squared = 1.0;
  } else {
    double ss_res = 0.0;
    for (const auto& [t, y] : window) {
      const double e = y - (intercept + slope * t);
      ss_res += e * e;
    }
    fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  }
  return fit;
}

std::span<const DiagnosticsRecord> tail_window(std::span<const DiagnosticsRecord> records, double tail_fraction) {
  if (records.empty()) return records;
  const double t0 = records.front().t;
  const double t1 = records.back().t;
  const double cut = t1 - tail_fraction * (t1 - t0);
  std::size_t first = 0;
  while (first < records.size() && records[first].t < cut) ++first;
  return records.subspan(first);
}

EnergyAudit energy_dissipation_audit(std::span<const DiagnosticsRecord> records, const ModelParams& params,
                                     const EnergyConfig& config) {
  EnergyAudit audit;
  const auto tail = tail_window(records, config.tail_fraction);
  if (tail.size() < 2) return audit;

  for (const auto& rec : tail) {
    audit.sup.Lu = std::max(audit.sup.Lu, rec.max_u);
    audit.sup.Lv = std::max(audit.sup.Lv, rec.max_v);
    audit.sup.Lw = std::max(audit.sup.Lw, rec.max_w);
  }
  const auto choice = choose_b(params, audit.sup, config.b_mode, config.fixed_b);
  audit.b = choice.b;
  audit.feasible = choice.feasible;

  for (std::size_t k = 0; k + 1 < tail.size(); ++k) {
    const double dt = tail[k + 1].t - tail[k].t;
    if (!(dt > 0.0)) continue;
    const double f0 = tail[k].parts.energy(audit.b, params);
    const double f1 = tail[k + 1].parts.energy(audit.b, params);
    const double d0 = tail[k].parts.dissipation(audit.b, params);
    const double excess = (f1 - f0) / dt + d0 - kEnergyTolerance * (1.0 + d0);
    audit.max_excess = audit.pairs == 0 ? excess : std::max(audit.max_excess, excess);
    ++audit.pairs;
    if (excess > 0.0) ++audit.violations;
    if (d0 > 0.0) audit.max_f_over_d = std::max(audit.max_f_over_d, f0 / d0);
  }
  return audit;
}

}  // namespace fex
