#pragma once

#include "fex/core.hpp"

#include <span>
#include <vector>

namespace fex {

enum class BMode { AutoGeometricMean, Fixed };

struct EnergyConfig {
  BMode b_mode = BMode::AutoGeometricMean;
  double fixed_b = 1.0;       // used when b_mode == Fixed
  double tail_fraction = 0.5;  // trailing share of simulated time used for rate fits and the energy audit
  double steady_tol = 1e-9;    // sup-norm steady-state threshold; <= 0 disables detection

  void validate() const;

  friend bool operator==(const EnergyConfig&, const EnergyConfig&) = default;
};

struct DeviationNorms {
  double linf_u = 0.0;
  double linf_v = 0.0;
  double linf_w = 0.0;
  double l1_u = 0.0;
  double l1_v = 0.0;
  double l1_w = 0.0;
};

/// Distances of the state from the homogeneous equilibrium (ubar0, vbar0, wstar).
DeviationNorms deviation_norms(const FieldState& state, double ubar0, double vbar0, double wstar, const Grid& grid);

/// Relative entropy dx * sum f ln(f / mean), with 0 ln 0 = 0.
double kl_entropy(const Field& field, double mean, const Grid& grid);

/// Discrete relative Fisher information dx * sum_faces (f_x)^2 / f_face over the
/// interior faces, f_face the harmonic mean of the adjacent cells. A face with
/// nonzero gradient next to an empty cell uses f_face = 1e-30.
double relative_fisher(const Field& field, const Grid& grid);

/// Discrete W^{1,2} seminorm sqrt(dx * sum_faces (f_x)^2).
double gradient_l2(const Field& field, const Grid& grid);

struct SupBounds {
  double Lu;
  double Lv;
  double Lw;
};

struct BChoice {
  double b;
  bool feasible;
  double lower;
  double upper;
};

/// Weight b of the exploiter entropy in the energy, from the admissible interval
///   4 chi1 lambda Lv Lw / mu <= b <= 1 / (2 chi2^2 Lu Lv).
/// Auto mode takes the geometric mean of the endpoints when the interval is
/// nonempty and the lower endpoint otherwise.
BChoice choose_b(const ModelParams& params, const SupBounds& sup, BMode mode, double fixed_b = 1.0);

/// The b-independent pieces of the energy and the dissipation.
struct EnergyParts {
  double kl_u = 0.0;
  double kl_v = 0.0;
  double fisher_u = 0.0;
  double fisher_v = 0.0;
  double fisher_w = 0.0;

  double energy(double b, const ModelParams& params) const {
    return kl_u + b * kl_v + params.chi1 / (2.0 * params.lambda) * fisher_w;
  }
  double dissipation(double b, const ModelParams& params) const {
    return 0.5 * fisher_u + 0.5 * b * fisher_v + params.chi1 * params.mu / (4.0 * params.lambda) * fisher_w;
  }
};

EnergyParts energy_parts(const FieldState& state, double ubar0, double vbar0, const Grid& grid);

/// F = int u ln(u/ubar0) + b int v ln(v/vbar0) + chi1/(2 lambda) int w_x^2 / w.
double energy_F(const FieldState& state, double ubar0, double vbar0, double b, const ModelParams& params,
                const Grid& grid);

/// D = 1/2 int u_x^2/u + b/2 int v_x^2/v + chi1 mu/(4 lambda) int w_x^2/w.
double dissipation_D(const FieldState& state, double b, const ModelParams& params, const Grid& grid);

/// Upper envelope r/mu + max(w0) e^{-mu t} for the nutrient.
double w_upper_bound(const ModelParams& params, double w0_max, double t);

struct CkSlack {
  double u;
  double v;
};

/// Csiszar-Kullback: 2 ||f||_1 * KL(f) - ||f - mean||_1^2, nonnegative for f >= 0.
CkSlack csiszar_kullback_check(const FieldState& state, double ubar0, double vbar0, const Grid& grid);

struct DiagnosticsRecord {
  double t = 0.0;
  double mass_u = 0.0;
  double mass_v = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
  double min_v = 0.0;
  double max_v = 0.0;
  double min_w = 0.0;
  double max_w = 0.0;
  double linf_dev_u = 0.0;
  double linf_dev_v = 0.0;
  double linf_dev_w = 0.0;
  double l1_dev_u = 0.0;
  double l1_dev_v = 0.0;
  double kl_u = 0.0;
  double kl_v = 0.0;
  double grad_l2_u = 0.0;
  double grad_l2_v = 0.0;
  double grad_l2_w = 0.0;
  double F = 0.0;
  double D = 0.0;
  double b_used = 0.0;
  bool b_feasible = false;
  double w_bound_slack = 0.0;

  // Not serialized to the time series; kept so F and D can be re-evaluated for another b.
  EnergyParts parts;
  double l1_dev_w = 0.0;
  CkSlack ck_slack{0.0, 0.0};
};

/// slack = r/mu + w0_max e^{-mu t} - max w(t); negative beyond rounding marks a violation.
double w_bound_check(const DiagnosticsRecord& record, const ModelParams& params, double w0_max);

/// Evaluates every per-state diagnostic. `b` is the energy weight already chosen for this record.
DiagnosticsRecord make_record(const FieldState& state, const ModelParams& params, const Grid& grid,
                              const EquilibriumInfo& eq, double w0_max, const BChoice& b);

struct DecayFit {
  double alpha = 0.0;
  double c = 0.0;
  double r_squared = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t points = 0;
};

/// Least-squares fit of ln(value) = ln(c) - alpha t over the trailing
/// `tail_fraction` of the time span. Needs at least 8 points in the window, all
/// strictly positive.
DecayFit fit_decay_rate(std::span<const double> times, std::span<const double> values, double tail_fraction);

/// Checks F(t + dt) - F(t) <= dt * (-D(t) + 1e-3 (1 + D(t))) on consecutive tail records,
/// with b fixed from the tail suprema of the sup norms.
struct EnergyAudit {
  double b = 0.0;
  bool feasible = false;
  SupBounds sup{0.0, 0.0, 0.0};
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double max_excess = 0.0;   // max of quotient + D - tolerance over pairs
  double max_f_over_d = 0.0;  // largest F/D on the tail, for inspection only
  double violation_fraction() const { return pairs == 0 ? 0.0 : static_cast<double>(violations) / pairs; }
};

inline constexpr double kEnergyTolerance = 1e-3;

EnergyAudit energy_dissipation_audit(std::span<const DiagnosticsRecord> records, const ModelParams& params,
                                     const EnergyConfig& config);

/// Records whose time lies in the trailing `tail_fraction` of the covered span.
std::span<const DiagnosticsRecord> tail_window(std::span<const DiagnosticsRecord> records, double tail_fraction);

}  // namespace fex
