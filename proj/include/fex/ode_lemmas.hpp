#pragma once

// Closed-form supersolutions for linear differential inequalities
//   y' + kappa y <= a e^{-alpha t} + b        (pointwise forcing)
//   y' + kappa y <= f,  int_t^{t+tau} f <= a e^{-alpha t} + b   (window-averaged forcing)
// and a numerical check of both against the extremal solutions.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace fex::odi {

enum class ForcingKind { Pointwise, Averaged };

struct OdiInstance {
  double kappa = 1.0;
  double a = 0.0;
  double b = 0.0;
  double alpha = 0.5;  // 0 < alpha < kappa
  double tau = 1.0;    // 0 < tau <= 1, averaged kind only
  double T = 10.0;     // horizon, T > tau
  double y0 = 0.0;
  ForcingKind kind = ForcingKind::Pointwise;

  void validate() const;
};

/// (y0 + a / (kappa - alpha)) e^{-alpha t} + b / kappa
double pointwise_decay_bound(const OdiInstance& inst, double t);

/// {(y0 + a + a/(kappa - alpha) + b) e^alpha / tau + a e^alpha} e^{-alpha t} + b/(kappa tau) + b
double averaged_decay_bound(const OdiInstance& inst, double t);

/// Forcing as a sequence of pieces, each smooth on [start, end).
struct ForcingPiece {
  double start;
  double end;
  std::function<double(double)> value;
};

enum class ForcingFamily { Pointwise, Uniform, FrontLoaded };

const char* to_string(ForcingFamily f);

/// Share of each tau-window that carries the whole budget in the front-loaded family.
inline constexpr double kBumpFraction = 0.01;

/// Builds an admissible forcing of the given family on [0, T]:
///  - Pointwise:   f = a e^{-alpha t} + b
///  - Uniform:     f = (a e^{-alpha t} + b) / tau
///  - FrontLoaded: on each window [k tau, (k+1) tau) the mass a e^{-alpha (k + 0.01) tau} + b
///                 is spread over the first 1% of the window, zero elsewhere.
std::vector<ForcingPiece> build_forcing(const OdiInstance& inst, ForcingFamily family);

struct FamilyReport {
  ForcingFamily family = ForcingFamily::Pointwise;
  std::size_t points_checked = 0;
  double max_violation = 0.0;  // max of (y - bound) / (1 + bound); <= 1e-9 passes
  double at_t = 0.0;
  double y_at = 0.0;
  double bound_at = 0.0;
};

struct OdiReport {
  std::vector<FamilyReport> families;
  bool ok = true;
  double max_violation = 0.0;
};

inline constexpr double kOdiSlack = 1e-9;

/// Integrates y' + kappa y = f with classical RK4 (step <= 1e-3 min(1/kappa, tau)
/// and <= T / samples, aligned with forcing breakpoints) and checks
/// y(t) <= bound(t) + 1e-9 (1 + bound(t)) at every node in (0, T).
/// Pointwise instances use pointwise_decay_bound; averaged instances run both
/// admissible families against averaged_decay_bound.
OdiReport verify_odi_bound(const OdiInstance& inst, int samples);

/// Extremal solution of y' + kappa y = f sampled at `times` (ascending, within [0, T]).
std::vector<double> integrate_extremal(const OdiInstance& inst, const std::vector<ForcingPiece>& forcing,
                                       const std::vector<double>& times, double max_step);

OdiInstance random_instance(std::mt19937_64& rng, ForcingKind kind);

struct SuiteReport {
  int pointwise_instances = 0;
  int averaged_instances = 0;
  int violations = 0;
  double max_violation = -1.0;
  std::string worst;  // description of the instance with the largest violation
};

/// Verifies `count` random pointwise and `count` random averaged instances.
SuiteReport run_lemma_suite(int count, int samples, std::uint64_t seed);

}  // namespace fex::odi
