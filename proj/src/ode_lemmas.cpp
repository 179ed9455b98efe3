#include "fex/ode_lemmas.hpp"

#include "fex/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fex::odi {

void OdiInstance::validate() const {
  if (!(kappa > 0.0)) throw ValidationError("ODI instance needs kappa > 0");
  if (!(alpha > 0.0 && alpha < kappa)) throw ValidationError("ODI instance needs 0 < alpha < kappa");
  if (!(a >= 0.0) || !(b >= 0.0) || !(y0 >= 0.0)) throw ValidationError("ODI instance needs a, b, y0 >= 0");
  if (kind == ForcingKind::Averaged) {
    if (!(tau > 0.0 && tau <= 1.0)) throw ValidationError("averaged ODI instance needs 0 < tau <= 1");
    if (!(T > tau)) throw ValidationError("averaged ODI instance needs T > tau");
  } else if (!(T > 0.0)) {
    throw ValidationError("ODI instance needs T > 0");
  }
}

double pointwise_decay_bound(const OdiInstance& inst, double t) {
  if (!(inst.alpha < inst.kappa)) throw ValidationError("pointwise_decay_bound requires alpha < kappa");
  return (inst.y0 + inst.a / (inst.kappa - inst.alpha)) * std::exp(-inst.alpha * t) + inst.b / inst.kappa;
}

double averaged_decay_bound(const OdiInstance& inst, double t) {
  if (!(inst.alpha < inst.kappa)) throw ValidationError("averaged_decay_bound requires alpha < kappa");
  if (!(inst.tau > 0.0 && inst.tau <= 1.0)) throw ValidationError("averaged_decay_bound requires 0 < tau <= 1");
  const double ea = std::exp(inst.alpha);
  const double lead = (inst.y0 + inst.a + inst.a / (inst.kappa - inst.alpha) + inst.b) * ea / inst.tau + inst.a * ea;
  return lead * std::exp(-inst.alpha * t) + inst.b / (inst.kappa * inst.tau) + inst.b;
}

const char* to_string(ForcingFamily f) {
  switch (f) {
    case ForcingFamily::Pointwise: return "pointwise";
    case ForcingFamily::Uniform: return "uniform";
    case ForcingFamily::FrontLoaded: return "front_loaded";
  }
  return "unknown";
}

std::vector<ForcingPiece> build_forcing(const OdiInstance& inst, ForcingFamily family) {
  const double a = inst.a;
  const double b = inst.b;
  const double alpha = inst.alpha;
  std::vector<ForcingPiece> pieces;
  switch (family) {
    case ForcingFamily::Pointwise:
      pieces.push_back({0.0, inst.T, [=](double t) { return a * std::exp(-alpha * t) + b; }});
      break;
    case ForcingFamily::Uniform: {
      const double tau = inst.tau;
      pieces.push_back({0.0, inst.T, [=](double t) { return (a * std::exp(-alpha * t) + b) / tau; }});
      break;
    }
    case ForcingFamily::FrontLoaded: {
      const double tau = inst.tau;
      const double width = kBumpFraction * tau;
      for (long k = 0; k * tau < inst.T; ++k) {
        const double start = k * tau;
        const double bump_end = std::min(start + width, inst.T);
        const double window_end = std::min(start + tau, inst.T);
        // Any tau-window touching this bump starts no later than start + width.
        const double density = (a * std::exp(-alpha * (start + width)) + b) / width;
        pieces.push_back({start, bump_end, [=](double) { return density; }});
        if (window_end > bump_end) pieces.push_back({bump_end, window_end, [](double) { return 0.0; }});
      }
      break;
    }
  }
  return pieces;
}

namespace {

// Walks the forcing pieces with RK4 and hands every node (t, y) to `visit`.
template <typename Visit>
void integrate(const OdiInstance& inst, const std::vector<ForcingPiece>& forcing, double max_step, Visit&& visit) {
  const double kappa = inst.kappa;
  double y = inst.y0;
  for (const auto& piece : forcing) {
    const double len = piece.end - piece.start;
    if (!(len > 0.0)) continue;
    const auto steps = static_cast<long>(std::ceil(len / max_step));
    const double h = len / static_cast<double>(steps);
    if (!(h > 0.0) || piece.start + h == piece.start) {
      throw InvariantViolation("ODI integrator step underflow on [" + std::to_string(piece.start) + ", " +
                               std::to_string(piece.end) + ")");
    }
    const auto rhs = [&](double t, double yy) { return piece.value(t) - kappa * yy; };
    for (long s = 0; s < steps; ++s) {
      const double t = piece.start + s * h;
      const double k1 = rhs(t, y);
      const double k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
      const double k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
      const double k4 = rhs(t + h, y + h * k3);
      y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!std::isfinite(y)) throw InvariantViolation("ODI integrator produced a non-finite value");
      visit(s + 1 == steps ? piece.end : t + h, y);
    }
  }
}

double step_limit(const OdiInstance& inst, int samples) {
  double h = 1e-3 / inst.kappa;
  if (inst.kind == ForcingKind::Averaged) h = std::min(h, 1e-3 * inst.tau);
  return std::min(h, inst.T / samples);
}

}  // namespace

std::vector<double> integrate_extremal(const OdiInstance& inst, const std::vector<ForcingPiece>& forcing,
                                       const std::vector<double>& times, double max_step) {
  // Sample times become extra breakpoints so every request lands on a node.
  std::vector<ForcingPiece> split;
  for (const auto& piece : forcing) {
    double start = piece.start;
    for (double t : times) {
      if (t > start && t < piece.end) {
        split.push_back({start, t, piece.value});
        start = t;
      }
    }
    split.push_back({start, piece.end, piece.value});
  }
  std::vector<double> out(times.size(), inst.y0);
  std::size_t next = 0;
  while (next < times.size() && times[next] <= 0.0) ++next;
  double last_t = 0.0;
  double last_y = inst.y0;
  integrate(inst, split, max_step, [&](double t, double y) {
    while (next < times.size() && times[next] <= t) out[next++] = y;
    last_t = t;
    last_y = y;
  });
  // Requests that overshoot the final node by rounding take its value.
  for (; next < times.size(); ++next) {
    if (times[next] - last_t > 1e-12 * std::max(1.0, last_t)) {
      throw ValidationError("integrate_extremal: sample time " + std::to_string(times[next]) +
                            " lies beyond the forcing horizon " + std::to_string(last_t));
    }
    out[next] = last_y;
  }
  return out;
}

OdiReport verify_odi_bound(const OdiInstance& inst, int samples) {
  if (samples < 100) throw ValidationError("verify_odi_bound needs at least 100 samples");
  inst.validate();

  std::vector<ForcingFamily> families;
  if (inst.kind == ForcingKind::Pointwise) {
    families = {ForcingFamily::Pointwise};
  } else {
    families = {ForcingFamily::Uniform, ForcingFamily::FrontLoaded};
  }
  const double h = step_limit(inst, samples);

  OdiReport report;
  report.max_violation = -std::numeric_limits<double>::infinity();
  for (auto family : families) {
    FamilyReport fr;
    fr.family = family;
    fr.max_violation = -std::numeric_limits<double>::infinity();
    integrate(inst, build_forcing(inst, family), h, [&](double t, double y) {
      if (!(t > 0.0 && t < inst.T)) return;
      const double bound = inst.kind == ForcingKind::Pointwise ? pointwise_decay_bound(inst, t) : averaged_decay_bound(inst, t);
      const double violation = (y - bound) / (1.0 + bound);
      ++fr.points_checked;
      if (violation > fr.max_violation) {
        fr.max_violation = violation;
        fr.at_t = t;
        fr.y_at = y;
        fr.bound_at = bound;
      }
    });
    report.max_violation = std::max(report.max_violation, fr.max_violation);
    if (fr.max_violation > kOdiSlack) report.ok = false;
    report.families.push_back(fr);
  }
  return report;
}

OdiInstance random_instance(std::mt19937_64& rng, ForcingKind kind) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  OdiInstance inst;
  inst.kind = kind;
  inst.kappa = 0.2 + 4.8 * unit(rng);
  inst.alpha = inst.kappa * (0.02 + 0.96 * unit(rng));
  inst.a = 3.0 * unit(rng);
  inst.b = 3.0 * unit(rng);
  inst.y0 = 3.0 * unit(rng);
  // A sprinkling of degenerate forcings.
  if (unit(rng) < 0.1) inst.a = 0.0;
  if (unit(rng) < 0.1) inst.b = 0.0;
  inst.tau = 0.05 + 0.95 * unit(rng);
  inst.T = inst.tau + 0.5 + 7.5 * unit(rng);
  return inst;
}

SuiteReport run_lemma_suite(int count, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SuiteReport suite;
  const auto run = [&](ForcingKind kind) {
    const auto inst = random_instance(rng, kind);
    const auto report = verify_odi_bound(inst, samples);
    if (!report.ok) ++suite.violations;
    if (report.max_violation > suite.max_violation) {
      suite.max_violation = report.max_violation;
      std::ostringstream os;
      os.precision(17);
      os << (kind == ForcingKind::Pointwise ? "pointwise" : "averaged") << " kappa=" << inst.kappa
         << " alpha=" << inst.alpha << " a=" << inst.a << " b=" << inst.b << " tau=" << inst.tau << " T=" << inst.T
         << " y0=" << inst.y0;
      suite.worst = os.str();
    }
  };
  for (int k = 0; k < count; ++k, ++suite.pointwise_instances) run(ForcingKind::Pointwise);
  for (int k = 0; k < count; ++k, ++suite.averaged_instances) run(ForcingKind::Averaged);
  return suite;
}

}  // namespace fex::odi
