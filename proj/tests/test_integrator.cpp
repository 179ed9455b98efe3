#include "fex/errors.hpp"
#include "fex/integrator.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace fex {
namespace {

FieldState constant_state(int n, double u, double v, double w) {
  return FieldState{0.0, Field::Constant(n, u), Field::Constant(n, v), Field::Constant(n, w)};
}

EnergyConfig no_steady_stop() {
  EnergyConfig c;
  c.steady_tol = 0.0;
  return c;
}

// Dense Neumann Laplacian written out entry by entry.
Eigen::MatrixXd dense_laplacian(int n, double dx) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (i > 0) {
      m(i, i - 1) += 1.0;
      m(i, i) -= 1.0;
    }
    if (i + 1 < n) {
      m(i, i + 1) += 1.0;
      m(i, i) -= 1.0;
    }
  }
  return m / (dx * dx);
}

// Upwind taxis tendency -(F_{i+1/2} - F_{i-1/2}) / dx, computed face by face.
Field reference_taxis(const Field& c, const Field& p, double chi, double dx) {
  const int n = static_cast<int>(c.size());
  Field flux = Field::Zero(n + 1);
  for (int f = 1; f < n; ++f) {
    const double speed = chi * (p[f] - p[f - 1]) / dx;
    const double donor = speed > 0 ? c[f - 1] : (speed < 0 ? c[f] : 0.5 * (c[f - 1] + c[f]));
    flux[f] = speed * donor;
  }
  Field out(n);
  for (int i = 0; i < n; ++i) out[i] = -(flux[i + 1] - flux[i]) / dx;
  return out;
}

TEST(Cfl, SingleStepInNutrient) {
  const auto g = build_grid(10, 1.0);
  auto s = constant_state(10, 1.0, 1.0, 1.0);
  for (int i = 5; i < 10; ++i) s.w[i] = 1.1;  // one face with gradient 1
  ModelParams p;
  p.chi1 = 2.0;
  StepControl c;
  c.safety = 0.5;
  c.dt_max = 1.0;
  EXPECT_NEAR(cfl_dt(s, p, g, c), 0.025, 1e-12);
  c.safety = 0.25;
  EXPECT_NEAR(cfl_dt(s, p, g, c), 0.0125, 1e-12);
}

TEST(Cfl, HomogeneousStateFallsBackToDtMax) {
  const auto g = build_grid(10, 1.0);
  StepControl c;
  c.dt_max = 0.037;
  EXPECT_EQ(cfl_dt(constant_state(10, 1, 2, 3), ModelParams{}, g, c), 0.037);
}

TEST(Cfl, ExploiterLimitedByForagerGradient) {
  const auto g = build_grid(10, 1.0);
  auto s = constant_state(10, 1.0, 1.0, 1.0);
  s.u[9] = 1.1;
  ModelParams p;
  p.chi1 = 1.0;
  p.chi2 = 4.0;
  StepControl c;
  c.safety = 1.0;
  c.dt_max = 1.0;
  EXPECT_NEAR(cfl_dt(s, p, g, c), 0.1 / 4.0, 1e-12);
}

TEST(ImexStep, HomogeneousEquilibriumIsFixed) {
  const auto g = build_grid(32, 1.0);
  ModelParams p;
  p.lambda = 0.7;
  p.mu = 0.3;
  p.r = 2.0;
  const double w = equilibrium_w(p, 1.5, 0.5);
  FieldState s = constant_state(32, 1.5, 0.5, w);
  for (int k = 0; k < 100; ++k) s = imex_step(s, p, g, 0.01);
  EXPECT_LE((s.u.array() - 1.5).abs().maxCoeff(), 1e-12);
  EXPECT_LE((s.v.array() - 0.5).abs().maxCoeff(), 1e-12);
  EXPECT_LE((s.w.array() - w).abs().maxCoeff(), 1e-12);
  EXPECT_NEAR(s.t, 1.0, 1e-12);
}

TEST(ImexStep, MatchesDenseOracleOnFourCells) {
  const auto g = build_grid(4, 1.0);
  ModelParams p{1.3, 0.7, 0.5, 0.9, 0.4, 1.1};
  FieldState s;
  s.u = Eigen::Vector4d(1.0, 1.2, 0.8, 1.1);
  s.v = Eigen::Vector4d(0.3, 0.2, 0.4, 0.5);
  s.w = Eigen::Vector4d(0.9, 1.0, 1.2, 0.7);
  const double dt = 0.002;

  const Eigen::MatrixXd lap = dense_laplacian(4, g.dx());
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(4, 4);
  const Field u_star = s.u + dt * reference_taxis(s.u, s.w, p.chi1, g.dx());
  const Field v_star = s.v + dt * reference_taxis(s.v, s.u, p.chi2, g.dx());
  const Field u_new = (id - dt * lap).partialPivLu().solve(u_star);
  const Field v_new = (id - dt * lap).partialPivLu().solve(v_star);
  Eigen::MatrixXd wm = id - dt * p.d * lap;
  for (int i = 0; i < 4; ++i) wm(i, i) += dt * (p.lambda * (u_new[i] + v_new[i]) + p.mu);
  const Field w_new = wm.partialPivLu().solve((s.w.array() + dt * p.r).matrix());

  const auto next = imex_step(s, p, g, dt);
  EXPECT_LE((next.u - u_new).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((next.v - v_new).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((next.w - w_new).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ImexStep, OversizedStepReportsNegativeDensity) {
  const auto g = build_grid(4, 4.0);
  FieldState s = constant_state(4, 0.0, 1.0, 1.0);
  s.u[1] = 1.0;
  s.w << 1, 0, 1, 1;
  ModelParams p;
  p.chi1 = 10.0;
  try {
    imex_step(s, p, g, 1.0);
    FAIL() << "expected an invariant violation";
  } catch (const InvariantViolation& e) {
    EXPECT_NE(std::string(e.what()).find("u["), std::string::npos);
  }
}

TEST(ImexStep, RejectsNonPositiveDt) {
  const auto g = build_grid(4, 1.0);
  EXPECT_THROW(imex_step(constant_state(4, 1, 1, 1), ModelParams{}, g, 0.0), ValidationError);
}

TEST(ImexStep, PureDiffusionConservesMassAndShrinksSup) {
  const auto g = build_grid(50, 1.0);
  ModelParams p{1e-12, 1e-12, 1.0, 1e-12, 1.0, 0.0};
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> dist(0.0, 2.0);
  FieldState s = constant_state(50, 1.0, 1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    s.u[i] = dist(rng);
    s.v[i] = dist(rng);
    s.w[i] = 0.1 + dist(rng);
  }
  const double mass_u = s.u.sum(), mass_v = s.v.sum();
  double sup_u = s.u.maxCoeff(), sup_v = s.v.maxCoeff();
  for (int k = 0; k < 200; ++k) {
    s = imex_step(s, p, g, 1e-4);
    EXPECT_LE(s.u.maxCoeff(), sup_u + 1e-14);
    EXPECT_LE(s.v.maxCoeff(), sup_v + 1e-14);
    sup_u = s.u.maxCoeff();
    sup_v = s.v.maxCoeff();
  }
  EXPECT_NEAR(s.u.sum(), mass_u, 1e-12 * mass_u);
  EXPECT_NEAR(s.v.sum(), mass_v, 1e-12 * mass_v);
}

TEST(ImexStep, RandomStepsPreserveInvariantsAndMass) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 8 + trial;
    const auto g = build_grid(n, 0.5 + dist(rng));
    ModelParams p{0.1 + 3 * dist(rng), 0.1 + 3 * dist(rng), 0.1 + dist(rng), 0.1 + dist(rng), 0.1 + dist(rng),
                  dist(rng)};
    FieldState s = constant_state(n, 0, 0, 0);
    for (int i = 0; i < n; ++i) {
      s.u[i] = dist(rng);
      s.v[i] = dist(rng);
      s.w[i] = 0.05 + dist(rng);
    }
    const double mu0 = s.u.sum(), mv0 = s.v.sum();
    StepControl c;
    for (int k = 0; k < 20; ++k) {
      s = imex_step(s, p, g, cfl_dt(s, p, g, c));
      ASSERT_GE(s.u.minCoeff(), -kNegativeTolerance);
      ASSERT_GE(s.v.minCoeff(), -kNegativeTolerance);
      ASSERT_GT(s.w.minCoeff(), 0.0);
    }
    EXPECT_NEAR(s.u.sum(), mu0, 1e-12 * std::max(1.0, mu0));
    EXPECT_NEAR(s.v.sum(), mv0, 1e-12 * std::max(1.0, mv0));
  }
}

TEST(RunSimulation, HomogeneousStopsAtSteadyState) {
  const auto g = build_grid(16, 1.0);
  ModelParams p;
  InitialCondition ic{ic::Constant{1.0}, ic::Constant{1.0}, ic::Constant{1.0 / 3.0}};
  StepControl c;
  c.t_end = 10.0;
  const auto traj = run_simulation(ic, p, g, c, EnergyConfig{});
  EXPECT_EQ(traj.termination, Termination::SteadyState);
  ASSERT_EQ(traj.records.size(), 2u);
  EXPECT_EQ(traj.records[0].t, 0.0);
  EXPECT_NEAR(traj.records[1].t, 0.1, 1e-15);
}

TEST(RunSimulation, OutputCadenceLandsOnMultiples) {
  const auto g = build_grid(16, 1.0);
  InitialCondition ic{ic::ConstantPlusCosine{1.0, 0.2, 1}, ic::Constant{0.5}, ic::Constant{0.5}};
  StepControl c;
  c.t_end = 1.0;
  c.output_every = 0.25;
  const auto traj = run_simulation(ic, ModelParams{}, g, c, no_steady_stop());
  EXPECT_EQ(traj.termination, Termination::ReachedTEnd);
  ASSERT_EQ(traj.records.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(traj.records[k].t, 0.25 * k);
  EXPECT_EQ(traj.final_state.t, 1.0);
}

TEST(RunSimulation, ShortRunWithLongCadenceEndsWithOneFinalRecord) {
  const auto g = build_grid(16, 1.0);
  InitialCondition ic{ic::ConstantPlusCosine{1.0, 0.2, 1}, ic::Constant{0.5}, ic::Constant{0.5}};
  StepControl c;
  c.t_end = 0.1;
  c.output_every = 5.0;
  const auto traj = run_simulation(ic, ModelParams{}, g, c, no_steady_stop());
  ASSERT_EQ(traj.records.size(), 2u);
  EXPECT_EQ(traj.records[0].t, 0.0);
  EXPECT_EQ(traj.records[1].t, 0.1);
}

TEST(RunSimulation, SnapshotsAtRequestedTimes) {
  const auto g = build_grid(16, 1.0);
  InitialCondition ic{ic::ConstantPlusCosine{1.0, 0.2, 1}, ic::Constant{0.5}, ic::Constant{0.5}};
  StepControl c;
  c.t_end = 0.5;
  c.snapshot_times = {0.33, 0.0, 0.5, 7.0};
  const auto traj = run_simulation(ic, ModelParams{}, g, c, no_steady_stop());
  ASSERT_EQ(traj.snapshots.size(), 3u);
  EXPECT_EQ(traj.snapshots[0].t, 0.0);
  EXPECT_EQ(traj.snapshots[1].t, 0.33);
  EXPECT_EQ(traj.snapshots[2].t, 0.5);
}

TEST(RunSimulation, RecordsMassAndEquilibrium) {
  const auto g = build_grid(32, 2.0);
  InitialCondition ic{ic::ConstantPlusCosine{0.8, 0.3, 2}, ic::GaussianBump{1.0, 0.3, 0.5, 0.1}, ic::Constant{0.4}};
  ModelParams p{1.0, 2.0, 1.0, 1.0, 1.0, 1.0};
  StepControl c;
  c.t_end = 0.3;
  const auto traj = run_simulation(ic, p, g, c, no_steady_stop());
  EXPECT_NEAR(traj.equilibrium.ubar0, 0.8, 1e-14);
  for (const auto& r : traj.records) {
    EXPECT_NEAR(r.mass_u, traj.mass_u0, 1e-12);
    EXPECT_NEAR(r.mass_v, traj.mass_v0, 1e-12);
  }
  EXPECT_GT(traj.steps, 0);
}

TEST(RunSimulation, ConvergesUnderRefinement) {
  // Errors against a fine reference should fall when both dx and dt shrink.
  ModelParams p;
  InitialCondition ic{ic::ConstantPlusCosine{1.0, 1e-3, 1}, ic::ConstantPlusCosine{0.5, 1e-3, 2},
                      ic::ConstantPlusCosine{0.5, 1e-3, 1}};
  const auto run = [&](int n, double dt) {
    StepControl c;
    c.t_end = 0.2;
    c.dt_max = dt;
    c.output_every = 0.2;
    return run_simulation(ic, p, build_grid(n, 1.0), c, no_steady_stop()).final_state;
  };
  const auto fine = run(256, 2.5e-4);
  const auto restrict_err = [&](const FieldState& coarse) {
    const int n = static_cast<int>(coarse.u.size());
    const int k = 256 / n;
    double err = 0.0;
    for (int i = 0; i < n; ++i) err = std::max(err, std::abs(fine.u.segment(i * k, k).mean() - coarse.u[i]));
    return err;
  };
  const double e16 = restrict_err(run(16, 4e-3));
  const double e64 = restrict_err(run(64, 1e-3));
  EXPECT_LT(e64, e16 / 4.0);
}

}  // namespace
}  // namespace fex
