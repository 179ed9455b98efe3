#include "fex/errors.hpp"
#include "fex/output.hpp"
#include "fex/sweep.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fex {
namespace {

namespace fs = std::filesystem;

class OutputTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fex_output_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) out.push_back(item);
  return out;
}

Trajectory homogeneous_run() {
  const auto g = build_grid(16, 1.0);
  ModelParams p;
  p.r = 2.0;
  InitialCondition ic{ic::Constant{0.6}, ic::Constant{0.4}, ic::Constant{1.0}};
  StepControl c;
  c.t_end = 0.5;
  EnergyConfig e;
  e.steady_tol = 0.0;
  return run_simulation(ic, p, g, c, e);
}

Trajectory relaxing_run(int n = 32) {
  ModelParams p;
  InitialCondition ic{ic::ConstantPlusCosine{0.8, 0.05, 1}, ic::ConstantPlusCosine{0.2, 0.02, 2},
                      ic::Constant{0.5}};
  StepControl c;
  c.t_end = 1.0;
  c.output_every = 0.05;
  EnergyConfig e;
  e.steady_tol = 0.0;
  return run_simulation(ic, p, build_grid(n, 1.0), c, e);
}

TEST_F(OutputTest, EmptyTrajectoryWritesHeaderOnly) {
  const auto path = write_timeseries(Trajectory{}, dir_);
  EXPECT_EQ(slurp(path), std::string(kTimeseriesHeader) + "\n");
}

TEST_F(OutputTest, HeaderMatchesRowWidth) {
  const auto traj = relaxing_run();
  const auto header = split(kTimeseriesHeader, ',');
  EXPECT_EQ(header.size(), 24u);
  EXPECT_EQ(header.front(), "t");
  EXPECT_EQ(header.back(), "w_bound_slack");
  for (const auto& rec : traj.records) EXPECT_EQ(split(timeseries_row(rec), ',').size(), header.size());
}

TEST_F(OutputTest, HomogeneousRunHasZeroDeviationColumns) {
  const auto traj = homogeneous_run();
  const auto text = slurp(write_timeseries(traj, dir_));
  const auto lines = split(text, '\n');
  ASSERT_EQ(lines.size(), traj.records.size() + 1);
  const auto header = split(lines[0], ',');
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto cells = split(lines[k], ',');
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c].rfind("linf_dev_", 0) == 0 || header[c].rfind("l1_dev_", 0) == 0 || header[c] == "F" ||
          header[c] == "D") {
        EXPECT_LE(std::abs(std::stod(cells[c])), 1e-12) << header[c] << " at line " << k;
      }
    }
  }
}

TEST_F(OutputTest, EquilibriumIsReportedBitExact) {
  const auto traj = homogeneous_run();
  ModelParams p;
  p.r = 2.0;
  const auto s = summarize(traj, p, build_grid(16, 1.0), EnergyConfig{});
  const auto j = summary_to_json(s);
  EXPECT_EQ(j["wstar"].get<double>(), equilibrium_w(p, 0.6, 0.4));
  EXPECT_EQ(nlohmann::json::parse(j.dump())["wstar"].get<double>(), equilibrium_w(p, 0.6, 0.4));
}

TEST_F(OutputTest, SummaryCarriesEveryField) {
  const auto traj = relaxing_run();
  const auto s = summarize(traj, ModelParams{}, build_grid(32, 1.0), EnergyConfig{});
  const auto j = nlohmann::json::parse(slurp(write_summary(s, dir_)));
  for (const char* key : {"termination", "converged", "error", "t_final", "steps", "records", "ubar0", "vbar0",
                          "wstar", "final_deviation", "fit", "stability", "energy", "max_mass_drift_u",
                          "max_mass_drift_v", "min_w_bound_slack", "violations"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["termination"], "reached_t_end");
  EXPECT_TRUE(j["error"].is_null());
  EXPECT_EQ(j["records"], traj.records.size());
  EXPECT_GT(j["fit"]["alpha"].get<double>(), 0.0);
  EXPECT_TRUE(j["stability"]["normalized"].get<bool>());
  for (const auto& [k, v] : j["violations"].items()) EXPECT_EQ(v.get<int>(), 0) << k;
}

TEST_F(OutputTest, WritingIsDeterministic) {
  const auto a = slurp(write_timeseries(relaxing_run(), dir_ / "a"));
  const auto b = slurp(write_timeseries(relaxing_run(), dir_ / "b"));
  EXPECT_EQ(a, b);
}

TEST_F(OutputTest, SnapshotFileNameAndColumns) {
  const auto g = build_grid(4, 1.0);
  FieldState s{0.25, Field::Ones(4), Field::Constant(4, 2.0), Field::Constant(4, 3.0)};
  const auto path = write_snapshot(s, g, dir_);
  EXPECT_EQ(path.filename(), "snapshot_0.25.csv");
  const auto lines = split(slurp(path), '\n');
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "x,u,v,w");
  EXPECT_EQ(lines[1], "0.125,1,2,3");
}

TEST_F(OutputTest, SnapshotReadsBackAsInitialCondition) {
  const auto traj = relaxing_run(16);
  const auto g = build_grid(16, 1.0);
  const auto path = write_snapshot(traj.final_state, g, dir_);
  InitialCondition ic{ic::FromFile{path.string()}, ic::FromFile{path.string()}, ic::FromFile{path.string()}};
  const auto back = init_state(ic, g);
  EXPECT_EQ(back.u, traj.final_state.u);
  EXPECT_EQ(back.v, traj.final_state.v);
  EXPECT_EQ(back.w, traj.final_state.w);
}

TEST_F(OutputTest, UnwritableDirectoryRaisesIoError) {
  fs::create_directories(dir_);
  std::ofstream(dir_ / "blocker") << "x";
  EXPECT_THROW(write_timeseries(Trajectory{}, dir_ / "blocker" / "sub"), IoError);
}

SweepSpec small_sweep() {
  SweepSpec spec;
  spec.base.n = 16;
  spec.base.init = InitialCondition{ic::ConstantPlusCosine{0.9, 0.05, 1}, ic::ConstantPlusCosine{0.1, 0.01, 1},
                                    ic::Constant{0.5}};
  spec.base.time.t_end = 0.5;
  spec.axes = {SweepDimension{SweepAxis::Chi2, {1.0, 5.0, 20.0}}, SweepDimension{SweepAxis::Vbar0, {0.1, 0.3}}};
  spec.keep_total_mean = true;
  return spec;
}

TEST_F(OutputTest, SweepIsIndependentOfWorkerCount) {
  const auto spec = small_sweep();
  const auto serial = run_sweep(spec, 1);
  const auto parallel = run_sweep(spec, 4);
  ASSERT_EQ(serial.size(), 6u);
  for (std::size_t k = 0; k < serial.size(); ++k) EXPECT_EQ(sweep_row(serial[k]), sweep_row(parallel[k]));
  EXPECT_EQ(slurp(write_sweep_report(spec, serial, dir_ / "s")), slurp(write_sweep_report(spec, parallel, dir_ / "p")));
}

TEST_F(OutputTest, SweepKeepsTotalMean) {
  const auto spec = small_sweep();
  const auto coords = sweep_coordinates(spec);
  ASSERT_EQ(coords.size(), 6u);
  EXPECT_EQ(coords[1], (std::vector<double>{1.0, 0.3}));
  const auto cfg = sweep_point_config(spec, coords[1]);
  EXPECT_EQ(cfg.params.chi2, 1.0);
  EXPECT_NEAR(std::get<ic::ConstantPlusCosine>(cfg.init.v).base, 0.3, 1e-15);
  EXPECT_NEAR(std::get<ic::ConstantPlusCosine>(cfg.init.u).base, 0.7, 1e-15);
  const auto pt = run_sweep_point(spec, coords[1]);
  EXPECT_NEAR(pt.ubar0 + pt.vbar0, 1.0, 1e-12);
  EXPECT_TRUE(pt.normalized);
}

TEST_F(OutputTest, SweepHeaderNamesAxes) {
  const auto h = split(sweep_header(small_sweep()), ',');
  EXPECT_EQ(h[0], "axis_chi2");
  EXPECT_EQ(h[1], "axis_vbar0");
}

}  // namespace
}  // namespace fex
