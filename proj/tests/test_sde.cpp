#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "meanfield/analytics.hpp"
#include "meanfield/errors.hpp"
#include "meanfield/sde.hpp"

using namespace meanfield;

namespace {

SystemConfig make_config(std::vector<GroupSpec> groups, double dt = 1e-3, double T = 1.0) {
  SystemConfig cfg;
  cfg.groups = std::move(groups);
  cfg.dt = dt;
  cfg.T = T;
  return cfg;
}

SystemConfig group_a_config() { return make_config({{1, 2, 2}, {10, 1, 5}, {100, 0.5, 3}}); }

}  // namespace

TEST(SimulateReplication, NoiselessSystemStaysAtZero) {
  const auto layout = validate_and_expand(make_config({{1, 0, 3}, {50, 0, 2}}), {.allow_noiseless = true});
  const auto grid = make_time_grid(1.0, 1e-3);
  const auto traj = simulate_replication(layout, grid, 0.0, 9, 0);
  EXPECT_EQ(traj.paths.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(detect_defaults(traj, -0.7).defaulted_count, 0);
  for (int i = 0; i < traj.num_agents(); ++i) EXPECT_EQ(max_deviation(traj, i), 0.0);
}

TEST(SimulateReplication, InitialValueAndMeanPathInvariants) {
  const auto layout = validate_and_expand(group_a_config());
  const auto grid = make_time_grid(1.0, 1e-3);
  const auto traj = simulate_replication(layout, grid, 0.25, 3, 7);
  EXPECT_EQ(traj.paths.rows(), 10);
  EXPECT_EQ(traj.paths.cols(), 1001);
  EXPECT_TRUE((traj.paths.col(0).array() == 0.25).all());
  const Eigen::VectorXd colmean = traj.paths.colwise().mean().transpose();
  for (Eigen::Index m = 0; m < colmean.size(); ++m)
    ASSERT_NEAR(traj.mean_path(m), colmean(m), 1e-12 * std::max(1.0, std::abs(colmean(m))));
}

TEST(SimulateReplication, DeterministicInSeedAndReplication) {
  const auto layout = validate_and_expand(group_a_config());
  const auto grid = make_time_grid(1.0, 1e-2);
  const auto a = simulate_replication(layout, grid, 0.0, 5, 2);
  const auto b = simulate_replication(layout, grid, 0.0, 5, 2);
  const auto c = simulate_replication(layout, grid, 0.0, 5, 3);
  EXPECT_EQ(a.paths, b.paths);
  EXPECT_NE(a.paths, c.paths);
}

// With a common alpha the drift sums to zero, so N * Ybar_m is the sum of
// sigma_i times the cumulative Gaussian increments, replayed from the streams.
TEST(SimulateReplication, EqualAlphaMeanIsDriftFree) {
  const auto layout = validate_and_expand(make_config({{10, 3, 2}, {10, 1, 4}, {10, 0.2, 4}}));
  const auto grid = make_time_grid(1.0, 1e-3);
  const std::uint64_t seed = 17, rep = 4;
  const auto traj = simulate_replication(layout, grid, 0.0, seed, rep);
  const int n = layout.num_agents();
  std::vector<GaussianStream> streams;
  for (int i = 0; i < n; ++i) streams.emplace_back(stream_key(seed, rep, static_cast<std::uint64_t>(i)));
  Eigen::VectorXd cumulative = Eigen::VectorXd::Zero(n);
  const double sqdt = std::sqrt(grid.dt);
  for (std::int64_t m = 1; m <= grid.n_steps; ++m) {
    Eigen::VectorXd increment(n);
    for (int i = 0; i < n; ++i) increment(i) = streams[static_cast<std::size_t>(i)].next() * sqdt;
    cumulative += increment;
    const double expected_sum = layout.sigma.dot(cumulative);
    ASSERT_NEAR(n * traj.mean_path(m), expected_sum, 1e-10 * (1.0 + std::abs(expected_sum))) << "step " << m;
    const double step = traj.mean_path(m) - traj.mean_path(m - 1);
    ASSERT_NEAR(step, layout.sigma.dot(increment) / n, 1e-10);
  }
}

TEST(SimulateReplication, ExchangeWithinGroupPermutesPaths) {
  const auto layout = validate_and_expand(group_a_config());
  const auto grid = make_time_grid(1.0, 1e-3);
  std::vector<std::uint64_t> ids(10);
  std::iota(ids.begin(), ids.end(), 0);
  std::swap(ids[3], ids[6]);  // both in the (10, 1) group
  std::swap(ids[7], ids[9]);  // both in the (100, 0.5) group
  const auto base = simulate_replication(layout, grid, 0.0, 21, 0);
  const auto swapped = simulate_replication(layout, grid, 0.0, 21, 0, ids);
  EXPECT_EQ(base.mean_path, swapped.mean_path);
  for (int i = 0; i < 10; ++i)
    EXPECT_EQ(base.paths.row(static_cast<Eigen::Index>(ids[static_cast<std::size_t>(i)])), swapped.paths.row(i));
}

TEST(SimulateReplication, ScalingSigmaAndEtaPreservesDefaults) {
  auto cfg = group_a_config();
  auto scaled = cfg;
  for (auto& g : scaled.groups) g.sigma *= 2.0;
  const auto a = validate_and_expand(cfg);
  const auto b = validate_and_expand(scaled);
  const auto grid = make_time_grid(1.0, 1e-3);
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    const auto ra = detect_defaults(summarize_replication(a, grid, 0.0, 8, rep), -0.7);
    const auto rb = detect_defaults(summarize_replication(b, grid, 0.0, 8, rep), -1.4);
    ASSERT_EQ(ra.defaulted, rb.defaulted);
    ASSERT_EQ(ra.systemic, rb.systemic);
  }
}

TEST(SimulateReplication, StreamingSummaryMatchesFullPaths) {
  const auto layout = validate_and_expand(group_a_config());
  const auto grid = make_time_grid(1.0, 1e-3);
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    const auto full = summarize(simulate_replication(layout, grid, 0.0, 1, rep));
    const auto streamed = summarize_replication(layout, grid, 0.0, 1, rep);
    EXPECT_EQ(full.agent_min, streamed.agent_min);
    EXPECT_EQ(full.max_deviation, streamed.max_deviation);
    EXPECT_EQ(full.mean_min, streamed.mean_min);
  }
}

TEST(SimulateReplication, BlowupIsReported) {
  auto layout = validate_and_expand(make_config({{1, 1, 1}, {1, 2, 1}}));
  layout.alpha.setConstant(60000.0);  // alpha * dt = 60, bypassing the guard
  const auto grid = make_time_grid(1.0, 1e-3);
  try {
    simulate_replication(layout, grid, 0.0, 1, 0);
    FAIL() << "expected a numerical error";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
  }
}

TEST(DetectDefaults, ThresholdCrossing) {
  TrajectorySet traj;
  traj.paths = Eigen::MatrixXd::Zero(3, 5);
  traj.mean_path = Eigen::VectorXd::Zero(5);
  auto rec = detect_defaults(traj, -0.7);
  EXPECT_EQ(rec.defaulted_count, 0);
  EXPECT_FALSE(rec.systemic);

  traj.paths(1, 3) = -0.71;
  traj.mean_path = traj.paths.colwise().mean().transpose();
  rec = detect_defaults(traj, -0.7);
  EXPECT_EQ(rec.defaulted_count, 1);
  EXPECT_TRUE(rec.defaulted[1]);
  EXPECT_FALSE(rec.systemic);

  traj.paths(1, 3) = -0.7;  // touching the level counts
  EXPECT_TRUE(detect_defaults(traj, -0.7).defaulted[1]);
}

TEST(MaxDeviation, SingleAgentAndRange) {
  const auto layout = validate_and_expand(make_config({{5, 1, 1}}));
  const auto traj = simulate_replication(layout, make_time_grid(1.0, 1e-3), 0.0, 1, 0);
  EXPECT_EQ(max_deviation(traj, 0), 0.0);
  EXPECT_THROW(max_deviation(traj, 1), ValidationError);
  EXPECT_THROW(max_deviation(traj, -1), ValidationError);
}

// N = 1: the drift vanishes identically and the path is sigma * W on the
// grid. Reflection principle: P(min W <= eta) = 2 Phi(eta). The grid minimum
// misses crossings between points, biasing the estimate low by at most 0.02.
TEST(DetectDefaults, SingleAgentMatchesReflectionPrinciple) {
  const auto layout = validate_and_expand(make_config({{3.0, 1.0, 1}}));
  const auto grid = make_time_grid(1.0, 1e-3);
  constexpr int reps = 100000;
  int hits = 0;
  for (int r = 0; r < reps; ++r)
    hits += detect_defaults(summarize_replication(layout, grid, 0.0, 99, static_cast<std::uint64_t>(r)), -0.7)
                .defaulted_count;
  const double p = hits / static_cast<double>(reps);
  const double exact = 2.0 * standard_normal_cdf(-0.7);
  EXPECT_NEAR(exact, 0.4839, 1e-4);
  const double se = std::sqrt(exact * (1 - exact) / reps);
  EXPECT_LE(std::abs(p - exact), 3 * se + 0.02) << "p=" << p;
  EXPECT_LT(p, exact + 3 * se);  // discrete monitoring can only miss crossings
}

// Var(Ybar_T) = V_T^2 / N with V_T^2 from quadrature.
TEST(SimulateReplication, GroupAMeanVarianceMatchesQuadrature) {
  const auto layout = validate_and_expand(group_a_config());
  const auto grid = make_time_grid(1.0, 1e-3);
  constexpr int reps = 10000;
  std::vector<double> terminal(reps);
  for (int r = 0; r < reps; ++r) {
    EulerStepper stepper(layout, grid, 0.0, 2024, static_cast<std::uint64_t>(r));
    for (std::int64_t m = 0; m < grid.n_steps; ++m) stepper.step();
    terminal[static_cast<std::size_t>(r)] = stepper.mean();
  }
  double mean = 0, var = 0;
  for (double x : terminal) mean += x;
  mean /= reps;
  for (double x : terminal) var += (x - mean) * (x - mean);
  var /= (reps - 1);
  const double expected = variance_quadrature(layout.groups(), 1.0).value / layout.num_agents();
  const double se = expected * std::sqrt(2.0 / (reps - 1));
  EXPECT_NEAR(var, expected, 3 * se) << "expected " << expected;
}

TEST(TrajectoryCsv, HeaderAndPrecision) {
  const auto layout = validate_and_expand(make_config({{1, 1, 2}}, 0.25));
  const auto grid = make_time_grid(1.0, 0.25);
  const auto traj = simulate_replication(layout, grid, 0.0, 1, 0);
  const auto path = std::filesystem::temp_directory_path() / "meanfield_traj_test.csv";
  write_trajectory_csv(traj, grid, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,agent_0,agent_1,mean\r");
  int rows = 0;
  while (std::getline(in, line)) {
    if (rows == 1) {
      const auto first = line.substr(line.find(',') + 1, line.find(',', line.find(',') + 1) - line.find(',') - 1);
      EXPECT_EQ(std::stod(first), traj.paths(0, 1));  // round-trips exactly
    }
    ++rows;
  }
  EXPECT_EQ(rows, 5);
  std::filesystem::remove(path);
}
