#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "meanfield/model.hpp"
#include "meanfield/rng.hpp"

namespace meanfield {

/// Uniform grid t_m = m * dt, m = 0..n_steps.
struct TimeGrid {
  std::int64_t n_steps = 0;
  double dt = 0.0;

  double horizon() const { return static_cast<double>(n_steps) * dt; }
  double time(std::int64_t m) const { return static_cast<double>(m) * dt; }
};

TimeGrid make_time_grid(double T, double dt);

/// Paths of one replication. paths(i, m) is agent i at grid point m.
struct TrajectorySet {
  Eigen::MatrixXd paths;
  Eigen::VectorXd mean_path;
  std::uint64_t replication = 0;
  std::uint64_t seed = 0;

  int num_agents() const { return static_cast<int>(paths.rows()); }
};

/// Per-replication reductions needed by the ensemble estimators; avoids
/// storing N x (n_steps + 1) paths.
struct PathSummary {
  Eigen::VectorXd agent_min;      // min over grid of each path
  Eigen::VectorXd max_deviation;  // max over grid of |Y_i - Ybar|
  double mean_min = 0.0;          // min over grid of the mean path
};

struct DefaultRecord {
  std::vector<bool> defaulted;
  int defaulted_count = 0;
  bool systemic = false;
};

/// Explicit Euler-Maruyama recursion for the mean-field system.
///
/// The empirical mean is summed in ascending order of the agent values, so it
/// depends only on the multiset of values: permuting agents (together with
/// their Gaussian streams) leaves the mean path bitwise unchanged. The sort
/// order is carried across steps and repaired by insertion, which is close to
/// linear because the ranking changes little per step.
class EulerStepper {
 public:
  /// `stream_ids` selects the Gaussian stream of each agent; empty means
  /// agent i uses stream i.
  EulerStepper(const PopulationLayout& layout, const TimeGrid& grid, double y0,
               std::uint64_t seed, std::uint64_t replication,
               std::span<const std::uint64_t> stream_ids = {});

  const Eigen::VectorXd& state() const { return state_; }
  double mean() const { return mean_; }
  std::int64_t step_index() const { return step_; }

  /// Advances one step; throws NumericalError on a non-finite value.
  void step();

 private:
  double compute_mean();

  Eigen::ArrayXd drift_rate_;  // alpha_i * dt
  Eigen::ArrayXd noise_scale_;  // sigma_i * sqrt(dt)
  Eigen::VectorXd state_;
  std::vector<int> order_;  // agent indices by ascending value
  std::vector<GaussianStream> streams_;
  double mean_ = 0.0;
  std::int64_t step_ = 0;
};

TrajectorySet simulate_replication(const PopulationLayout& layout, const TimeGrid& grid, double y0,
                                   std::uint64_t seed, std::uint64_t replication,
                                   std::span<const std::uint64_t> stream_ids = {});

/// Same recursion and random streams as simulate_replication, reduced on the fly.
PathSummary summarize_replication(const PopulationLayout& layout, const TimeGrid& grid, double y0,
                                  std::uint64_t seed, std::uint64_t replication);

PathSummary summarize(const TrajectorySet& traj);

DefaultRecord detect_defaults(const TrajectorySet& traj, double eta);
DefaultRecord detect_defaults(const PathSummary& summary, double eta);

/// max_m |paths(i, m) - mean_path(m)|; throws ValidationError for a bad index.
double max_deviation(const TrajectorySet& traj, int agent);

/// CSV with header `t,agent_0,...,agent_{N-1},mean`, one row per grid point.
void write_trajectory_csv(const TrajectorySet& traj, const TimeGrid& grid,
                          const std::filesystem::path& path);

}  // namespace meanfield
