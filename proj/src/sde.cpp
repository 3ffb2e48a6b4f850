#include "meanfield/sde.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "meanfield/csv.hpp"
#include "meanfield/errors.hpp"

namespace meanfield {

TimeGrid make_time_grid(double T, double dt) { return TimeGrid{step_count(T, dt), dt}; }

EulerStepper::EulerStepper(const PopulationLayout& layout, const TimeGrid& grid, double y0,
                           std::uint64_t seed, std::uint64_t replication,
                           std::span<const std::uint64_t> stream_ids)
    : drift_rate_(layout.alpha.array() * grid.dt),
      noise_scale_(layout.sigma.array() * std::sqrt(grid.dt)),
      state_(Eigen::VectorXd::Constant(layout.num_agents(), y0)),
      order_(static_cast<std::size_t>(layout.num_agents())) {
  std::iota(order_.begin(), order_.end(), 0);
  const auto n = static_cast<std::size_t>(layout.num_agents());
  if (!stream_ids.empty() && stream_ids.size() != n)
    throw ValidationError("stream_ids must have one entry per agent");
  streams_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t id = stream_ids.empty() ? i : stream_ids[i];
    streams_.emplace_back(stream_key(seed, replication, id));
  }
  mean_ = compute_mean();
}

double EulerStepper::compute_mean() {
  const double* y = state_.data();
  for (std::size_t i = 1; i < order_.size(); ++i) {
    const int key = order_[i];
    std::size_t j = i;
    for (; j > 0 && y[order_[j - 1]] > y[key]; --j) order_[j] = order_[j - 1];
    order_[j] = key;
  }
  double sum = 0.0;
  for (int i : order_) sum += y[i];
  return sum / static_cast<double>(order_.size());
}

void EulerStepper::step() {
  const Eigen::Index n = state_.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = streams_[static_cast<std::size_t>(i)].next();
    state_(i) += drift_rate_(i) * (mean_ - state_(i)) + noise_scale_(i) * z;
  }
  ++step_;
  mean_ = compute_mean();
  if (!std::isfinite(mean_)) {
    Eigen::Index bad = 0;
    for (; bad < n; ++bad)
      if (!std::isfinite(state_(bad))) break;
    std::ostringstream os;
    os << "numerical blowup at step " << step_;
    if (bad < n) os << ", agent " << bad;
    throw NumericalError(os.str());
  }
}

TrajectorySet simulate_replication(const PopulationLayout& layout, const TimeGrid& grid, double y0,
                                   std::uint64_t seed, std::uint64_t replication,
                                   std::span<const std::uint64_t> stream_ids) {
  EulerStepper stepper(layout, grid, y0, seed, replication, stream_ids);
  TrajectorySet traj;
  traj.replication = replication;
  traj.seed = seed;
  traj.paths.resize(layout.num_agents(), grid.n_steps + 1);
  traj.mean_path.resize(grid.n_steps + 1);
  traj.paths.col(0) = stepper.state();
  traj.mean_path(0) = stepper.mean();
  for (std::int64_t m = 1; m <= grid.n_steps; ++m) {
    stepper.step();
    traj.paths.col(m) = stepper.state();
    traj.mean_path(m) = stepper.mean();
  }
  return traj;
}

PathSummary summarize_replication(const PopulationLayout& layout, const TimeGrid& grid, double y0,
                                  std::uint64_t seed, std::uint64_t replication) {
  EulerStepper stepper(layout, grid, y0, seed, replication);
  PathSummary s;
  s.agent_min = stepper.state();
  s.max_deviation = (stepper.state().array() - stepper.mean()).abs().matrix();
  s.mean_min = stepper.mean();
  for (std::int64_t m = 1; m <= grid.n_steps; ++m) {
    stepper.step();
    const auto& y = stepper.state();
    s.agent_min = s.agent_min.cwiseMin(y);
    s.max_deviation = s.max_deviation.cwiseMax((y.array() - stepper.mean()).abs().matrix());
    s.mean_min = std::min(s.mean_min, stepper.mean());
  }
  return s;
}

PathSummary summarize(const TrajectorySet& traj) {
  PathSummary s;
  s.agent_min = traj.paths.rowwise().minCoeff();
  s.max_deviation =
      (traj.paths.rowwise() - traj.mean_path.transpose()).cwiseAbs().rowwise().maxCoeff();
  s.mean_min = traj.mean_path.minCoeff();
  return s;
}

DefaultRecord detect_defaults(const PathSummary& summary, double eta) {
  DefaultRecord rec;
  rec.defaulted.resize(static_cast<std::size_t>(summary.agent_min.size()));
  for (Eigen::Index i = 0; i < summary.agent_min.size(); ++i) {
    const bool hit = summary.agent_min(i) <= eta;
    rec.defaulted[static_cast<std::size_t>(i)] = hit;
    rec.defaulted_count += hit ? 1 : 0;
  }
  rec.systemic = summary.mean_min <= eta;
  return rec;
}

DefaultRecord detect_defaults(const TrajectorySet& traj, double eta) {
  return detect_defaults(summarize(traj), eta);
}

double max_deviation(const TrajectorySet& traj, int agent) {
  if (agent < 0 || agent >= traj.num_agents())
    throw ValidationError("agent index " + std::to_string(agent) + " out of range [0, " +
                          std::to_string(traj.num_agents()) + ")");
  return (traj.paths.row(agent).transpose() - traj.mean_path).cwiseAbs().maxCoeff();
}

void write_trajectory_csv(const TrajectorySet& traj, const TimeGrid& grid,
                          const std::filesystem::path& path) {
  std::string header = "t";
  for (int i = 0; i < traj.num_agents(); ++i) header += ",agent_" + std::to_string(i);
  header += ",mean\r\n";
  std::string body;
  for (Eigen::Index m = 0; m < traj.mean_path.size(); ++m) {
    body += format_double(grid.time(m));
    for (int i = 0; i < traj.num_agents(); ++i) {
      body.push_back(',');
      body += format_double(traj.paths(i, m));
    }
    body.push_back(',');
    body += format_double(traj.mean_path(m));
    body += "\r\n";
  }
  write_file_atomic(path, header + body);
}

}  // namespace meanfield
