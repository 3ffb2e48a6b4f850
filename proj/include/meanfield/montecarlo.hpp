#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "meanfield/model.hpp"
#include "meanfield/sde.hpp"

namespace meanfield {

/// A validated config ready for simulation.
struct Scenario {
  PopulationLayout layout;
  TimeGrid grid;
  double eta = -0.7;
  double y0 = 0.0;
  double T = 1.0;
};

Scenario make_scenario(const SystemConfig& config, const ValidationOptions& options = {});

struct RunSettings {
  std::int64_t replications = 10000;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Worker count from MEANFIELD_THREADS, else hardware concurrency (at least 1).
int default_thread_count();

struct LossDistribution {
  std::vector<std::int64_t> counts;    // replications with k defaults, k = 0..N
  std::vector<double> probability;     // counts / reps
  std::vector<double> standard_error;  // sqrt(p (1 - p) / reps)
  double tail_default_probability = 0.0;
  std::int64_t replications = 0;
  std::string fingerprint;
};

struct EstimateWithError {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::int64_t replications = 0;
  std::optional<double> log_rate;     // -(1/N) log(estimate), when estimate > 0
  std::optional<double> upper_bound;  // rule of three, when estimate == 0
};

/// Hex digest identifying the scenario parameters.
std::string scenario_fingerprint(const Scenario& scenario);

LossDistribution estimate_loss_distribution(const Scenario& scenario, const RunSettings& run);
LossDistribution estimate_loss_distribution(const SystemConfig& config, const RunSettings& run);

/// Frequency of the systemic event {min_t Ybar_t <= eta}.
EstimateWithError estimate_systemic_event(const Scenario& scenario, const RunSettings& run);
EstimateWithError estimate_systemic_event(const SystemConfig& config, const RunSettings& run);

/// Frequency of {max_t |Y_i - Ybar| > delta}.
EstimateWithError estimate_flocking_exceedance(const Scenario& scenario, int agent, double delta,
                                               const RunSettings& run);

enum class AsymptoteMethod { quadrature, expansion };

struct ConvergenceRow {
  int n_agents = 0;
  EstimateWithError p_hat;
  double asymptote = 0.0;   // eta^2 / (2 V_T^2)
  std::optional<double> gap;  // |log_rate - asymptote| / asymptote
};

/// Scales the base config's group counts to each N (ratio preserved exactly)
/// and compares the empirical log-rate with the large-N asymptote.
std::vector<ConvergenceRow> convergence_study(const SystemConfig& base,
                                              const std::vector<int>& n_list,
                                              const RunSettings& run,
                                              AsymptoteMethod method = AsymptoteMethod::quadrature);

/// Group counts of `base` rescaled to N agents; throws listing admissible N.
std::vector<int> scaled_counts(const SystemConfig& base, int n_agents);

struct ExpansionErrorRow {
  double delta = 0.0;
  double v2_quadrature = 0.0;
  double v2_expansion = 0.0;
  double abs_error = 0.0;
};

/// Quadrature vs expansion along alpha_k = alpha_bar (1 + delta c_k).
std::vector<ExpansionErrorRow> expansion_error_study(const Eigen::VectorXd& direction,
                                                     const Eigen::VectorXd& rho,
                                                     const Eigen::VectorXd& sigma, double alpha_bar,
                                                     double T, const std::vector<double>& deltas,
                                                     double tol = 1e-12);

std::string loss_distribution_csv(const LossDistribution& dist);
std::string convergence_csv(const std::vector<ConvergenceRow>& rows);
std::string expansion_csv(const std::vector<ExpansionErrorRow>& rows);

}  // namespace meanfield
