#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace meanfield {

/// One homogeneous sub-population: `count` agents sharing (alpha, sigma).
struct GroupSpec {
  double alpha = 0.0;  // mean-reversion rate towards the empirical mean
  double sigma = 1.0;  // volatility
  int count = 1;

  friend bool operator==(const GroupSpec&, const GroupSpec&) = default;
};

/// Declarative description of a simulation/analysis scenario.
struct SystemConfig {
  std::vector<GroupSpec> groups;
  double T = 1.0;
  double eta = -0.7;  // default level, must be negative
  double dt = 1e-3;
  double y0 = 0.0;
  std::uint64_t seed = 1;
  std::int64_t replications = 10000;

  int num_agents() const;
  friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

struct ValidationOptions {
  // Permit sigma == 0 groups. Only used for degenerate (noiseless) checks;
  // configs read from disk are always validated strictly.
  bool allow_noiseless = false;
};

/// Group-level parameters (alpha_k, sigma_k, rho_k), the input of all
/// analytic variance computations.
template <typename Scalar>
struct GroupParameters {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector alpha;
  Vector sigma;
  Vector rho;

  Eigen::Index size() const { return alpha.size(); }
};

/// Per-agent expansion of a validated config. Agents of one group are
/// contiguous and appear in group order.
struct PopulationLayout {
  Eigen::VectorXd alpha;               // length N
  Eigen::VectorXd sigma;               // length N
  std::vector<int> group_of;           // length N
  std::vector<int> counts;             // length K
  Eigen::VectorXd group_alpha;         // length K
  Eigen::VectorXd group_sigma;         // length K
  Eigen::VectorXd rho;                 // length K, count_k / N

  int num_agents() const { return static_cast<int>(alpha.size()); }
  int num_groups() const { return static_cast<int>(rho.size()); }
  bool homogeneous_alpha() const;
  GroupParameters<double> groups() const { return {group_alpha, group_sigma, rho}; }
};

/// alpha_k = alpha_bar * (1 + eps_k) with alpha_bar = sum_k rho_k alpha_k.
struct ExpansionCoefficients {
  double alpha_bar = 0.0;
  Eigen::VectorXd eps;
};

/// Re-checks every config invariant and expands groups into per-agent arrays.
/// Throws ValidationError with a field-specific message.
PopulationLayout validate_and_expand(const SystemConfig& config,
                                     const ValidationOptions& options = {});

/// Number of Euler steps T/dt; throws if T is not an integer multiple of dt.
std::int64_t step_count(double T, double dt);

ExpansionCoefficients expansion_coefficients(const PopulationLayout& layout);
ExpansionCoefficients expansion_coefficients(const Eigen::VectorXd& alpha,
                                             const Eigen::VectorXd& rho);

}  // namespace meanfield
