#include "meanfield/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "meanfield/errors.hpp"

namespace meanfield {

namespace {

[[noreturn]] void reject(const std::string& message) { throw ValidationError(message); }

std::string group_label(std::size_t k) { return "groups[" + std::to_string(k) + "]"; }

}  // namespace

int SystemConfig::num_agents() const {
  int n = 0;
  for (const auto& g : groups) n += g.count;
  return n;
}

bool PopulationLayout::homogeneous_alpha() const {
  if (group_alpha.size() == 0) return true;
  return (group_alpha.array() == group_alpha(0)).all();
}

std::int64_t step_count(double T, double dt) {
  if (!(T > 0.0) || !std::isfinite(T)) reject("T must be positive and finite");
  if (!(dt > 0.0) || !std::isfinite(dt)) reject("dt must be positive and finite");
  if (dt > T) reject("dt must not exceed T");
  const double ratio = T / dt;
  const auto n = static_cast<std::int64_t>(std::llround(ratio));
  // T/dt is computed with one rounding; allow one ulp of it plus one of T.
  const double slack = 2.0 * std::numeric_limits<double>::epsilon() * ratio;
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > slack) {
    std::ostringstream os;
    os << "T/dt must be an integer step count (T=" << T << ", dt=" << dt << ")";
    reject(os.str());
  }
  return n;
}

PopulationLayout validate_and_expand(const SystemConfig& config, const ValidationOptions& options) {
  if (config.groups.empty()) reject("groups must not be empty");

  double max_alpha = 0.0;
  for (std::size_t k = 0; k < config.groups.size(); ++k) {
    const auto& g = config.groups[k];
    if (!std::isfinite(g.sigma)) reject(group_label(k) + ".sigma must be finite");
    if (options.allow_noiseless) {
      if (g.sigma < 0.0) reject(group_label(k) + ".sigma must be non-negative");
    } else if (!(g.sigma > 0.0)) {
      reject(group_label(k) + ".sigma must be positive");
    }
    if (!std::isfinite(g.alpha) || g.alpha < 0.0)
      reject(group_label(k) + ".alpha must be finite and non-negative");
    if (g.count < 1) reject(group_label(k) + ".count must be at least 1");
    for (std::size_t j = 0; j < k; ++j) {
      if (config.groups[j].alpha == g.alpha && config.groups[j].sigma == g.sigma)
        reject("duplicate (alpha, sigma) pair in " + group_label(j) + " and " + group_label(k));
    }
    max_alpha = std::max(max_alpha, g.alpha);
  }

  if (!(config.eta < 0.0)) reject("eta must be negative");
  if (!std::isfinite(config.y0)) reject("y0 must be finite");
  if (config.replications < 1) reject("replications must be at least 1");
  step_count(config.T, config.dt);
  if (!(config.dt * max_alpha < 1.0)) {
    std::ostringstream os;
    os << "stability guard violated: dt * max(alpha) = " << config.dt * max_alpha
       << " must be < 1";
    reject(os.str());
  }

  const int n_agents = config.num_agents();
  const auto n_groups = static_cast<Eigen::Index>(config.groups.size());

  PopulationLayout layout;
  layout.alpha.resize(n_agents);
  layout.sigma.resize(n_agents);
  layout.group_of.resize(static_cast<std::size_t>(n_agents));
  layout.counts.resize(config.groups.size());
  layout.group_alpha.resize(n_groups);
  layout.group_sigma.resize(n_groups);
  layout.rho.resize(n_groups);

  int agent = 0;
  for (Eigen::Index k = 0; k < n_groups; ++k) {
    const auto& g = config.groups[static_cast<std::size_t>(k)];
    layout.counts[static_cast<std::size_t>(k)] = g.count;
    layout.group_alpha(k) = g.alpha;
    layout.group_sigma(k) = g.sigma;
    layout.rho(k) = static_cast<double>(g.count) / static_cast<double>(n_agents);
    for (int c = 0; c < g.count; ++c, ++agent) {
      layout.alpha(agent) = g.alpha;
      layout.sigma(agent) = g.sigma;
      layout.group_of[static_cast<std::size_t>(agent)] = static_cast<int>(k);
    }
  }
  return layout;
}

ExpansionCoefficients expansion_coefficients(const Eigen::VectorXd& alpha,
                                             const Eigen::VectorXd& rho) {
  if (alpha.size() != rho.size() || alpha.size() == 0)
    throw ValidationError("alpha and rho must be non-empty and of equal length");
  ExpansionCoefficients out;
  out.alpha_bar = rho.dot(alpha);
  if (!(out.alpha_bar > 0.0))
    throw ValidationError("expansion undefined: weighted mean alpha must be positive");
  out.eps = alpha / out.alpha_bar - Eigen::VectorXd::Ones(alpha.size());
  return out;
}

ExpansionCoefficients expansion_coefficients(const PopulationLayout& layout) {
  return expansion_coefficients(layout.group_alpha, layout.rho);
}

}  // namespace meanfield
