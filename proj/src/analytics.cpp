#include "meanfield/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace meanfield {

GeneratorTriple<double> build_generator(const PopulationLayout& layout) {
  return build_generator(layout.groups());
}

double variance_delta_expansion(const ExpansionCoefficients& coeffs, const PopulationLayout& layout,
                                double T) {
  if (coeffs.eps.size() != layout.num_groups())
    throw ValidationError("expansion coefficients do not match the layout");
  return variance_delta_expansion<double>(coeffs.alpha_bar, coeffs.eps, layout.group_sigma,
                                          layout.rho, T);
}

VarianceReport variance_report(const PopulationLayout& layout, double T, double tol) {
  const auto groups = layout.groups();
  VarianceReport report;
  report.quadrature = variance_quadrature(groups, T, tol);
  if (layout.num_groups() == 2 && groups.alpha.dot(groups.rho.reverse()) > 0.0)
    report.closed_form_k2 = variance_closed_form_k2(groups, T);
  if (layout.homogeneous_alpha()) report.homogeneous = variance_homogeneous(groups, T);
  if (layout.rho.dot(layout.group_alpha) > 0.0)
    report.expansion = variance_delta_expansion(expansion_coefficients(layout), layout, T);
  return report;
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double gaussian_tail_exact(double v_t, int n_agents, double eta) {
  if (v_t < 0.0 || !std::isfinite(v_t)) throw ValidationError("V_T must be finite and non-negative");
  if (n_agents < 1) throw ValidationError("N must be at least 1");
  if (!(eta < 0.0)) throw ValidationError("eta must be negative");
  if (v_t == 0.0) return 0.0;
  return 2.0 * standard_normal_cdf(eta * std::sqrt(static_cast<double>(n_agents)) / v_t);
}

TailApproximation laplace_tail_approx(double v2, int n_agents, double eta) {
  if (!(v2 > 0.0)) throw ValidationError("V_T^2 must be positive");
  TailApproximation out;
  out.rate = eta * eta / (2.0 * v2);
  out.raw = 2.0 * std::exp(-out.rate * static_cast<double>(n_agents));
  out.clamped = std::min(out.raw, 1.0);
  return out;
}

FlockingBound flocking_bound(const PopulationLayout& layout, int agent, double delta, double T) {
  if (!layout.homogeneous_alpha())
    throw NotApplicableError("flocking bound holds only for a common alpha");
  const int n = layout.num_agents();
  if (agent < 0 || agent >= n)
    throw ValidationError("agent index " + std::to_string(agent) + " out of range");
  if (!(delta > 0.0)) throw ValidationError("delta must be positive");
  if (!(T >= 0.0)) throw ValidationError("T must be non-negative");

  const double alpha = layout.alpha(0);
  const double nd = static_cast<double>(n);
  const Eigen::ArrayXd s2 = layout.sigma.array().square();
  const double total = s2.sum();
  // kappa_i^2 = (1 - 1/N)^2 sigma_i^2 + (1/N^2) sum_{j != i} sigma_j^2
  const Eigen::ArrayXd kappa2 =
      (1.0 - 1.0 / nd) * (1.0 - 1.0 / nd) * s2 + (total - s2) / (nd * nd);

  FlockingBound out;
  out.kappa = kappa2.sqrt().matrix();
  // (1 - e^{-2 alpha T}) / alpha, continuous at alpha = 0
  const double decay = alpha > 0.0 ? -std::expm1(-2.0 * alpha * T) / alpha : 2.0 * T;
  const double scale = kappa2(agent) * decay;
  out.bound_raw = scale > 0.0 ? 2.0 * std::exp(-delta * delta / scale) : 0.0;
  out.bound = std::min(out.bound_raw, 1.0);
  out.flocking_parameter = alpha > 0.0 ? kappa2.maxCoeff() / alpha
                                       : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace meanfield
