#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "meanfield/errors.hpp"
#include "meanfield/model.hpp"

namespace meanfield {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// (M, R^{-1}, rho) of the group-average dynamics
///   d ybar = M ybar dt + N^{-1/2} R^{-1/2} dW,
/// with M_ij = -alpha_i (delta_ij - rho_j) and R_ij = rho_i sigma_i^{-2} delta_ij.
/// R^{-1} is stored as its diagonal sigma_k^2 / rho_k.
template <typename Scalar>
struct GeneratorTriple {
  MatrixX<Scalar> M;
  VectorX<Scalar> rinv;
  VectorX<Scalar> rho;

  MatrixX<Scalar> rinv_matrix() const { return rinv.asDiagonal(); }
};

template <typename Scalar>
GeneratorTriple<Scalar> build_generator(const GroupParameters<Scalar>& groups) {
  const Eigen::Index k = groups.size();
  GeneratorTriple<Scalar> g;
  const MatrixX<Scalar> centering =
      MatrixX<Scalar>::Identity(k, k) - VectorX<Scalar>::Ones(k) * groups.rho.transpose();
  g.M = -(groups.alpha.asDiagonal() * centering);
  g.rinv = groups.sigma.array().square() / groups.rho.array();
  g.rho = groups.rho;
  return g;
}

GeneratorTriple<double> build_generator(const PopulationLayout& layout);

namespace detail {

// Pade coefficients b_0..b_m and the 1-norm bounds theta_m below which the
// [m/m] approximant is accurate to unit roundoff in double precision.
inline constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
inline constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
inline constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                                 25200.0,    1512.0,    56.0,      1.0};
inline constexpr std::array<double, 10> kPade9 = {
    17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
    2162160.0,     110880.0,     3960.0,       90.0,        1.0};
inline constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};
inline constexpr double kTheta3 = 1.495585217958292e-2;
inline constexpr double kTheta5 = 2.539398330063230e-1;
inline constexpr double kTheta7 = 9.504178996162932e-1;
inline constexpr double kTheta9 = 2.097847961257068e0;
inline constexpr double kTheta13 = 5.371920351148152e0;

template <typename Scalar, std::size_t N>
MatrixX<Scalar> pade_ratio_low(const MatrixX<Scalar>& A, const std::array<double, N>& b) {
  const Eigen::Index n = A.rows();
  const MatrixX<Scalar> I = MatrixX<Scalar>::Identity(n, n);
  const MatrixX<Scalar> A2 = A * A;
  MatrixX<Scalar> power = I;  // A^{2j}
  MatrixX<Scalar> odd = MatrixX<Scalar>::Zero(n, n);
  MatrixX<Scalar> even = MatrixX<Scalar>::Zero(n, n);
  for (std::size_t j = 0; 2 * j + 1 < N; ++j) {
    even += Scalar(b[2 * j]) * power;
    odd += Scalar(b[2 * j + 1]) * power;
    power = power * A2;
  }
  const MatrixX<Scalar> U = A * odd;
  const MatrixX<Scalar>& V = even;
  return (V - U).partialPivLu().solve(V + U);
}

template <typename Scalar>
MatrixX<Scalar> pade_ratio_13(const MatrixX<Scalar>& A) {
  const auto& b = kPade13;
  const Eigen::Index n = A.rows();
  const MatrixX<Scalar> I = MatrixX<Scalar>::Identity(n, n);
  const MatrixX<Scalar> A2 = A * A;
  const MatrixX<Scalar> A4 = A2 * A2;
  const MatrixX<Scalar> A6 = A4 * A2;
  const MatrixX<Scalar> U =
      A * (A6 * (Scalar(b[13]) * A6 + Scalar(b[11]) * A4 + Scalar(b[9]) * A2) +
           Scalar(b[7]) * A6 + Scalar(b[5]) * A4 + Scalar(b[3]) * A2 + Scalar(b[1]) * I);
  const MatrixX<Scalar> V = A6 * (Scalar(b[12]) * A6 + Scalar(b[10]) * A4 + Scalar(b[8]) * A2) +
                            Scalar(b[6]) * A6 + Scalar(b[4]) * A4 + Scalar(b[2]) * A2 +
                            Scalar(b[0]) * I;
  return (V - U).partialPivLu().solve(V + U);
}

}  // namespace detail

/// e^{A t} by scaling and squaring with a diagonal Pade approximant of
/// degree 3, 5, 7, 9 or 13 chosen from ||A t||_1.
/// Throws NumericalError on non-finite input or overflow.
template <typename Derived>
MatrixX<typename Derived::Scalar> matrix_exponential(const Eigen::MatrixBase<Derived>& A,
                                                     typename Derived::Scalar t) {
  using Scalar = typename Derived::Scalar;
  if (A.rows() != A.cols()) throw ValidationError("matrix_exponential: matrix must be square");
  if (!(t >= Scalar(0)) || !std::isfinite(static_cast<double>(t)))
    throw ValidationError("matrix_exponential: t must be finite and non-negative");
  if (!A.allFinite()) throw NumericalError("matrix_exponential: non-finite input");

  const Eigen::Index n = A.rows();
  if (n == 0) return MatrixX<Scalar>(0, 0);
  MatrixX<Scalar> At = A * t;
  const double norm = static_cast<double>(At.cwiseAbs().colwise().sum().maxCoeff());
  if (!std::isfinite(norm)) throw NumericalError("matrix_exponential: ||A t|| overflows");

  if (norm <= detail::kTheta3) return detail::pade_ratio_low<Scalar>(At, detail::kPade3);
  if (norm <= detail::kTheta5) return detail::pade_ratio_low<Scalar>(At, detail::kPade5);
  if (norm <= detail::kTheta7) return detail::pade_ratio_low<Scalar>(At, detail::kPade7);
  if (norm <= detail::kTheta9) return detail::pade_ratio_low<Scalar>(At, detail::kPade9);

  int squarings = 0;
  if (norm > detail::kTheta13) squarings = static_cast<int>(std::ceil(std::log2(norm / detail::kTheta13)));
  if (squarings > 1000) throw NumericalError("matrix_exponential: ||A t|| too large to scale");
  At /= std::ldexp(Scalar(1), squarings);
  MatrixX<Scalar> E = detail::pade_ratio_13<Scalar>(At);
  for (int i = 0; i < squarings; ++i) E = E * E;
  if (!E.allFinite()) throw NumericalError("matrix_exponential: result overflowed");
  return E;
}

/// g(s) = rho^T e^{Ms} R^{-1} (e^{Ms})^T rho.
template <typename Scalar>
Scalar variance_integrand(const GeneratorTriple<Scalar>& gen, Scalar s) {
  const VectorX<Scalar> v = matrix_exponential(gen.M, s).transpose() * gen.rho;
  return (gen.rinv.array() * v.array().square()).sum();
}

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  double tolerance = 0.0;
  int panels = 0;
  int integrand_evaluations = 0;
};

namespace detail {

inline constexpr int kGaussPoints = 10;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
template <int Points>
struct GaussLegendreRule {
  std::array<double, Points> nodes{};
  std::array<double, Points> weights{};

  GaussLegendreRule() {
    constexpr double pi = 3.14159265358979323846;
    for (int i = 0; i < Points; ++i) {
      long double x = std::cos(pi * (i + 0.75) / (Points + 0.5));
      long double dp = 0.0L;
      for (int iter = 0; iter < 100; ++iter) {
        long double p0 = 1.0L;
        long double p1 = x;
        for (int k = 2; k <= Points; ++k) {
          const long double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = Points * (x * p1 - p0) / (x * x - 1.0L);
        const long double dx = p1 / dp;
        x -= dx;
        if (std::fabs(static_cast<double>(dx)) < 1e-19) break;
      }
      nodes[static_cast<std::size_t>(i)] = static_cast<double>(x);
      weights[static_cast<std::size_t>(i)] = static_cast<double>(2.0L / ((1.0L - x * x) * dp * dp));
    }
  }
};

inline const GaussLegendreRule<kGaussPoints>& gauss_rule() {
  static const GaussLegendreRule<kGaussPoints> rule;
  return rule;
}

}  // namespace detail

/// Adaptive composite Gauss-Legendre quadrature of V_T^2 = int_0^T g(s) ds.
///
/// A panel is accepted once its two-half refinement agrees with the whole
/// panel to tol * width / T, so the summed error estimate is at most tol.
template <typename Scalar>
QuadratureResult variance_quadrature(const GroupParameters<Scalar>& groups, Scalar T,
                                     double tol = 1e-10) {
  if (!(T > Scalar(0))) throw ValidationError("variance_quadrature: T must be positive");
  if (!(tol > 0.0) || tol > 1e-4) throw ValidationError("variance_quadrature: tol must lie in (0, 1e-4]");
  const auto gen = build_generator(groups);
  const auto& rule = detail::gauss_rule();

  QuadratureResult out;
  out.tolerance = tol;

  auto panel = [&](double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (int j = 0; j < detail::kGaussPoints; ++j) {
      const double s = mid + half * rule.nodes[static_cast<std::size_t>(j)];
      const double g = static_cast<double>(variance_integrand(gen, Scalar(s)));
      ++out.integrand_evaluations;
      if (!(g > 0.0) || !std::isfinite(g)) {
        std::ostringstream os;
        os << "variance_quadrature: integrand not positive at s=" << s << " (g=" << g << ")";
        throw NumericalError(os.str());
      }
      sum += rule.weights[static_cast<std::size_t>(j)] * g;
    }
    return half * sum;
  };

  struct Pending {
    double a, b, whole;
    int depth;
  };
  constexpr int kMaxDepth = 50;
  constexpr int kMaxPanels = 1 << 20;
  const double horizon = static_cast<double>(T);
  std::vector<Pending> stack{{0.0, horizon, panel(0.0, horizon), 0}};
  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    const double mid = 0.5 * (p.a + p.b);
    const double left = panel(p.a, mid);
    const double right = panel(mid, p.b);
    const double diff = std::abs(left + right - p.whole);
    if (diff <= tol * (p.b - p.a) / horizon) {
      out.value += left + right;
      out.error_estimate += diff;
      ++out.panels;
      continue;
    }
    if (p.depth >= kMaxDepth || out.panels + static_cast<int>(stack.size()) >= kMaxPanels) {
      std::ostringstream os;
      os << "variance_quadrature: refinement did not converge on [" << p.a << ", " << p.b
         << "] (depth " << p.depth << ", accepted panels " << out.panels << ", local error "
         << diff << ")";
      throw NumericalError(os.str());
    }
    stack.push_back({mid, p.b, right, p.depth + 1});
    stack.push_back({p.a, mid, left, p.depth + 1});
  }
  return out;
}

/// Two-group closed form with gamma = alpha_2 rho_1 + alpha_1 rho_2.
template <typename Scalar>
Scalar variance_closed_form_k2(const GroupParameters<Scalar>& groups, Scalar T) {
  if (groups.size() != 2)
    throw NotApplicableError("closed form requires exactly two groups");
  const Scalar a1 = groups.alpha(0), a2 = groups.alpha(1);
  const Scalar s1 = groups.sigma(0), s2 = groups.sigma(1);
  const Scalar r1 = groups.rho(0), r2 = groups.rho(1);
  const Scalar gamma = a2 * r1 + a1 * r2;
  if (!(gamma > Scalar(0)))
    throw NotApplicableError("closed form undefined for gamma = 0; use quadrature");
  using std::expm1;
  const Scalar one_minus_e1 = -expm1(-gamma * T);
  const Scalar one_minus_e2 = -expm1(Scalar(-2) * gamma * T);
  const Scalar d = a1 - a2;
  const Scalar first = a2 * a2 * T + r2 * r2 * d * d / (Scalar(2) * gamma) * one_minus_e2 +
                       Scalar(2) * a2 * r2 * d / gamma * one_minus_e1;
  const Scalar second = a1 * a1 * T + r1 * r1 * d * d / (Scalar(2) * gamma) * one_minus_e2 +
                        Scalar(2) * a1 * r1 * (-d) / gamma * one_minus_e1;
  return s1 * s1 * r1 / (gamma * gamma) * first + s2 * s2 * r2 / (gamma * gamma) * second;
}

/// Common-alpha value T * sum_k rho_k sigma_k^2.
template <typename Scalar>
Scalar variance_homogeneous(const GroupParameters<Scalar>& groups, Scalar T) {
  if (groups.size() > 0 && !(groups.alpha.array() == groups.alpha(0)).all())
    throw NotApplicableError("homogeneous formula requires all alpha equal");
  if (T < Scalar(0)) throw ValidationError("T must be non-negative");
  return T * groups.rho.dot(groups.sigma.cwiseAbs2());
}

/// Second-order expansion of V_T^2 around alpha_k = alpha_bar, written in
/// eps_k = alpha_k / alpha_bar - 1 (assumes sum_k rho_k eps_k = 0).
template <typename Scalar>
Scalar variance_delta_expansion(Scalar alpha_bar, const VectorX<Scalar>& eps,
                                const VectorX<Scalar>& sigma, const VectorX<Scalar>& rho,
                                Scalar T) {
  if (!(alpha_bar > Scalar(0))) throw ValidationError("expansion requires alpha_bar > 0");
  using std::exp;
  const auto s2 = sigma.array().square();
  const Scalar a = (rho.array() * s2).sum();
  const Scalar first = (rho.array() * eps.array() * s2).sum();
  const Scalar second = (rho.array() * eps.array().square() * s2).sum();
  const Scalar spread = (rho.array() * eps.array().square()).sum();
  const Scalar ab = alpha_bar;
  const Scalar x = exp(-ab * T);
  const Scalar x2 = exp(Scalar(-2) * ab * T);
  return T * a + Scalar(2) * (Scalar(1) / ab - T - x / ab) * first +
         (Scalar(-11) / (Scalar(2) * ab) + Scalar(3) * T + (Scalar(6) + Scalar(2) * T * ab) / ab * x -
          x2 / (Scalar(2) * ab)) *
             second -
         Scalar(2) * (Scalar(-2) / ab + T + Scalar(2) / ab * x + T * x) * (a * spread);
}

double variance_delta_expansion(const ExpansionCoefficients& coeffs, const PopulationLayout& layout,
                                double T);

/// All applicable V_T^2 evaluations for one population.
struct VarianceReport {
  QuadratureResult quadrature;
  std::optional<double> closed_form_k2;
  std::optional<double> homogeneous;
  std::optional<double> expansion;
};

VarianceReport variance_report(const PopulationLayout& layout, double T, double tol = 1e-10);

double standard_normal_cdf(double x);

/// Reflection-principle probability 2 Phi(eta sqrt(N) / V_T); 0 when V_T == 0.
double gaussian_tail_exact(double v_t, int n_agents, double eta);

struct TailApproximation {
  double raw = 0.0;      // 2 exp(-eta^2 N / (2 v2)), may exceed 1
  double clamped = 0.0;  // min(raw, 1)
  double rate = 0.0;     // eta^2 / (2 v2)
};

TailApproximation laplace_tail_approx(double v2, int n_agents, double eta);

struct FlockingBound {
  Eigen::VectorXd kappa;  // per agent
  double bound_raw = 0.0;  // may exceed 1
  double bound = 0.0;      // clamped to 1
  double flocking_parameter = 0.0;  // max_i kappa_i^2 / alpha
};

/// Exponential bound on P(sup_t |Y_i - Ybar| > delta) for a common-alpha
/// population.
FlockingBound flocking_bound(const PopulationLayout& layout, int agent, double delta, double T);

}  // namespace meanfield
