#pragma once

#include <cmath>
#include <limits>

#include "conjlab/errors.hpp"

namespace conjlab {

/// The certified constants a continuity computation needs.
struct ModuliConstants {
  double K = 1.0;
  double alpha = 1.0;
  double M = 1.0;
  double gamma = 0.0;
  double mu = 0.0;
};

namespace detail {
// (e^{a t} - 1) / a with its removable singularity at a = 0.
inline double expm1_over(double a, double t) {
  if (std::abs(a) < 1e-12) return t;
  return std::expm1(a * t) / a;
}
}  // namespace detail

/// theta(t) = 1 + K gamma (e^{(M+gamma-alpha)t} - 1)/(M+gamma-alpha); the
/// growth modulus of |G(t,eta) - G(t,etabar)| / |eta - etabar| on [0, t].
/// The singular branch M+gamma-alpha = 0 takes the limit 1 + K gamma t.
inline double theta(const ModuliConstants& c, double t) {
  return 1.0 + c.K * c.gamma * detail::expm1_over(c.M + c.gamma - c.alpha, t);
}

/// theta0(t): K gamma when alpha = M (the flat branch is the defined value,
/// not the limit), else K gamma (e^{(M-alpha)t} - 1)/(M-alpha).
inline double theta0(const ModuliConstants& c, double t) {
  if (std::abs(c.M - c.alpha) < 1e-12) return c.K * c.gamma;
  return c.K * c.gamma * detail::expm1_over(c.M - c.alpha, t);
}

/// Per-time Lipschitz factor C(t) of eta -> G(t, eta). Algebraically equal
/// to theta(t): 1 + K gamma (1 - e^{(M+gamma-alpha)t})/(alpha-M-gamma), with
/// the branch 1 + K gamma t at alpha = M + gamma.
inline double lipschitz_factor_C(const ModuliConstants& c, double t) {
  return theta(c, t);
}

/// The uniform-continuity budget for a target output deviation eps:
/// horizon L(eps), the maxima theta*, theta0* over [0, L], and the input
/// radius delta(eps) = eps / (2 theta*).
struct ContinuityBudget {
  double eps = 0.0;
  double L = 0.0;
  double theta_star = 1.0;
  double theta0_star = 0.0;
  double delta = 0.0;
  bool clamped = false;  // eps >= 4 mu K / alpha, budget degenerates to L = 0
};

inline ContinuityBudget continuity_budget(const ModuliConstants& c,
                                          double eps) {
  if (!(eps > 0.0)) throw Error("continuity_budget: eps must be > 0");
  ContinuityBudget b;
  b.eps = eps;
  const double ratio = 4.0 * c.mu * c.K / (c.alpha * eps);
  if (ratio <= 1.0) {
    b.L = 0.0;
    b.clamped = true;
  } else {
    b.L = std::log(ratio) / c.alpha;
  }
  // theta and theta0 are nondecreasing, so the maxima sit at t = L.
  b.theta_star = theta(c, b.L);
  b.theta0_star = theta0(c, b.L);
  b.delta = eps / (2.0 * b.theta_star);
  return b;
}

/// The constant in the delta_{j+1} = min{delta_j, (eps/2 theta0*)(1 - q)}
/// recursion over Picard iterates; diagnostic only.
inline double picard_delta_budget(const ModuliConstants& c, double eps) {
  const double q = c.K * c.gamma / c.alpha;
  const ContinuityBudget b = continuity_budget(c, eps);
  if (b.theta0_star <= 0.0) return std::numeric_limits<double>::infinity();
  return eps / (2.0 * b.theta0_star) * (1.0 - q);
}

}  // namespace conjlab
