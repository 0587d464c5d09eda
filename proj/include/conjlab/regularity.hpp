#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "conjlab/conjugacy.hpp"
#include "conjlab/moduli.hpp"
#include "conjlab/nonlinear_flow.hpp"
#include "conjlab/report.hpp"

// Quantitative continuity of H and G (the theta/L/delta budget machinery)
// and first-order differentiability: the Jacobian of G, its inverse, the
// positivity of its determinant, and the coercivity that feeds Hadamard's
// global-diffeomorphism argument.

namespace conjlab {

inline double theta(const ConjugacyProblem& p, double t) {
  return theta(moduli_constants(p), t);
}
inline double theta0(const ConjugacyProblem& p, double t) {
  return theta0(moduli_constants(p), t);
}
inline double lipschitz_factor_C(const ConjugacyProblem& p, double t) {
  return lipschitz_factor_C(moduli_constants(p), t);
}
inline ContinuityBudget continuity_budget(const ConjugacyProblem& p,
                                          double eps) {
  return continuity_budget(moduli_constants(p), eps);
}

/// Empirical side of Step 5: every pair closer than delta(eps) must map to
/// outputs closer than eps, under both G and H, at every supplied time.
/// Pairs at distance >= delta are reported as informational samples only
/// (the contract is one-sided).
inline std::vector<CheckEntry> check_uniform_continuity(
    const ConjugacyProblem& p, double eps,
    const std::vector<std::pair<Vec, Vec>>& pairs,
    const std::vector<double>& ts, const PicardConfig& pc = {}) {
  const ContinuityBudget budget = continuity_budget(p, eps);
  std::vector<CheckEntry> out;
  double worst_g = 0.0, worst_h = 0.0;
  int in_contract = 0;
  for (const auto& [u, ubar] : pairs) {
    if ((u - ubar).norm() >= budget.delta) {
      out.push_back(CheckEntry::info(
          "regularity/uniform_continuity/out_of_contract", "Step 5",
          (u - ubar).norm(),
          "pair distance >= delta(eps), implication not claimed"));
      continue;
    }
    ++in_contract;
    for (double t : ts) {
      const Vec gu = G_map(p, t, u, EvalPath::flow_composition, pc).output;
      const Vec gubar =
          G_map(p, t, ubar, EvalPath::flow_composition, pc).output;
      worst_g = std::max(worst_g, (gu - gubar).norm());
      const Vec hu = H_map(p, t, u, EvalPath::flow_composition, pc).output;
      const Vec hubar =
          H_map(p, t, ubar, EvalPath::flow_composition, pc).output;
      worst_h = std::max(worst_h, (hu - hubar).norm());
    }
  }
  out.push_back(CheckEntry::leq(
      "regularity/uniform_continuity/G", "Step 5", worst_g, eps,
      std::to_string(in_contract) + " pairs inside delta = " +
          std::to_string(budget.delta)));
  out.push_back(CheckEntry::leq("regularity/uniform_continuity/H",
                                "Definition 3", worst_h, eps,
                                "same pairs, H direction"));
  return out;
}

/// Sampled check of the Corollary: |G(t,u) - G(t,ubar)| <= C(t)|u - ubar|.
inline std::vector<CheckEntry> check_lipschitz_C(
    const ConjugacyProblem& p, double t,
    const std::vector<std::pair<Vec, Vec>>& pairs,
    const PicardConfig& pc = {}) {
  const double c_t = lipschitz_factor_C(p, t);
  double worst = 0.0;
  for (const auto& [u, ubar] : pairs) {
    const double d = (u - ubar).norm();
    if (d == 0.0) continue;
    const Vec gu = G_map(p, t, u, EvalPath::flow_composition, pc).output;
    const Vec gubar =
        G_map(p, t, ubar, EvalPath::flow_composition, pc).output;
    worst = std::max(worst, (gu - gubar).norm() / d);
  }
  return {CheckEntry::leq("regularity/lipschitz_C/t=" + std::to_string(t),
                          "Corollary C(t)", worst,
                          c_t * (1.0 + p.tol().tau_rel),
                          "C(t) = " + std::to_string(c_t))};
}

/// One Jacobian evaluation of G: the analytic route Phi(t,0) dy(0,t,eta)/deta
/// against central differences of the map itself.
struct JacobianEvaluation {
  double t = 0.0;
  Vec eta;
  Mat J;
  double detJ = 0.0;
  double fd_residual = 0.0;  // relative deviation vs central differences
};

/// dG/deta(t, eta) = Phi(t,0) dy(0,t,eta)/deta. Computed as the backward
/// variational sweep followed by a forward linear matrix flow seeded with
/// it, so the product is one decaying integration instead of a product of a
/// decayed matrix with a grown one.
inline Mat jacobian_G_matrix(const ConjugacyProblem& p, double t,
                             const Vec& eta) {
  if (t < 0.0) throw Error("jacobian_G: t must be >= 0");
  const Eigen::Index n = p.dim();
  if (t == 0.0) return Mat::Identity(n, n);
  const Mat v0 = p.variational_y(0.0, t, eta);
  auto rhs = [&p](double s, const Mat& x, Mat& dx) {
    dx = p.linear().A(s) * x;
  };
  return integrate_matrix(rhs, 0.0, v0, t, p.cfg()).terminal_state();
}

inline JacobianEvaluation jacobian_G(const ConjugacyProblem& p, double t,
                                     const Vec& eta,
                                     const PicardConfig& pc = {}) {
  JacobianEvaluation ev;
  ev.t = t;
  ev.eta = eta;
  ev.J = jacobian_G_matrix(p, t, eta);
  ev.detJ = ev.J.determinant();

  const double h = 1e-5 * (1.0 + eta.norm());
  Mat fd(p.dim(), p.dim());
  for (Eigen::Index j = 0; j < p.dim(); ++j) {
    Vec up = eta, dn = eta;
    up(j) += h;
    dn(j) -= h;
    fd.col(j) =
        (G_map(p, t, up, EvalPath::flow_composition, pc).output -
         G_map(p, t, dn, EvalPath::flow_composition, pc).output) /
        (2.0 * h);
  }
  ev.fd_residual = opnorm(ev.J - fd) / (1.0 + opnorm(fd));
  return ev;
}

/// dH/dxi(t, xi) as the inverse of dG/deta at (t, H(t, xi)).
inline Mat jacobian_H(const ConjugacyProblem& p, double t, const Vec& xi,
                      const PicardConfig& pc = {}) {
  if (t == 0.0) return Mat::Identity(p.dim(), p.dim());
  const Vec h = H_map(p, t, xi, EvalPath::flow_composition, pc).output;
  const Mat jg = jacobian_G_matrix(p, t, h);
  return jg.inverse();
}

/// Coercivity behind the Hadamard argument: on the sphere |eta| = R,
/// |G(t,eta)| >= R - K mu / alpha (minus slack). Radii below K mu / alpha
/// make the bound vacuous and are reported as informational.
inline std::vector<CheckEntry> properness_check(
    const ConjugacyProblem& p, double t, const std::vector<double>& radii,
    std::uint64_t seed = 0x5EED, int samples_per_sphere = 16,
    const PicardConfig& pc = {}) {
  std::vector<CheckEntry> out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double r : radii) {
    const double floor_bound = r - p.proximity_bound() - p.tol().tau_num;
    if (floor_bound <= 0.0) {
      out.push_back(CheckEntry::info(
          "regularity/properness/R=" + std::to_string(r),
          "Lemma derivabilidad-1", r,
          "radius inside the K mu / alpha ball, bound vacuous"));
      continue;
    }
    double min_norm = std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples_per_sphere; ++k) {
      Vec dir(p.dim());
      for (Eigen::Index i = 0; i < p.dim(); ++i) dir(i) = gauss(rng);
      if (dir.norm() == 0.0) dir(0) = 1.0;
      const Vec eta = r * dir / dir.norm();
      min_norm = std::min(
          min_norm,
          G_map(p, t, eta, EvalPath::flow_composition, pc).output.norm());
    }
    // pass iff min |G| >= floor_bound, recorded as the deficit <= 0
    out.push_back(CheckEntry::leq(
        "regularity/properness/R=" + std::to_string(r),
        "Lemma derivabilidad-1", floor_bound - min_norm, 0.0,
        "min |G(t,.)| on sphere = " + std::to_string(min_norm)));
  }
  return out;
}

/// Second-difference probe of smoothness beyond first order: the numerical
/// Hessian of G must be symmetric when f is C^2. Returns the worst
/// |T_kij - T_kji| over the FD Hessian tensor.
inline double hessian_symmetry_residual(const ConjugacyProblem& p, double t,
                                        const Vec& eta) {
  if (p.pert().smoothness_order() < 2)
    throw Error("hessian_symmetry_residual: requires r >= 2");
  const Eigen::Index n = p.dim();
  const double h = 1e-3 * (1.0 + eta.norm());
  std::vector<Mat> dj;  // dj[j] = d(jacobian_G)/d eta_j
  dj.reserve(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vec up = eta, dn = eta;
    up(j) += h;
    dn(j) -= h;
    dj.push_back((jacobian_G_matrix(p, t, up) -
                  jacobian_G_matrix(p, t, dn)) /
                 (2.0 * h));
  }
  double worst = 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        worst = std::max(worst, std::abs(dj[j](k, i) - dj[i](k, j)));
  return worst;
}

}  // namespace conjlab
