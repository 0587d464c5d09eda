#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "conjlab/conjugacy.hpp"
#include "conjlab/nonlinear_flow.hpp"
#include "conjlab/report.hpp"

// Equilibrium analysis of the perturbed system and converse-Lyapunov
// certificates: the fixed-point characterization, uniqueness, the K mu /
// alpha localization ball, the limits of H and G at equilibria, the
// translated system, and the quadratic form V = x^T P(t) x with its decrease
// margin.

namespace conjlab {

struct EquilibriumCandidate {
  Vec ybar;
  double residual_ode = 0.0;  // max over grid of |A(t) ybar + f(t, ybar)|
  double residual_fpe = 0.0;  // max over grid of the fixed-point residual
};

struct EquilibriumSearch {
  bool found = false;
  EquilibriumCandidate candidate;  // Newton root with residuals, even if rejected
  std::string note;
};

namespace detail {

inline Mat newton_jacobian(const ConjugacyProblem& p, double t,
                           const Vec& y) {
  try {
    return p.linear().A(t) + p.pert().jacobian(t, y);
  } catch (const MissingJacobian&) {
    return p.linear().A(t) + p.pert().fd_jacobian(t, y);
  }
}

}  // namespace detail

/// Damped-Newton solve of A(t0) y + f(t0, y) = 0 at the grid's first time,
/// then residual validation across the whole grid: both the pointwise
/// equation and the fixed-point form u = Phi(t,0)u + int Phi f(s,u) ds.
/// Existence is not implied by the hypotheses, so failed validation is an
/// answer (NotFound), not an error.
inline EquilibriumSearch find_equilibrium(const ConjugacyProblem& p,
                                          const Vec& guess,
                                          const std::vector<double>& grid) {
  if (grid.empty()) throw Error("find_equilibrium: empty time grid");
  for (double t : grid)
    if (t < 0.0 || t > p.t_max())
      throw Error("find_equilibrium: grid must lie within [0, t_max]");

  const double t0 = grid.front();
  auto F = [&](const Vec& y) -> Vec {
    return p.linear().A(t0) * y + p.pert().f(t0, y);
  };

  Vec y = guess;
  double res = F(y).norm();
  const double newton_tol = p.tol().tau_eq * 1e-4;
  int iter = 0;
  while (res > newton_tol) {
    if (++iter > 50)
      throw NewtonDiverged("find_equilibrium: Newton stalled at residual " +
                           std::to_string(res));
    const Vec step = detail::newton_jacobian(p, t0, y)
                         .colPivHouseholderQr()
                         .solve(F(y));
    double lambda = 1.0;
    Vec y_next = y - step;
    double res_next = F(y_next).norm();
    while (res_next > res && lambda > 1e-8) {
      lambda *= 0.5;  // halve on residual increase
      y_next = y - lambda * step;
      res_next = F(y_next).norm();
    }
    if (res_next >= res && res > newton_tol)
      throw NewtonDiverged(
          "find_equilibrium: damping failed to reduce the residual");
    y = y_next;
    res = res_next;
  }

  EquilibriumSearch out;
  out.candidate.ybar = y;

  double worst_ode = 0.0;
  for (double t : grid)
    worst_ode =
        std::max(worst_ode, (p.linear().A(t) * y + p.pert().f(t, y)).norm());
  out.candidate.residual_ode = worst_ode;

  // Fixed-point residual: v(t) = Phi(t,0) y + int_0^t Phi(t,s) f(s,y) ds is
  // the solution of v' = A v + f(t, y-const) with v(0) = y.
  const double t_hi = *std::max_element(grid.begin(), grid.end());
  double worst_fpe = 0.0;
  if (t_hi > 0.0) {
    auto rhs = [&](double s, const Vec& v, Vec& dv) {
      dv = p.linear().A(s) * v + p.pert().f(s, y);
    };
    const FlowSample v = integrate(rhs, 0.0, y, t_hi, p.precise_cfg());
    for (double t : grid) worst_fpe = std::max(worst_fpe, (y - v.eval(t)).norm());
  }
  out.candidate.residual_fpe = worst_fpe;

  const double ball = p.proximity_bound() + p.tol().tau_num;
  if (worst_ode <= p.tol().tau_eq && worst_fpe <= p.tol().tau_eq &&
      y.norm() <= ball) {
    out.found = true;
    out.note = "accepted; |ybar| = " + std::to_string(y.norm()) +
               " within ball radius " + std::to_string(ball);
  } else if (worst_ode <= p.tol().tau_eq && worst_fpe <= p.tol().tau_eq) {
    out.note = "rejected: root lies outside the K mu / alpha ball";
  } else {
    out.note = "rejected: per-time root fails grid validation, max residual " +
               std::to_string(std::max(worst_ode, worst_fpe));
  }
  return out;
}

/// Two accepted equilibria must coincide (uniqueness under (7)).
inline CheckEntry check_uniqueness(const ConjugacyProblem& p,
                                   const EquilibriumCandidate& e1,
                                   const EquilibriumCandidate& e2) {
  return CheckEntry::leq("stability/uniqueness", "Lemma UPF",
                         (e1.ybar - e2.ybar).norm(), 2.0 * p.tol().tau_eq,
                         "distance between independently found equilibria");
}

/// Lemma HPF: G(t, ybar) = Phi(t, 0) ybar exactly, and H(t, 0) approaches
/// ybar at the rate K |ybar| e^{-alpha t} + e^{(K gamma - alpha) t}.
inline std::vector<CheckEntry> equilibrium_limits(
    const ConjugacyProblem& p, const EquilibriumCandidate& e,
    const std::vector<double>& ts, const PicardConfig& pc = {}) {
  const double k = p.linear().gain();
  const double alpha = p.linear().decay_rate();
  const double gamma = p.pert().lipschitz();
  std::vector<CheckEntry> out;
  for (double t : ts) {
    const Vec g = G_map(p, t, e.ybar, EvalPath::flow_composition, pc).output;
    const Vec phi_y = p.flow_x_value(t, 0.0, e.ybar, p.precise_cfg());
    out.push_back(CheckEntry::leq(
        "stability/hpf_G/t=" + std::to_string(t), "Lemma HPF",
        (g - phi_y).norm(), p.tol().tau_num, "G(t, ybar) vs Phi(t,0) ybar"));

    const Vec h0 =
        H_map(p, t, Vec::Zero(p.dim()).eval(), EvalPath::flow_composition, pc)
            .output;
    const double decay_bound = k * e.ybar.norm() * std::exp(-alpha * t) +
                               std::exp((k * gamma - alpha) * t) +
                               p.tol().tau_num;
    out.push_back(CheckEntry::leq(
        "stability/hpf_H/t=" + std::to_string(t), "Lemma HPF",
        (h0 - e.ybar).norm(), decay_bound, "|H(t,0) - ybar| decay estimate"));
  }
  return out;
}

/// Shift the equilibrium to the origin: g(t,z) = f(t, z + ybar) - f(t, ybar)
/// satisfies the Lipschitz/bound certificate with constants gamma and 2 mu,
/// and g(t, 0) = 0 by construction.
inline ConjugacyProblem translate_system(const ConjugacyProblem& p,
                                         const EquilibriumCandidate& e) {
  const Vec ybar = e.ybar;
  const Perturbation f = p.pert();
  Perturbation::JacobianFn jac;
  if (f.has_analytic_jacobian())
    jac = [f, ybar](double t, const Vec& z) {
      return f.jacobian(t, z + ybar);
    };
  Perturbation g(
      [f, ybar](double t, const Vec& z) {
        return (f.f(t, z + ybar) - f.f(t, ybar)).eval();
      },
      f.lipschitz(), 2.0 * f.bound(), f.smoothness_order(), std::move(jac));
  return ConjugacyProblem(p.linear(), std::move(g), p.cfg(), p.t_max(),
                          p.tol());
}

namespace detail {

inline void require_origin_equilibrium(const ConjugacyProblem& p,
                                       const char* who) {
  for (double t : {0.0, 1.0, 5.0, p.t_max()})
    if (p.pert().f(t, Vec::Zero(p.dim())).norm() > 1e-12)
      throw Error(std::string(who) +
                  ": requires f(t,0) = 0; translate the system first");
}

}  // namespace detail

/// Empirical uniform attraction of the origin: for each (eps, c) the
/// measured settling time T such that every trajectory starting inside
/// |y(t0)| < c satisfies |y(t)| < eps for t > t0 + T, across starting times
/// t0 in {0, 2, 5}. The Gronwall envelope K c e^{-(alpha - K gamma) T}
/// yields the reference bound.
inline std::vector<CheckEntry> uas_empirical(
    const ConjugacyProblem& p, const std::vector<double>& eps_levels,
    const std::vector<double>& c_levels, const std::vector<Vec>& ics) {
  detail::require_origin_equilibrium(p, "uas_empirical");
  const double k = p.linear().gain();
  const double alpha = p.linear().decay_rate();
  const double gamma = p.pert().lipschitz();
  const double rate = alpha - k * gamma;  // positive under (7)
  const std::vector<double> starts{0.0, 2.0, 5.0};
  const double scan_step = 0.01;

  std::vector<CheckEntry> out;
  for (double c : c_levels) {
    for (double eps : eps_levels) {
      const double t_bound =
          std::max(0.0, std::log(std::max(k * c / eps, 1.0)) / rate);
      const double horizon = std::max(2.0, 1.5 * t_bound + 1.0);
      double worst_T = 0.0, spread_lo = 1e300, spread_hi = 0.0;
      double worst_increase = 0.0;
      for (double t0 : starts) {
        double t0_T = 0.0;
        for (const Vec& ic : ics) {
          if (ic.norm() >= c) continue;
          const FlowSample traj = p.flow_y(t0 + horizon, t0, ic);
          double last_above = t0;
          double prev_norm = ic.norm();
          for (double t = t0; t <= t0 + horizon; t += scan_step) {
            const double n = traj.eval(t).norm();
            if (n >= eps) last_above = t + scan_step;
            worst_increase = std::max(worst_increase, n - prev_norm);
            prev_norm = n;
          }
          t0_T = std::max(t0_T, last_above - t0);
        }
        worst_T = std::max(worst_T, t0_T);
        spread_lo = std::min(spread_lo, t0_T);
        spread_hi = std::max(spread_hi, t0_T);
      }
      const std::string tag =
          "eps=" + std::to_string(eps) + "/c=" + std::to_string(c);
      out.push_back(CheckEntry::leq(
          "stability/uas_T/" + tag, "(uas2)", worst_T,
          t_bound + 2.0 * scan_step,
          "measured settling time vs Gronwall envelope"));
      out.push_back(CheckEntry::leq(
          "stability/uas_T_spread/" + tag, "Lemma pres-UAS",
          spread_hi - spread_lo, 2.0 * scan_step,
          "t0-independence of T within grid resolution"));
      out.push_back(CheckEntry::info(
          "stability/uas_monotone/" + tag, "Lemma pres-UAS", worst_increase,
          "max single-step growth of |y| along swept trajectories"));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Converse Lyapunov machinery.

/// P(t) = int_t^{T} X(tau,t)^T Q(tau) X(tau,t) dtau with the tail T chosen
/// so the neglected remainder is below tol_tail by the UAS bound; the
/// result is symmetrized.
inline Mat lyapunov_P(const LinearSystem& sys,
                      const std::function<Mat(double)>& Q, double q_plus,
                      double t, double tol_tail,
                      const IntegratorConfig& cfg) {
  if (t < 0.0) throw Error("lyapunov_P: t must be >= 0");
  if (!(tol_tail > 0.0)) throw Error("lyapunov_P: tol_tail must be > 0");
  const double k = sys.gain(), alpha = sys.decay_rate();
  const double arg = k * k * q_plus / (2.0 * alpha * tol_tail);
  const double t_tail = t + std::max(0.0, std::log(arg) / (2.0 * alpha));
  auto rhs = [&sys](double tau, const Mat& x, Mat& dx) {
    dx = sys.A(tau) * x;
  };
  const MatrixFlowSample x =
      integrate_matrix(rhs, t, Mat::Identity(sys.dim(), sys.dim()), t_tail,
                       cfg);
  auto integrand = [&](double tau) -> Mat {
    const Mat xt = x.eval(tau);
    return xt.transpose() * Q(tau) * xt;
  };
  Mat p = quad(integrand, t, t_tail, tol_tail);
  return 0.5 * (p + p.transpose()).eval();
}

/// The quadratic-form certificate: Q with its bounds, the induced bounds
/// p- = q-/2M and p+ = K^2 q+/2 alpha on P, and the nonlinear decrease
/// margin q- - 2 gamma p+ (positive whenever gamma < alpha/K^2 scaled by
/// q-/q+).
struct LyapunovCertificate {
  std::function<Mat(double)> Q;
  double q_minus = 0.0;
  double q_plus = 0.0;
  double p_minus = 0.0;
  double p_plus = 0.0;
  double decay_margin = 0.0;
  std::function<Mat(double)> P;  // quadrature evaluator
};

inline LyapunovCertificate make_lyapunov_certificate(
    const ConjugacyProblem& p, std::function<Mat(double)> Q, double q_minus,
    double q_plus) {
  if (!(q_minus > 0.0) || !(q_plus >= q_minus))
    throw CertificateRejected(
        "lyapunov: requires 0 < q_minus <= q_plus");
  for (double t : {0.0, 1.0, 3.0, 10.0}) {  // sampled SPD-bounds check
    const Mat q = Q(t);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (q + q.transpose()));
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo < q_minus - 1e-12 || hi > q_plus + 1e-12)
      throw CertificateRejected(
          "lyapunov: Q(t) spectrum escapes [q_minus, q_plus] at t = " +
          std::to_string(t));
  }
  LyapunovCertificate cert;
  cert.Q = Q;
  cert.q_minus = q_minus;
  cert.q_plus = q_plus;
  cert.p_minus = q_minus / (2.0 * p.linear().sup_norm_bound());
  cert.p_plus = p.linear().gain() * p.linear().gain() * q_plus /
                (2.0 * p.linear().decay_rate());
  cert.decay_margin = q_minus - 2.0 * p.pert().lipschitz() * cert.p_plus;
  const LinearSystem sys = p.linear();
  const IntegratorConfig cfg = p.cfg();
  const double tol_tail = p.tol().tol_tail;
  cert.P = [sys, Q, q_plus, tol_tail, cfg](double t) {
    return lyapunov_P(sys, Q, q_plus, t, tol_tail, cfg);
  };
  return cert;
}

/// Dense P(t) on [0, T]: one quadrature anchor at T, then the backward
/// sweep of -P' = A^T P + P A + Q, which is the contracting direction.
inline MatrixFlowSample lyapunov_P_sweep(const ConjugacyProblem& p,
                                         const LyapunovCertificate& cert,
                                         double t_hi) {
  const Mat p_anchor = cert.P(t_hi);
  auto rhs = [&](double t, const Mat& x, Mat& dx) {
    const Mat a = p.linear().A(t);
    dx = -(a.transpose() * x + x * a + cert.Q(t));
  };
  return integrate_matrix(rhs, t_hi, p_anchor, 0.0, p.precise_cfg());
}

/// Checks along trajectories: V = x^T P x decreases at the certified
/// margin, V is monotone, P stays within its spectral bounds and satisfies
/// the matrix identity, and the sweep agrees with direct quadrature.
inline std::vector<CheckEntry> lyapunov_derivative_check(
    const LyapunovCertificate& cert, const ConjugacyProblem& p,
    const std::vector<FlowSample>& trajectories) {
  detail::require_origin_equilibrium(p, "lyapunov_derivative_check");
  if (trajectories.empty()) return {};
  double t_hi = 0.0;
  for (const auto& traj : trajectories)
    t_hi = std::max(t_hi, traj.span_hi());
  const MatrixFlowSample p_sweep = lyapunov_P_sweep(p, cert, t_hi);

  std::vector<CheckEntry> out;

  // sweep-vs-quadrature agreement
  double worst_sweep = 0.0;
  for (double t : {0.0, 0.5 * t_hi, t_hi})
    worst_sweep = std::max(worst_sweep,
                           opnorm(p_sweep.eval(t) - cert.P(t)));
  out.push_back(CheckEntry::leq(
      "stability/lyap_sweep_vs_quadrature", "(cotas-lyap)", worst_sweep,
      p.tol().tau_num, "backward sweep against the defining integral"));

  // spectral bounds of P
  double worst_lo = 0.0, worst_hi = 0.0;
  for (int i = 0; i <= 10; ++i) {
    const double t = t_hi * i / 10.0;
    Eigen::SelfAdjointEigenSolver<Mat> es(p_sweep.eval(t));
    worst_lo = std::max(worst_lo,
                        cert.p_minus - es.eigenvalues().minCoeff());
    worst_hi = std::max(worst_hi,
                        es.eigenvalues().maxCoeff() - cert.p_plus);
  }
  out.push_back(CheckEntry::leq("stability/lyap_spectrum_lower",
                                "(cotas-lyap)", worst_lo, p.tol().tau_num,
                                "p- I <= P(t) on the sample grid"));
  out.push_back(CheckEntry::leq("stability/lyap_spectrum_upper",
                                "(cotas-lyap)", worst_hi, p.tol().tau_num,
                                "P(t) <= p+ I on the sample grid"));

  // matrix identity -P' = A^T P + P A + Q by central differences
  double worst_identity = 0.0;
  const double h_fd = 1e-3;
  for (int i = 1; i < 8; ++i) {
    const double t = h_fd + (t_hi - 2.0 * h_fd) * i / 8.0;
    const Mat pdot =
        (p_sweep.eval(t + h_fd) - p_sweep.eval(t - h_fd)) / (2.0 * h_fd);
    const Mat a = p.linear().A(t);
    const Mat res = pdot + a.transpose() * p_sweep.eval(t) +
                    p_sweep.eval(t) * a + cert.Q(t);
    worst_identity = std::max(worst_identity, opnorm(res));
  }
  out.push_back(CheckEntry::leq("stability/lyap_matrix_identity",
                                "(cotas-lyap)", worst_identity, 1e-5,
                                "central-differenced P' residual"));

  // decrease along each trajectory, midpoint difference quotients
  const double h_cap = 0.05;
  int idx = 0;
  for (const auto& traj : trajectories) {
    double worst_rate = -1e300;
    double worst_jump = 0.0;
    const auto& grid = traj.grid();
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      const int pieces = std::max(
          1, static_cast<int>(std::ceil((grid[i + 1] - grid[i]) / h_cap)));
      for (int j = 0; j < pieces; ++j) {
        const double ta = grid[i] + (grid[i + 1] - grid[i]) * j / pieces;
        const double tb =
            grid[i] + (grid[i + 1] - grid[i]) * (j + 1) / pieces;
        const double tm = 0.5 * (ta + tb);
        const Vec xa = traj.eval(ta), xb = traj.eval(tb), xm = traj.eval(tm);
        const double va = xa.dot(p_sweep.eval(ta) * xa);
        const double vb = xb.dot(p_sweep.eval(tb) * xb);
        const double x2 = xm.squaredNorm();
        const double quotient = (vb - va) / (tb - ta);
        worst_rate = std::max(
            worst_rate,
            (quotient + cert.decay_margin * x2) / (1.0 + x2));
        worst_jump = std::max(worst_jump, vb - va);
      }
    }
    const std::string tag = "/traj=" + std::to_string(idx++);
    out.push_back(CheckEntry::leq(
        "stability/lyap_decrease" + tag, "forma_cuadratica_scnl", worst_rate,
        p.tol().tau_lyap,
        "dV/dt <= -(q- - 2 gamma p+) |x|^2, normalized"));
    out.push_back(CheckEntry::leq("stability/lyap_monotone" + tag,
                                  "forma_cuadratica_scnl", worst_jump,
                                  p.tol().tau_lyap,
                                  "V nonincreasing along the trajectory"));
  }
  return out;
}

/// The concrete orderings between the topological-equivalence condition
/// gamma < alpha/K and the Lyapunov smallness gamma < alpha/K^2 for this
/// problem (neither implies the other in general).
inline std::vector<CheckEntry> comparative_conditions(
    const ConjugacyProblem& p) {
  const double gamma = p.pert().lipschitz();
  const double alpha = p.linear().decay_rate();
  const double k = p.linear().gain();
  return {
      CheckEntry::leq("stability/condition_topological", "(7)", gamma,
                      alpha / k, "gamma vs alpha/K"),
      CheckEntry::leq("stability/condition_lyapunov", "forma_cuadratica_scnl",
                      gamma, alpha / (k * k), "gamma vs alpha/K^2"),
  };
}

}  // namespace conjlab
