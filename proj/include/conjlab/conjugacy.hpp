#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conjlab/moduli.hpp"
#include "conjlab/nonlinear_flow.hpp"
#include "conjlab/ode.hpp"
#include "conjlab/report.hpp"

// Construction of the topological equivalence H, G between x' = A(t)x and
// y' = A(t)y + f(t,y) on the half line, and the checks of the identities it
// must satisfy. Every map has two computation routes: the defining
// integral/fixed-point form and the flow composition obtained from it by
// variation of parameters. Their agreement is the module's strongest
// anti-bug oracle.

namespace conjlab {

struct PicardConfig {
  double tol_fix = 1e-10;   // sup-norm stopping tolerance
  int max_iter = 60;
  int grid_pts = 257;       // sup-norm grid on [0, t]
  double diagnostic_eps = 0.1;  // reference eps for the delta_j trace column

  void validate() const {
    if (!(tol_fix > 0.0)) throw Error("PicardConfig: tol_fix must be > 0");
    if (max_iter < 1) throw Error("PicardConfig: max_iter must be >= 1");
    if (grid_pts < 2) throw Error("PicardConfig: grid_pts must be >= 2");
  }
};

struct PicardTraceRow {
  int iteration = 0;
  double sup_diff = 0.0;     // sup-grid |z_j - z_{j-1}|
  double ratio = 0.0;        // sup_diff ratio to the previous row (NaN first)
  double delta_budget = 0.0; // Step 5 recursion constant, diagnostic column
};

struct ZStarResult {
  Vec value;                 // z*(t; (tau, xi)) at the evaluation time
  FlowSample sample;         // dense z* over [0, t]
  std::vector<PicardTraceRow> trace;
};

enum class EvalPath { flow_composition, integral_definition };

inline const char* to_string(EvalPath p) {
  return p == EvalPath::flow_composition ? "flow_composition"
                                         : "integral_definition";
}

/// One evaluation of H or G: the requested path's output, plus the
/// disagreement with the other path when both were computed.
struct MapEvaluation {
  double t = 0.0;
  Vec input;
  Vec output;
  EvalPath path = EvalPath::flow_composition;
  double residual_vs_other_path =
      std::numeric_limits<double>::quiet_NaN();
  bool cross_checked = false;
};

inline ModuliConstants moduli_constants(const ConjugacyProblem& p) {
  return ModuliConstants{p.linear().gain(), p.linear().decay_rate(),
                         p.linear().sup_norm_bound(), p.pert().lipschitz(),
                         p.pert().bound()};
}

// ---------------------------------------------------------------------------
// w*: the unique solution of w' = A(t)w - f(t, y(t,tau,eta)), w(0) = 0,
// equal to -int_0^t Phi(t,s) f(s, y(s,tau,eta)) ds.

inline FlowSample w_star_sample(const ConjugacyProblem& p, double t_hi,
                                double tau, const Vec& eta) {
  if (t_hi < 0.0 || tau < 0.0)
    throw Error("w_star: times must be >= 0");
  if (t_hi == 0.0) return FlowSample::single_point(0.0, Vec::Zero(p.dim()));
  const IntegratorConfig cfg = p.precise_cfg();
  const FlowSample y_traj = p.flow_y_span(tau, eta, t_hi, cfg);
  auto rhs = [&p, &y_traj](double s, const Vec& w, Vec& dw) {
    dw = p.linear().A(s) * w - p.pert().f(s, y_traj.eval(s));
  };
  return integrate(rhs, 0.0, Vec::Zero(p.dim()).eval(), t_hi, cfg);
}

inline Vec w_star(const ConjugacyProblem& p, double t, double tau,
                  const Vec& eta) {
  return w_star_sample(p, t, tau, eta).terminal_state();
}

/// Paper-literal route: adaptive quadrature of the defining integral over
/// the dense transition kernel. Cross-checks the IVP route.
inline Vec w_star_quadrature(const ConjugacyProblem& p, double t, double tau,
                             const Vec& eta) {
  if (t < 0.0 || tau < 0.0) throw Error("w_star: times must be >= 0");
  if (t == 0.0) return Vec::Zero(p.dim());
  const IntegratorConfig cfg = p.precise_cfg();
  const MatrixFlowSample kernel = p.linear().transition_kernel(t, cfg);
  const FlowSample y_traj = p.flow_y_span(tau, eta, t, cfg);
  auto integrand = [&](double s) -> Vec {
    return kernel.eval(s) * p.pert().f(s, y_traj.eval(s));
  };
  return -quad(integrand, 0.0, t, p.tol().quad_tol);
}

// ---------------------------------------------------------------------------
// Gamma operator and its fixed point z*.

/// Apply Gamma_{(tau,xi)} to a continuous function phi on [0, T]:
/// (Gamma phi)(t) = int_0^t Phi(t,s) f(s, x(s,tau,xi) + phi(s)) ds, realized
/// as the IVP v' = A(t)v + f(t, x(t) + phi(t)), v(0) = 0. Supply the
/// breakpoints of piecewise-defined phi so each smooth piece integrates
/// cleanly.
template <class PhiFn>
FlowSample gamma_apply(const ConjugacyProblem& p, double tau, const Vec& xi,
                       double T, PhiFn&& phi,
                       std::vector<double> breakpoints = {}) {
  if (T < 0.0 || tau < 0.0) throw Error("gamma_apply: times must be >= 0");
  if (T == 0.0) return FlowSample::single_point(0.0, Vec::Zero(p.dim()));
  const IntegratorConfig cfg = p.precise_cfg();
  const FlowSample x_traj = p.flow_x_span(tau, xi, T, cfg);
  auto rhs = [&](double s, const Vec& v, Vec& dv) {
    dv = p.linear().A(s) * v + p.pert().f(s, x_traj.eval(s) + phi(s));
  };

  std::sort(breakpoints.begin(), breakpoints.end());
  std::vector<double> cuts{0.0};
  for (double b : breakpoints)
    if (b > cuts.back() + 1e-12 && b < T - 1e-12) cuts.push_back(b);
  cuts.push_back(T);

  std::optional<FlowSample> out;
  Vec v = Vec::Zero(p.dim());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    FlowSample leg = integrate(rhs, cuts[i], v, cuts[i + 1], cfg);
    v = leg.terminal_state();
    out = out ? FlowSample::concat(*out, leg) : std::move(leg);
  }
  return *out;
}

/// Fixed point of Gamma_{(tau,xi)} on [0, t], iterated from z_0 = 0 with
/// sup-norm stopping on a uniform grid. The trace records per-iteration
/// sup differences and their contraction ratios.
inline ZStarResult z_star(const ConjugacyProblem& p, double t, double tau,
                          const Vec& xi, const PicardConfig& pc = {}) {
  pc.validate();
  if (t < 0.0 || tau < 0.0) throw Error("z_star: times must be >= 0");
  const Eigen::Index n = p.dim();
  if (t == 0.0)
    return {Vec::Zero(n), FlowSample::single_point(0.0, Vec::Zero(n)), {}};

  const IntegratorConfig cfg = p.precise_cfg();
  const FlowSample x_traj = p.flow_x_span(tau, xi, t, cfg);
  const double delta_budget =
      picard_delta_budget(moduli_constants(p), pc.diagnostic_eps);

  std::vector<double> grid(pc.grid_pts);
  for (int k = 0; k < pc.grid_pts; ++k)
    grid[k] = t * static_cast<double>(k) / (pc.grid_pts - 1);

  std::optional<FlowSample> z_prev;  // nullopt encodes z_0 = 0
  auto eval_prev = [&](double s) -> Vec {
    return z_prev ? z_prev->eval(s) : Vec::Zero(n);
  };

  ZStarResult result;
  double d_prev = std::numeric_limits<double>::quiet_NaN();
  for (int j = 1; j <= pc.max_iter; ++j) {
    auto rhs = [&](double s, const Vec& v, Vec& dv) {
      dv = p.linear().A(s) * v + p.pert().f(s, x_traj.eval(s) + eval_prev(s));
    };
    FlowSample z_next = integrate(rhs, 0.0, Vec::Zero(n).eval(), t, cfg);

    double d = 0.0;
    for (double s : grid) d = std::max(d, (z_next.eval(s) - eval_prev(s)).norm());

    PicardTraceRow row;
    row.iteration = j;
    row.sup_diff = d;
    row.ratio = j > 1 ? d / d_prev : std::numeric_limits<double>::quiet_NaN();
    row.delta_budget = delta_budget;
    result.trace.push_back(row);

    z_prev = std::move(z_next);
    d_prev = d;
    if (d <= pc.tol_fix) {
      result.value = z_prev->terminal_state();
      result.sample = std::move(*z_prev);
      return result;
    }
  }
  throw NoConvergence(
      "z_star: Picard iteration did not contract below tol_fix within " +
      std::to_string(pc.max_iter) +
      " iterations; last sup difference = " + std::to_string(d_prev));
}

// ---------------------------------------------------------------------------
// The maps H and G.

/// H(t, xi) = xi + z*(t; (t, xi)); flow route: push Phi(0,t) xi forward
/// along the nonlinear flow (variation of parameters on the z equation).
inline MapEvaluation H_map(const ConjugacyProblem& p, double t, const Vec& xi,
                           EvalPath path, const PicardConfig& pc = {}) {
  if (t < 0.0) throw Error("H_map: t must be >= 0");
  MapEvaluation ev;
  ev.t = t;
  ev.input = xi;
  ev.path = path;
  if (t == 0.0) {
    ev.output = xi;  // empty integral, exact
    return ev;
  }
  if (path == EvalPath::integral_definition) {
    ev.output = xi + z_star(p, t, t, xi, pc).value;
  } else {
    const IntegratorConfig cfg = p.precise_cfg();
    const Vec x0 = p.flow_x_value(0.0, t, xi, cfg);
    ev.output = p.flow_y(t, 0.0, x0, cfg).terminal_state();
  }
  return ev;
}

/// G(t, eta) = eta + w*(t; (t, eta)); flow route: pull eta back along the
/// nonlinear flow and push forward with Phi(t, 0).
inline MapEvaluation G_map(const ConjugacyProblem& p, double t,
                           const Vec& eta, EvalPath path,
                           const PicardConfig& pc = {}) {
  (void)pc;
  if (t < 0.0) throw Error("G_map: t must be >= 0");
  MapEvaluation ev;
  ev.t = t;
  ev.input = eta;
  ev.path = path;
  if (t == 0.0) {
    ev.output = eta;
    return ev;
  }
  if (path == EvalPath::integral_definition) {
    ev.output = eta + w_star(p, t, t, eta);
  } else {
    const IntegratorConfig cfg = p.precise_cfg();
    const Vec y0 = p.flow_y(0.0, t, eta, cfg).terminal_state();
    ev.output = p.flow_x_value(t, 0.0, y0, cfg);
  }
  return ev;
}

/// Evaluate both routes; output carries the flow composition (the fast
/// path) and residual_vs_other_path the disagreement.
inline MapEvaluation H_map_checked(const ConjugacyProblem& p, double t,
                                   const Vec& xi,
                                   const PicardConfig& pc = {}) {
  MapEvaluation ev = H_map(p, t, xi, EvalPath::flow_composition, pc);
  const MapEvaluation lit = H_map(p, t, xi, EvalPath::integral_definition, pc);
  ev.residual_vs_other_path = (ev.output - lit.output).norm();
  ev.cross_checked = true;
  return ev;
}

inline MapEvaluation G_map_checked(const ConjugacyProblem& p, double t,
                                   const Vec& eta,
                                   const PicardConfig& pc = {}) {
  MapEvaluation ev = G_map(p, t, eta, EvalPath::flow_composition, pc);
  const MapEvaluation lit = G_map(p, t, eta, EvalPath::integral_definition, pc);
  ev.residual_vs_other_path = (ev.output - lit.output).norm();
  ev.cross_checked = true;
  return ev;
}

// ---------------------------------------------------------------------------
// Identity checks.

/// Step 4: max over samples of |H(t, G(t,eta)) - eta| and |G(t, H(t,xi)) -
/// xi|, one entry per direction.
inline std::vector<CheckEntry> check_bijection(
    const ConjugacyProblem& p, double t, const std::vector<Vec>& samples,
    const PicardConfig& pc = {}) {
  double worst_hg = 0.0, worst_gh = 0.0;
  for (const Vec& u : samples) {
    const Vec g = G_map(p, t, u, EvalPath::flow_composition, pc).output;
    const Vec hg = H_map(p, t, g, EvalPath::flow_composition, pc).output;
    worst_hg = std::max(worst_hg, (hg - u).norm());
    const Vec h = H_map(p, t, u, EvalPath::flow_composition, pc).output;
    const Vec gh = G_map(p, t, h, EvalPath::flow_composition, pc).output;
    worst_gh = std::max(worst_gh, (gh - u).norm());
  }
  const std::string suffix = "/t=" + std::to_string(t);
  return {CheckEntry::leq("conjugacy/roundtrip/HG" + suffix, "Step 4",
                          worst_hg, p.tol().tau_inv,
                          std::to_string(samples.size()) + " samples"),
          CheckEntry::leq("conjugacy/roundtrip/GH" + suffix, "Step 4",
                          worst_gh, p.tol().tau_inv,
                          std::to_string(samples.size()) + " samples")};
}

/// (conj1)/(conj2): H carries linear solutions to nonlinear ones and G the
/// reverse, along the trajectory through (tau, xi).
inline std::vector<CheckEntry> check_solution_mapping(
    const ConjugacyProblem& p, double tau, const Vec& xi,
    const std::vector<double>& ts, const PicardConfig& pc = {}) {
  if (ts.empty()) return {};
  const double t_hi =
      std::max(tau, *std::max_element(ts.begin(), ts.end()));

  const Vec h_tau = H_map(p, tau, xi, EvalPath::flow_composition, pc).output;
  const Vec g_tau = G_map(p, tau, xi, EvalPath::flow_composition, pc).output;
  const FlowSample x_traj = p.flow_x_span(tau, xi, t_hi);
  const FlowSample y_of_h = p.flow_y_span(tau, h_tau, t_hi);
  const FlowSample y_of_eta = p.flow_y_span(tau, xi, t_hi);

  std::vector<CheckEntry> out;
  for (double t : ts) {
    const Vec lhs_h =
        H_map(p, t, x_traj.eval(t), EvalPath::flow_composition, pc).output;
    const double r1 = (lhs_h - y_of_h.eval(t)).norm();
    out.push_back(CheckEntry::leq(
        "conjugacy/conj1/t=" + std::to_string(t), "(conj1)", r1,
        p.tol().tau_conj, "tau=" + std::to_string(tau)));

    const Vec lhs_g =
        G_map(p, t, y_of_eta.eval(t), EvalPath::flow_composition, pc).output;
    const Vec rhs_g = p.linear().transition(t, tau, p.cfg()) * g_tau;
    const double r2 = (lhs_g - rhs_g).norm();
    out.push_back(CheckEntry::leq(
        "conjugacy/conj2/t=" + std::to_string(t), "(conj2)", r2,
        p.tol().tau_conj, "tau=" + std::to_string(tau)));
  }
  return out;
}

}  // namespace conjlab
