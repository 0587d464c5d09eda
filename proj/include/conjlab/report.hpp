#pragma once

#include <string>
#include <vector>

namespace conjlab {

/// One verified inequality or identity: the measured quantity, the bound it
/// must satisfy, and the anchor naming the statement it checks.
struct CheckEntry {
  std::string check_id;
  std::string paper_anchor;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::string note;

  static CheckEntry leq(std::string id, std::string anchor, double measured,
                        double bound, std::string note = {}) {
    CheckEntry e;
    e.check_id = std::move(id);
    e.paper_anchor = std::move(anchor);
    e.measured = measured;
    e.bound = bound;
    e.pass = measured <= bound;
    e.note = std::move(note);
    return e;
  }

  /// Informational entry (out-of-contract sample): always passes.
  static CheckEntry info(std::string id, std::string anchor, double measured,
                         std::string note) {
    CheckEntry e;
    e.check_id = std::move(id);
    e.paper_anchor = std::move(anchor);
    e.measured = measured;
    e.bound = 0.0;
    e.pass = true;
    e.note = std::move(note);
    return e;
  }
};

/// Residual tolerances used by the verification checks. Defaults are the
/// shipped ones; scale() is the hook for the CONJLAB_TOL_SCALE multiplier.
struct Tolerances {
  double eps_cert = 1e-9;  // slack on sampled certificate inequalities
  double tau_uas = 1e-7;   // transition-bound residual
  double tau_num = 1e-7;   // generic numeric identity residual
  double tau_fd = 1e-6;    // analytic-vs-FD consistency of Df
  double tol_fix = 1e-10;  // Picard stopping tolerance
  double tau_equiv = 1e-7; // two-path map agreement
  double tau_inv = 1e-6;   // round-trip residual
  double tau_conj = 1e-6;  // conjugation-identity residual
  double tau_rel = 1e-3;   // relative slack on sampled analytic bounds
  double tau_jac = 1e-4;   // relative Jacobian-vs-FD agreement
  double tau_eq = 1e-8;    // equilibrium residual acceptance
  double tau_lyap = 1e-6;  // Lyapunov decrease slack
  double tol_tail = 1e-10; // neglected tail of the P(t) integral
  double quad_tol = 1e-10; // literal-quadrature tolerance

  Tolerances scaled(double factor) const {
    Tolerances t = *this;
    t.eps_cert *= factor;
    t.tau_uas *= factor;
    t.tau_num *= factor;
    t.tau_fd *= factor;
    t.tol_fix *= factor;
    t.tau_equiv *= factor;
    t.tau_inv *= factor;
    t.tau_conj *= factor;
    t.tau_rel *= factor;
    t.tau_jac *= factor;
    t.tau_eq *= factor;
    t.tau_lyap *= factor;
    t.tol_tail *= factor;
    t.quad_tol *= factor;
    return t;
  }
};

inline bool all_pass(const std::vector<CheckEntry>& entries) {
  for (const auto& e : entries)
    if (!e.pass) return false;
  return true;
}

}  // namespace conjlab
