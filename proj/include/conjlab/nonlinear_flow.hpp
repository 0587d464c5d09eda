#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "conjlab/errors.hpp"
#include "conjlab/linear_flow.hpp"
#include "conjlab/ode.hpp"
#include "conjlab/report.hpp"
#include "conjlab/types.hpp"

namespace conjlab {

/// The perturbation f(t, y) with its certified constants: gamma is a global
/// Lipschitz constant in y, mu a uniform bound (P3). smoothness_order
/// declares how many y-derivatives exist; a central finite-difference
/// Jacobian substitutes for a missing analytic one when the order is >= 1.
class Perturbation {
 public:
  using VectorFn = std::function<Vec(double, const Vec&)>;
  using JacobianFn = std::function<Mat(double, const Vec&)>;

  Perturbation(VectorFn f, double lipschitz, double bound,
               int smoothness_order = 0, JacobianFn jac = nullptr)
      : f_(std::move(f)),
        gamma_(lipschitz),
        mu_(bound),
        order_(smoothness_order),
        jac_(std::move(jac)) {
    if (!(gamma_ >= 0.0))
      throw CertificateRejected("Perturbation: gamma must be >= 0");
    if (!(mu_ >= 0.0))
      throw CertificateRejected("Perturbation: mu must be >= 0");
    if (order_ < 0)
      throw CertificateRejected("Perturbation: smoothness order must be >= 0");
  }

  Vec f(double t, const Vec& y) const { return f_(t, y); }
  double lipschitz() const { return gamma_; }
  double bound() const { return mu_; }
  int smoothness_order() const { return order_; }
  bool has_analytic_jacobian() const { return static_cast<bool>(jac_); }

  /// Df(t, y), analytic when supplied, else central differences with step
  /// 1e-6 (1 + |y|). Requires smoothness_order >= 1.
  Mat jacobian(double t, const Vec& y) const {
    if (jac_) return jac_(t, y);
    if (order_ < 1)
      throw MissingJacobian(
          "Perturbation: smoothness_order = 0 and no FD fallback");
    return fd_jacobian(t, y);
  }

  Mat fd_jacobian(double t, const Vec& y) const {
    const double h = 1e-6 * (1.0 + y.norm());
    const Vec f0 = f_(t, y);
    Mat J(f0.size(), y.size());
    Vec yp, ym;
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      yp = y;
      ym = y;
      yp(j) += h;
      ym(j) -= h;
      J.col(j) = (f_(t, yp) - f_(t, ym)) / (2.0 * h);
    }
    return J;
  }

  /// Sampled (P3) certificate: 256 seeded random (t, y, ybar) triples, plus
  /// analytic-vs-FD Jacobian consistency when Df was supplied.
  std::vector<CheckEntry> verify(Eigen::Index dim, double t_max,
                                 std::uint64_t seed,
                                 const Tolerances& tol) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ut(0.0, t_max);
    std::uniform_real_distribution<double> uy(-3.0, 3.0);
    auto draw_state = [&] {
      Vec y(dim);
      for (Eigen::Index i = 0; i < dim; ++i) y(i) = uy(rng);
      return y;
    };

    double worst_bound = 0.0, worst_lip = 0.0, worst_fd = 0.0;
    for (int k = 0; k < 256; ++k) {
      const double t = ut(rng);
      const Vec y = draw_state(), ybar = draw_state();
      const Vec fy = f_(t, y), fybar = f_(t, ybar);
      worst_bound = std::max({worst_bound, fy.norm(), fybar.norm()});
      const double lip_residual =
          (fy - fybar).norm() -
          gamma_ * (1.0 + tol.eps_cert) * (y - ybar).norm();
      worst_lip = std::max(worst_lip, lip_residual);
      if (jac_ && k % 8 == 0)
        worst_fd = std::max(
            worst_fd, opnorm(jac_(t, y) - fd_jacobian(t, y)));
    }

    std::vector<CheckEntry> out;
    out.push_back(CheckEntry::leq("pert/bound", "(P3)", worst_bound,
                                  mu_ * (1.0 + tol.eps_cert) + tol.eps_cert,
                                  "max |f| over 256 sampled (t, y)"));
    out.push_back(CheckEntry::leq("pert/lipschitz", "(P3)", worst_lip,
                                  tol.eps_cert,
                                  "max Lipschitz residual over samples"));
    if (jac_)
      out.push_back(CheckEntry::leq("pert/jacobian_fd", "(MDE1)", worst_fd,
                                    tol.tau_fd,
                                    "analytic Df vs central differences"));
    return out;
  }

 private:
  VectorFn f_;
  double gamma_;
  double mu_;
  int order_;
  JacobianFn jac_;
};

/// A linear system and a perturbation under hypotheses (P1)-(P3) plus the
/// smallness condition (7): K gamma / alpha < 1. Gateway to the nonlinear
/// flow y(t, tau, eta) and, through the conjugacy module, to H and G.
class ConjugacyProblem {
 public:
  ConjugacyProblem(LinearSystem linear, Perturbation pert,
                   IntegratorConfig cfg = {}, double t_max = 50.0,
                   Tolerances tol = {})
      : linear_(std::move(linear)),
        pert_(std::move(pert)),
        cfg_(cfg),
        t_max_(t_max),
        tol_(tol) {
    cfg_.validate();
    const double q = contraction_factor();
    if (!(q < 1.0))
      throw CertificateRejected(
          "ConjugacyProblem: hypothesis K*gamma/alpha < 1 violated, ratio = " +
          std::to_string(q));
    if (!(t_max_ > 0.0))
      throw Error("ConjugacyProblem: t_max must be > 0");
  }

  const LinearSystem& linear() const { return linear_; }
  const Perturbation& pert() const { return pert_; }
  const IntegratorConfig& cfg() const { return cfg_; }
  const Tolerances& tol() const { return tol_; }
  double t_max() const { return t_max_; }
  Eigen::Index dim() const { return linear_.dim(); }

  /// K gamma / alpha, the contraction factor of the Picard operator.
  double contraction_factor() const {
    return linear_.gain() * pert_.lipschitz() / linear_.decay_rate();
  }

  /// Copy of the problem with a different integrator configuration (e.g.
  /// loosened for checks whose margins are far above integration noise).
  ConjugacyProblem with_integrator(const IntegratorConfig& cfg) const {
    return ConjugacyProblem(linear_, pert_, cfg, t_max_, tol_);
  }

  /// Kmu/alpha, the uniform distance of H and G from the identity (Step 3).
  double proximity_bound() const {
    return linear_.gain() * pert_.bound() / linear_.decay_rate();
  }

  /// Tightened internal tolerances for composed map evaluations (H, G, w*,
  /// z*). Inverse-map compositions amplify leg noise, so the legs run two
  /// orders below the user-facing config.
  IntegratorConfig precise_cfg() const {
    IntegratorConfig c = cfg_;
    c.rtol = std::max(c.rtol * 1e-3, 1e-13);
    c.atol = std::max(c.atol * 1e-3, 1e-15);
    return c;
  }

  /// Solution of y' = A(t) y + f(t, y) through (tau, eta), sampled densely
  /// from tau to t (either direction).
  FlowSample flow_y(double t, double tau, const Vec& eta) const {
    return flow_y(t, tau, eta, cfg_);
  }

  FlowSample flow_y(double t, double tau, const Vec& eta,
                    const IntegratorConfig& cfg) const {
    require_half_line(t, tau);
    auto rhs = [this](double s, const Vec& y, Vec& dy) {
      dy = linear_.A(s) * y + pert_.f(s, y);
    };
    return integrate(rhs, tau, eta, t, cfg);
  }

  Vec flow_y_value(double t, double tau, const Vec& eta) const {
    return flow_y(t, tau, eta).terminal_state();
  }

  /// Linear flow x(t, tau, xi) as a vector IVP. For spans where Phi decays
  /// below atol this stays accurate while the matrix route would not:
  /// errors committed along a decaying vector solution decay with it.
  Vec flow_x_value(double t, double tau, const Vec& xi,
                   const IntegratorConfig& cfg) const {
    require_half_line(t, tau);
    if (t == tau) return xi;
    auto rhs = [this](double s, const Vec& x, Vec& dx) {
      dx = linear_.A(s) * x;
    };
    return integrate(rhs, tau, xi, t, cfg).terminal_state();
  }

  /// Dense nonlinear trajectory through (tau, eta) covering all of
  /// [0, max(hi, tau)], glued from the backward and forward legs.
  FlowSample flow_y_span(double tau, const Vec& eta, double hi) const {
    return flow_y_span(tau, eta, hi, cfg_);
  }

  FlowSample flow_y_span(double tau, const Vec& eta, double hi,
                         const IntegratorConfig& cfg) const {
    require_half_line(hi, tau);
    const double top = std::max(hi, tau);
    if (tau == 0.0) return flow_y(top, 0.0, eta, cfg);
    FlowSample back = flow_y(0.0, tau, eta, cfg);
    if (tau >= top) return back;
    return FlowSample::concat(back, flow_y(top, tau, eta, cfg));
  }

  /// Linear counterpart x(., tau, xi) over [0, max(hi, tau)].
  FlowSample flow_x_span(double tau, const Vec& xi, double hi) const {
    return flow_x_span(tau, xi, hi, cfg_);
  }

  FlowSample flow_x_span(double tau, const Vec& xi, double hi,
                         const IntegratorConfig& cfg) const {
    require_half_line(hi, tau);
    auto rhs = [this](double s, const Vec& x, Vec& dx) {
      dx = linear_.A(s) * x;
    };
    const double top = std::max(hi, tau);
    if (tau == 0.0) return integrate(rhs, 0.0, xi, top, cfg);
    FlowSample back = integrate(rhs, tau, xi, 0.0, cfg);
    if (tau >= top) return back;
    return FlowSample::concat(back, integrate(rhs, tau, xi, top, cfg));
  }

  /// dy/deta(t, tau, eta): co-integrates the matrix variational equation
  /// V' = {A(t) + Df(t, y)} V, V(tau) = I alongside the base flow.
  Mat variational_y(double t, double tau, const Vec& eta) const {
    require_half_line(t, tau);
    if (pert_.smoothness_order() < 1 && !pert_.has_analytic_jacobian())
      throw MissingJacobian(
          "variational_y: perturbation is not differentiable (r = 0)");
    const Eigen::Index n = dim();
    if (t == tau) return Mat::Identity(n, n);

    Vec z0(n + n * n);
    z0.head(n) = eta;
    Eigen::Map<Mat>(z0.data() + n, n, n) = Mat::Identity(n, n);

    auto rhs = [this, n](double s, const Vec& z, Vec& dz) {
      dz.resize(n + n * n);
      const Vec y = z.head(n);
      const Eigen::Map<const Mat> V(z.data() + n, n, n);
      const Mat a = linear_.A(s);
      dz.head(n) = a * y + pert_.f(s, y);
      Eigen::Map<Mat>(dz.data() + n, n, n) =
          (a + pert_.jacobian(s, y)) * V;
    };
    const Vec zT = integrate(rhs, tau, z0, t, cfg_).terminal_state();
    return Eigen::Map<const Mat>(zT.data() + n, n, n);
  }

  /// Max over accepted nodes of |f(t_i, y_i)| along a trajectory; (P3)
  /// requires it to stay within mu.
  double max_f_along(const FlowSample& traj) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < traj.grid().size(); ++i)
      worst = std::max(worst,
                       pert_.f(traj.grid()[i], traj.states()[i]).norm());
    return worst;
  }

 private:
  static void require_half_line(double t, double tau) {
    if (t < 0.0 || tau < 0.0)
      throw Error("flow: times must lie on the half line t >= 0");
  }

  LinearSystem linear_;
  Perturbation pert_;
  IntegratorConfig cfg_;
  double t_max_;
  Tolerances tol_;
};

}  // namespace conjlab
