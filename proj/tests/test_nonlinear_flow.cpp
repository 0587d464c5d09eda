#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "conjlab/builtins.hpp"
#include "conjlab/nonlinear_flow.hpp"
#include "support/oracles.hpp"

using conjlab::CertificateRejected;
using conjlab::ConjugacyProblem;
using conjlab::IntegratorConfig;
using conjlab::LinearSystem;
using conjlab::Mat;
using conjlab::MissingJacobian;
using conjlab::Perturbation;
using conjlab::Tolerances;
using conjlab::Vec;
using conjlab::opnorm;
using conjlab::vec1;

namespace {

LinearSystem scalar_decay() {
  return LinearSystem([](double) { return -Mat::Identity(1, 1); }, 1, 1.0,
                      1.0, 1.0);
}

ConjugacyProblem jiang_problem() {
  return ConjugacyProblem(scalar_decay(),
                          conjlab::builtins::jiang_arctan(0.2));
}

ConjugacyProblem sin_problem() {
  return ConjugacyProblem(scalar_decay(),
                          conjlab::builtins::scaled_sin(0.2, 1));
}

void jiang_rhs(double t, const Vec& y, Vec& dy) {
  dy.resize(1);
  dy(0) = -y(0) + 0.2 * (std::numbers::pi / 2.0 -
                         std::atan(t + std::abs(y(0))));
}

}  // namespace

TEST_CASE("hypothesis (7): K gamma / alpha >= 1 is rejected with the ratio") {
  Perturbation too_big(
      [](double, const Vec& y) {
        return (2.0 * y.array().sin()).matrix().eval();
      },
      2.0, 2.0, 1);
  try {
    ConjugacyProblem p(scalar_decay(), too_big);
    FAIL("expected CertificateRejected");
  } catch (const CertificateRejected& e) {
    REQUIRE(std::string(e.what()).find("2.0") != std::string::npos);
  }
}

TEST_CASE("flow_y: zero perturbation reduces to the linear flow") {
  ConjugacyProblem p(scalar_decay(), conjlab::builtins::zero_perturbation(1));
  const Vec eta = vec1(0.8);
  const Vec y = p.flow_y_value(2.5, 0.5, eta);
  const Mat phi = p.linear().transition(2.5, 0.5, p.cfg());
  REQUIRE((y - phi * eta).norm() <= p.tol().tau_num);
}

TEST_CASE("flow_y: arctan-forced scenario matches the RK4 oracle") {
  auto p = jiang_problem();
  const Vec y = p.flow_y_value(5.0, 0.0, vec1(0.0));
  // Frozen from the independent fixed-step RK4 oracle at h = 1e-4.
  REQUIRE(std::abs(y(0) - 0.0512957205713028) <= 1e-7);
  const Vec ref = oracles::rk4(jiang_rhs, 0.0, vec1(0.0), 5.0, 1e-4);
  REQUIRE(std::abs(y(0) - ref(0)) <= 1e-7);
}

TEST_CASE("flow_y: origin equilibrium is preserved when f(t,0) = 0") {
  auto p = sin_problem();
  for (double t : {0.5, 3.0, 12.0}) {
    REQUIRE(p.flow_y_value(t, 0.0, vec1(0.0)).norm() <= p.cfg().atol);
  }
}

TEST_CASE("flow_y_span: covers [0, hi] through an interior anchor") {
  auto p = jiang_problem();
  auto traj = p.flow_y_span(2.0, vec1(0.4), 6.0);
  REQUIRE(traj.span_lo() == 0.0);
  REQUIRE(traj.span_hi() == 6.0);
  REQUIRE((traj.eval(2.0) - vec1(0.4)).norm() <= 1e-12);
  REQUIRE((traj.eval(5.0) - p.flow_y_value(5.0, 2.0, vec1(0.4))).norm() <=
          1e-9);
  REQUIRE((traj.eval(1.0) - p.flow_y_value(1.0, 2.0, vec1(0.4))).norm() <=
          1e-9);
}

TEST_CASE("flow chain consistency: y(t, r, y(r,tau,eta)) = y(t,tau,eta)") {
  auto p = sin_problem();
  const Vec eta = vec1(1.3);
  const double tau = 0.5;
  std::mt19937_64 rng(0x5EED);
  std::uniform_real_distribution<double> ur(0.6, 4.0);
  for (int i = 0; i < 6; ++i) {
    const double r = ur(rng), t = 5.0;
    const Vec via = p.flow_y_value(t, r, p.flow_y_value(r, tau, eta));
    const Vec direct = p.flow_y_value(t, tau, eta);
    REQUIRE((via - direct).norm() <= p.tol().tau_num);
  }
}

TEST_CASE("Gronwall sensitivity: |y(s,t,eta)-y(s,t,etabar)| bound") {
  auto p = sin_problem();
  const double m = p.linear().sup_norm_bound();
  const double gamma = p.pert().lipschitz();
  std::mt19937_64 rng(0xBEEF);
  std::uniform_real_distribution<double> uy(-2.0, 2.0);
  for (int i = 0; i < 8; ++i) {
    const double t = 3.0, s = 0.25 * i;  // s <= t
    const Vec eta = vec1(uy(rng)), etabar = vec1(uy(rng));
    const double lhs =
        (p.flow_y_value(s, t, eta) - p.flow_y_value(s, t, etabar)).norm();
    const double rhs = (eta - etabar).norm() *
                       std::exp((m + gamma) * (t - s)) *
                       (1.0 + p.tol().tau_rel);
    REQUIRE(lhs <= rhs);
  }
}

TEST_CASE("f stays within mu along trajectories") {
  auto p = jiang_problem();
  auto traj = p.flow_y(8.0, 0.0, vec1(1.5));
  REQUIRE(p.max_f_along(traj) <= p.pert().bound() * (1.0 + 1e-12));
}

TEST_CASE("variational_y: identity at t = tau and linear reduction") {
  ConjugacyProblem p(scalar_decay(), conjlab::builtins::zero_perturbation(1));
  REQUIRE(p.variational_y(1.5, 1.5, vec1(0.3)) == Mat::Identity(1, 1));
  const Mat v = p.variational_y(2.0, 0.5, vec1(0.3));
  const Mat phi = p.linear().transition(2.0, 0.5, p.cfg());
  REQUIRE(opnorm(v - phi) <= p.tol().tau_num);
}

TEST_CASE("variational_y: matches central differences on the arctan field") {
  auto p = jiang_problem();
  const double t = 2.0, tau = 0.0;
  const Vec eta = vec1(0.3);
  const Mat v = p.variational_y(t, tau, eta);
  const double h = 1e-5;
  const Vec yp = p.flow_y_value(t, tau, vec1(0.3 + h));
  const Vec ym = p.flow_y_value(t, tau, vec1(0.3 - h));
  const double fd = (yp(0) - ym(0)) / (2.0 * h);
  REQUIRE(std::abs(v(0, 0) - fd) <= 1e-4 * std::abs(fd));
}

TEST_CASE("variational_y: FD fallback when no analytic Jacobian, r >= 1") {
  Perturbation no_jac(
      [](double, const Vec& y) {
        return (0.2 * y.array().sin()).matrix().eval();
      },
      0.2, 0.2, 1);
  ConjugacyProblem p(scalar_decay(), no_jac);
  auto p_ref = sin_problem();
  const Mat v = p.variational_y(2.0, 0.0, vec1(0.7));
  const Mat v_ref = p_ref.variational_y(2.0, 0.0, vec1(0.7));
  REQUIRE(opnorm(v - v_ref) <= 1e-6);
}

TEST_CASE("variational_y: r = 0 without Jacobian raises MissingJacobian") {
  Perturbation rough(
      [](double, const Vec& y) {
        return (0.1 * y.array().abs().min(1.0)).matrix().eval();
      },
      0.1, 0.1, 0);
  ConjugacyProblem p(scalar_decay(), rough);
  REQUIRE_THROWS_AS(p.variational_y(1.0, 0.0, vec1(0.5)), MissingJacobian);
}

TEST_CASE("certificate sampling: shipped perturbations pass") {
  Tolerances tol;
  auto jiang = conjlab::builtins::jiang_arctan(0.2);
  for (const auto& e : jiang.verify(1, 50.0, 0x5EED, tol)) {
    INFO(e.check_id << " measured=" << e.measured << " bound=" << e.bound);
    REQUIRE(e.pass);
  }
  auto tanh2 = conjlab::builtins::scaled_tanh(0.2, 2);
  for (const auto& e : tanh2.verify(2, 50.0, 0x5EED, tol)) REQUIRE(e.pass);
}

TEST_CASE("certificate sampling: falsified Lipschitz constant is caught") {
  Perturbation lying(
      [](double, const Vec& y) {
        return (0.2 * y.array().sin()).matrix().eval();
      },
      0.01, 0.2, 1);  // true Lipschitz constant is 0.2
  Tolerances tol;
  bool lipschitz_failed = false;
  for (const auto& e : lying.verify(1, 50.0, 0x5EED, tol))
    if (e.check_id == "pert/lipschitz" && !e.pass) lipschitz_failed = true;
  REQUIRE(lipschitz_failed);
}

TEST_CASE("certificate sampling: falsified bound mu is caught") {
  Perturbation lying([](double, const Vec&) { return vec1(0.5); }, 0.0, 0.1,
                     1);  // |f| = 0.5 > mu = 0.1
  Tolerances tol;
  bool bound_failed = false;
  for (const auto& e : lying.verify(1, 50.0, 0x5EED, tol))
    if (e.check_id == "pert/bound" && !e.pass) bound_failed = true;
  REQUIRE(bound_failed);
}

TEST_CASE("flows reject negative times (half-line domain)") {
  auto p = jiang_problem();
  REQUIRE_THROWS_AS(p.flow_y(-1.0, 0.0, vec1(0.0)), conjlab::Error);
  REQUIRE_THROWS_AS(p.flow_y(1.0, -0.5, vec1(0.0)), conjlab::Error);
}
