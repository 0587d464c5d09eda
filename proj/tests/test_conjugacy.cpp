#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "conjlab/builtins.hpp"
#include "conjlab/conjugacy.hpp"
#include "support/oracles.hpp"

using conjlab::ConjugacyProblem;
using conjlab::EvalPath;
using conjlab::FlowSample;
using conjlab::G_map;
using conjlab::G_map_checked;
using conjlab::H_map;
using conjlab::H_map_checked;
using conjlab::LinearSystem;
using conjlab::Mat;
using conjlab::PicardConfig;
using conjlab::Vec;
using conjlab::vec1;
using conjlab::z_star;

namespace {

LinearSystem scalar_decay() {
  return LinearSystem([](double) { return -Mat::Identity(1, 1); }, 1, 1.0,
                      1.0, 1.0);
}

ConjugacyProblem jiang_problem() {
  return ConjugacyProblem(scalar_decay(),
                          conjlab::builtins::jiang_arctan(0.2));
}

ConjugacyProblem zero_problem() {
  return ConjugacyProblem(scalar_decay(),
                          conjlab::builtins::zero_perturbation(1));
}

ConjugacyProblem rot_tanh_problem() {
  Mat a(2, 2);
  a << -1.0, 0.5, -0.5, -1.0;
  return ConjugacyProblem(
      LinearSystem([a](double) { return a; }, 2, std::sqrt(1.25), 1.0, 1.0),
      conjlab::builtins::scaled_tanh(0.2, 2));
}

}  // namespace

// ---------------------------------------------------------------------- w*

TEST_CASE("w_star: zero forcing gives zero") {
  auto p = zero_problem();
  REQUIRE(conjlab::w_star(p, 3.0, 1.0, vec1(0.7)).norm() == 0.0);
}

TEST_CASE("w_star: IVP route, literal quadrature, and frozen golden agree") {
  auto p = jiang_problem();
  const Vec ivp = conjlab::w_star(p, 3.0, 3.0, vec1(0.5));
  const Vec lit = conjlab::w_star_quadrature(p, 3.0, 3.0, vec1(0.5));
  REQUIRE((ivp - lit).norm() <= 1e-8);
  // Frozen from the RK4 + composite-Simpson oracle.
  REQUIRE(std::abs(ivp(0) - (-0.052699436843377065)) <= 1e-8);
}

TEST_CASE("w_star: constant-equilibrium identity w* = (Phi(t,0) - I) ybar") {
  // A = -1, f = 0.3: ybar = 0.3 solves A y + f = 0.
  ConjugacyProblem p(scalar_decay(),
                     conjlab::builtins::constant_shift(vec1(0.3)));
  for (double t : {0.5, 2.0, 7.0}) {
    const Vec w = conjlab::w_star(p, t, 1.0, vec1(0.3));
    const double expected = (std::exp(-t) - 1.0) * 0.3;
    REQUIRE(std::abs(w(0) - expected) <= 1e-9);
  }
}

TEST_CASE("w_star: translation identity in the anchor (identity2)") {
  auto p = jiang_problem();
  const double tau = 1.0, r = 2.2;
  const Vec nu = vec1(0.8);
  const Vec y_r = p.flow_y_value(r, tau, nu);
  for (double t : {0.7, 1.9, 3.5}) {
    const Vec w1 = conjlab::w_star(p, t, tau, nu);
    const Vec w2 = conjlab::w_star(p, t, r, y_r);
    REQUIRE((w1 - w2).norm() <= p.tol().tau_equiv);
  }
}

// ---------------------------------------------------------------------- z*

TEST_CASE("z_star: zero perturbation converges at iteration 1 to zero") {
  auto p = zero_problem();
  auto r = z_star(p, 2.0, 2.0, vec1(1.0));
  REQUIRE(r.trace.size() == 1);
  REQUIRE(r.value.norm() == 0.0);
}

TEST_CASE("z_star: frozen golden and contraction ratios on the arctan field") {
  auto p = jiang_problem();
  auto r = z_star(p, 2.0, 2.0, vec1(0.0));
  // Frozen from the RK4 oracle: with xi = 0 the anchor trajectory vanishes
  // and z* solves z' = -z + f(t, z) from 0.
  REQUIRE(std::abs(r.value(0) - 0.1149027918915701) <= 1e-8);
  const double q = p.contraction_factor();
  REQUIRE(q == 0.2);
  for (const auto& row : r.trace) {
    if (row.iteration > 1) REQUIRE(row.ratio <= q + 0.05);
  }
}

TEST_CASE("z_star: tail sums obey the fixed-point error model") {
  auto p = jiang_problem();
  auto r = z_star(p, 3.0, 3.0, vec1(0.6));
  const double q = p.contraction_factor();
  const double d1 = r.trace.front().sup_diff;
  // |z_j - z*| <= sum_{i > j} d_i <= q^j/(1-q) d_1
  for (std::size_t j = 1; j + 1 < r.trace.size(); ++j) {
    double tail = 0.0;
    for (std::size_t i = j; i < r.trace.size(); ++i)
      tail += r.trace[i].sup_diff;
    REQUIRE(tail <= std::pow(q, j) / (1.0 - q) * d1 * 1.01);
  }
}

TEST_CASE("z_star: translation identity in the anchor (identity1)") {
  auto p = jiang_problem();
  const double tau = 1.5, r = 0.7;
  const Vec xi = vec1(0.4);
  const Vec x_r = p.flow_x_span(tau, xi, tau).eval(r);
  auto z1 = z_star(p, 3.0, tau, xi);
  auto z2 = z_star(p, 3.0, r, x_r);
  for (double s : {0.5, 1.0, 2.0, 3.0}) {
    REQUIRE((z1.sample.eval(s) - z2.sample.eval(s)).norm() <=
            p.tol().tau_equiv);
  }
}

TEST_CASE("z_star: NoConvergence is reported when the cap is too small") {
  auto p = jiang_problem();
  PicardConfig pc;
  pc.max_iter = 2;
  REQUIRE_THROWS_AS(z_star(p, 2.0, 2.0, vec1(0.5), pc),
                    conjlab::NoConvergence);
}

// ------------------------------------------------------------ Gamma operator

TEST_CASE("Gamma is a quantified contraction on random test functions") {
  auto p = jiang_problem();
  const double t = 2.5, tau = 2.5;
  const Vec xi = vec1(0.3);
  const double q = p.contraction_factor();

  std::mt19937_64 rng(0x5EED);
  std::uniform_real_distribution<double> uy(-3.0, 3.0);
  const int n_knots = 9;
  std::vector<double> knots(n_knots);
  for (int k = 0; k < n_knots; ++k)
    knots[k] = t * static_cast<double>(k) / (n_knots - 1);

  for (int trial = 0; trial < 4; ++trial) {
    std::vector<double> v1(n_knots), v2(n_knots);
    for (int k = 0; k < n_knots; ++k) {
      v1[k] = uy(rng);
      v2[k] = uy(rng);
    }
    auto piecewise = [&](const std::vector<double>& v) {
      return [&, v](double s) {
        const double pos = s / t * (n_knots - 1);
        const int k = std::min(static_cast<int>(pos), n_knots - 2);
        const double w = pos - k;
        return vec1((1.0 - w) * v[k] + w * v[k + 1]);
      };
    };
    auto phi1 = piecewise(v1), phi2 = piecewise(v2);
    const FlowSample g1 = conjlab::gamma_apply(p, tau, xi, t, phi1, knots);
    const FlowSample g2 = conjlab::gamma_apply(p, tau, xi, t, phi2, knots);

    double sup_in = 0.0, sup_out = 0.0;
    for (int k = 0; k <= 256; ++k) {
      const double s = t * k / 256.0;
      sup_in = std::max(sup_in, (phi1(s) - phi2(s)).norm());
      sup_out = std::max(sup_out, (g1.eval(s) - g2.eval(s)).norm());
    }
    REQUIRE(sup_out <= q * sup_in * (1.0 + p.tol().tau_rel));
  }
}

// ------------------------------------------------------------------- H and G

TEST_CASE("H and G: identity conjugacy for zero perturbation") {
  auto p = zero_problem();
  for (double t : {0.0, 1.0, 6.0}) {
    const Vec xi = vec1(-1.4);
    REQUIRE((H_map(p, t, xi, EvalPath::integral_definition).output - xi)
                .norm() == 0.0);
    REQUIRE((G_map(p, t, xi, EvalPath::integral_definition).output - xi)
                .norm() == 0.0);
    REQUIRE((H_map(p, t, xi, EvalPath::flow_composition).output - xi)
                .norm() <= p.tol().tau_num);
  }
}

TEST_CASE("H: frozen golden at (4, 0.7) and the Step 3 proximity bound") {
  auto p = jiang_problem();
  const auto ev = H_map_checked(p, 4.0, vec1(0.7));
  // Frozen from the RK4 flow-composition oracle.
  REQUIRE(std::abs(ev.output(0) - 0.7367748748591878) <= 1e-7);
  REQUIRE(std::abs(ev.output(0) - 0.7) <= p.proximity_bound());
  REQUIRE(p.proximity_bound() ==
          Catch::Approx(std::numbers::pi / 5.0).epsilon(1e-15));
}

TEST_CASE("H(0, xi) = xi and G(0, eta) = eta exactly") {
  auto p = jiang_problem();
  const Vec xi = vec1(-0.9);
  REQUIRE(H_map(p, 0.0, xi, EvalPath::flow_composition).output == xi);
  REQUIRE(G_map(p, 0.0, xi, EvalPath::integral_definition).output == xi);
}

TEST_CASE("path equivalence: flow composition vs integral definition") {
  auto p = jiang_problem();
  for (double t : {0.5, 2.0, 4.0}) {
    for (double x : {0.7, -1.2}) {
      const auto h = H_map_checked(p, t, vec1(x));
      const auto g = G_map_checked(p, t, vec1(x));
      INFO("t=" << t << " x=" << x);
      REQUIRE(h.residual_vs_other_path <= p.tol().tau_equiv);
      REQUIRE(g.residual_vs_other_path <= p.tol().tau_equiv);
    }
  }
}

TEST_CASE("path equivalence on the planar tanh scenario") {
  auto p = rot_tanh_problem();
  Vec u(2);
  u << 0.6, -0.4;
  for (double t : {1.0, 3.0}) {
    REQUIRE(H_map_checked(p, t, u).residual_vs_other_path <=
            p.tol().tau_equiv);
    REQUIRE(G_map_checked(p, t, u).residual_vs_other_path <=
            p.tol().tau_equiv);
  }
}

TEST_CASE("round trip: G(4, H(4, 0.7)) recovers 0.7") {
  auto p = jiang_problem();
  const Vec h = H_map(p, 4.0, vec1(0.7), EvalPath::flow_composition).output;
  const Vec back = G_map(p, 4.0, h, EvalPath::flow_composition).output;
  REQUIRE(std::abs(back(0) - 0.7) <= p.tol().tau_inv);
}

TEST_CASE("proximity: |H - id| and |G - id| within K mu / alpha") {
  auto p = jiang_problem();
  const double bound = p.proximity_bound() + p.tol().tau_num;
  std::mt19937_64 rng(0x5EED);
  std::uniform_real_distribution<double> ux(-2.0, 2.0);
  for (double t : {0.5, 1.0, 5.0, 10.0}) {
    for (int i = 0; i < 4; ++i) {
      const Vec u = vec1(ux(rng));
      const Vec h = H_map(p, t, u, EvalPath::flow_composition).output;
      const Vec g = G_map(p, t, u, EvalPath::flow_composition).output;
      REQUIRE((h - u).norm() <= bound);
      REQUIRE((g - u).norm() <= bound);
    }
  }
}

TEST_CASE("check_bijection: zero perturbation and the two scenarios") {
  auto pz = zero_problem();
  std::vector<Vec> states;
  for (double x : {-2.0, -0.5, 0.3, 1.7}) states.push_back(vec1(x));
  for (const auto& e : conjlab::check_bijection(pz, 3.0, states))
    REQUIRE(e.measured <= pz.tol().tau_num);

  auto p = jiang_problem();
  std::mt19937_64 rng(0x5EED);
  std::uniform_real_distribution<double> ux(-2.0, 2.0);
  std::vector<Vec> probes;
  for (int i = 0; i < 32; ++i) probes.push_back(vec1(ux(rng)));
  for (double t : {0.0, 1.0, 5.0, 10.0}) {
    for (const auto& e : conjlab::check_bijection(p, t, probes)) {
      INFO(e.check_id << " measured=" << e.measured);
      REQUIRE(e.pass);
    }
  }

  auto p2 = rot_tanh_problem();
  std::vector<Vec> probes2;
  std::uniform_real_distribution<double> ub(-1.0, 1.0);
  for (int i = 0; i < 16; ++i) {
    Vec u(2);
    u << ub(rng), ub(rng);
    probes2.push_back(u);
  }
  for (const auto& e : conjlab::check_bijection(p2, 5.0, probes2))
    REQUIRE(e.pass);
}

TEST_CASE("check_solution_mapping: (conj1) and (conj2) along a trajectory") {
  auto p = jiang_problem();
  auto entries = conjlab::check_solution_mapping(p, 0.0, vec1(1.0),
                                                 {0.5, 1.0, 2.0, 5.0, 10.0});
  REQUIRE(entries.size() == 10);
  for (const auto& e : entries) {
    INFO(e.check_id << " measured=" << e.measured);
    REQUIRE(e.pass);
  }
}

TEST_CASE("check_solution_mapping: zero perturbation has zero residuals") {
  auto p = zero_problem();
  for (const auto& e :
       conjlab::check_solution_mapping(p, 1.0, vec1(0.8), {2.0, 4.0}))
    REQUIRE(e.measured <= 1e-9);
}
