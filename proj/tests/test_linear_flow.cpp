#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "conjlab/linear_flow.hpp"
#include "support/oracles.hpp"

using conjlab::CertificateRejected;
using conjlab::IntegratorConfig;
using conjlab::LinearSystem;
using conjlab::Mat;
using conjlab::TransitionQuery;
using conjlab::Vec;
using conjlab::opnorm;

namespace {

LinearSystem scalar_decay() {
  return LinearSystem([](double) { return -Mat::Identity(1, 1); }, 1, 1.0,
                      1.0, 1.0);
}

// Damped rotation, ||Phi(t,s)|| = e^{-(t-s)} exactly.
Mat rot_matrix() {
  Mat A(2, 2);
  A << -1.0, 0.5, -0.5, -1.0;
  return A;
}

LinearSystem rot_system() {
  return LinearSystem([](double) { return rot_matrix(); }, 2,
                      std::sqrt(1.25), 1.0, 1.0);
}

Mat rot_closed_form(double t, double s) {
  const double d = t - s;
  Mat phi(2, 2);
  phi << std::cos(0.5 * d), std::sin(0.5 * d), -std::sin(0.5 * d),
      std::cos(0.5 * d);
  return std::exp(-d) * phi;
}

}  // namespace

TEST_CASE("transition: scalar autonomous decay") {
  auto sys = scalar_decay();
  IntegratorConfig cfg;
  const Mat phi = sys.transition(2.0, 0.0, cfg);
  REQUIRE(std::abs(phi(0, 0) - std::exp(-2.0)) <= 1e-9);
}

TEST_CASE("transition: t == s short-circuits to the identity") {
  int evals = 0;
  LinearSystem sys(
      [&evals](double) {
        ++evals;
        return -Mat::Identity(1, 1);
      },
      1, 1.0, 1.0, 1.0);
  IntegratorConfig cfg;
  const Mat phi = sys.transition(3.0, 3.0, cfg);
  REQUIRE(phi == Mat::Identity(1, 1));
  REQUIRE(evals == 0);
}

TEST_CASE("transition: cache avoids re-integration") {
  int evals = 0;
  LinearSystem sys(
      [&evals](double) {
        ++evals;
        return -Mat::Identity(1, 1);
      },
      1, 1.0, 1.0, 1.0);
  IntegratorConfig cfg;
  sys.transition(1.0, 0.0, cfg);
  const int evals_first = evals;
  REQUIRE(evals_first > 0);
  sys.transition(1.0, 0.0, cfg);
  REQUIRE(evals == evals_first);
}

TEST_CASE("transition: damped rotation vs cocycle product and closed form") {
  auto sys = rot_system();
  IntegratorConfig cfg;
  const Mat direct = sys.transition(3.0, 1.0, cfg);
  const Mat product =
      sys.transition(3.0, 2.0, cfg) * sys.transition(2.0, 1.0, cfg);
  REQUIRE(opnorm(direct - product) <= 1e-9);
  REQUIRE(opnorm(direct - rot_closed_form(3.0, 1.0)) <= 1e-9);
}

TEST_CASE("transition: cocycle law on random triples") {
  auto sys = rot_system();
  IntegratorConfig cfg;
  std::mt19937_64 rng(0x5EED);
  std::uniform_real_distribution<double> u(0.0, 8.0);
  for (int i = 0; i < 12; ++i) {
    const double r = u(rng), s = u(rng), t = u(rng);
    const Mat lhs = sys.transition(t, s, cfg) * sys.transition(s, r, cfg);
    const Mat rhs = sys.transition(t, r, cfg);
    REQUIRE(opnorm(lhs - rhs) <= 1e-7);
  }
}

TEST_CASE("transition: determinant positive on sampled pairs") {
  auto sys = rot_system();
  IntegratorConfig cfg;
  std::mt19937_64 rng(0x5EED ^ 0xD1CE);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 16; ++i) {
    const double t = u(rng), s = u(rng);
    REQUIRE(sys.transition(t, s, cfg).determinant() > 0.0);
  }
}

TEST_CASE("transition: growth bounded by e^{M |t-s|} either direction") {
  auto sys = rot_system();
  IntegratorConfig cfg;
  const double m = sys.sup_norm_bound();
  for (auto [t, s] :
       {std::pair{4.0, 1.0}, {1.0, 4.0}, {0.0, 6.0}, {7.0, 6.5}}) {
    const double n = opnorm(sys.transition(t, s, cfg));
    REQUIRE(n <= std::exp(m * std::abs(t - s)) * (1.0 + 1e-9));
  }
}

TEST_CASE("transition: nonautonomous scalar field matches closed form") {
  // A(t) = -1 + 0.25 sin t; the exponent integrates in closed form.
  LinearSystem sys(
      [](double t) {
        Mat a(1, 1);
        a << -1.0 + 0.25 * std::sin(t);
        return a;
      },
      1, 1.25, std::exp(0.5), 1.0);
  IntegratorConfig cfg;
  auto closed = [](double t, double s) {
    return std::exp(-(t - s) + 0.25 * (std::cos(s) - std::cos(t)));
  };
  for (auto [t, s] : {std::pair{4.0, 1.0}, {0.5, 3.0}}) {
    const double got = sys.transition(t, s, cfg)(0, 0);
    const double want = closed(t, s);
    REQUIRE(std::abs(got - want) <= 1e-9 * (1.0 + std::abs(want)));
  }
}

TEST_CASE("transition_kernel: dense row agrees with per-pair transitions") {
  auto sys = rot_system();
  IntegratorConfig cfg;
  const double t = 3.0;
  auto row = sys.transition_kernel(t, cfg);
  for (double s : {0.0, 0.7, 1.9, 2.5, 3.0}) {
    REQUIRE(opnorm(row.eval(s) - sys.transition(t, s, cfg)) <= 1e-8);
  }
}

TEST_CASE("verify_uas: tight certificate passes with nonpositive residuals") {
  auto sys = scalar_decay();
  IntegratorConfig cfg;
  auto entries = sys.verify_uas({{1.0, 0.0}, {5.0, 2.0}}, cfg, 1e-7);
  REQUIRE(entries.size() == 2);
  for (const auto& e : entries) {
    REQUIRE(e.pass);
    REQUIRE(e.measured <= 1e-9);
  }
}

TEST_CASE("verify_uas: wrong certificate fails on a non-normal system") {
  // Jordan-type transient growth: Phi(1,0) has norm ~ 1.56 while the claimed
  // envelope K e^{-alpha} with K = 1, alpha = 1 allows only ~ 0.37.
  Mat a(2, 2);
  a << -1.0, 4.0, 0.0, -1.0;
  LinearSystem sys([a](double) { return a; }, 2, opnorm(a), 1.0, 1.0);
  IntegratorConfig cfg;
  auto entries = sys.verify_uas({{1.0, 0.0}}, cfg, 1e-7);
  REQUIRE_FALSE(entries[0].pass);
  REQUIRE(entries[0].measured > 1.0);
}

TEST_CASE("verify_uas: claiming alpha above M is rejected at construction") {
  // The guard alpha <= M makes the classic wrong-certificate example
  // (scalar decay with claimed alpha = 2) unconstructible.
  REQUIRE_THROWS_AS(LinearSystem([](double) { return -Mat::Identity(1, 1); },
                                 1, 1.0, 1.0, 2.0),
                    CertificateRejected);
}

TEST_CASE("LinearSystem: certificate field validation") {
  auto mkA = []() { return [](double) { return -Mat::Identity(1, 1); }; };
  REQUIRE_THROWS_AS(LinearSystem(mkA(), 1, 1.0, 0.5, 1.0),
                    CertificateRejected);
  REQUIRE_THROWS_AS(LinearSystem(mkA(), 1, 1.0, 1.0, 0.0),
                    CertificateRejected);
  REQUIRE_THROWS_AS(LinearSystem(mkA(), 1, 0.0, 1.0, 1.0),
                    CertificateRejected);
  REQUIRE_THROWS_AS(LinearSystem(mkA(), 1, 1.0, 1.0, -1.0),
                    CertificateRejected);
}

TEST_CASE("verify_sup_bound: detects an understated M") {
  LinearSystem sys(
      [](double t) {
        Mat a(1, 1);
        a << -1.0 - 0.5 * std::sin(t) * std::sin(t);
        return a;
      },
      1, 1.2, 1.0, 1.0);  // true sup is 1.5
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(0.1 * i);
  auto entries = sys.verify_sup_bound(grid, 1e-9);
  REQUIRE_FALSE(entries[0].pass);
}

TEST_CASE("verify_uas: rejects pairs off the half line or with t < s") {
  auto sys = scalar_decay();
  IntegratorConfig cfg;
  REQUIRE_THROWS_AS(sys.verify_uas({{0.0, 1.0}}, cfg, 1e-7), conjlab::Error);
  REQUIRE_THROWS_AS(sys.verify_uas({{1.0, -1.0}}, cfg, 1e-7), conjlab::Error);
}
