#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "conjlab/ode.hpp"
#include "support/oracles.hpp"

using conjlab::FlowSample;
using conjlab::IntegratorConfig;
using conjlab::Vec;
using conjlab::integrate;
using conjlab::quad;
using conjlab::vec1;

namespace {

void decay(double, const Vec& x, Vec& dx) { dx = -x; }

// Right-hand side of the scalar arctan-forced system used throughout:
// y' = -y + (1/5)(pi/2 - atan(t + |y|)), posed on t >= 0.
void jiang_rhs(double t, const Vec& y, Vec& dy) {
  dy.resize(1);
  dy(0) = -y(0) + 0.2 * (M_PI / 2.0 - std::atan(t + std::abs(y(0))));
}

}  // namespace

TEST_CASE("integrate: scalar exponential decay hits e^-2") {
  IntegratorConfig cfg;
  auto s = integrate(decay, 0.0, vec1(1.0), 2.0, cfg);
  REQUIRE(std::abs(s.terminal_state()(0) - std::exp(-2.0)) <= 1e-8);
  REQUIRE(s.t_begin() == 0.0);
  REQUIRE(s.t_end() == 2.0);
  REQUIRE(s.grid().front() == 0.0);
  REQUIRE(s.grid().back() == 2.0);
}

TEST_CASE("integrate: zero field returns x0 exactly") {
  IntegratorConfig cfg;
  auto zero = [](double, const Vec&, Vec& dx) { dx.setZero(1); };
  auto s = integrate(zero, 1.0, vec1(0.37), 9.0, cfg);
  REQUIRE(s.terminal_state()(0) == 0.37);
  auto sb = integrate(zero, 5.0, vec1(-2.0), 1.0, cfg);
  REQUIRE(sb.terminal_state()(0) == -2.0);
}

TEST_CASE("integrate: arctan-forced scalar system matches fixed-step RK4") {
  IntegratorConfig cfg;
  auto s = integrate(jiang_rhs, 0.0, vec1(0.0), 5.0, cfg);
  const Vec ref = oracles::rk4(jiang_rhs, 0.0, vec1(0.0), 5.0, 1e-4);
  // Frozen from the RK4 oracle at h = 1e-4.
  const double golden = 0.0512957205713028;
  REQUIRE(std::abs(ref(0) - golden) <= 1e-9);
  REQUIRE(std::abs(s.terminal_state()(0) - ref(0)) <= 1e-7);
}

TEST_CASE("integrate: backward span is sampled and evaluable") {
  IntegratorConfig cfg;
  auto s = integrate(decay, 2.0, vec1(std::exp(-2.0)), 0.0, cfg);
  REQUIRE(std::abs(s.terminal_state()(0) - 1.0) <= 1e-7);
  // grid ascends regardless of direction
  for (std::size_t i = 1; i < s.grid().size(); ++i)
    REQUIRE(s.grid()[i] > s.grid()[i - 1]);
  REQUIRE(std::abs(s.eval(1.0)(0) - std::exp(-1.0)) <= 1e-7);
}

TEST_CASE("integrate: reversibility within 10*(atol + rtol*|x0|)") {
  IntegratorConfig cfg;
  Vec x0 = vec1(1.0);
  auto fwd = integrate(jiang_rhs, 0.0, x0, 2.0, cfg);
  auto bwd = integrate(jiang_rhs, 2.0, fwd.terminal_state(), 0.0, cfg);
  const double bound = 10.0 * (cfg.atol + cfg.rtol * x0.norm());
  REQUIRE((bwd.terminal_state() - x0).norm() <= bound);
}

TEST_CASE("integrate: dense output consistent with fresh integration") {
  IntegratorConfig cfg;
  auto s = integrate(jiang_rhs, 0.0, vec1(0.8), 4.0, cfg);
  for (double tm : {0.37, 1.1, 2.6, 3.9}) {
    auto fresh = integrate(jiang_rhs, 0.0, vec1(0.8), tm, cfg);
    const double tol = 10.0 * (cfg.atol + cfg.rtol * fresh.terminal_state().norm());
    REQUIRE((s.eval(tm) - fresh.terminal_state()).norm() <= tol);
  }
}

TEST_CASE("integrate: interpolant reproduces stored states at the nodes") {
  IntegratorConfig cfg;
  auto s = integrate(jiang_rhs, 0.0, vec1(0.3), 3.0, cfg);
  for (std::size_t i = 0; i < s.grid().size(); ++i)
    REQUIRE((s.eval(s.grid()[i]) - s.states()[i]).norm() <= 1e-13);
}

TEST_CASE("integrate: non-finite state is reported") {
  IntegratorConfig cfg;
  auto poisoned = [](double t, const Vec&, Vec& dx) {
    dx.setConstant(1, t > 1.0 ? std::numeric_limits<double>::quiet_NaN() : 1.0);
  };
  REQUIRE_THROWS_AS(integrate(poisoned, 0.0, vec1(1.0), 5.0, cfg),
                    conjlab::NonFiniteState);
}

TEST_CASE("integrate: step budget is enforced") {
  IntegratorConfig cfg;
  cfg.max_steps = 10;
  cfg.h_max = 1e-3;
  REQUIRE_THROWS_AS(integrate(decay, 0.0, vec1(1.0), 2.0, cfg),
                    conjlab::StepBudgetExceeded);
}

TEST_CASE("integrate: config invariants are validated") {
  IntegratorConfig bad;
  bad.rtol = 0.0;
  REQUIRE_THROWS_AS(integrate(decay, 0.0, vec1(1.0), 1.0, bad),
                    conjlab::Error);
  bad = IntegratorConfig{};
  bad.h_max = -1.0;
  REQUIRE_THROWS_AS(integrate(decay, 0.0, vec1(1.0), 1.0, bad),
                    conjlab::Error);
}

TEST_CASE("quad: exponential integrand") {
  const double v = quad([](double t) { return std::exp(-t); }, 0.0, 2.0, 1e-12);
  REQUIRE(std::abs(v - (1.0 - std::exp(-2.0))) <= 1e-10);
}

TEST_CASE("quad: zero integrand gives exactly zero") {
  const double v = quad([](double) { return 0.0; }, 0.0, 17.0, 1e-12);
  REQUIRE(v == 0.0);
}

TEST_CASE("quad: long-tail exponential, tail sanity case") {
  const double v = quad([](double t) { return std::exp(-2.0 * t); }, 0.0, 20.0, 1e-12);
  REQUIRE(std::abs(v - 0.5) <= 1e-10);
}

TEST_CASE("quad: cubics are integrated exactly") {
  std::mt19937_64 rng(0x5EED);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = coef(rng), b = coef(rng), c = coef(rng), d = coef(rng);
    auto poly = [&](double t) { return ((a * t + b) * t + c) * t + d; };
    auto anti = [&](double t) {
      return ((a / 4 * t + b / 3) * t + c / 2) * t * t + d * t;
    };
    const double lo = -1.0 + coef(rng) / 3.0, hi = 2.0 + coef(rng) / 3.0;
    const double v = quad(poly, lo, hi, 1e-9);
    REQUIRE(std::abs(v - (anti(hi) - anti(lo))) <= 1e-11 * (1.0 + std::abs(v)));
  }
}

TEST_CASE("quad: vector integrand") {
  auto f = [](double t) {
    Vec v(2);
    v << std::exp(-t), std::cos(t);
    return v;
  };
  const Vec v = quad(f, 0.0, 1.0, 1e-12);
  REQUIRE(std::abs(v(0) - (1.0 - std::exp(-1.0))) <= 1e-10);
  REQUIRE(std::abs(v(1) - std::sin(1.0)) <= 1e-10);
}

TEST_CASE("quad: empty interval and precondition") {
  REQUIRE(quad([](double t) { return t; }, 3.0, 3.0, 1e-10) == 0.0);
  REQUIRE_THROWS_AS(quad([](double t) { return t; }, 3.0, 2.0, 1e-10),
                    conjlab::Error);
}

TEST_CASE("quad: tolerance failure is reported") {
  // Integrable but nastily singular derivative near 0 at an absurd tolerance.
  auto f = [](double t) { return t > 0 ? std::sin(1.0 / (t + 1e-14)) : 0.0; };
  REQUIRE_THROWS_AS(quad(f, 0.0, 1.0, 1e-15), conjlab::ToleranceNotMet);
}

TEST_CASE("FlowSample: concat of backward and forward legs") {
  IntegratorConfig cfg;
  auto back = integrate(jiang_rhs, 1.5, vec1(0.4), 0.0, cfg);
  auto fwd = integrate(jiang_rhs, 1.5, vec1(0.4), 4.0, cfg);
  auto whole = FlowSample::concat(back, fwd);
  REQUIRE(whole.span_lo() == 0.0);
  REQUIRE(whole.span_hi() == 4.0);
  REQUIRE((whole.eval(1.5) - vec1(0.4)).norm() <= 1e-9);
  REQUIRE((whole.eval(3.0) - fwd.eval(3.0)).norm() == 0.0);
  REQUIRE((whole.eval(0.5) - back.eval(0.5)).norm() == 0.0);
}

TEST_CASE("integrate: zero-span request") {
  IntegratorConfig cfg;
  auto s = integrate(decay, 1.0, vec1(0.5), 1.0, cfg);
  REQUIRE(s.terminal_state()(0) == 0.5);
  REQUIRE(s.eval(1.0)(0) == 0.5);
}
