#pragma once

#include <cmath>
#include <numbers>

#include "conjlab/linear_flow.hpp"
#include "conjlab/nonlinear_flow.hpp"
#include "conjlab/types.hpp"

// Named vector fields available to scenario files. The perturbations come
// with analytically certified default constants; scenario files may
// override them with looser (still valid) certificates.

namespace conjlab::builtins {

inline LinearSystem::MatrixFn constant_matrix(Mat a) {
  return [a = std::move(a)](double) { return a; };
}

/// rot(a, b) -> [[a, b], [-b, a]]: spiral with decay rate -a and angular
/// speed b. ||Phi(t,s)|| = e^{a (t-s)} exactly.
inline Mat rot(double a, double b) {
  Mat m(2, 2);
  m << a, b, -b, a;
  return m;
}

/// Scalar diagonal entry -a + b sin(t); the sole time-varying entry form.
struct OscEntry {
  double a = 0.0;
  double b = 0.0;
  double operator()(double t) const { return -a + b * std::sin(t); }
};

/// f = 0. Identity conjugacy; gamma = mu = 0.
inline Perturbation zero_perturbation(Eigen::Index dim) {
  return Perturbation(
      [dim](double, const Vec&) { return Vec::Zero(dim).eval(); }, 0.0, 0.0,
      2, [dim](double, const Vec&) { return Mat::Zero(dim, dim).eval(); });
}

/// f(t, y) = c (pi/2 - atan(t + |y|)), scalar. Lipschitz constant c; the
/// certified bound c*pi is deliberately the loose textbook one (the true
/// sup is c*pi/2). Not differentiable at y = 0 (the |y| kink), so r = 1
/// holds only away from the origin; Df uses sign(0) = 0.
inline Perturbation jiang_arctan(double c) {
  return Perturbation(
      [c](double t, const Vec& y) {
        Vec v(1);
        v(0) = c * (std::numbers::pi / 2.0 - std::atan(t + std::abs(y(0))));
        return v;
      },
      c, c * std::numbers::pi, 1,
      [c](double t, const Vec& y) {
        Mat j(1, 1);
        const double s = y(0) > 0.0 ? 1.0 : (y(0) < 0.0 ? -1.0 : 0.0);
        const double u = t + std::abs(y(0));
        j(0, 0) = -c * s / (1.0 + u * u);
        return j;
      });
}

/// f(y) = c sin(y) componentwise; f(t, 0) = 0, gamma = c, mu = c sqrt(n).
inline Perturbation scaled_sin(double c, Eigen::Index dim) {
  return Perturbation(
      [c](double, const Vec& y) {
        return (c * y.array().sin()).matrix().eval();
      },
      c, c * std::sqrt(static_cast<double>(dim)), 2,
      [c](double, const Vec& y) {
        return Mat((c * y.array().cos()).matrix().asDiagonal());
      });
}

/// f(y) = c tanh(y) componentwise; f(t, 0) = 0, gamma = c, mu = c sqrt(n).
inline Perturbation scaled_tanh(double c, Eigen::Index dim) {
  return Perturbation(
      [c](double, const Vec& y) {
        return (c * y.array().tanh()).matrix().eval();
      },
      c, c * std::sqrt(static_cast<double>(dim)), 2,
      [c](double, const Vec& y) {
        const auto th = y.array().tanh();
        return Mat((c * (1.0 - th * th)).matrix().asDiagonal());
      });
}

/// f = c constant; gamma = 0, mu = |c|.
inline Perturbation constant_shift(Vec c) {
  const Eigen::Index n = c.size();
  return Perturbation([c](double, const Vec&) { return c; }, 0.0, c.norm(),
                      2, [n](double, const Vec&) {
                        return Mat::Zero(n, n).eval();
                      });
}

}  // namespace conjlab::builtins
