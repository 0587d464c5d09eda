#pragma once

// Test-only reference implementations, deliberately independent of the
// library's integration path: classical fixed-step RK4 and plain central
// finite differences. Expected values frozen in the tests were produced
// with these.

#include <cmath>
#include <functional>

#include "conjlab/types.hpp"

namespace oracles {

using conjlab::Mat;
using conjlab::Vec;

using RhsFn = std::function<void(double, const Vec&, Vec&)>;

/// Classical RK4 with fixed step h (default 1e-4). Handles either direction.
inline Vec rk4(const RhsFn& rhs, double t0, Vec y, double t1,
               double h = 1e-4) {
  const double span = t1 - t0;
  if (span == 0.0) return y;
  const long n = std::lround(std::ceil(std::abs(span) / h));
  const double dt = span / static_cast<double>(n);
  Vec k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size());
  double t = t0;
  for (long i = 0; i < n; ++i) {
    rhs(t, y, k1);
    rhs(t + 0.5 * dt, y + 0.5 * dt * k1, k2);
    rhs(t + 0.5 * dt, y + 0.5 * dt * k2, k3);
    rhs(t + dt, y + dt * k3, k4);
    y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = t0 + (i + 1) * span / static_cast<double>(n);
  }
  return y;
}

/// Central finite-difference Jacobian of a map R^n -> R^m.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x,
                       double h) {
  const Vec f0 = f(x);
  Mat J(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

}  // namespace oracles
