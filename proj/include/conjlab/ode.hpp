#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "conjlab/errors.hpp"
#include "conjlab/types.hpp"

namespace conjlab {

/// Tolerances and budgets for the adaptive integrator.
struct IntegratorConfig {
  double rtol = 1e-9;
  double atol = 1e-12;
  double h_init = 0.0;  // 0 = pick automatically
  double h_max = 10.0;
  std::int64_t max_steps = 500000;

  void validate() const {
    if (!(rtol > 0.0)) throw Error("IntegratorConfig: rtol must be > 0");
    if (!(atol > 0.0)) throw Error("IntegratorConfig: atol must be > 0");
    if (!(h_max > 0.0)) throw Error("IntegratorConfig: h_max must be > 0");
    if (max_steps <= 0) throw Error("IntegratorConfig: max_steps must be > 0");
  }

  IntegratorConfig with_tols(double r, double a) const {
    IntegratorConfig c = *this;
    c.rtol = r;
    c.atol = a;
    return c;
  }
};

/// Dense-output trajectory: strictly monotone grid, one state per node, and
/// a quartic interpolant per interval. eval() is exact at the nodes.
class FlowSample {
 public:
  struct DenseStep {
    double t_from = 0.0;  // step start in the direction of integration
    double t_to = 0.0;
    Vec c1, c2, c3, c4, c5;

    Vec eval(double t) const {
      const double theta = (t - t_from) / (t_to - t_from);
      const double th1 = 1.0 - theta;
      return c1 + theta * (c2 + th1 * (c3 + theta * (c4 + th1 * c5)));
    }
  };

  struct Stats {
    std::int64_t accepted = 0;
    std::int64_t rejected = 0;
    std::int64_t rhs_evals = 0;
  };

  FlowSample() = default;

  static FlowSample single_point(double t, Vec x) {
    FlowSample s;
    s.grid_.push_back(t);
    s.states_.push_back(std::move(x));
    s.t_begin_ = s.t_end_ = t;
    return s;
  }

  double t_begin() const { return t_begin_; }  // requested start time
  double t_end() const { return t_end_; }      // requested final time
  double span_lo() const { return grid_.front(); }
  double span_hi() const { return grid_.back(); }

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<Vec>& states() const { return states_; }
  const Stats& stats() const { return stats_; }

  const Vec& terminal_state() const {
    return t_end_ >= t_begin_ ? states_.back() : states_.front();
  }

  bool contains(double t) const {
    const double slack = 1e-12 * (1.0 + std::abs(t));
    return t >= grid_.front() - slack && t <= grid_.back() + slack;
  }

  Vec eval(double t) const {
    if (!contains(t))
      throw Error("FlowSample::eval: t outside sampled span");
    if (steps_.empty()) return states_.front();
    t = std::clamp(t, grid_.front(), grid_.back());
    auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
    std::size_t idx = static_cast<std::size_t>(
        std::distance(grid_.begin(), it));
    idx = idx == 0 ? 0 : idx - 1;
    if (idx >= steps_.size()) idx = steps_.size() - 1;
    return steps_[idx].eval(t);
  }

  /// Glue two samples sharing one endpoint (e.g. a backward leg on [0, tau]
  /// and a forward leg on [tau, t]) into a single ascending sample.
  static FlowSample concat(const FlowSample& lo, const FlowSample& hi) {
    if (lo.grid_.empty() || hi.grid_.empty())
      throw Error("FlowSample::concat: empty part");
    if (std::abs(lo.span_hi() - hi.span_lo()) >
        1e-9 * (1.0 + std::abs(lo.span_hi())))
      throw Error("FlowSample::concat: parts do not meet");
    FlowSample out;
    out.grid_ = lo.grid_;
    out.states_ = lo.states_;
    out.steps_ = lo.steps_;
    out.grid_.insert(out.grid_.end(), hi.grid_.begin() + 1, hi.grid_.end());
    out.states_.insert(out.states_.end(), hi.states_.begin() + 1,
                       hi.states_.end());
    out.steps_.insert(out.steps_.end(), hi.steps_.begin(), hi.steps_.end());
    out.t_begin_ = out.grid_.front();
    out.t_end_ = out.grid_.back();
    out.stats_.accepted = lo.stats_.accepted + hi.stats_.accepted;
    out.stats_.rejected = lo.stats_.rejected + hi.stats_.rejected;
    out.stats_.rhs_evals = lo.stats_.rhs_evals + hi.stats_.rhs_evals;
    return out;
  }

 private:
  template <class RHS>
  friend FlowSample integrate(RHS&& rhs, double t0, const Vec& x0, double t1,
                              const IntegratorConfig& cfg);

  std::vector<double> grid_;    // strictly increasing
  std::vector<Vec> states_;     // one per grid node
  std::vector<DenseStep> steps_;  // steps_[i] spans [grid_[i], grid_[i+1]]
  double t_begin_ = 0.0;
  double t_end_ = 0.0;
  Stats stats_;
};

namespace dopri {

// Dormand-Prince 5(4) tableau with Hairer's free 4th-order interpolant.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                        c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                        a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113,
                        a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                        a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                        e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432.0,
                        d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0,
                        d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0,
                        d7 = 69997945.0 / 29380423.0;

inline constexpr double safety = 0.9;
inline constexpr double fac_min = 0.2;  // h shrinks by at most 5x
inline constexpr double fac_max = 10.0;
inline constexpr double beta = 0.04;  // Lund stabilization

}  // namespace dopri

/// Integrate x' = rhs(t, x) from t0 to t1 (either direction) with dense
/// output. Backward runs are time-reversed internally so a single forward
/// code path handles both. Callable signature: rhs(double t, const Vec& x,
/// Vec& dxdt).
template <class RHS>
FlowSample integrate(RHS&& rhs, double t0, const Vec& x0, double t1,
                     const IntegratorConfig& cfg) {
  cfg.validate();
  if (!x0.allFinite()) throw NonFiniteState("integrate: non-finite x0");

  FlowSample out;
  out.t_begin_ = t0;
  out.t_end_ = t1;

  const double span = std::abs(t1 - t0);
  if (span == 0.0) {
    out.grid_.push_back(t0);
    out.states_.push_back(x0);
    return out;
  }

  const double dir = t1 >= t0 ? 1.0 : -1.0;
  const Eigen::Index n = x0.size();

  // Internal clock sigma runs forward from 0 to span; real time is
  // t0 + dir*sigma and the reversed field absorbs the sign.
  auto field = [&](double sigma, const Vec& u, Vec& du) {
    rhs(t0 + dir * sigma, u, du);
    if (dir < 0) du = -du;
  };

  Vec y = x0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n),
      ynew(n), err_vec(n);
  double sigma = 0.0;
  FlowSample::Stats stats;

  field(0.0, y, k1);
  ++stats.rhs_evals;

  auto err_norm = [&](const Vec& e, const Vec& y_old, const Vec& y_new) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double scale =
          cfg.atol + cfg.rtol * std::max(std::abs(y_old(i)), std::abs(y_new(i)));
      const double q = e(i) / scale;
      acc += q * q;
    }
    return std::sqrt(acc / static_cast<double>(n));
  };

  // Initial step: user-provided, else the standard two-derivative guess.
  double h = 0.0;
  if (cfg.h_init > 0.0) {
    h = std::min(cfg.h_init, std::min(cfg.h_max, span));
  } else {
    double dnf = 0.0, dny = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc = cfg.atol + cfg.rtol * std::abs(y(i));
      dnf += (k1(i) / sc) * (k1(i) / sc);
      dny += (y(i) / sc) * (y(i) / sc);
    }
    double h0 = (dnf <= 1e-10 || dny <= 1e-10)
                    ? 1e-6
                    : 0.01 * std::sqrt(dny / dnf);
    h0 = std::min(h0, span);
    ytmp = y + h0 * k1;
    field(h0, ytmp, k2);
    ++stats.rhs_evals;
    double der2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc = cfg.atol + cfg.rtol * std::abs(y(i));
      const double q = (k2(i) - k1(i)) / sc;
      der2 += q * q;
    }
    der2 = std::sqrt(der2) / h0;
    const double der12 = std::max(der2, std::sqrt(dnf));
    double h1 = der12 <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                               : std::pow(0.01 / der12, 0.2);
    h = std::min({100.0 * h0, h1, cfg.h_max, span});
  }

  out.grid_.push_back(t0);
  out.states_.push_back(y);

  double facold = 1e-4;
  bool rejected_last = false;
  std::int64_t steps_taken = 0;

  while (sigma < span) {
    if (++steps_taken > cfg.max_steps)
      throw StepBudgetExceeded("integrate: max_steps reached (" +
                               std::to_string(cfg.max_steps) + ")");
    if (h < 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + sigma))
      throw Error("integrate: step size underflow");
    bool last = false;
    if (sigma + 1.01 * h >= span) {
      h = span - sigma;
      last = true;
    }

    ytmp = y + h * (dopri::a21 * k1);
    field(sigma + dopri::c2 * h, ytmp, k2);
    ytmp = y + h * (dopri::a31 * k1 + dopri::a32 * k2);
    field(sigma + dopri::c3 * h, ytmp, k3);
    ytmp = y + h * (dopri::a41 * k1 + dopri::a42 * k2 + dopri::a43 * k3);
    field(sigma + dopri::c4 * h, ytmp, k4);
    ytmp = y + h * (dopri::a51 * k1 + dopri::a52 * k2 + dopri::a53 * k3 +
                    dopri::a54 * k4);
    field(sigma + dopri::c5 * h, ytmp, k5);
    ytmp = y + h * (dopri::a61 * k1 + dopri::a62 * k2 + dopri::a63 * k3 +
                    dopri::a64 * k4 + dopri::a65 * k5);
    field(sigma + h, ytmp, k6);
    ynew = y + h * (dopri::a71 * k1 + dopri::a73 * k3 + dopri::a74 * k4 +
                    dopri::a75 * k5 + dopri::a76 * k6);
    field(sigma + h, ynew, k7);
    stats.rhs_evals += 6;

    err_vec = h * (dopri::e1 * k1 + dopri::e3 * k3 + dopri::e4 * k4 +
                   dopri::e5 * k5 + dopri::e6 * k6 + dopri::e7 * k7);
    if (!ynew.allFinite() || !err_vec.allFinite())
      throw NonFiniteState("integrate: state became non-finite at t = " +
                           std::to_string(t0 + dir * (sigma + h)));
    const double err = err_norm(err_vec, y, ynew);

    const double fac11 = std::pow(std::max(err, 1e-32), 0.2 - dopri::beta * 0.75);
    if (err > 1.0) {
      h /= std::min(1.0 / dopri::fac_min, fac11 / dopri::safety);
      ++stats.rejected;
      rejected_last = true;
      continue;
    }

    // accepted: record dense coefficients for this interval
    FlowSample::DenseStep st;
    st.t_from = t0 + dir * sigma;
    st.t_to = last ? t1 : t0 + dir * (sigma + h);
    st.c1 = y;
    st.c2 = ynew - y;
    st.c3 = h * k1 - st.c2;
    st.c4 = st.c2 - h * k7 - st.c3;
    st.c5 = h * (dopri::d1 * k1 + dopri::d3 * k3 + dopri::d4 * k4 +
                 dopri::d5 * k5 + dopri::d6 * k6 + dopri::d7 * k7);
    out.steps_.push_back(std::move(st));

    sigma = last ? span : sigma + h;
    y.swap(ynew);
    k1.swap(k7);  // FSAL
    out.grid_.push_back(last ? t1 : t0 + dir * sigma);
    out.states_.push_back(y);
    ++stats.accepted;

    double fac = fac11 / std::pow(facold, dopri::beta);
    fac = std::clamp(fac / dopri::safety, 1.0 / dopri::fac_max,
                     1.0 / dopri::fac_min);
    double h_new = h / fac;
    if (rejected_last) h_new = std::min(h_new, h);
    rejected_last = false;
    facold = std::max(err, 1e-4);
    h = std::min(h_new, cfg.h_max);
  }
  out.stats_ = stats;

  if (dir < 0) {
    std::reverse(out.grid_.begin(), out.grid_.end());
    std::reverse(out.states_.begin(), out.states_.end());
    std::reverse(out.steps_.begin(), out.steps_.end());
  }
  return out;
}

/// Matrix-valued dense trajectory: a FlowSample over the flattened entries.
class MatrixFlowSample {
 public:
  MatrixFlowSample() = default;
  MatrixFlowSample(FlowSample flat, Eigen::Index rows, Eigen::Index cols)
      : flat_(std::move(flat)), rows_(rows), cols_(cols) {}

  Mat eval(double t) const { return unflatten(flat_.eval(t)); }
  Mat terminal_state() const { return unflatten(flat_.terminal_state()); }
  const FlowSample& flat() const { return flat_; }
  double span_lo() const { return flat_.span_lo(); }
  double span_hi() const { return flat_.span_hi(); }

 private:
  Mat unflatten(const Vec& v) const {
    return Eigen::Map<const Mat>(v.data(), rows_, cols_);
  }

  FlowSample flat_;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
};

/// Integrate the matrix IVP X' = rhs(t, X) from t0 to t1. Callable
/// signature: rhs(double t, const Mat& X, Mat& dX).
template <class MRHS>
MatrixFlowSample integrate_matrix(MRHS&& rhs, double t0, const Mat& X0,
                                  double t1, const IntegratorConfig& cfg) {
  const Eigen::Index r = X0.rows(), c = X0.cols();
  Mat work_x(r, c), work_dx(r, c);
  auto flat_rhs = [&](double t, const Vec& v, Vec& dv) {
    work_x = Eigen::Map<const Mat>(v.data(), r, c);
    rhs(t, work_x, work_dx);
    dv = Eigen::Map<const Vec>(work_dx.data(), r * c);
  };
  const Vec v0 = Eigen::Map<const Vec>(X0.data(), r * c);
  return MatrixFlowSample(integrate(flat_rhs, t0, v0, t1, cfg), r, c);
}

namespace detail {

inline double quad_norm(double x) { return std::abs(x); }
inline double quad_norm(const Vec& v) { return v.norm(); }
inline double quad_norm(const Mat& m) { return m.norm(); }

template <class F, class T>
T quad_recurse(F& f, double a, double b, const T& fa, const T& fm,
               const T& fb, const T& whole, double tol, int depth,
               std::int64_t& budget) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const T flm = f(lm), frm = f(rm);
  budget -= 2;
  const T left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const T right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const T delta = left + right - whole;
  if (quad_norm(delta) <= 15.0 * tol || depth <= 0 || budget <= 0) {
    if (quad_norm(delta) > 15.0 * tol)
      throw ToleranceNotMet("quad: refinement budget exhausted on [" +
                            std::to_string(a) + ", " + std::to_string(b) +
                            "]");
    return left + right + delta / 15.0;
  }
  return quad_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1,
                      budget) +
         quad_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1,
                      budget);
}

}  // namespace detail

/// Adaptive composite Simpson quadrature with Richardson control. Works for
/// scalar, vector, and matrix integrands; exact for cubics.
template <class F>
auto quad(F&& f, double a, double b, double tol)
    -> std::decay_t<decltype(f(a))> {
  using T = std::decay_t<decltype(f(a))>;
  if (!(tol > 0.0)) throw Error("quad: tol must be > 0");
  if (a > b) throw Error("quad: requires a <= b");
  T fa = f(a);
  if (a == b) {
    T zero = fa;
    zero -= fa;
    return zero;
  }
  const double m = 0.5 * (a + b);
  T fm = f(m), fb = f(b);
  T whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  std::int64_t budget = 2000000;
  return detail::quad_recurse(f, a, b, fa, fm, fb, whole, tol, 48, budget);
}

}  // namespace conjlab
