#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "conjlab/errors.hpp"
#include "conjlab/ode.hpp"
#include "conjlab/report.hpp"
#include "conjlab/types.hpp"

namespace conjlab {

/// A (t, s) pair on the half line at which the transition matrix is queried.
struct TransitionQuery {
  double t = 0.0;
  double s = 0.0;

  void validate() const {
    if (t < 0.0 || s < 0.0)
      throw Error("TransitionQuery: t and s must be >= 0");
  }
};

/// x' = A(t)x on the half line, carrying the certified constants: M bounds
/// sup ||A(t)||, and (K, alpha) certify ||Phi(t,s)|| <= K e^{-alpha (t-s)}
/// for t >= s >= 0. The certificate is user-supplied and verified by
/// sampling, not derived.
class LinearSystem {
 public:
  using MatrixFn = std::function<Mat(double)>;

  LinearSystem(MatrixFn A, Eigen::Index dim, double sup_norm_bound,
               double gain, double decay_rate)
      : A_(std::move(A)),
        dim_(dim),
        M_(sup_norm_bound),
        K_(gain),
        alpha_(decay_rate),
        cache_(std::make_shared<Cache>()) {
    if (dim_ <= 0) throw Error("LinearSystem: dim must be positive");
    if (!(M_ > 0.0))
      throw CertificateRejected("LinearSystem: requires M > 0, got M = " +
                                std::to_string(M_));
    if (!(K_ >= 1.0))
      throw CertificateRejected("LinearSystem: requires K >= 1, got K = " +
                                std::to_string(K_));
    if (!(alpha_ > 0.0))
      throw CertificateRejected(
          "LinearSystem: requires alpha > 0, got alpha = " +
          std::to_string(alpha_));
    if (alpha_ > M_)
      throw CertificateRejected(
          "LinearSystem: alpha <= M must hold, got alpha = " +
          std::to_string(alpha_) + " > M = " + std::to_string(M_));
  }

  Eigen::Index dim() const { return dim_; }
  double sup_norm_bound() const { return M_; }
  double gain() const { return K_; }
  double decay_rate() const { return alpha_; }

  Mat A(double t) const { return A_(t); }

  /// Phi(t, s): solution operator of x' = A(t)x mapping the state at time s
  /// to the state at time t. Read-through cached per system instance.
  Mat transition(double t, double s, const IntegratorConfig& cfg) const {
    if (t < 0.0 || s < 0.0)
      throw Error("transition: t and s must be >= 0");
    if (t == s) return Mat::Identity(dim_, dim_);
    {
      std::lock_guard<std::mutex> lock(cache_->mu);
      auto it = cache_->entries.find({t, s});
      if (it != cache_->entries.end()) return it->second;
    }
    auto rhs = [this](double tau, const Mat& X, Mat& dX) { dX = A_(tau) * X; };
    Mat phi = integrate_matrix(rhs, s, Mat::Identity(dim_, dim_), t, cfg)
                  .terminal_state();
    std::lock_guard<std::mutex> lock(cache_->mu);
    return cache_->entries.emplace(std::make_pair(t, s), std::move(phi))
        .first->second;
  }

  /// Dense sample of s -> Phi(t, s) on [0, t], from one backward sweep of
  /// dPhi/ds = -Phi A(s) with Phi(t, t) = I. This is what quadratures over
  /// the Green kernel consume instead of re-integrating per abscissa.
  MatrixFlowSample transition_kernel(double t,
                                     const IntegratorConfig& cfg) const {
    if (t < 0.0) throw Error("transition_kernel: t must be >= 0");
    auto rhs = [this](double s, const Mat& X, Mat& dX) { dX = -X * A_(s); };
    return integrate_matrix(rhs, t, Mat::Identity(dim_, dim_), 0.0, cfg);
  }

  /// Sampled check of (P1): ||A(t)|| <= M (1 + eps_cert) on a time grid.
  std::vector<CheckEntry> verify_sup_bound(const std::vector<double>& grid,
                                           double eps_cert) const {
    std::vector<CheckEntry> out;
    double worst = 0.0;
    for (double t : grid) worst = std::max(worst, opnorm(A_(t)));
    out.push_back(CheckEntry::leq("linear/sup_norm", "(P1)", worst,
                                  M_ * (1.0 + eps_cert),
                                  "max ||A(t)|| over verification grid"));
    return out;
  }

  /// Sampled check of (3): ||Phi(t,s)|| - K e^{-alpha (t-s)} <= tau_uas on
  /// each supplied pair with t >= s >= 0.
  std::vector<CheckEntry> verify_uas(const std::vector<TransitionQuery>& grid,
                                     const IntegratorConfig& cfg,
                                     double tau_uas) const {
    std::vector<CheckEntry> out;
    out.reserve(grid.size());
    int i = 0;
    for (const auto& q : grid) {
      q.validate();
      if (q.t < q.s) throw Error("verify_uas: pairs must satisfy t >= s");
      const double measured =
          opnorm(transition(q.t, q.s, cfg)) -
          K_ * std::exp(-alpha_ * (q.t - q.s));
      out.push_back(CheckEntry::leq(
          "linear/uas/" + std::to_string(i++), "(3)", measured, tau_uas,
          "t=" + std::to_string(q.t) + " s=" + std::to_string(q.s)));
    }
    return out;
  }

 private:
  struct Cache {
    std::mutex mu;
    std::map<std::pair<double, double>, Mat> entries;
  };

  MatrixFn A_;
  Eigen::Index dim_;
  double M_;
  double K_;
  double alpha_;
  std::shared_ptr<Cache> cache_;  // read-through; shared across copies
};

}  // namespace conjlab
