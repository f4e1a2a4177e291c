#pragma once

// EM building blocks shared by the single skew-normal fit and the
// skew-normal-mixture fit. The mixture path feeds responsibility-weighted
// sufficient statistics through the same M-step routines, so a g=1 mixture
// reproduces the single-family fit exactly.

#include <string>
#include <vector>

#include "fusionkit/em_config.hpp"
#include "fusionkit/errors.hpp"
#include "fusionkit/gaussian.hpp"
#include "fusionkit/skew_normal.hpp"
#include "fusionkit/types.hpp"

namespace fusionkit::detail {

struct XBlockUpdate {
  Vector mu_x;
  Matrix sigma_xx;
  Vector delta_x;
};

/// Joint maximiser of the expected complete-data X-block. The two normal
/// equations in (mu_X, delta_X) are Sigma-free, so solving them jointly and
/// then averaging the residual outer products gives the exact M-step.
/// Inputs are (weighted) sums; wsum is the total (weighted) row count.
inline XBlockUpdate sn_xblock_mstep(const Vector& sx, const Matrix& sxx, double se1,
                                    double se2, const Vector& se1x, double wsum) {
  XBlockUpdate u;
  const Vector xbar = sx / wsum;
  const double e1bar = se1 / wsum;
  const double denom = se2 - se1 * e1bar;
  if (!(denom > 0.0))
    throw NumericalError("skew-normal M-step: degenerate latent second moment");
  u.delta_x = (se1x - e1bar * sx) / denom;
  u.mu_x = xbar - e1bar * u.delta_x;
  const Vector q = se1x - se1 * u.mu_x;  // sum w_i e1_i (x_i - mu)
  Matrix s = sxx - sx * u.mu_x.transpose() - u.mu_x * sx.transpose() +
             wsum * u.mu_x * u.mu_x.transpose();
  s -= q * u.delta_x.transpose() + u.delta_x * q.transpose();
  s += se2 * u.delta_x * u.delta_x.transpose();
  u.sigma_xx = 0.5 * (s + s.transpose()) / wsum;
  return u;
}

struct SnRegressionUpdate {
  Vector alpha;
  Vector lambda;
  Matrix beta;
  Matrix omega;
};

/// Closed-form (weighted) normal equations for the latent-design regression
/// with predictor (1, u, x); sg/sbr/srr are the summed Gram, cross-product and
/// response outer products, wsum the summed weights of the contributing rows.
inline SnRegressionUpdate sn_regression_mstep(const Matrix& sg, const Matrix& sbr,
                                              const Matrix& srr, double wsum, Index dx) {
  const Matrix gamma = sg.ldlt().solve(sbr);  // (2+dx) x d_R
  SnRegressionUpdate u;
  u.alpha = gamma.row(0).transpose();
  u.lambda = gamma.row(1).transpose();
  u.beta = gamma.bottomRows(dx).transpose();
  const Matrix r = srr - sbr.transpose() * gamma - gamma.transpose() * sbr +
                   gamma.transpose() * sg * gamma;
  u.omega = 0.5 * (r + r.transpose()) / wsum;
  return u;
}

inline void check_pd(const Matrix& m, const char* what, int iteration) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(what) +
                         " lost positive definiteness at iteration " +
                         std::to_string(iteration));
}

inline bool sn_params_valid(const SkewNormalParams& params) {
  const Matrix lambda =
      (params.sigma + params.delta * params.delta.transpose()).eval();
  Eigen::LLT<Matrix> llt(0.5 * (lambda + lambda.transpose()));
  if (llt.info() != Eigen::Success) return false;
  return params.delta.dot(llt.solve(params.delta)) < 1.0 - 1e-12;
}

/// Back-transform the eta-space updates into theta; Sigma_YZ is set by the
/// identification restriction inside eta_to_theta. Applies the delta-validity
/// halving guard.
inline SkewNormalParams sn_assemble(const BlockDims& d, const XBlockUpdate& xb,
                                    const SnRegressionUpdate& ry,
                                    const SnRegressionUpdate& rz,
                                    std::vector<GuardEvent>& guards, int iteration) {
  check_pd(xb.sigma_xx, "Sigma_XX", iteration);
  check_pd(ry.omega, "Omega_Y", iteration);
  check_pd(rz.omega, "Omega_Z", iteration);

  EtaParams eta;
  eta.x = {xb.mu_x, xb.sigma_xx, xb.delta_x};
  eta.y = {ry.alpha, ry.beta, ry.omega, ry.lambda};
  eta.z = {rz.alpha, rz.beta, rz.omega, rz.lambda};
  const GaussianParams theta = eta_to_theta(eta);

  SkewNormalParams params;
  params.dims = d;
  params.mu = theta.mu;
  params.sigma = theta.sigma;
  params.delta.resize(d.total());
  params.delta.head(d.x) = xb.delta_x;
  params.delta.segment(d.y_begin(), d.y) = ry.lambda + ry.beta * xb.delta_x;
  params.delta.segment(d.z_begin(), d.z) = rz.lambda + rz.beta * xb.delta_x;

  // With PD Sigma the valid region is automatic; halving covers borderline
  // rounding without aborting the fit.
  int halvings = 0;
  while (!sn_params_valid(params)) {
    params.delta *= 0.5;
    if (++halvings > 64)
      throw NumericalError("could not restore delta validity at iteration " +
                           std::to_string(iteration));
  }
  if (halvings > 0)
    guards.push_back({iteration, "delta_shrink",
                      "halved delta " + std::to_string(halvings) +
                          "x to stay in the valid region"});
  return params;
}

}  // namespace fusionkit::detail
