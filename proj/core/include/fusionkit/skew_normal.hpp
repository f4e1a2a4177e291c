#pragma once

#include <span>
#include <vector>

#include "fusionkit/dataset.hpp"
#include "fusionkit/em_config.hpp"
#include "fusionkit/gaussian.hpp"
#include "fusionkit/normal.hpp"
#include "fusionkit/types.hpp"

namespace fusionkit {

/// Skew-normal with hidden-scaling parameterisation:
///   W = mu + delta * U + V,  U ~ TN(0,1,0),  V ~ N(0, Sigma).
/// The density is 2 phi_d(w; mu, Lambda) Phi(m(w)/c) with
/// Lambda = Sigma + delta delta^T, m(w) = delta^T Lambda^{-1} (w - mu) and
/// c = sqrt(1 - delta^T Lambda^{-1} delta).
struct SkewNormalParams {
  BlockDims dims;
  Vector mu;
  Matrix sigma;
  Vector delta;

  Eigen::VectorBlock<const Vector> delta_x() const { return delta.segment(0, dims.x); }
  Eigen::VectorBlock<const Vector> delta_y() const { return delta.segment(dims.y_begin(), dims.y); }
  Eigen::VectorBlock<const Vector> delta_z() const { return delta.segment(dims.z_begin(), dims.z); }
};

/// Marginal of a coordinate subset keeps the same form: take sub-blocks.
struct SnBlock {
  Vector mu;
  Matrix sigma;
  Vector delta;
};
SnBlock sn_marginal(const SkewNormalParams& params, std::span<const Index> idx);

/// Cached density evaluator for one (mu, sigma, delta) triple.
class SnDensity {
 public:
  SnDensity(Vector mu, const Matrix& sigma, const Vector& delta);
  explicit SnDensity(const SnBlock& block) : SnDensity(block.mu, block.sigma, block.delta) {}

  double log_density(const Vector& w) const;
  /// Conditional posterior of the latent U given W = w is TN(m(w), c^2, 0).
  double m_of(const Vector& w) const;
  double c() const { return c_; }

 private:
  MvnDensity lambda_density_;  // phi_d(.; mu, Lambda)
  Vector a_;                   // Lambda^{-1} delta
  double c_ = 1.0;
};

double sn_log_density(const Vector& w, const SkewNormalParams& params);
double sn_density(const Vector& w, const SkewNormalParams& params);

/// n i.i.d. draws via the hierarchical representation; deterministic per seed.
Matrix sn_sample(const SkewNormalParams& params, Index n, std::uint64_t seed);

/// Implied first and second moments (E W = mu + delta sqrt(2/pi), etc.).
Vector sn_mean(const SkewNormalParams& params);
Matrix sn_cov(const SkewNormalParams& params);

/// Law of (Y, Z) given X = x:
///   (Y,Z) | X = x  =  mu_given_x + delta_given_x * U_x + V,
///   U_x ~ TN(tau_x, gamma_x, 0),  V ~ N(0, sigma_given_x).
struct ConditionalSkewNormal {
  Vector mu_given_x;     // d_Y + d_Z
  double tau_x = 0.0;
  double gamma_x = 1.0;  // variance of the latent normal before truncation
  Matrix sigma_given_x;  // (d_Y+d_Z) x (d_Y+d_Z), includes the YZ cross block
  Vector delta_given_x;  // d_Y + d_Z

  Vector mean() const;  // E[(Y,Z) | X = x]
  Matrix cov() const;   // Var[(Y,Z) | X = x]
};

ConditionalSkewNormal conditional_sn(const SkewNormalParams& params, const Vector& x);

struct SnFitResult {
  SkewNormalParams params;
  FitReport report;
};

/// Constrained EM fit. Every M-step output is assembled by back-transform,
/// so each iterate satisfies Sigma_YZ = Sigma_YX Sigma_XX^{-1} Sigma_XZ exactly.
SnFitResult fit_sn_em(const StackedDataset& ds, const SkewNormalParams& init,
                      const EMConfig& config);

/// Moment-based starting point: closed-form Gaussian fit for (mu, Sigma),
/// delta from the sign of the marginal sample skewness times 0.5 sd.
SkewNormalParams sn_moment_init(const StackedDataset& ds);

double sn_observed_loglik(const StackedDataset& ds, const SkewNormalParams& params);

}  // namespace fusionkit
