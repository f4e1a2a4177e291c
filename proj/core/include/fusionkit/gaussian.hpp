#pragma once

#include <span>
#include <utility>
#include <vector>

#include "fusionkit/block_spec.hpp"
#include "fusionkit/dataset.hpp"
#include "fusionkit/types.hpp"

namespace fusionkit {

class Rng;

/// Joint Gaussian over the stacked (X, Y, Z) vector.
struct GaussianParams {
  BlockDims dims;
  Vector mu;     // d
  Matrix sigma;  // d x d symmetric PSD

  Eigen::VectorBlock<const Vector> mu_x() const { return mu.segment(0, dims.x); }
  Eigen::VectorBlock<const Vector> mu_y() const { return mu.segment(dims.y_begin(), dims.y); }
  Eigen::VectorBlock<const Vector> mu_z() const { return mu.segment(dims.z_begin(), dims.z); }
  Eigen::Block<const Matrix> sigma_xx() const { return sigma.block(0, 0, dims.x, dims.x); }
  Eigen::Block<const Matrix> sigma_xy() const { return sigma.block(0, dims.y_begin(), dims.x, dims.y); }
  Eigen::Block<const Matrix> sigma_xz() const { return sigma.block(0, dims.z_begin(), dims.x, dims.z); }
  Eigen::Block<const Matrix> sigma_yy() const { return sigma.block(dims.y_begin(), dims.y_begin(), dims.y, dims.y); }
  Eigen::Block<const Matrix> sigma_yz() const { return sigma.block(dims.y_begin(), dims.z_begin(), dims.y, dims.z); }
  Eigen::Block<const Matrix> sigma_zz() const { return sigma.block(dims.z_begin(), dims.z_begin(), dims.z, dims.z); }
};

/// One conditional regression block: R | X = x ~ N(alpha + beta x, omega),
/// or N(alpha + lambda u + beta x, omega) when a latent scaling u is present.
struct RegressionBlock {
  Vector alpha;   // d_R
  Matrix beta;    // d_R x d_X
  Matrix omega;   // d_R x d_R symmetric PSD
  Vector lambda;  // d_R; empty in the Gaussian case
};

struct EtaX {
  Vector mu_x;
  Matrix sigma_xx;
  Vector delta_x;  // empty in the Gaussian case
};

/// The regression reparameterisation eta = (eta_X, eta_Y, eta_Z).
struct EtaParams {
  EtaX x;
  RegressionBlock y;
  RegressionBlock z;

  BlockDims dims() const {
    return {x.mu_x.size(), y.alpha.size(), z.alpha.size()};
  }
};

/// theta -> eta:  beta_R = Sigma_RX Sigma_XX^{-1}, alpha_R = mu_R - beta_R mu_X,
/// omega_R = Sigma_RR - Sigma_RX Sigma_XX^{-1} Sigma_XR.
/// Throws NumericalError when rcond(Sigma_XX) < 1e-12.
EtaParams theta_to_eta(const GaussianParams& params);

/// eta -> theta. Sigma_YZ is set by the identification restriction
/// Sigma_YZ = beta_Y Sigma_XX beta_Z^T; it is never a free input.
GaussianParams eta_to_theta(const EtaParams& eta);

/// Closed-form constrained MLE: X-block moments over all n rows (1/n
/// denominators), per-dataset regression normal equations, then eta -> theta.
GaussianParams fit_gaussian(const StackedDataset& ds);

/// Sum of log marginal densities of the observed blocks: N(x,y) over A rows
/// plus N(x,z) over B rows. Valid for any PSD theta, constrained or not.
double gaussian_observed_loglik(const StackedDataset& ds, const GaussianParams& params);

/// ||Sigma_YZ - Sigma_YX Sigma_XX^{-1} Sigma_XZ||_F / ||Sigma||_F.
double constraint_gap(const BlockDims& dims, const Matrix& sigma);

/// n draws from the joint model.
Matrix gaussian_sample(const GaussianParams& params, Index n, std::uint64_t seed);

/// Index helpers for gathering non-contiguous observed blocks.
std::vector<Index> xy_indices(const BlockDims& dims);
std::vector<Index> xz_indices(const BlockDims& dims);
std::vector<Index> y_indices(const BlockDims& dims);
std::vector<Index> z_indices(const BlockDims& dims);

std::pair<Vector, Matrix> marginal_moments(const Vector& mu, const Matrix& sigma,
                                           std::span<const Index> idx);

/// Precomputed law of the `mis` coordinates given the `obs` coordinates.
class GaussianConditional {
 public:
  GaussianConditional(const Vector& mu, const Matrix& sigma,
                      std::span<const Index> obs, std::span<const Index> mis);

  Vector mean(const Vector& obs_values) const;
  const Matrix& cov() const { return cov_; }
  Vector draw(const Vector& obs_values, Rng& rng) const;

 private:
  Matrix coef_;  // Sigma_mo Sigma_oo^{-1}
  Vector base_;  // mu_m - coef * mu_o
  Matrix cov_;
  Matrix chol_;  // L with L L^T = cov (PSD-safe)
};

}  // namespace fusionkit
