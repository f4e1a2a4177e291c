#pragma once

#include <Eigen/Cholesky>

#include "fusionkit/types.hpp"

namespace fusionkit {

double norm_pdf(double x);
double log_norm_pdf(double x);
double norm_cdf(double x);

/// log Phi(x), stable over the whole double range (switches to an asymptotic
/// expansion in the deep lower tail where erfc underflows).
double log_norm_cdf(double x);

/// Inverse Mills ratio psi(t) = phi(t) / Phi(t).
/// Naive division returns NaN below t ~ -38 where both factors underflow;
/// for t < -20 an asymptotic series in 1/t is used instead.
double mills_ratio(double t);

/// Phi^{-1}(p) for p in (0, 1). Wichura's AS 241 (PPND16), ~1e-15 accurate.
double norm_quantile(double p);

/// Multivariate normal density with a cached Cholesky factorisation.
class MvnDensity {
 public:
  MvnDensity() = default;
  /// Throws NumericalError if sigma is not positive definite.
  MvnDensity(Vector mu, const Matrix& sigma);

  double log_density(const Vector& x) const;
  Index dim() const { return mu_.size(); }
  const Vector& mu() const { return mu_; }
  const Eigen::LLT<Matrix>& llt() const { return llt_; }

  Vector sample(class Rng& rng) const;  // mu + L * xi

 private:
  Vector mu_;
  Eigen::LLT<Matrix> llt_;
  double log_norm_const_ = 0.0;  // -(d/2) log 2*pi - (1/2) log|Sigma|
};

/// Reciprocal condition number of a symmetric matrix (lambda_min/lambda_max,
/// 0 when indefinite or lambda_max == 0).
double symmetric_rcond(const Matrix& m);

/// Eigenvalue floor at min_eig = floor_scale * trace/d. Returns true if any
/// eigenvalue was raised. Keeps the matrix symmetric.
bool floor_eigenvalues(Matrix& m, double floor_scale);

/// L with L L^T = m. Cholesky when PD, eigendecomposition with negative
/// eigenvalues clamped to zero otherwise (PSD-safe).
Matrix psd_sqrt(const Matrix& m);

}  // namespace fusionkit
