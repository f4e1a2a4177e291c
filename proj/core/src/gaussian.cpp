#include "fusionkit/gaussian.hpp"

#include <cmath>

#include "fusionkit/errors.hpp"
#include "fusionkit/normal.hpp"
#include "fusionkit/rng.hpp"

namespace fusionkit {

namespace {

void check_square(const Matrix& m, Index d, const char* what) {
  if (m.rows() != d || m.cols() != d)
    throw ValidationError(std::string(what) + ": dimension mismatch");
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Normal-equation fit of R on (1, X) from sufficient statistics; the design
/// matrix itself is never formed.
RegressionBlock fit_block_regression(const Eigen::Block<const Matrix>& x,
                                     const Eigen::Block<const Matrix>& r) {
  const Index m = x.rows();
  const Index dx = x.cols();
  const Index dr = r.cols();

  Matrix gram(1 + dx, 1 + dx);
  gram(0, 0) = static_cast<double>(m);
  gram.block(0, 1, 1, dx) = x.colwise().sum();
  gram.block(1, 0, dx, 1) = gram.block(0, 1, 1, dx).transpose();
  gram.block(1, 1, dx, dx) = x.transpose() * x;

  if (symmetric_rcond(gram / static_cast<double>(m)) < 1e-12)
    throw ValidationError("fit_gaussian: rank-deficient design matrix");

  Matrix cross(1 + dx, dr);
  cross.row(0) = r.colwise().sum();
  cross.block(1, 0, dx, dr) = x.transpose() * r;

  const Matrix gamma = gram.ldlt().solve(cross);  // (1+dx) x dr

  RegressionBlock block;
  block.alpha = gamma.row(0).transpose();
  block.beta = gamma.bottomRows(dx).transpose();  // dr x dx

  Matrix resid = r - x * block.beta.transpose();
  resid.rowwise() -= block.alpha.transpose();
  block.omega = symmetrized(resid.transpose() * resid / static_cast<double>(m));
  return block;
}

}  // namespace

EtaParams theta_to_eta(const GaussianParams& params) {
  const BlockDims d = params.dims;
  if (params.mu.size() != d.total()) throw ValidationError("theta_to_eta: mu size");
  check_square(params.sigma, d.total(), "theta_to_eta");

  const Matrix sxx = params.sigma_xx();
  if (symmetric_rcond(sxx) < 1e-12)
    throw NumericalError("theta_to_eta: Sigma_XX is singular to working precision");
  const auto llt = Eigen::LLT<Matrix>(sxx);
  if (llt.info() != Eigen::Success)
    throw NumericalError("theta_to_eta: Sigma_XX is not positive definite");

  EtaParams eta;
  eta.x = {params.mu_x(), sxx, Vector()};

  const Matrix sxy = params.sigma_xy();
  eta.y.beta = llt.solve(sxy).transpose();  // d_Y x d_X
  eta.y.alpha = params.mu_y() - eta.y.beta * params.mu_x();
  eta.y.omega = symmetrized(params.sigma_yy() - eta.y.beta * sxy);

  const Matrix sxz = params.sigma_xz();
  eta.z.beta = llt.solve(sxz).transpose();
  eta.z.alpha = params.mu_z() - eta.z.beta * params.mu_x();
  eta.z.omega = symmetrized(params.sigma_zz() - eta.z.beta * sxz);
  return eta;
}

GaussianParams eta_to_theta(const EtaParams& eta) {
  const BlockDims d = eta.dims();
  if (eta.y.beta.cols() != d.x || eta.z.beta.cols() != d.x ||
      eta.y.omega.rows() != d.y || eta.z.omega.rows() != d.z)
    throw ValidationError("eta_to_theta: inconsistent block dimensions");

  GaussianParams theta;
  theta.dims = d;
  theta.mu.resize(d.total());
  theta.mu.segment(0, d.x) = eta.x.mu_x;
  theta.mu.segment(d.y_begin(), d.y) = eta.y.alpha + eta.y.beta * eta.x.mu_x;
  theta.mu.segment(d.z_begin(), d.z) = eta.z.alpha + eta.z.beta * eta.x.mu_x;

  const Matrix& sxx = eta.x.sigma_xx;
  const Matrix syx = eta.y.beta * sxx;  // d_Y x d_X
  const Matrix szx = eta.z.beta * sxx;

  theta.sigma.resize(d.total(), d.total());
  theta.sigma.block(0, 0, d.x, d.x) = sxx;
  theta.sigma.block(d.y_begin(), 0, d.y, d.x) = syx;
  theta.sigma.block(d.z_begin(), 0, d.z, d.x) = szx;
  theta.sigma.block(d.y_begin(), d.y_begin(), d.y, d.y) =
      eta.y.omega + eta.y.beta * syx.transpose();
  theta.sigma.block(d.z_begin(), d.z_begin(), d.z, d.z) =
      eta.z.omega + eta.z.beta * szx.transpose();
  // The identification restriction, by construction.
  theta.sigma.block(d.y_begin(), d.z_begin(), d.y, d.z) = eta.y.beta * szx.transpose();

  theta.sigma.block(0, d.y_begin(), d.x, d.y) = syx.transpose();
  theta.sigma.block(0, d.z_begin(), d.x, d.z) = szx.transpose();
  theta.sigma.block(d.z_begin(), d.y_begin(), d.z, d.y) =
      theta.sigma.block(d.y_begin(), d.z_begin(), d.y, d.z).transpose();
  theta.sigma = symmetrized(theta.sigma);
  return theta;
}

GaussianParams fit_gaussian(const StackedDataset& ds) {
  const BlockDims d = ds.dims();
  const Index n = ds.n();
  if (n < d.x + 2 || ds.n_a() < d.x + d.y + 1 || ds.n_b() < d.x + d.z + 1)
    throw ValidationError("fit_gaussian: insufficient rows for the block sizes");

  EtaParams eta;
  const auto x = ds.x_all();
  eta.x.mu_x = x.colwise().mean().transpose();
  Matrix xc = x;
  xc.rowwise() -= eta.x.mu_x.transpose();
  eta.x.sigma_xx = symmetrized(xc.transpose() * xc / static_cast<double>(n));

  eta.y = fit_block_regression(ds.x_a(), ds.y_a());
  eta.z = fit_block_regression(ds.x_b(), ds.z_b());
  return eta_to_theta(eta);
}

std::vector<Index> xy_indices(const BlockDims& d) {
  std::vector<Index> idx;
  for (Index j = 0; j < d.x + d.y; ++j) idx.push_back(j);
  return idx;
}
std::vector<Index> xz_indices(const BlockDims& d) {
  std::vector<Index> idx;
  for (Index j = 0; j < d.x; ++j) idx.push_back(j);
  for (Index j = d.z_begin(); j < d.total(); ++j) idx.push_back(j);
  return idx;
}
std::vector<Index> y_indices(const BlockDims& d) {
  std::vector<Index> idx;
  for (Index j = d.y_begin(); j < d.z_begin(); ++j) idx.push_back(j);
  return idx;
}
std::vector<Index> z_indices(const BlockDims& d) {
  std::vector<Index> idx;
  for (Index j = d.z_begin(); j < d.total(); ++j) idx.push_back(j);
  return idx;
}

std::pair<Vector, Matrix> marginal_moments(const Vector& mu, const Matrix& sigma,
                                           std::span<const Index> idx) {
  const Index k = static_cast<Index>(idx.size());
  Vector m(k);
  Matrix s(k, k);
  for (Index i = 0; i < k; ++i) {
    m(i) = mu(idx[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < k; ++j)
      s(i, j) = sigma(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return {std::move(m), std::move(s)};
}

double gaussian_observed_loglik(const StackedDataset& ds, const GaussianParams& params) {
  const BlockDims d = ds.dims();
  if (d != params.dims) throw ValidationError("observed_loglik: dimension mismatch");
  const auto ia = xy_indices(d);
  const auto ib = xz_indices(d);
  auto [mu_a, sigma_a] = marginal_moments(params.mu, params.sigma, ia);
  auto [mu_b, sigma_b] = marginal_moments(params.mu, params.sigma, ib);
  const MvnDensity dens_a(mu_a, sigma_a);
  const MvnDensity dens_b(mu_b, sigma_b);

  double ll = 0.0;
  for (Index i = 0; i < ds.n(); ++i) {
    const double li = ds.is_a_row(i) ? dens_a.log_density(ds.observed_row(i))
                                     : dens_b.log_density(ds.observed_row(i));
    ll += li;
  }
  if (!std::isfinite(ll))
    throw NumericalError("observed_loglik: non-finite log-likelihood");
  return ll;
}

double constraint_gap(const BlockDims& d, const Matrix& sigma) {
  check_square(sigma, d.total(), "constraint_gap");
  const Matrix sxx = sigma.block(0, 0, d.x, d.x);
  const Matrix sxz = sigma.block(0, d.z_begin(), d.x, d.z);
  const Matrix syx = sigma.block(d.y_begin(), 0, d.y, d.x);
  const Matrix syz = sigma.block(d.y_begin(), d.z_begin(), d.y, d.z);
  const Matrix implied = syx * Eigen::LDLT<Matrix>(sxx).solve(sxz);
  return (syz - implied).norm() / sigma.norm();
}

Matrix gaussian_sample(const GaussianParams& params, Index n, std::uint64_t seed) {
  Rng rng(seed);
  const MvnDensity dens(params.mu, params.sigma);
  Matrix out(n, params.dims.total());
  for (Index i = 0; i < n; ++i) out.row(i) = dens.sample(rng).transpose();
  return out;
}

GaussianConditional::GaussianConditional(const Vector& mu, const Matrix& sigma,
                                         std::span<const Index> obs,
                                         std::span<const Index> mis) {
  auto [mu_o, sigma_oo] = marginal_moments(mu, sigma, obs);
  auto [mu_m, sigma_mm] = marginal_moments(mu, sigma, mis);
  Matrix sigma_mo(static_cast<Index>(mis.size()), static_cast<Index>(obs.size()));
  for (Index i = 0; i < sigma_mo.rows(); ++i)
    for (Index j = 0; j < sigma_mo.cols(); ++j)
      sigma_mo(i, j) = sigma(mis[static_cast<std::size_t>(i)], obs[static_cast<std::size_t>(j)]);

  Eigen::LDLT<Matrix> ldlt(sigma_oo);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("GaussianConditional: observed-block covariance not PSD");
  coef_ = ldlt.solve(sigma_mo.transpose()).transpose();
  base_ = mu_m - coef_ * mu_o;
  cov_ = symmetrized(sigma_mm - coef_ * sigma_mo.transpose());

  // PSD-safe square root; the conditional covariance may be singular
  // (e.g. degenerate regressions with omega = 0).
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov_);
  Vector ev = es.eigenvalues().cwiseMax(0.0);
  chol_ = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

Vector GaussianConditional::mean(const Vector& obs_values) const {
  return base_ + coef_ * obs_values;
}

Vector GaussianConditional::draw(const Vector& obs_values, Rng& rng) const {
  Vector xi(cov_.rows());
  for (Index i = 0; i < xi.size(); ++i) xi(i) = rng.normal();
  return mean(obs_values) + chol_ * xi;
}

}  // namespace fusionkit
