#include "fusionkit/skew_normal.hpp"

#include <cmath>

#include "fusionkit/errors.hpp"
#include "fusionkit/normal.hpp"
#include "fusionkit/rng.hpp"
#include "fusionkit/truncated_normal.hpp"
#include "sn_em_detail.hpp"

namespace fusionkit {

namespace {

constexpr double kSqrt2OverPi = 0.79788456080286535588;  // sqrt(2/pi)

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

SnBlock sn_marginal(const SkewNormalParams& params, std::span<const Index> idx) {
  auto [mu, sigma] = marginal_moments(params.mu, params.sigma, idx);
  Vector delta(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    delta(static_cast<Index>(i)) = params.delta(idx[i]);
  return {std::move(mu), std::move(sigma), std::move(delta)};
}

SnDensity::SnDensity(Vector mu, const Matrix& sigma, const Vector& delta)
    : lambda_density_(std::move(mu), symmetrized(sigma + delta * delta.transpose())) {
  a_ = lambda_density_.llt().solve(delta);
  const double c2 = 1.0 - delta.dot(a_);
  if (!(c2 > 1e-14))
    throw ValidationError("skew-normal parameters invalid: delta'Lambda^{-1}delta >= 1");
  c_ = std::sqrt(c2);
}

double SnDensity::m_of(const Vector& w) const {
  return a_.dot(w - lambda_density_.mu());
}

double SnDensity::log_density(const Vector& w) const {
  constexpr double kLog2 = 0.69314718055994530942;
  return kLog2 + lambda_density_.log_density(w) + log_norm_cdf(m_of(w) / c_);
}

double sn_log_density(const Vector& w, const SkewNormalParams& params) {
  return SnDensity(params.mu, params.sigma, params.delta).log_density(w);
}

double sn_density(const Vector& w, const SkewNormalParams& params) {
  return std::exp(sn_log_density(w, params));
}

Matrix sn_sample(const SkewNormalParams& params, Index n, std::uint64_t seed) {
  Rng rng(seed);
  const Index d = params.mu.size();
  const Matrix chol = psd_sqrt(params.sigma);
  Matrix out(n, d);
  Vector xi(d);
  for (Index i = 0; i < n; ++i) {
    const double u = std::abs(rng.normal());  // TN(0,1,0)
    for (Index j = 0; j < d; ++j) xi(j) = rng.normal();
    out.row(i) = (params.mu + params.delta * u + chol * xi).transpose();
  }
  return out;
}

Vector sn_mean(const SkewNormalParams& params) {
  return params.mu + params.delta * kSqrt2OverPi;
}

Matrix sn_cov(const SkewNormalParams& params) {
  const double scale = 1.0 - 2.0 / M_PI;
  return params.sigma + scale * params.delta * params.delta.transpose();
}

Vector ConditionalSkewNormal::mean() const {
  const TnMoments m = tn_moments({tau_x, gamma_x, 0.0});
  return mu_given_x + delta_given_x * m.e1;
}

Matrix ConditionalSkewNormal::cov() const {
  const TnMoments m = tn_moments({tau_x, gamma_x, 0.0});
  return sigma_given_x + m.variance() * delta_given_x * delta_given_x.transpose();
}

ConditionalSkewNormal conditional_sn(const SkewNormalParams& params, const Vector& x) {
  const BlockDims d = params.dims;
  if (x.size() != d.x) throw ValidationError("conditional_sn: x has wrong dimension");
  const Index dr = d.y + d.z;

  const Matrix sigma_xx = params.sigma.block(0, 0, d.x, d.x);
  const Vector delta_x = params.delta_x();
  const Matrix lambda_xx = symmetrized(sigma_xx + delta_x * delta_x.transpose());

  Eigen::LLT<Matrix> llt_lambda(lambda_xx);
  Eigen::LLT<Matrix> llt_sigma(sigma_xx);
  if (llt_lambda.info() != Eigen::Success || llt_sigma.info() != Eigen::Success)
    throw NumericalError("conditional_sn: singular X-block matrix");

  const Vector b = llt_lambda.solve(delta_x);
  const Vector centred = x - params.mu.head(d.x);

  ConditionalSkewNormal cond;
  cond.tau_x = b.dot(centred);
  cond.gamma_x = 1.0 - delta_x.dot(b);

  const Matrix sigma_rx = params.sigma.block(d.x, 0, dr, d.x);
  const Matrix coef = llt_sigma.solve(sigma_rx.transpose()).transpose();  // dr x d_x
  cond.mu_given_x = params.mu.tail(dr) + coef * centred;
  cond.delta_given_x = params.delta.tail(dr) - coef * delta_x;
  cond.sigma_given_x =
      symmetrized(params.sigma.block(d.x, d.x, dr, dr) - coef * sigma_rx.transpose());
  return cond;
}

// ---------------------------------------------------------------------------
// Constrained EM
// ---------------------------------------------------------------------------

namespace {

struct SnSuffStats {
  double loglik = 0.0;
  Vector sx;
  Matrix sxx;
  double se1 = 0.0;
  double se2 = 0.0;
  Vector se1x;
  Matrix sg_a, sby_a, syy_a;  // A-regression: sum G_i, sum b_i y_i', sum y_i y_i'
  Matrix sg_b, sbz_b, szz_b;

  explicit SnSuffStats(const BlockDims& d) {
    sx = Vector::Zero(d.x);
    sxx = Matrix::Zero(d.x, d.x);
    se1x = Vector::Zero(d.x);
    sg_a = Matrix::Zero(2 + d.x, 2 + d.x);
    sby_a = Matrix::Zero(2 + d.x, d.y);
    syy_a = Matrix::Zero(d.y, d.y);
    sg_b = Matrix::Zero(2 + d.x, 2 + d.x);
    sbz_b = Matrix::Zero(2 + d.x, d.z);
    szz_b = Matrix::Zero(d.z, d.z);
  }
};

SnSuffStats sn_estep(const StackedDataset& ds, const SkewNormalParams& params) {
  const BlockDims d = ds.dims();
  const SnDensity dens_a(sn_marginal(params, xy_indices(d)));
  const SnDensity dens_b(sn_marginal(params, xz_indices(d)));

  SnSuffStats stats(d);
  Vector b(2 + d.x);
  for (Index i = 0; i < ds.n(); ++i) {
    const bool in_a = ds.is_a_row(i);
    const Vector w = ds.observed_row(i);
    const SnDensity& dens = in_a ? dens_a : dens_b;
    stats.loglik += dens.log_density(w);

    const auto [e1, e2] = tn_moments(dens.m_of(w), dens.c());
    const auto x = w.head(d.x);

    stats.sx += x;
    stats.sxx += x * x.transpose();
    stats.se1 += e1;
    stats.se2 += e2;
    stats.se1x += e1 * x;

    b(0) = 1.0;
    b(1) = e1;
    b.tail(d.x) = x;
    Matrix g = b * b.transpose();
    g(1, 1) += e2 - e1 * e1;  // Var[u | obs] enters the expected Gram

    if (in_a) {
      const auto y = w.tail(d.y);
      stats.sg_a += g;
      stats.sby_a += b * y.transpose();
      stats.syy_a += y * y.transpose();
    } else {
      const auto z = w.tail(d.z);
      stats.sg_b += g;
      stats.sbz_b += b * z.transpose();
      stats.szz_b += z * z.transpose();
    }
  }
  if (!std::isfinite(stats.loglik))
    throw NumericalError("fit_sn_em: non-finite observed-data log-likelihood");
  return stats;
}

}  // namespace

SnFitResult fit_sn_em(const StackedDataset& ds, const SkewNormalParams& init,
                      const EMConfig& config) {
  const BlockDims d = ds.dims();
  if (init.dims != d) throw ValidationError("fit_sn_em: init has wrong dimensions");
  if (ds.n() < d.x + 2 || ds.n_a() < d.x + d.y + 1 || ds.n_b() < d.x + d.z + 1)
    throw ValidationError("fit_sn_em: insufficient rows for the block sizes");
  if (!(config.tol > 0.0) || config.max_iters < 1)
    throw ValidationError("fit_sn_em: bad EM configuration");

  SnFitResult result;
  result.params = init;
  result.report.family = "skew_normal";

  double prev = 0.0;
  for (int iter = 0;; ++iter) {
    const SnSuffStats stats = sn_estep(ds, result.params);
    result.report.loglik_trace.push_back(stats.loglik);
    if (iter > 0) {
      const double rel = std::abs(stats.loglik - prev) / (std::abs(prev) + 1e-10);
      if (rel < config.tol) {
        result.report.converged = true;
        break;
      }
    }
    if (iter >= config.max_iters) break;
    prev = stats.loglik;

    const auto xb = detail::sn_xblock_mstep(stats.sx, stats.sxx, stats.se1, stats.se2,
                                            stats.se1x, static_cast<double>(ds.n()));
    const auto ry = detail::sn_regression_mstep(stats.sg_a, stats.sby_a, stats.syy_a,
                                                static_cast<double>(ds.n_a()), d.x);
    const auto rz = detail::sn_regression_mstep(stats.sg_b, stats.sbz_b, stats.szz_b,
                                                static_cast<double>(ds.n_b()), d.x);
    result.params =
        detail::sn_assemble(d, xb, ry, rz, result.report.guard_events, iter + 1);
  }

  result.report.iterations = static_cast<int>(result.report.loglik_trace.size()) - 1;
  result.report.final_loglik = result.report.loglik_trace.back();
  return result;
}

SkewNormalParams sn_moment_init(const StackedDataset& ds) {
  const BlockDims d = ds.dims();
  const GaussianParams theta = fit_gaussian(ds);

  // Skewness sign per coordinate, from the rows where it is observed.
  auto column_skew_sign = [](const auto& col) {
    const double n = static_cast<double>(col.size());
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / n;
    if (!(var > 0.0)) return 0.0;
    const double m3 = ((col.array() - mean) / std::sqrt(var)).cube().sum() / n;
    return m3 > 0.0 ? 1.0 : (m3 < 0.0 ? -1.0 : 0.0);
  };

  Vector delta(d.total());
  for (Index j = 0; j < d.x; ++j) delta(j) = column_skew_sign(ds.x_all().col(j));
  for (Index j = 0; j < d.y; ++j)
    delta(d.y_begin() + j) = column_skew_sign(ds.y_a().col(j));
  for (Index j = 0; j < d.z; ++j)
    delta(d.z_begin() + j) = column_skew_sign(ds.z_b().col(j));
  delta.array() *= 0.5 * theta.sigma.diagonal().array().sqrt();

  SkewNormalParams init;
  init.dims = d;
  init.delta = delta;
  init.mu = theta.mu - kSqrt2OverPi * delta;
  init.sigma = theta.sigma - (1.0 - 2.0 / M_PI) * delta * delta.transpose();
  floor_eigenvalues(init.sigma, 1e-6);
  return init;
}

double sn_observed_loglik(const StackedDataset& ds, const SkewNormalParams& params) {
  const BlockDims d = ds.dims();
  if (params.dims != d) throw ValidationError("sn_observed_loglik: dimension mismatch");
  const SnDensity dens_a(sn_marginal(params, xy_indices(d)));
  const SnDensity dens_b(sn_marginal(params, xz_indices(d)));
  double ll = 0.0;
  for (Index i = 0; i < ds.n(); ++i)
    ll += (ds.is_a_row(i) ? dens_a : dens_b).log_density(ds.observed_row(i));
  if (!std::isfinite(ll))
    throw NumericalError("sn_observed_loglik: non-finite log-likelihood");
  return ll;
}

}  // namespace fusionkit
