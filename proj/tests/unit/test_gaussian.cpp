#include <doctest.h>

#include <cmath>

#include "fusionkit/errors.hpp"
#include "fusionkit/gaussian.hpp"
#include "fusionkit/normal.hpp"
#include "fusionkit/rng.hpp"
#include "oracles.hpp"

using namespace fusionkit;

namespace {

GaussianParams make_theta(const BlockDims& dims, const Vector& mu, const Matrix& sigma) {
  return GaussianParams{dims, mu, sigma};
}

/// Constrained 3-d theta built from regression parameters (scalar blocks).
GaussianParams scalar_eta_theta(double mu_x, double s_xx, double a_y, double b_y,
                                double w_y, double a_z, double b_z, double w_z) {
  EtaParams eta;
  eta.x.mu_x = Vector::Constant(1, mu_x);
  eta.x.sigma_xx = Matrix::Constant(1, 1, s_xx);
  eta.y = {Vector::Constant(1, a_y), Matrix::Constant(1, 1, b_y),
           Matrix::Constant(1, 1, w_y), Vector()};
  eta.z = {Vector::Constant(1, a_z), Matrix::Constant(1, 1, b_z),
           Matrix::Constant(1, 1, w_z), Vector()};
  return eta_to_theta(eta);
}

StackedDataset fixture60() {
  // Pinned 60-row dataset from a constrained generator.
  const GaussianParams truth = scalar_eta_theta(0.3, 1.44, -0.5, 0.7, 0.8, 0.9, -0.4, 0.5);
  const Matrix joint = gaussian_sample(truth, 60, 4711);
  Matrix a(30, 2), b(30, 2);
  a = joint.topRows(30).leftCols(2);
  b.col(0) = joint.bottomRows(30).col(0);
  b.col(1) = joint.bottomRows(30).col(2);
  return stack(a, b, default_block_spec({1, 1, 1}));
}

}  // namespace

TEST_CASE("theta_to_eta: identity covariance") {
  const BlockDims d{1, 1, 1};
  const auto eta = theta_to_eta(make_theta(d, Vector::Zero(3), Matrix::Identity(3, 3)));
  CHECK(eta.y.beta(0, 0) == 0.0);
  CHECK(eta.y.alpha(0) == 0.0);
  CHECK(eta.y.omega(0, 0) == 1.0);
  CHECK(eta.z.beta(0, 0) == 0.0);
}

TEST_CASE("theta_to_eta: scalar division beta_Y = Sigma_YX / Sigma_XX") {
  const BlockDims d{1, 1, 1};
  Matrix sigma(3, 3);
  sigma << 2.0, 1.0, 0.2,
           1.0, 3.0, 0.1,
           0.2, 0.1, 1.5;
  const auto eta = theta_to_eta(make_theta(d, Vector::Zero(3), sigma));
  CHECK(eta.y.beta(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("round trip reproduces every block except Sigma_YZ") {
  Rng rng(12);
  for (int rep = 0; rep < 25; ++rep) {
    const BlockDims d{2, 2, 1};
    const Matrix sigma = oracles::random_spd(5, rng);
    Vector mu(5);
    for (Index i = 0; i < 5; ++i) mu(i) = rng.normal();
    const GaussianParams theta = make_theta(d, mu, sigma);
    const GaussianParams back = eta_to_theta(theta_to_eta(theta));

    CHECK((back.mu - mu).norm() < 1e-10 * (1.0 + mu.norm()));
    CHECK((back.sigma_xx() - theta.sigma_xx()).norm() < 1e-10);
    CHECK((back.sigma_xy() - theta.sigma_xy()).norm() < 1e-10);
    CHECK((back.sigma_xz() - theta.sigma_xz()).norm() < 1e-10);
    CHECK((back.sigma_yy() - theta.sigma_yy()).norm() < 1e-10);
    CHECK((back.sigma_zz() - theta.sigma_zz()).norm() < 1e-10);
    // Sigma_YZ is replaced by the restriction value.
    const Matrix implied = theta.sigma.block(1 + 1, 0, 2, 2).topRows(2);  // unused
    (void)implied;
    const Matrix sxx_inv = theta.sigma_xx().inverse();
    const Matrix expected =
        theta.sigma_xy().transpose() * sxx_inv * theta.sigma_xz();
    CHECK((back.sigma_yz() - expected).norm() < 1e-10);
    CHECK(constraint_gap(d, back.sigma) < 1e-12);
  }
}

TEST_CASE("eta round trip is a fixed point") {
  Rng rng(13);
  for (int rep = 0; rep < 25; ++rep) {
    EtaParams eta;
    const BlockDims d{2, 1, 2};
    eta.x.mu_x = Vector::Zero(2);
    for (Index i = 0; i < 2; ++i) eta.x.mu_x(i) = rng.normal();
    eta.x.sigma_xx = oracles::random_spd(2, rng);
    eta.y.alpha = Vector::Constant(1, rng.normal());
    eta.y.beta = rng.normal_matrix(1, 2);
    eta.y.omega = oracles::random_spd(1, rng);
    eta.z.alpha = Vector::Zero(2);
    for (Index i = 0; i < 2; ++i) eta.z.alpha(i) = rng.normal();
    eta.z.beta = rng.normal_matrix(2, 2);
    eta.z.omega = oracles::random_spd(2, rng);

    const EtaParams back = theta_to_eta(eta_to_theta(eta));
    CHECK((back.x.sigma_xx - eta.x.sigma_xx).norm() < 1e-10);
    CHECK((back.y.alpha - eta.y.alpha).norm() < 1e-10);
    CHECK((back.y.beta - eta.y.beta).norm() < 1e-10);
    CHECK((back.y.omega - eta.y.omega).norm() < 1e-10);
    CHECK((back.z.beta - eta.z.beta).norm() < 1e-10);
    CHECK((back.z.omega - eta.z.omega).norm() < 1e-10);
  }
}

TEST_CASE("zero regressions give conditional independence = independence") {
  const GaussianParams theta = scalar_eta_theta(0.0, 1.0, 0.5, 0.0, 1.0, -0.5, 0.0, 2.0);
  CHECK(theta.sigma_yz()(0, 0) == 0.0);
  CHECK(theta.sigma_xy()(0, 0) == 0.0);
}

TEST_CASE("singular Sigma_XX is refused") {
  const BlockDims d{2, 1, 1};
  Matrix sigma = Matrix::Identity(4, 4);
  sigma(0, 0) = 1.0;
  sigma(0, 1) = 1.0;
  sigma(1, 0) = 1.0;
  sigma(1, 1) = 1.0;  // X block singular
  CHECK_THROWS_AS(theta_to_eta(make_theta(d, Vector::Zero(4), sigma)), NumericalError);
}

TEST_CASE("constant responses produce zero omega and beta") {
  Rng rng(15);
  Matrix a(20, 2), b(25, 2);
  a.col(0) = rng.normal_matrix(20, 1);
  a.col(1).setConstant(3.25);
  b.col(0) = rng.normal_matrix(25, 1);
  b.col(1).setConstant(-1.5);
  const StackedDataset ds = stack(a, b, default_block_spec({1, 1, 1}));
  const GaussianParams fit = fit_gaussian(ds);
  const EtaParams eta = theta_to_eta(fit);
  CHECK(std::abs(eta.y.omega(0, 0)) < 1e-12);
  CHECK(std::abs(eta.y.beta(0, 0)) < 1e-12);
  CHECK(eta.y.alpha(0) == doctest::Approx(3.25));
  CHECK(std::abs(eta.z.omega(0, 0)) < 1e-12);
}

TEST_CASE("insufficient rows are rejected") {
  Rng rng(16);
  const Matrix a = rng.normal_matrix(2, 2);
  const Matrix b = rng.normal_matrix(1, 2);
  CHECK_THROWS_AS(fit_gaussian(stack(a, b, default_block_spec({1, 1, 1}))),
                  ValidationError);
}

TEST_CASE("60-row fixture matches a simplex maximiser of the factored likelihood") {
  const StackedDataset ds = fixture60();
  const GaussianParams fitted = fit_gaussian(ds);

  // Independent numerical MLE. Each likelihood factor is maximised by
  // Nelder-Mead over its own parameters (log-sd parameterisation).
  const auto x = ds.x_all();
  const auto neg_ll_x = [&](const Vector& p) {
    const double mu = p(0);
    const double sd = std::exp(p(1));
    double ll = 0.0;
    for (Index i = 0; i < x.rows(); ++i)
      ll += log_norm_pdf((x(i, 0) - mu) / sd) - std::log(sd);
    return -ll;
  };
  const auto reg_obj = [](const auto& xs, const auto& rs) {
    return [&xs, &rs](const Vector& p) {
      const double alpha = p(0), beta = p(1), sd = std::exp(p(2));
      double ll = 0.0;
      for (Index i = 0; i < xs.rows(); ++i) {
        const double resid = rs(i, 0) - alpha - beta * xs(i, 0);
        ll += log_norm_pdf(resid / sd) - std::log(sd);
      }
      return -ll;
    };
  };

  Vector px0(2);
  px0 << 0.0, 0.0;
  auto rx = oracles::nelder_mead(neg_ll_x, px0, 0.5, 20000, 1e-14);
  rx = oracles::nelder_mead(neg_ll_x, rx.x, 0.05, 20000, 1e-15);

  Vector pr0(3);
  pr0 << 0.0, 0.0, 0.0;
  const auto x_a = ds.x_a();
  const auto y_a = ds.y_a();
  auto ry = oracles::nelder_mead(reg_obj(x_a, y_a), pr0, 0.5, 30000, 1e-14);
  ry = oracles::nelder_mead(reg_obj(x_a, y_a), ry.x, 0.05, 30000, 1e-15);
  const auto x_b = ds.x_b();
  const auto z_b = ds.z_b();
  auto rz = oracles::nelder_mead(reg_obj(x_b, z_b), pr0, 0.5, 30000, 1e-14);
  rz = oracles::nelder_mead(reg_obj(x_b, z_b), rz.x, 0.05, 30000, 1e-15);

  // Assemble theta from the oracle estimates with the hand-written formulas.
  const double mu_x = rx.x(0), s_xx = std::exp(2.0 * rx.x(1));
  const double a_y = ry.x(0), b_y = ry.x(1), w_y = std::exp(2.0 * ry.x(2));
  const double a_z = rz.x(0), b_z = rz.x(1), w_z = std::exp(2.0 * rz.x(2));
  Vector mu(3);
  mu << mu_x, a_y + b_y * mu_x, a_z + b_z * mu_x;
  Matrix sigma(3, 3);
  sigma << s_xx, b_y * s_xx, b_z * s_xx,
      b_y * s_xx, w_y + b_y * b_y * s_xx, b_y * b_z * s_xx,
      b_z * s_xx, b_y * b_z * s_xx, w_z + b_z * b_z * s_xx;

  for (Index i = 0; i < 3; ++i)
    CHECK(fitted.mu(i) == doctest::Approx(mu(i)).epsilon(0).scale(1).epsilon(1e-6));
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j)
      CHECK(std::abs(fitted.sigma(i, j) - sigma(i, j)) < 1e-6);
  // And the closed form can only be at least as good.
  CHECK(gaussian_observed_loglik(ds, fitted) >=
        -(rx.value + ry.value + rz.value) - 1e-7);
}

TEST_CASE("Monte-Carlo consistency: error shrinks along n = 200, 2000, 20000") {
  const GaussianParams truth = scalar_eta_theta(0.1, 1.0, 0.4, 0.8, 0.7, -0.3, 0.5, 0.9);
  double prev_err = 1e300;
  for (Index n : {200, 2000, 20000}) {
    const Matrix joint = gaussian_sample(truth, n, 90210);
    Matrix a(n / 2, 2), b(n - n / 2, 2);
    a = joint.topRows(n / 2).leftCols(2);
    b.col(0) = joint.bottomRows(n - n / 2).col(0);
    b.col(1) = joint.bottomRows(n - n / 2).col(2);
    const GaussianParams fit = fit_gaussian(stack(a, b, default_block_spec({1, 1, 1})));
    const double err = (fit.sigma - truth.sigma).norm() + (fit.mu - truth.mu).norm();
    CHECK(err < prev_err);
    prev_err = err;
  }
}

TEST_CASE("fitted covariance is PSD on random datasets") {
  Rng rng(17);
  for (int rep = 0; rep < 30; ++rep) {
    const BlockDims dims{1 + static_cast<Index>(rng.uniform() * 2),
                         1 + static_cast<Index>(rng.uniform() * 2),
                         1 + static_cast<Index>(rng.uniform() * 2)};
    const Index n_a = dims.x + dims.y + 3 + static_cast<Index>(rng.uniform() * 60);
    const Index n_b = dims.x + dims.z + 3 + static_cast<Index>(rng.uniform() * 60);
    const StackedDataset ds =
        stack(rng.normal_matrix(n_a, dims.x + dims.y),
              rng.normal_matrix(n_b, dims.x + dims.z), default_block_spec(dims));
    const GaussianParams fit = fit_gaussian(ds);
    Eigen::SelfAdjointEigenSolver<Matrix> es(fit.sigma, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
    CHECK(constraint_gap(dims, fit.sigma) < 1e-12);
  }
}

TEST_CASE("fitted parameters are a local maximum of the observed likelihood") {
  const StackedDataset ds = fixture60();
  const GaussianParams fitted = fit_gaussian(ds);
  const double best = gaussian_observed_loglik(ds, fitted);
  const EtaParams eta_hat = theta_to_eta(fitted);

  Rng rng(21);
  int tried = 0;
  while (tried < 100) {
    EtaParams eta = eta_hat;
    const double eps = 1e-3;
    eta.x.mu_x(0) += eps * rng.normal();
    eta.x.sigma_xx(0, 0) *= std::exp(eps * rng.normal());
    eta.y.alpha(0) += eps * rng.normal();
    eta.y.beta(0, 0) += eps * rng.normal();
    eta.y.omega(0, 0) *= std::exp(eps * rng.normal());
    eta.z.alpha(0) += eps * rng.normal();
    eta.z.beta(0, 0) += eps * rng.normal();
    eta.z.omega(0, 0) *= std::exp(eps * rng.normal());
    const double ll = gaussian_observed_loglik(ds, eta_to_theta(eta));
    CHECK(ll <= best + 1e-9);
    ++tried;
  }
}

TEST_CASE("row permutations within each dataset leave the fit unchanged") {
  Rng rng(23);
  const BlockSpec spec = default_block_spec({1, 2, 1});
  const Matrix a = rng.normal_matrix(40, 3);
  const Matrix b = rng.normal_matrix(35, 2);
  const GaussianParams base = fit_gaussian(stack(a, b, spec));

  Matrix a_perm = a.colwise().reverse().rowwise().reverse().rowwise().reverse();
  a_perm = a.colwise().reverse();  // reverse row order
  Matrix b_perm = b.colwise().reverse();
  const GaussianParams perm = fit_gaussian(stack(a_perm, b_perm, spec));
  CHECK((base.mu - perm.mu).norm() < 1e-10);
  CHECK((base.sigma - perm.sigma).norm() < 1e-10);
}

TEST_CASE("observed log-likelihood factorises into three block terms") {
  const StackedDataset ds = fixture60();
  const GaussianParams fitted = fit_gaussian(ds);
  const EtaParams eta = theta_to_eta(fitted);

  const auto x = ds.x_all();
  const double sd_x = std::sqrt(eta.x.sigma_xx(0, 0));
  double ll_x = 0.0;
  for (Index i = 0; i < x.rows(); ++i)
    ll_x += log_norm_pdf((x(i, 0) - eta.x.mu_x(0)) / sd_x) - std::log(sd_x);

  double ll_y = 0.0;
  const double sd_y = std::sqrt(eta.y.omega(0, 0));
  for (Index i = 0; i < ds.n_a(); ++i) {
    const double resid =
        ds.y_a()(i, 0) - eta.y.alpha(0) - eta.y.beta(0, 0) * ds.x_a()(i, 0);
    ll_y += log_norm_pdf(resid / sd_y) - std::log(sd_y);
  }
  double ll_z = 0.0;
  const double sd_z = std::sqrt(eta.z.omega(0, 0));
  for (Index i = 0; i < ds.n_b(); ++i) {
    const double resid =
        ds.z_b()(i, 0) - eta.z.alpha(0) - eta.z.beta(0, 0) * ds.x_b()(i, 0);
    ll_z += log_norm_pdf(resid / sd_z) - std::log(sd_z);
  }

  CHECK(gaussian_observed_loglik(ds, fitted) ==
        doctest::Approx(ll_x + ll_y + ll_z).epsilon(1e-9));
}
