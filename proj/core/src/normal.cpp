#include "fusionkit/normal.hpp"

#include <cmath>

#include "fusionkit/errors.hpp"
#include "fusionkit/rng.hpp"

namespace fusionkit {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kLog2Pi = 1.8378770664093454836;
}  // namespace

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double log_norm_pdf(double x) { return -0.5 * (x * x + kLog2Pi); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double mills_ratio(double t) {
  if (t >= -20.0) return norm_pdf(t) / norm_cdf(t);
  // Deep tail: Phi(t) = phi(a)/a * sum_k (-1)^k (2k-1)!!/a^{2k}, a = -t.
  const double a = -t;
  const double inv_a2 = 1.0 / (a * a);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 60; ++k) {
    term *= -(2.0 * k - 1.0) * inv_a2;
    sum += term;
    if (std::abs(term) < 1e-17 * sum) break;
  }
  return a / sum;
}

double log_norm_cdf(double x) {
  if (x > 0.0) return std::log1p(-norm_cdf(-x));
  if (x > -20.0) return std::log(norm_cdf(x));
  return log_norm_pdf(x) - std::log(mills_ratio(x));
}

double norm_quantile(double p) {
  // Wichura (1988), algorithm AS 241, PPND16.
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("norm_quantile: p outside (0,1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
              3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -val : val;
}

MvnDensity::MvnDensity(Vector mu, const Matrix& sigma) : mu_(std::move(mu)) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != mu_.size())
    throw ValidationError("MvnDensity: dimension mismatch");
  llt_.compute(sigma);
  if (llt_.info() != Eigen::Success)
    throw NumericalError("MvnDensity: covariance not positive definite");
  const double log_det =
      2.0 * llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
  log_norm_const_ = -0.5 * (static_cast<double>(mu_.size()) * kLog2Pi + log_det);
}

double MvnDensity::log_density(const Vector& x) const {
  Vector v = llt_.matrixL().solve(x - mu_);
  return log_norm_const_ - 0.5 * v.squaredNorm();
}

Vector MvnDensity::sample(Rng& rng) const {
  Vector xi(mu_.size());
  for (Index i = 0; i < xi.size(); ++i) xi(i) = rng.normal();
  return mu_ + llt_.matrixL() * xi;
}

double symmetric_rcond(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (hi <= 0.0 || lo < 0.0) return 0.0;
  return lo / hi;
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

bool floor_eigenvalues(Matrix& m, double floor_scale) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const double d = static_cast<double>(m.rows());
  double floor = floor_scale * std::max(m.trace(), 0.0) / d;
  if (floor <= 0.0) floor = floor_scale;
  Vector ev = es.eigenvalues();
  bool changed = false;
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < floor) {
      ev(i) = floor;
      changed = true;
    }
  }
  if (changed) {
    m = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    m = 0.5 * (m + m.transpose()).eval();
  }
  return changed;
}

}  // namespace fusionkit
