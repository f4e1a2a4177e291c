// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code = number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "fusionkit/gaussian.hpp"
#include "fusionkit/histogram.hpp"
#include "fusionkit/imputation.hpp"
#include "fusionkit/mixtures.hpp"
#include "fusionkit/normal.hpp"
#include "fusionkit/rng.hpp"
#include "fusionkit/scenarios.hpp"
#include "fusionkit/skew_normal.hpp"
#include "fusionkit/truncated_normal.hpp"
#include "oracles.hpp"

using namespace fusionkit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

StackedDataset split_sample(const Matrix& joint, Index n_a, const BlockDims& d) {
  const Index n_b = joint.rows() - n_a;
  Matrix a(n_a, d.x + d.y), b(n_b, d.x + d.z);
  a = joint.topRows(n_a).leftCols(d.x + d.y);
  b.leftCols(d.x) = joint.bottomRows(n_b).leftCols(d.x);
  b.rightCols(d.z) = joint.bottomRows(n_b).rightCols(d.z);
  return stack(a, b, default_block_spec(d));
}

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

SkewNormalParams sn135() {
  SkewNormalParams p;
  p.dims = {1, 1, 1};
  p.mu = Vector::Zero(3);
  p.sigma = Matrix::Identity(3, 3);
  p.delta = Vector(3);
  p.delta << 1.0, 3.0, 5.0;
  return p;
}

MixtureParams overlap_mixture() {
  Vector mu1(3), mu2(3);
  mu1 << -0.1, 0.0, 0.0;
  mu2 << 0.1, 1.0, 1.0;
  MixtureParams mix;
  mix.pi = Vector::Constant(2, 0.5);
  mix.components.emplace_back(GaussianParams{{1, 1, 1}, mu1, 0.01 * Matrix::Identity(3, 3)});
  mix.components.emplace_back(GaussianParams{{1, 1, 1}, mu2, 0.01 * Matrix::Identity(3, 3)});
  return mix;
}

char buffer[512];

// --------------------------------------------------------------------------
// 1. Gaussian closed form vs a generic numerical maximiser, < 1s.
// --------------------------------------------------------------------------
Outcome criterion1() {
  const GaussianParams truth = scalar_eta_theta(0.3, 1.44, -0.5, 0.7, 0.8, 0.9, -0.4, 0.5);
  const Matrix joint = gaussian_sample(truth, 60, 4711);
  const StackedDataset ds = split_sample(joint, 30, {1, 1, 1});

  const auto t0 = std::chrono::steady_clock::now();
  const GaussianParams fitted = fit_gaussian(ds);
  const double fit_seconds = seconds_since(t0);

  const auto x = ds.x_all();
  const auto neg_ll_x = [&](const Vector& p) {
    const double mu = p(0), sd = std::exp(p(1));
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
  Vector p2 = Vector::Zero(2), p3 = Vector::Zero(3);
  auto rx = oracles::nelder_mead(neg_ll_x, p2, 0.5, 20000, 1e-14);
  rx = oracles::nelder_mead(neg_ll_x, rx.x, 0.05, 20000, 1e-15);
  const auto x_a = ds.x_a();
  const auto y_a = ds.y_a();
  auto ry = oracles::nelder_mead(reg_obj(x_a, y_a), p3, 0.5, 30000, 1e-14);
  ry = oracles::nelder_mead(reg_obj(x_a, y_a), ry.x, 0.05, 30000, 1e-15);
  const auto x_b = ds.x_b();
  const auto z_b = ds.z_b();
  auto rz = oracles::nelder_mead(reg_obj(x_b, z_b), p3, 0.5, 30000, 1e-14);
  rz = oracles::nelder_mead(reg_obj(x_b, z_b), rz.x, 0.05, 30000, 1e-15);

  const double mu_x = rx.x(0), s_xx = std::exp(2.0 * rx.x(1));
  const double a_y = ry.x(0), b_y = ry.x(1), w_y = std::exp(2.0 * ry.x(2));
  const double a_z = rz.x(0), b_z = rz.x(1), w_z = std::exp(2.0 * rz.x(2));
  Vector mu(3);
  mu << mu_x, a_y + b_y * mu_x, a_z + b_z * mu_x;
  Matrix sigma(3, 3);
  sigma << s_xx, b_y * s_xx, b_z * s_xx,
      b_y * s_xx, w_y + b_y * b_y * s_xx, b_y * b_z * s_xx,
      b_z * s_xx, b_y * b_z * s_xx, w_z + b_z * b_z * s_xx;

  double worst = 0.0;
  for (Index i = 0; i < 3; ++i) worst = std::max(worst, std::abs(fitted.mu(i) - mu(i)));
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j)
      worst = std::max(worst, std::abs(fitted.sigma(i, j) - sigma(i, j)));

  std::snprintf(buffer, sizeof(buffer),
                "max parameter gap %.2e (tol 1e-6), fit time %.4fs (limit 1s)", worst,
                fit_seconds);
  return {worst < 1e-6 && fit_seconds < 1.0, buffer};
}

// --------------------------------------------------------------------------
// 2. Identification-restriction exactness for all four fitted families.
// --------------------------------------------------------------------------
Outcome criterion2() {
  double worst = 0.0;

  const GaussianParams g_truth = scalar_eta_theta(0.1, 1.0, 0.2, 0.6, 0.9, -0.1, 0.5, 0.7);
  const StackedDataset ds_g = split_sample(gaussian_sample(g_truth, 400, 11), 200, {1, 1, 1});
  worst = std::max(worst, model_constraint_gap(fit_gaussian(ds_g)));

  const SkewNormalParams s_truth = sn135();
  const StackedDataset ds_s = split_sample(sn_sample(s_truth, 1000, 12), 500, {1, 1, 1});
  EMConfig em;
  em.max_iters = 300;
  worst = std::max(worst, model_constraint_gap(fit_sn_em(ds_s, sn_moment_init(ds_s), em).params));

  const MixtureParams m_truth = overlap_mixture();
  const StackedDataset ds_m =
      split_sample(sample_model(m_truth, 1000, 13).values, 500, {1, 1, 1});
  EMConfig em_mix;
  em_mix.n_restarts = 3;
  em_mix.seed = 21;
  em_mix.max_iters = 200;
  worst = std::max(worst, model_constraint_gap(fit_gmm_matching(ds_m, 2, em_mix).params));

  SkewNormalParams c1 = sn135();
  c1.delta << 0.5, 1.0, 1.5;
  SkewNormalParams c2 = c1;
  c2.mu << 0.5, 4.0, 4.0;
  MixtureParams sm_truth;
  sm_truth.pi = Vector::Constant(2, 0.5);
  sm_truth.components.emplace_back(c1);
  sm_truth.components.emplace_back(c2);
  const StackedDataset ds_sm =
      split_sample(sample_model(sm_truth, 1500, 14).values, 750, {1, 1, 1});
  worst = std::max(worst, model_constraint_gap(fit_snmix_matching(ds_sm, 2, em_mix).params));

  std::snprintf(buffer, sizeof(buffer),
                "worst relative restriction gap %.2e (tol 1e-10)", worst);
  return {worst < 1e-10, buffer};
}

// --------------------------------------------------------------------------
// 3. EM monotonicity over 50 random initialisations at n = 2000, < 60s.
// --------------------------------------------------------------------------
Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  int violations = 0;
  int runs = 0;
  const auto check_trace = [&](const std::vector<double>& trace) {
    ++runs;
    for (std::size_t i = 1; i < trace.size(); ++i)
      if (trace[i] < trace[i - 1] - 1e-8 * std::abs(trace[i - 1])) ++violations;
  };

  // Skew-normal: 20 random valid initialisations.
  const SkewNormalParams s_truth = sn135();
  const StackedDataset ds_s = split_sample(sn_sample(s_truth, 2000, 51), 1000, {1, 1, 1});
  const SkewNormalParams base = sn_moment_init(ds_s);
  for (int r = 0; r < 20; ++r) {
    Rng rng = Rng::derive(600, static_cast<std::uint64_t>(r));
    SkewNormalParams init = base;
    for (Index j = 0; j < 3; ++j) {
      init.mu(j) += 0.5 * rng.normal();
      init.delta(j) += 0.5 * rng.normal();
    }
    init.sigma *= std::exp(0.4 * rng.normal());
    EMConfig em;
    em.max_iters = 40;
    check_trace(fit_sn_em(ds_s, init, em).report.loglik_trace);
  }

  // Gaussian mixture: 15 single-restart runs with different k-means seeds.
  const StackedDataset ds_m =
      split_sample(sample_model(overlap_mixture(), 2000, 52).values, 1000, {1, 1, 1});
  for (int r = 0; r < 15; ++r) {
    EMConfig em;
    em.n_restarts = 1;
    em.seed = 700 + static_cast<std::uint64_t>(r);
    em.max_iters = 40;
    check_trace(fit_gmm_matching(ds_m, 2, em).report.loglik_trace);
  }

  // Skew-normal mixture: 15 single-restart runs.
  SkewNormalParams c1 = sn135();
  c1.delta << 0.5, 1.0, 1.5;
  SkewNormalParams c2 = c1;
  c2.mu << 0.4, 3.5, 3.5;
  c2.delta << -0.5, -1.0, 1.0;
  MixtureParams sm_truth;
  sm_truth.pi = Vector::Constant(2, 0.5);
  sm_truth.components.emplace_back(c1);
  sm_truth.components.emplace_back(c2);
  const StackedDataset ds_sm =
      split_sample(sample_model(sm_truth, 2000, 53).values, 1000, {1, 1, 1});
  for (int r = 0; r < 15; ++r) {
    EMConfig em;
    em.n_restarts = 1;
    em.seed = 800 + static_cast<std::uint64_t>(r);
    em.max_iters = 40;
    check_trace(fit_snmix_matching(ds_sm, 2, em).report.loglik_trace);
  }

  const double elapsed = seconds_since(t0);
  std::snprintf(buffer, sizeof(buffer),
                "%d initialisations, %d monotonicity violations, %.1fs (limit 60s)",
                runs, violations, elapsed);
  return {runs == 50 && violations == 0 && elapsed < 60.0, buffer};
}

// --------------------------------------------------------------------------
// 4. Scenario "sn-515": 20 replications, medians in the stated bands, < 2min.
// --------------------------------------------------------------------------
Outcome criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  const SimulationScenario sc = builtin_scenario("sn-515");
  const ScenarioResult result = run_scenario(sc, 515, 0);
  const double nn = median_of(result.rows, "nn", "rho_yz");
  const double par = median_of(result.rows, "parametric", "rho_yz");
  const double elapsed = seconds_since(t0);
  std::snprintf(buffer, sizeof(buffer),
                "median NN rho %.3f (band [0.05,0.25]), parametric rho %.3f "
                "(band [0.75,0.92]), %.1fs (limit 120s)",
                nn, par, elapsed);
  return {nn >= 0.05 && nn <= 0.25 && par >= 0.75 && par <= 0.92 && elapsed < 120.0,
          buffer};
}

// --------------------------------------------------------------------------
// 5. Scenario "gmm-overlap": NN mismatch vs quadrature, four modes, <5% parametric.
// --------------------------------------------------------------------------
Outcome criterion5() {
  // Quadrature value of E[2 tau_1 tau_2] under the X marginal.
  const auto phi = [](double v) { return std::exp(-0.5 * v * v) / std::sqrt(2.0 * M_PI); };
  const auto mismatch_density = [&](double x) {
    const double f1 = 0.5 * phi((x + 0.1) / 0.1) / 0.1;
    const double f2 = 0.5 * phi((x - 0.1) / 0.1) / 0.1;
    return 2.0 * (f1 / (f1 + f2)) * (f2 / (f1 + f2)) * (f1 + f2);
  };
  const double expected = oracles::integrate(mismatch_density, -1.2, 1.2, 1e-12);

  const SimulationScenario sc = builtin_scenario("gmm-overlap");
  const ScenarioResult result = run_scenario(sc, 42, 0);
  const double nn_rate = median_of(result.rows, "nn", "cross_component_rate");
  const double par_rate = median_of(result.rows, "parametric", "cross_component_rate");

  const MixtureAsymptoticSample asym = asymptotic_nn_sample_mixture(overlap_mixture(), 20000, 4242);
  const HistGrid grid = hist2d(asym.values.col(1), asym.values.col(2), 40);
  const int modes = count_local_maxima(grid, 0.1);

  std::snprintf(buffer, sizeof(buffer),
                "NN mismatch %.3f vs quadrature %.3f (tol 0.05); grid modes %d (>=4); "
                "parametric mismatch %.3f (<0.05)",
                nn_rate, expected, modes, par_rate);
  return {std::abs(nn_rate - expected) < 0.05 && modes >= 4 && par_rate < 0.05, buffer};
}

// --------------------------------------------------------------------------
// 6. Truncated-normal machinery: quadrature and sampling moments.
// --------------------------------------------------------------------------
Outcome criterion6() {
  double worst = 0.0;
  for (double t = -40.0; t <= 8.0; t += 0.5) {
    for (double c : {0.5, 1.0, 2.0}) {
      const double m = t * c;
      const auto got = tn_moments(m, c);
      const auto want = oracles::tn_moments_quadrature(m, c);
      const double scale = std::max({std::abs(want.e1), std::abs(want.e2), 1.0});
      worst = std::max(worst, std::abs(got.e1 - want.e1) / scale);
      worst = std::max(worst, std::abs(got.e2 - want.e2) / scale);
    }
  }

  bool sampling_ok = true;
  {
    Rng rng(606);
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double u = tn_sample({0.0, 1.0, 0.0}, rng);
      sum += u;
      sum2 += u * u;
    }
    const auto mm = tn_moments(0.0, 1.0);
    const double se1 = std::sqrt(mm.variance() / n);
    sampling_ok = sampling_ok && std::abs(sum / n - mm.e1) < 3.0 * se1;
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    sampling_ok = sampling_ok && std::abs(var - mm.variance()) <
                                     3.0 * mm.variance() * std::sqrt(8.0 / n);
  }
  {
    Rng rng(607);
    const int n = 1000000;
    const TruncatedNormalSpec spec{1.0, 4.0, 2.0};
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += tn_sample(spec, rng);
    const auto mm = tn_moments(spec);
    const double se = std::sqrt(mm.variance() / n);
    sampling_ok = sampling_ok && std::abs(sum / n - mm.e1) < 3.0 * se;
  }

  std::snprintf(buffer, sizeof(buffer),
                "worst quadrature gap %.2e over m/c in [-40,8] (tol 1e-10); "
                "sampler moments within 3 se: %s",
                worst, sampling_ok ? "yes" : "no");
  return {worst < 1e-10 && sampling_ok, buffer};
}

// --------------------------------------------------------------------------
// 7. Conditional skew-normal vs rejection sampling, 2 parameter sets x 3 x values.
// --------------------------------------------------------------------------
Outcome criterion7() {
  SkewNormalParams p2 = sn135();
  p2.mu << 0.5, -1.0, 1.0;
  p2.sigma << 1.0, 0.4, 0.2,
              0.4, 1.5, 0.42,  // fixed below to the restriction value
              0.2, 0.42, 2.0;
  p2.sigma(1, 2) = p2.sigma(2, 1) = 0.4 * 0.2 / 1.0 + 0.3;  // off-restriction is fine here
  p2.delta << -1.0, 2.0, 1.5;

  int checks = 0, failures = 0;
  for (const SkewNormalParams& p : {sn135(), p2}) {
    for (double x0 : {-0.5, 0.4, 1.2}) {
      const double eps = 0.02;
      const Index n = 1500000;
      const Matrix draws = sn_sample(p, n, 7100 + static_cast<std::uint64_t>(x0 * 10));
      std::vector<Index> keep;
      for (Index i = 0; i < n; ++i)
        if (std::abs(draws(i, 0) - x0) < eps) keep.push_back(i);
      if (keep.size() < 4000) {
        ++failures;
        continue;
      }
      Matrix sel(static_cast<Index>(keep.size()), 2);
      for (std::size_t k = 0; k < keep.size(); ++k)
        sel.row(static_cast<Index>(k)) = draws.row(keep[k]).tail(2);
      const Vector mc_mean = oracles::sample_mean(sel);
      const Matrix mc_cov = oracles::sample_cov(sel);

      const ConditionalSkewNormal cond = conditional_sn(p, Vector::Constant(1, x0));
      const Vector mean = cond.mean();
      const Matrix cov = cond.cov();
      const double m = static_cast<double>(keep.size());
      for (Index j = 0; j < 2; ++j) {
        ++checks;
        const double se = std::sqrt(cov(j, j) / m);
        if (std::abs(mc_mean(j) - mean(j)) > 3.0 * se + 0.02) ++failures;
      }
      for (Index i = 0; i < 2; ++i)
        for (Index j = i; j < 2; ++j) {
          ++checks;
          const double se =
              std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / m);
          if (std::abs(mc_cov(i, j) - cov(i, j)) > 3.0 * se + 0.02) ++failures;
        }
    }
  }
  std::snprintf(buffer, sizeof(buffer), "%d moment checks, %d failures (3 se)", checks,
                failures);
  return {checks == 30 && failures == 0, buffer};
}

// --------------------------------------------------------------------------
// 8. Asymptotic NN sampler vs actual impute_nn at n = 1e5 within 0.03.
// --------------------------------------------------------------------------
Outcome criterion8() {
  const SkewNormalParams p = sn135();
  const Index n = 100000;
  const Matrix asym = asymptotic_nn_sample_sn(p, n, 8001);
  const double rho_asym = oracles::pearson_textbook(asym.col(1), asym.col(2));

  const StackedDataset ds = split_sample(sn_sample(p, n, 8002), n / 2, p.dims);
  const ImputedDataset nn = impute_nn(ds);
  const double rho_nn = summarize(nn).groups.front().rho_yz;

  std::snprintf(buffer, sizeof(buffer),
                "asymptotic rho %.4f vs imputed rho %.4f, |diff| %.4f (tol 0.03)",
                rho_asym, rho_nn, std::abs(rho_asym - rho_nn));
  return {std::abs(rho_asym - rho_nn) < 0.03, buffer};
}

// --------------------------------------------------------------------------
// 9. Reduction properties: delta = 0 fit vs Gaussian; g = 1 collapses.
// --------------------------------------------------------------------------
Outcome criterion9() {
  SkewNormalParams truth;
  truth.dims = {1, 1, 1};
  truth.mu = Vector::Zero(3);
  truth.sigma = Matrix::Identity(3, 3);
  truth.sigma(0, 1) = truth.sigma(1, 0) = 0.5;
  truth.sigma(0, 2) = truth.sigma(2, 0) = 0.3;
  truth.sigma(1, 2) = truth.sigma(2, 1) = 0.15;  // = restriction value
  truth.delta = Vector::Zero(3);

  const StackedDataset ds = split_sample(sn_sample(truth, 10000, 91), 5000, truth.dims);
  const GaussianParams gauss = fit_gaussian(ds);
  EMConfig em;
  em.max_iters = 2000;
  const SnFitResult sn_fit = fit_sn_em(ds, sn_moment_init(ds), em);
  // delta = 0 sits on a singular point of the skew-normal information, so the
  // MLE's delta_hat is O(n^{-1/6}) with compensating (mu, Sigma) shifts; the
  // comparison is on data-identified quantities: implied moments of the
  // jointly observed pairs plus the per-row observed-data log-likelihood.
  // The unidentified (Y,Z) cross-moment is extrapolated differently by the
  // two families and is excluded (see the decisions ledger).
  const Vector mean_sn = sn_mean(sn_fit.params);
  const Matrix cov_sn = sn_cov(sn_fit.params);
  double gap_reduction = (mean_sn - gauss.mu).lpNorm<Eigen::Infinity>();
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) {
      if ((i == 1 && j == 2) || (i == 2 && j == 1)) continue;
      gap_reduction = std::max(gap_reduction, std::abs(cov_sn(i, j) - gauss.sigma(i, j)));
    }
  const double per_row_gap =
      (sn_observed_loglik(ds, sn_fit.params) - gaussian_observed_loglik(ds, gauss)) /
      static_cast<double>(ds.n());
  gap_reduction = std::max(gap_reduction, std::abs(per_row_gap));

  // g = 1 collapses.
  EMConfig em1;
  const MixFitResult gmm1 = fit_gmm_matching(ds, 1, em1);
  const auto& comp_g = std::get<GaussianParams>(gmm1.params.components[0]);
  double gap_g1 = (comp_g.mu - gauss.mu).lpNorm<Eigen::Infinity>();
  gap_g1 = std::max(gap_g1, (comp_g.sigma - gauss.sigma).lpNorm<Eigen::Infinity>());

  EMConfig em2;
  em2.max_iters = 150;
  const SnFitResult sn_small = fit_sn_em(ds, sn_moment_init(ds), em2);
  const MixFitResult snm1 = fit_snmix_matching(ds, 1, em2);
  const auto& comp_s = std::get<SkewNormalParams>(snm1.params.components[0]);
  double gap_s1 = (comp_s.mu - sn_small.params.mu).lpNorm<Eigen::Infinity>();
  gap_s1 = std::max(gap_s1, (comp_s.sigma - sn_small.params.sigma).lpNorm<Eigen::Infinity>());
  gap_s1 = std::max(gap_s1, (comp_s.delta - sn_small.params.delta).lpNorm<Eigen::Infinity>());

  std::snprintf(buffer, sizeof(buffer),
                "delta=0 moment gap %.2e (tol 1e-3); g=1 gaps: gmm %.2e, snmix %.2e "
                "(tol 1e-8)",
                gap_reduction, gap_g1, gap_s1);
  return {gap_reduction < 1e-3 && gap_g1 < 1e-8 && gap_s1 < 1e-8, buffer};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 Gaussian closed form matches the numerical maximiser (1e-6, <1s)", criterion1},
      {"2 identification restriction exact for all fitted families (1e-10)", criterion2},
      {"3 EM monotone for 50 random initialisations (1e-8 slack, <60s)", criterion3},
      {"4 sn-515 medians: NN in [0.05,0.25], parametric in [0.75,0.92] (<2min)", criterion4},
      {"5 gmm-overlap: NN mismatch vs quadrature, >=4 modes, parametric <5%", criterion5},
      {"6 truncated normal: quadrature 1e-10 on [-40,8], sampler within 3 se", criterion6},
      {"7 conditional skew-normal vs rejection sampling (3 se, 2x3 settings)", criterion7},
      {"8 asymptotic NN sampler vs impute_nn at n=1e5 (0.03)", criterion8},
      {"9 reductions: delta=0 to Gaussian (1e-3), g=1 collapse (1e-8)", criterion9},
  };

  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome outcome;
    try {
      outcome = fn();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %s: %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(),
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures > 0) std::printf("%d criteria failed\n", failures);
  return failures;
}
