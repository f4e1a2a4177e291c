#include "fusionkit/imputation.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <variant>

#include "fusionkit/csv.hpp"
#include "fusionkit/errors.hpp"
#include "fusionkit/nn_index.hpp"
#include "fusionkit/normal.hpp"
#include "fusionkit/rng.hpp"
#include "fusionkit/truncated_normal.hpp"

namespace fusionkit {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kConstraintTolerance = 1e-8;

double logsumexp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

ImputedDataset make_base(const StackedDataset& ds, CellTag tag) {
  ImputedDataset out;
  out.values = ds.values();
  out.row_tag.assign(static_cast<std::size_t>(ds.n()), tag);
  out.donor.assign(static_cast<std::size_t>(ds.n()), -1);
  out.component_draw.assign(static_cast<std::size_t>(ds.n()), -1);
  out.spec = ds.spec();
  out.n_a = ds.n_a();
  out.n_b = ds.n_b();
  return out;
}

}  // namespace

const char* draw_mode_name(DrawMode mode) {
  return mode == DrawMode::posterior_draw ? "posterior_draw" : "conditional_mean";
}

DrawMode draw_mode_from_name(const std::string& name) {
  if (name == "posterior_draw") return DrawMode::posterior_draw;
  if (name == "conditional_mean") return DrawMode::conditional_mean;
  throw ValidationError("unknown draw_mode: " + name);
}

// ---------------------------------------------------------------------------
// Nearest-neighbour hot deck
// ---------------------------------------------------------------------------

ImputedDataset impute_nn(const StackedDataset& ds, const NNConfig& cfg) {
  if (ds.n_a() < 1 || ds.n_b() < 1)
    throw ValidationError("impute_nn: both datasets must be non-empty");
  const BlockDims d = ds.dims();

  Matrix x_a = ds.x_a();
  Matrix x_b = ds.x_b();
  if (cfg.standardise_x) {
    const auto x = ds.x_all();
    for (Index j = 0; j < d.x; ++j) {
      const double mean = x.col(j).mean();
      const double sd =
          std::sqrt((x.col(j).array() - mean).square().sum() / static_cast<double>(ds.n()));
      if (sd > 0.0) {
        x_a.col(j) /= sd;
        x_b.col(j) /= sd;
      }
    }
  }

  ImputedDataset out = make_base(ds, CellTag::nn);
  out.method = "nn";

  auto run = [&](const Matrix& queries, const Matrix& donors, auto&& assign) {
    if (cfg.search == NNConfig::Search::kdtree) {
      const KdTree tree(donors);
      for (Index i = 0; i < queries.rows(); ++i) assign(i, tree.nearest(queries.row(i)));
    } else {
      for (Index i = 0; i < queries.rows(); ++i) assign(i, nn_brute(donors, queries.row(i)));
    }
  };

  // A recipients take Z from B donors.
  run(x_a, x_b, [&](Index i, const NnResult& r) {
    const Index donor_row = ds.n_a() + r.index;
    out.values.block(i, d.z_begin(), 1, d.z) =
        ds.values().block(donor_row, d.z_begin(), 1, d.z);
    out.donor[static_cast<std::size_t>(i)] = donor_row;
  });
  // B recipients take Y from A donors.
  run(x_b, x_a, [&](Index i, const NnResult& r) {
    const Index row = ds.n_a() + i;
    out.values.block(row, d.y_begin(), 1, d.y) =
        ds.values().block(r.index, d.y_begin(), 1, d.y);
    out.donor[static_cast<std::size_t>(row)] = r.index;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Parametric imputation
// ---------------------------------------------------------------------------

namespace {

/// Latent-design regression pieces of one block (Y or Z) of a skew-normal
/// model: R | X = x, U = u ~ N(alpha + lambda u + beta x, Omega).
struct SnRegPieces {
  Vector alpha;
  Matrix beta;
  Vector lambda;
  Matrix chol_omega;
};

SnRegPieces sn_reg_pieces(const SkewNormalParams& p, bool z_block) {
  const BlockDims d = p.dims;
  const Matrix sigma_xx = p.sigma.block(0, 0, d.x, d.x);
  Eigen::LLT<Matrix> llt(sigma_xx);
  if (llt.info() != Eigen::Success)
    throw NumericalError("parametric imputation: Sigma_XX not positive definite");

  const Index rb = z_block ? d.z_begin() : d.y_begin();
  const Index dr = z_block ? d.z : d.y;
  const Matrix sigma_xr = p.sigma.block(0, rb, d.x, dr);
  SnRegPieces out;
  out.beta = llt.solve(sigma_xr).transpose();
  out.alpha = p.mu.segment(rb, dr) - out.beta * p.mu.head(d.x);
  out.lambda = p.delta.segment(rb, dr) - out.beta * p.delta.head(d.x);
  const Matrix omega =
      p.sigma.block(rb, rb, dr, dr) - out.beta * sigma_xr;
  out.chol_omega = psd_sqrt(0.5 * (omega + omega.transpose()));
  return out;
}

Vector draw_noise(const Matrix& chol, Rng& rng) {
  Vector xi(chol.cols());
  for (Index j = 0; j < xi.size(); ++j) xi(j) = rng.normal();
  return chol * xi;
}

void impute_gaussian_rows(const StackedDataset& ds, const GaussianParams& model,
                          const ImputationRequest& req, ImputedDataset& out) {
  const BlockDims d = ds.dims();
  const auto obs_a = xy_indices(d);
  const auto obs_b = xz_indices(d);
  const GaussianConditional cond_a(model.mu, model.sigma, obs_a, z_indices(d));
  const GaussianConditional cond_b(model.mu, model.sigma, obs_b, y_indices(d));

  for (Index i = 0; i < ds.n(); ++i) {
    const bool in_a = ds.is_a_row(i);
    const auto& cond = in_a ? cond_a : cond_b;
    const Vector obs = ds.observed_row(i);
    Vector filled;
    if (req.draw_mode == DrawMode::conditional_mean) {
      filled = cond.mean(obs);
    } else {
      Rng rng = Rng::derive(req.seed, static_cast<std::uint64_t>(i));
      filled = cond.draw(obs, rng);
    }
    const Index begin = in_a ? d.z_begin() : d.y_begin();
    out.values.block(i, begin, 1, filled.size()) = filled.transpose();
  }
}

void impute_sn_rows(const StackedDataset& ds, const SkewNormalParams& model,
                    const ImputationRequest& req, ImputedDataset& out) {
  const BlockDims d = ds.dims();
  const SnDensity dens_a(sn_marginal(model, xy_indices(d)));
  const SnDensity dens_b(sn_marginal(model, xz_indices(d)));
  const SnRegPieces reg_z = sn_reg_pieces(model, /*z_block=*/true);
  const SnRegPieces reg_y = sn_reg_pieces(model, /*z_block=*/false);

  for (Index i = 0; i < ds.n(); ++i) {
    const bool in_a = ds.is_a_row(i);
    const SnDensity& dens = in_a ? dens_a : dens_b;
    const SnRegPieces& reg = in_a ? reg_z : reg_y;
    const Vector w = ds.observed_row(i);
    const double m = dens.m_of(w);
    const Vector x = w.head(d.x);

    Vector filled;
    if (req.draw_mode == DrawMode::conditional_mean) {
      const double e1 = tn_moments(m, dens.c()).e1;
      filled = reg.alpha + reg.lambda * e1 + reg.beta * x;
    } else {
      Rng rng = Rng::derive(req.seed, static_cast<std::uint64_t>(i));
      const double u = tn_sample({m, dens.c() * dens.c(), 0.0}, rng);
      filled = reg.alpha + reg.lambda * u + reg.beta * x + draw_noise(reg.chol_omega, rng);
    }
    const Index begin = in_a ? d.z_begin() : d.y_begin();
    out.values.block(i, begin, 1, filled.size()) = filled.transpose();
  }
}

/// Per-component machinery for mixture imputation, covering both families.
struct MixRowImputer {
  struct GaussComp {
    GaussianConditional cond_a;  // Z | (X,Y)
    GaussianConditional cond_b;  // Y | (X,Z)
  };
  struct SnComp {
    SnDensity dens_a;
    SnDensity dens_b;
    SnRegPieces reg_z;
    SnRegPieces reg_y;
  };

  BlockDims d;
  Vector log_pi;
  std::vector<std::variant<GaussComp, SnComp>> comps;

  explicit MixRowImputer(const MixtureParams& model) : d(model.dims()) {
    log_pi = model.pi.array().log();
    const auto obs_a = xy_indices(d);
    const auto obs_b = xz_indices(d);
    for (const auto& comp : model.components) {
      if (const auto* g = std::get_if<GaussianParams>(&comp)) {
        comps.push_back(GaussComp{{g->mu, g->sigma, obs_a, z_indices(d)},
                                  {g->mu, g->sigma, obs_b, y_indices(d)}});
      } else {
        const auto& s = std::get<SkewNormalParams>(comp);
        comps.push_back(SnComp{SnDensity(sn_marginal(s, obs_a)),
                               SnDensity(sn_marginal(s, obs_b)),
                               sn_reg_pieces(s, true), sn_reg_pieces(s, false)});
      }
    }
  }

  double log_obs_density(int h, bool in_a, const Vector& w) const {
    return std::visit(overloaded{[&](const GaussComp&) { return 0.0; },
                                 [&](const SnComp& c) {
                                   return (in_a ? c.dens_a : c.dens_b).log_density(w);
                                 }},
                      comps[static_cast<std::size_t>(h)]);
  }

  Vector component_mean(int h, bool in_a, const Vector& w) const {
    return std::visit(
        overloaded{[&](const GaussComp& c) { return (in_a ? c.cond_a : c.cond_b).mean(w); },
                   [&](const SnComp& c) {
                     const auto& dens = in_a ? c.dens_a : c.dens_b;
                     const auto& reg = in_a ? c.reg_z : c.reg_y;
                     const double e1 = tn_moments(dens.m_of(w), dens.c()).e1;
                     return Vector(reg.alpha + reg.lambda * e1 + reg.beta * w.head(d.x));
                   }},
        comps[static_cast<std::size_t>(h)]);
  }

  Vector component_draw(int h, bool in_a, const Vector& w, Rng& rng) const {
    return std::visit(
        overloaded{[&](const GaussComp& c) { return (in_a ? c.cond_a : c.cond_b).draw(w, rng); },
                   [&](const SnComp& c) {
                     const auto& dens = in_a ? c.dens_a : c.dens_b;
                     const auto& reg = in_a ? c.reg_z : c.reg_y;
                     const double u =
                         tn_sample({dens.m_of(w), dens.c() * dens.c(), 0.0}, rng);
                     return Vector(reg.alpha + reg.lambda * u + reg.beta * w.head(d.x) +
                                   draw_noise(reg.chol_omega, rng));
                   }},
        comps[static_cast<std::size_t>(h)]);
  }
};

void impute_mixture_rows(const StackedDataset& ds, const MixtureParams& model,
                         const ImputationRequest& req, ImputedDataset& out) {
  const BlockDims d = ds.dims();
  const int g = model.g();
  const MixRowImputer imputer(model);

  // Gaussian component densities for the responsibilities.
  const auto dens_a = [&] {
    std::vector<MvnDensity> v;
    for (const auto& comp : model.components)
      if (const auto* gc = std::get_if<GaussianParams>(&comp)) {
        auto [mu, sigma] = marginal_moments(gc->mu, gc->sigma, xy_indices(d));
        v.emplace_back(std::move(mu), sigma);
      }
    return v;
  }();
  const auto dens_b = [&] {
    std::vector<MvnDensity> v;
    for (const auto& comp : model.components)
      if (const auto* gc = std::get_if<GaussianParams>(&comp)) {
        auto [mu, sigma] = marginal_moments(gc->mu, gc->sigma, xz_indices(d));
        v.emplace_back(std::move(mu), sigma);
      }
    return v;
  }();
  const bool gaussian_family = model.family() == ModelFamily::gmm;

  Vector logp(g), tau(g);
  for (Index i = 0; i < ds.n(); ++i) {
    const bool in_a = ds.is_a_row(i);
    const Vector w = ds.observed_row(i);
    for (int h = 0; h < g; ++h) {
      const double ld = gaussian_family
                            ? (in_a ? dens_a : dens_b)[static_cast<std::size_t>(h)].log_density(w)
                            : imputer.log_obs_density(h, in_a, w);
      logp(h) = imputer.log_pi(h) + ld;
    }
    const double lse = logsumexp(logp);
    if (!std::isfinite(lse))
      throw NumericalError("impute_parametric: zero density at row " + std::to_string(i));
    tau = (logp.array() - lse).exp();

    Vector filled;
    if (req.draw_mode == DrawMode::conditional_mean && !req.hard_assign) {
      filled = Vector::Zero(in_a ? d.z : d.y);
      for (int h = 0; h < g; ++h) filled += tau(h) * imputer.component_mean(h, in_a, w);
    } else {
      Rng rng = Rng::derive(req.seed, static_cast<std::uint64_t>(i));
      int h;
      if (req.hard_assign) {
        Index arg;
        tau.maxCoeff(&arg);
        h = static_cast<int>(arg);
      } else {
        std::vector<double> probs(tau.data(), tau.data() + g);
        h = rng.categorical(probs);
      }
      out.component_draw[static_cast<std::size_t>(i)] = h;
      filled = (req.draw_mode == DrawMode::conditional_mean)
                   ? imputer.component_mean(h, in_a, w)
                   : imputer.component_draw(h, in_a, w, rng);
    }
    const Index begin = in_a ? d.z_begin() : d.y_begin();
    out.values.block(i, begin, 1, filled.size()) = filled.transpose();
  }
}

}  // namespace

ImputedDataset impute_parametric(const StackedDataset& ds, const ModelParams& model,
                                 const ImputationRequest& request) {
  if (model_dims(model) != ds.dims())
    throw ValidationError("impute_parametric: model/data dimension mismatch");
  if (model_constraint_gap(model) > kConstraintTolerance)
    throw ValidationError(
        "impute_parametric: model violates the identification restriction");

  ImputedDataset out = make_base(ds, CellTag::parametric);
  out.method = "parametric";
  out.family = family_name(model_family(model));
  out.seed = request.seed;
  out.draw_mode = draw_mode_name(request.draw_mode);

  std::visit(overloaded{[&](const GaussianParams& p) {
                          impute_gaussian_rows(ds, p, request, out);
                        },
                        [&](const SkewNormalParams& p) {
                          impute_sn_rows(ds, p, request, out);
                        },
                        [&](const MixtureParams& p) {
                          impute_mixture_rows(ds, p, request, out);
                        }},
             model);
  return out;
}

// ---------------------------------------------------------------------------
// Asymptotic nearest-neighbour samplers
// ---------------------------------------------------------------------------

Matrix asymptotic_nn_sample_sn(const SkewNormalParams& params, Index n,
                               std::uint64_t seed) {
  const BlockDims d = params.dims;
  const Index dr = d.y + d.z;

  const Matrix sigma_xx = params.sigma.block(0, 0, d.x, d.x);
  const Vector delta_x = params.delta_x();
  const Matrix lambda_xx =
      (sigma_xx + delta_x * delta_x.transpose()).eval();
  Eigen::LLT<Matrix> llt_lambda(0.5 * (lambda_xx + lambda_xx.transpose()));
  Eigen::LLT<Matrix> llt_sigma(sigma_xx);
  if (llt_lambda.info() != Eigen::Success || llt_sigma.info() != Eigen::Success)
    throw NumericalError("asymptotic_nn_sample_sn: singular X block");

  const Vector b = llt_lambda.solve(delta_x);
  const double gamma = 1.0 - delta_x.dot(b);
  const Matrix sigma_rx = params.sigma.block(d.x, 0, dr, d.x);
  const Matrix coef = llt_sigma.solve(sigma_rx.transpose()).transpose();  // dr x dx
  const Vector delta_r = params.delta.tail(dr) - coef * delta_x;
  const Matrix sigma_rr =
      (params.sigma.block(d.x, d.x, dr, dr) - coef * sigma_rx.transpose()).eval();

  const Matrix chol_x = psd_sqrt(sigma_xx);
  const Matrix chol_y = psd_sqrt(sigma_rr.block(0, 0, d.y, d.y));
  const Matrix chol_z = psd_sqrt(sigma_rr.block(d.y, d.y, d.z, d.z));
  const Vector mu_x = params.mu.head(d.x);
  const Vector mu_r = params.mu.tail(dr);

  Rng rng(seed);
  Matrix out(n, d.total());
  for (Index i = 0; i < n; ++i) {
    const double u0 = std::abs(rng.normal());
    const Vector x = mu_x + delta_x * u0 + draw_noise(chol_x, rng);
    const Vector centred = x - mu_x;

    const double tau = b.dot(centred);
    const double u1 = tn_sample({tau, gamma, 0.0}, rng);  // feeds Z
    const double u2 = tn_sample({tau, gamma, 0.0}, rng);  // feeds Y
    const Vector mu_r_x = mu_r + coef * centred;

    out.row(i).head(d.x) = x.transpose();
    out.row(i).segment(d.y_begin(), d.y) =
        (mu_r_x.head(d.y) + delta_r.head(d.y) * u2 + draw_noise(chol_y, rng)).transpose();
    out.row(i).segment(d.z_begin(), d.z) =
        (mu_r_x.tail(d.z) + delta_r.tail(d.z) * u1 + draw_noise(chol_z, rng)).transpose();
  }
  return out;
}

namespace {

/// Everything needed to sample X from one component and the conditional
/// Y | X, Z | X laws of that component.
struct CompCondSampler {
  bool skew = false;
  // X marginal
  Vector mu_x;
  Vector delta_x;  // zero for gaussian
  Matrix chol_x;
  // conditional pieces (shared derivation with conditional_sn)
  Vector b;        // Lambda_XX^{-1} delta_X
  double gamma = 1.0;
  Vector mu_y, mu_z;
  Matrix coef_y, coef_z;    // Sigma_RX Sigma_XX^{-1} rows
  Vector delta_y, delta_z;  // conditional skewness
  Matrix chol_y, chol_z;    // conditional covariance factors
  MvnDensity x_density_gauss;
  std::unique_ptr<SnDensity> x_density_sn;

  double log_x_density(const Vector& x) const {
    return skew ? x_density_sn->log_density(x) : x_density_gauss.log_density(x);
  }
};

CompCondSampler make_comp_sampler(const ComponentParams& comp) {
  CompCondSampler s;
  const auto build = [&](const Vector& mu, const Matrix& sigma, const Vector& delta,
                         const BlockDims& d) {
    s.mu_x = mu.head(d.x);
    s.delta_x = delta.head(d.x);
    const Matrix sigma_xx = sigma.block(0, 0, d.x, d.x);
    s.chol_x = psd_sqrt(sigma_xx);

    const Matrix lambda_xx =
        (sigma_xx + s.delta_x * s.delta_x.transpose()).eval();
    Eigen::LLT<Matrix> llt_lambda(0.5 * (lambda_xx + lambda_xx.transpose()));
    Eigen::LLT<Matrix> llt_sigma(sigma_xx);
    if (llt_lambda.info() != Eigen::Success || llt_sigma.info() != Eigen::Success)
      throw NumericalError("asymptotic mixture sampler: singular X block");
    s.b = llt_lambda.solve(s.delta_x);
    s.gamma = 1.0 - s.delta_x.dot(s.b);

    const Index dr = d.y + d.z;
    const Matrix sigma_rx = sigma.block(d.x, 0, dr, d.x);
    const Matrix coef = llt_sigma.solve(sigma_rx.transpose()).transpose();
    const Vector delta_r = delta.tail(dr) - coef * s.delta_x;
    const Matrix sigma_rr =
        (sigma.block(d.x, d.x, dr, dr) - coef * sigma_rx.transpose()).eval();

    s.mu_y = mu.segment(d.y_begin(), d.y);
    s.mu_z = mu.segment(d.z_begin(), d.z);
    s.coef_y = coef.topRows(d.y);
    s.coef_z = coef.bottomRows(d.z);
    s.delta_y = delta_r.head(d.y);
    s.delta_z = delta_r.tail(d.z);
    s.chol_y = psd_sqrt(sigma_rr.block(0, 0, d.y, d.y));
    s.chol_z = psd_sqrt(sigma_rr.block(d.y, d.y, d.z, d.z));
  };

  if (const auto* g = std::get_if<GaussianParams>(&comp)) {
    s.skew = false;
    build(g->mu, g->sigma, Vector::Zero(g->dims.total()), g->dims);
    s.x_density_gauss =
        MvnDensity(g->mu.head(g->dims.x), g->sigma.block(0, 0, g->dims.x, g->dims.x));
  } else {
    const auto& sn = std::get<SkewNormalParams>(comp);
    s.skew = true;
    build(sn.mu, sn.sigma, sn.delta, sn.dims);
    s.x_density_sn = std::make_unique<SnDensity>(
        Vector(sn.mu.head(sn.dims.x)), Matrix(sn.sigma.block(0, 0, sn.dims.x, sn.dims.x)),
        Vector(sn.delta.head(sn.dims.x)));
  }
  return s;
}

}  // namespace

MixtureAsymptoticSample asymptotic_nn_sample_mixture(const MixtureParams& params,
                                                     Index n, std::uint64_t seed) {
  const BlockDims d = params.dims();
  const int g = params.g();
  std::vector<CompCondSampler> samplers;
  samplers.reserve(static_cast<std::size_t>(g));
  for (const auto& comp : params.components) samplers.push_back(make_comp_sampler(comp));
  const Vector log_pi = params.pi.array().log();

  Rng rng(seed);
  MixtureAsymptoticSample out;
  out.values.resize(n, d.total());
  out.s.resize(static_cast<std::size_t>(n));
  out.t.resize(static_cast<std::size_t>(n));
  const std::vector<double> pi(params.pi.data(), params.pi.data() + g);

  Vector logw(g), tau(g);
  for (Index i = 0; i < n; ++i) {
    // X from the mixture X-marginal.
    const int hx = rng.categorical(pi);
    const auto& sx = samplers[static_cast<std::size_t>(hx)];
    Vector x;
    if (sx.skew) {
      const double u0 = std::abs(rng.normal());
      x = sx.mu_x + sx.delta_x * u0 + draw_noise(sx.chol_x, rng);
    } else {
      x = sx.mu_x + draw_noise(sx.chol_x, rng);
    }

    // Posterior component weights given x only.
    for (int h = 0; h < g; ++h)
      logw(h) = log_pi(h) + samplers[static_cast<std::size_t>(h)].log_x_density(x);
    const double lse = logsumexp(logw);
    if (!std::isfinite(lse))
      throw NumericalError("asymptotic_nn_sample_mixture: zero X density");
    tau = (logw.array() - lse).exp();
    std::vector<double> w(tau.data(), tau.data() + g);

    const int comp_s = rng.categorical(w);  // component for Y
    const int comp_t = rng.categorical(w);  // component for Z
    out.s[static_cast<std::size_t>(i)] = comp_s;
    out.t[static_cast<std::size_t>(i)] = comp_t;

    const auto draw_y = [&](const CompCondSampler& c) {
      const Vector centred = x - c.mu_x;
      Vector y = c.mu_y + c.coef_y * centred + draw_noise(c.chol_y, rng);
      if (c.skew) {
        const double u = tn_sample({c.b.dot(centred), c.gamma, 0.0}, rng);
        y += c.delta_y * u;
      }
      return y;
    };
    const auto draw_z = [&](const CompCondSampler& c) {
      const Vector centred = x - c.mu_x;
      Vector z = c.mu_z + c.coef_z * centred + draw_noise(c.chol_z, rng);
      if (c.skew) {
        const double u = tn_sample({c.b.dot(centred), c.gamma, 0.0}, rng);
        z += c.delta_z * u;
      }
      return z;
    };

    out.values.row(i).head(d.x) = x.transpose();
    out.values.row(i).segment(d.y_begin(), d.y) =
        draw_y(samplers[static_cast<std::size_t>(comp_s)]).transpose();
    out.values.row(i).segment(d.z_begin(), d.z) =
        draw_z(samplers[static_cast<std::size_t>(comp_t)]).transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

namespace {

SummaryGroup summarize_rows(const Matrix& values, const BlockDims& d,
                            const std::string& name) {
  const Index n = values.rows();
  if (n < 3) throw ValidationError("summarize: group '" + name + "' has fewer than 3 rows");
  SummaryGroup out;
  out.group = name;
  out.n = n;
  out.mean = values.colwise().mean().transpose();
  Matrix centred = values;
  centred.rowwise() -= out.mean.transpose();
  out.cov = centred.transpose() * centred / static_cast<double>(n);

  const Index iy = d.y_begin();
  const Index iz = d.z_begin();
  const double denom = std::sqrt(out.cov(iy, iy) * out.cov(iz, iz));
  out.rho_yz = denom > 0.0 ? out.cov(iy, iz) / denom : 0.0;
  return out;
}

}  // namespace

SummaryTable summarize(const ImputedDataset& imputed, const std::vector<int>* labels) {
  if (!imputed.values.allFinite())
    throw ValidationError("summarize: dataset contains non-finite values");
  const BlockDims d = imputed.spec.dims();
  SummaryTable table;
  table.groups.push_back(summarize_rows(imputed.values, d, "all"));

  if (labels != nullptr) {
    if (static_cast<Index>(labels->size()) != imputed.n())
      throw ValidationError("summarize: label count != row count");
    std::vector<int> uniq(*labels);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (int value : uniq) {
      std::vector<Index> rows;
      for (Index i = 0; i < imputed.n(); ++i)
        if ((*labels)[static_cast<std::size_t>(i)] == value) rows.push_back(i);
      Matrix sub(static_cast<Index>(rows.size()), imputed.values.cols());
      for (std::size_t r = 0; r < rows.size(); ++r)
        sub.row(static_cast<Index>(r)) = imputed.values.row(rows[r]);
      table.groups.push_back(summarize_rows(sub, d, std::to_string(value)));
    }
  }
  return table;
}

void write_summary_csv(const SummaryTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open file for writing: " + path);
  out << "group,rho_yz,n\n";
  for (const auto& group : table.groups)
    out << group.group << "," << format_double(group.rho_yz) << "," << group.n << "\n";
  if (!out) throw ValidationError("I/O failure while writing: " + path);
}

}  // namespace fusionkit
