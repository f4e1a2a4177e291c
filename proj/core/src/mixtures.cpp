#include "fusionkit/mixtures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "fusionkit/errors.hpp"
#include "fusionkit/normal.hpp"
#include "fusionkit/rng.hpp"
#include "fusionkit/truncated_normal.hpp"
#include "sn_em_detail.hpp"

namespace fusionkit {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kCovFloorScale = 1e-8;

/// Thrown (by value) inside one restart when a component collapses; the
/// restart loop records the event and moves on.
struct DegenerateComponent {
  int component;
  std::string why;
};

double logsumexp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

BlockDims MixtureParams::dims() const {
  if (components.empty()) throw ValidationError("MixtureParams: no components");
  return std::visit([](const auto& c) { return c.dims; }, components.front());
}

ModelFamily MixtureParams::family() const {
  if (components.empty()) throw ValidationError("MixtureParams: no components");
  return std::holds_alternative<GaussianParams>(components.front())
             ? ModelFamily::gmm
             : ModelFamily::snmix;
}

ModelFamily model_family(const ModelParams& params) {
  return std::visit(
      overloaded{[](const GaussianParams&) { return ModelFamily::gaussian; },
                 [](const SkewNormalParams&) { return ModelFamily::skew_normal; },
                 [](const MixtureParams& m) { return m.family(); }},
      params);
}

BlockDims model_dims(const ModelParams& params) {
  return std::visit(overloaded{[](const GaussianParams& g) { return g.dims; },
                               [](const SkewNormalParams& s) { return s.dims; },
                               [](const MixtureParams& m) { return m.dims(); }},
                    params);
}

double model_constraint_gap(const ModelParams& params) {
  return std::visit(
      overloaded{[](const GaussianParams& g) { return constraint_gap(g.dims, g.sigma); },
                 [](const SkewNormalParams& s) { return constraint_gap(s.dims, s.sigma); },
                 [](const MixtureParams& m) {
                   double worst = 0.0;
                   for (const auto& comp : m.components)
                     worst = std::max(worst, std::visit(
                                                 [](const auto& c) {
                                                   return constraint_gap(c.dims, c.sigma);
                                                 },
                                                 comp));
                   return worst;
                 }},
      params);
}

namespace {

void validate_mixture(const MixtureParams& params) {
  const int g = params.g();
  if (g < 1) throw ValidationError("mixture: g must be >= 1");
  if (params.pi.size() != g) throw ValidationError("mixture: pi size != g");
  if (params.pi.minCoeff() <= 0.0)
    throw ValidationError("mixture: mixing proportions must be strictly positive");
  if (std::abs(params.pi.sum() - 1.0) > 1e-12)
    throw ValidationError("mixture: mixing proportions must sum to 1");
  const BlockDims d = params.dims();
  const bool skew = params.family() == ModelFamily::snmix;
  for (const auto& comp : params.components) {
    if (std::holds_alternative<SkewNormalParams>(comp) != skew)
      throw ValidationError("mixture: components must share one family");
    if (std::visit([](const auto& c) { return c.dims; }, comp) != d)
      throw ValidationError("mixture: components must share block dimensions");
  }
}

/// Observed-block density of one component, either family.
struct BlockDens {
  std::variant<MvnDensity, SnDensity> v;

  double log_density(const Vector& w) const {
    return std::visit([&](const auto& d) { return d.log_density(w); }, v);
  }
  // Latent posterior pieces; only meaningful for skew-normal components.
  double m_of(const Vector& w) const { return std::get<SnDensity>(v).m_of(w); }
  double c() const { return std::get<SnDensity>(v).c(); }
};

BlockDens component_block_density(const ComponentParams& comp,
                                  std::span<const Index> idx) {
  return std::visit(
      overloaded{[&](const GaussianParams& g) {
                   auto [mu, sigma] = marginal_moments(g.mu, g.sigma, idx);
                   return BlockDens{MvnDensity(std::move(mu), sigma)};
                 },
                 [&](const SkewNormalParams& s) {
                   return BlockDens{SnDensity(sn_marginal(s, idx))};
                 }},
      comp);
}

std::vector<BlockDens> make_block_densities(const MixtureParams& params,
                                            std::span<const Index> idx) {
  std::vector<BlockDens> out;
  out.reserve(params.components.size());
  for (const auto& comp : params.components)
    out.push_back(component_block_density(comp, idx));
  return out;
}

// -------------------------------------------------------------------------
// k-means++ initialisation
// -------------------------------------------------------------------------

std::vector<int> kmeans_labels(const Matrix& rows, int g, Rng& rng) {
  const Index n = rows.rows();
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  if (g == 1 || n <= g) {
    for (Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(i % g);
    return labels;
  }

  Matrix centers(g, rows.cols());
  std::vector<double> d2(static_cast<std::size_t>(n));
  const Index first = std::min<Index>(static_cast<Index>(rng.uniform() * n), n - 1);
  centers.row(0) = rows.row(first);
  for (Index i = 0; i < n; ++i)
    d2[static_cast<std::size_t>(i)] = (rows.row(i) - centers.row(0)).squaredNorm();
  for (int k = 1; k < g; ++k) {
    const int pick = rng.categorical(d2);
    centers.row(k) = rows.row(pick);
    for (Index i = 0; i < n; ++i) {
      const double dd = (rows.row(i) - centers.row(k)).squaredNorm();
      auto& cur = d2[static_cast<std::size_t>(i)];
      if (dd < cur) cur = dd;
    }
  }

  for (int sweep = 0; sweep < 25; ++sweep) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (rows.row(i) - centers.row(0)).squaredNorm();
      for (int k = 1; k < g; ++k) {
        const double dd = (rows.row(i) - centers.row(k)).squaredNorm();
        if (dd < best_d) {
          best_d = dd;
          best = k;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    Matrix sums = Matrix::Zero(g, rows.cols());
    std::vector<Index> counts(static_cast<std::size_t>(g), 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += rows.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int k = 0; k < g; ++k) {
      if (counts[static_cast<std::size_t>(k)] > 0) {
        centers.row(k) = sums.row(k) / static_cast<double>(counts[static_cast<std::size_t>(k)]);
      } else {
        // Re-seed an empty cluster at the row farthest from its centre.
        Index far = 0;
        double far_d = -1.0;
        for (Index i = 0; i < n; ++i) {
          const double dd =
              (rows.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
          if (dd > far_d) {
            far_d = dd;
            far = i;
          }
        }
        centers.row(k) = rows.row(far);
        changed = true;
      }
    }
    if (!changed) break;
  }
  return labels;
}

std::vector<int> min_cost_permutation(const std::vector<Vector>& from,
                                      const std::vector<Vector>& to) {
  const int g = static_cast<int>(from.size());
  std::vector<int> perm(static_cast<std::size_t>(g));
  std::iota(perm.begin(), perm.end(), 0);
  if (g > 9) {
    // Greedy fallback for large g.
    std::vector<bool> used(static_cast<std::size_t>(g), false);
    for (int h = 0; h < g; ++h) {
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int j = 0; j < g; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double dd = (from[static_cast<std::size_t>(j)] - to[static_cast<std::size_t>(h)]).squaredNorm();
        if (dd < best_d) {
          best_d = dd;
          best = j;
        }
      }
      perm[static_cast<std::size_t>(h)] = best;
      used[static_cast<std::size_t>(best)] = true;
    }
    return perm;
  }
  std::vector<int> trial = perm;
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  std::sort(trial.begin(), trial.end());
  do {
    double cost = 0.0;
    for (int h = 0; h < g; ++h)
      cost += (from[static_cast<std::size_t>(trial[static_cast<std::size_t>(h)])] -
               to[static_cast<std::size_t>(h)])
                  .squaredNorm();
    if (cost < best_cost) {
      best_cost = cost;
      best = trial;
    }
  } while (std::next_permutation(trial.begin(), trial.end()));
  return best;
}

struct MixtureInit {
  Vector pi;
  std::vector<ComponentParams> components;
};

ComponentParams wrap_component(const GaussianParams& g, bool skew) {
  if (!skew) return g;
  SkewNormalParams s;
  s.dims = g.dims;
  s.mu = g.mu;
  s.sigma = g.sigma;
  s.delta = Vector::Zero(g.dims.total());
  return s;
}

/// Per-dataset k-means++ on the observed coordinates, harmonised across A/B
/// through the shared X block, then a per-cluster moment fit.
MixtureInit initial_components(const StackedDataset& ds, int g, bool skew, Rng& rng) {
  MixtureInit init;
  if (g == 1) {
    init.pi = Vector::Ones(1);
    if (skew)
      init.components.push_back(sn_moment_init(ds));
    else
      init.components.push_back(fit_gaussian(ds));
    return init;
  }

  const BlockDims d = ds.dims();
  const Matrix table_a = ds.unstack_a();
  const Matrix table_b = ds.unstack_b();
  std::vector<int> labels_a = kmeans_labels(table_a, g, rng);
  std::vector<int> labels_b = kmeans_labels(table_b, g, rng);

  auto centroids = [&](const Matrix& table, const std::vector<int>& labels) {
    std::vector<Vector> cs(static_cast<std::size_t>(g));
    for (int h = 0; h < g; ++h) {
      Vector sum = Vector::Zero(d.x);
      Index count = 0;
      for (Index i = 0; i < table.rows(); ++i) {
        if (labels[static_cast<std::size_t>(i)] != h) continue;
        sum += table.row(i).head(d.x).transpose();
        ++count;
      }
      // An empty cluster gets a far-away sentinel so matching stays stable.
      cs[static_cast<std::size_t>(h)] =
          count > 0 ? Vector(sum / static_cast<double>(count))
                    : Vector(Vector::Constant(d.x, 1e50 * (h + 1)));
    }
    return cs;
  };
  const auto ca = centroids(table_a, labels_a);
  const auto cb = centroids(table_b, labels_b);
  const auto perm = min_cost_permutation(cb, ca);  // B label perm[h] matches A label h
  std::vector<int> relabel(static_cast<std::size_t>(g), 0);
  for (int h = 0; h < g; ++h) relabel[static_cast<std::size_t>(perm[static_cast<std::size_t>(h)])] = h;
  for (auto& l : labels_b) l = relabel[static_cast<std::size_t>(l)];

  const GaussianParams global_g = fit_gaussian(ds);

  init.pi.resize(g);
  for (int h = 0; h < g; ++h) {
    std::vector<Index> rows_a, rows_b;
    for (Index i = 0; i < table_a.rows(); ++i)
      if (labels_a[static_cast<std::size_t>(i)] == h) rows_a.push_back(i);
    for (Index i = 0; i < table_b.rows(); ++i)
      if (labels_b[static_cast<std::size_t>(i)] == h) rows_b.push_back(i);
    init.pi(h) = static_cast<double>(rows_a.size() + rows_b.size());

    ComponentParams comp = wrap_component(global_g, skew);
    const bool enough = static_cast<Index>(rows_a.size()) >= d.x + d.y + 1 &&
                        static_cast<Index>(rows_b.size()) >= d.x + d.z + 1;
    if (enough) {
      Matrix a_h(static_cast<Index>(rows_a.size()), table_a.cols());
      Matrix b_h(static_cast<Index>(rows_b.size()), table_b.cols());
      for (std::size_t i = 0; i < rows_a.size(); ++i) a_h.row(static_cast<Index>(i)) = table_a.row(rows_a[i]);
      for (std::size_t i = 0; i < rows_b.size(); ++i) b_h.row(static_cast<Index>(i)) = table_b.row(rows_b[i]);
      try {
        const StackedDataset mini = stack(a_h, b_h, ds.spec());
        comp = skew ? ComponentParams(sn_moment_init(mini))
                    : ComponentParams(fit_gaussian(mini));
      } catch (const std::exception&) {
        // fall through to the shifted global fit
        std::visit([&](auto& c) { c.mu.head(d.x) = ca[static_cast<std::size_t>(h)]; }, comp);
      }
    } else {
      std::visit([&](auto& c) { c.mu.head(d.x) = ca[static_cast<std::size_t>(h)]; }, comp);
    }
    init.components.push_back(std::move(comp));
  }
  // Floor tiny clusters so no component starts effectively dead.
  init.pi = init.pi.cwiseMax(0.1 * static_cast<double>(ds.n()) / g);
  init.pi /= init.pi.sum();
  return init;
}

// -------------------------------------------------------------------------
// EM loops
// -------------------------------------------------------------------------

struct RestartOutcome {
  MixtureParams params;
  std::vector<double> trace;
  std::vector<GuardEvent> guards;
  bool converged = false;
};

void check_mass(double mass, Index need, int h) {
  if (mass < static_cast<double>(need))
    throw DegenerateComponent{
        h, "responsibility mass " + std::to_string(mass) + " below " +
               std::to_string(static_cast<long long>(need)) + " effective rows"};
}

/// Responsibility-weighted Gaussian M-step pieces for one component.
struct GmmCompStats {
  double st = 0.0, st_a = 0.0, st_b = 0.0;
  Vector stx;
  Matrix stxx;
  Matrix sg_a, sby_a, syy_a;
  Matrix sg_b, sbz_b, szz_b;

  explicit GmmCompStats(const BlockDims& d) {
    stx = Vector::Zero(d.x);
    stxx = Matrix::Zero(d.x, d.x);
    sg_a = Matrix::Zero(1 + d.x, 1 + d.x);
    sby_a = Matrix::Zero(1 + d.x, d.y);
    syy_a = Matrix::Zero(d.y, d.y);
    sg_b = Matrix::Zero(1 + d.x, 1 + d.x);
    sbz_b = Matrix::Zero(1 + d.x, d.z);
    szz_b = Matrix::Zero(d.z, d.z);
  }
};

RestartOutcome gmm_em_loop(const StackedDataset& ds, MixtureInit init,
                           const EMConfig& config) {
  const BlockDims d = ds.dims();
  const int g = static_cast<int>(init.components.size());
  const auto idx_a = xy_indices(d);
  const auto idx_b = xz_indices(d);

  RestartOutcome out;
  out.params = MixtureParams{init.pi, std::move(init.components)};

  double prev = 0.0;
  for (int iter = 0;; ++iter) {
    const auto dens_a = make_block_densities(out.params, idx_a);
    const auto dens_b = make_block_densities(out.params, idx_b);
    const Vector log_pi = out.params.pi.array().log();

    std::vector<GmmCompStats> stats(static_cast<std::size_t>(g), GmmCompStats(d));
    double ll = 0.0;
    Vector logp(g), tau(g), b(1 + d.x);
    for (Index i = 0; i < ds.n(); ++i) {
      const bool in_a = ds.is_a_row(i);
      const Vector w = ds.observed_row(i);
      for (int h = 0; h < g; ++h)
        logp(h) = log_pi(h) + (in_a ? dens_a : dens_b)[static_cast<std::size_t>(h)].log_density(w);
      const double lse = logsumexp(logp);
      if (!std::isfinite(lse))
        throw NumericalError("mixture E-step: zero density at row " + std::to_string(i));
      ll += lse;
      tau = (logp.array() - lse).exp();

      const auto x = w.head(d.x);
      b(0) = 1.0;
      b.tail(d.x) = x;
      for (int h = 0; h < g; ++h) {
        const double t = tau(h);
        auto& s = stats[static_cast<std::size_t>(h)];
        s.st += t;
        s.stx += t * x;
        s.stxx += t * x * x.transpose();
        if (in_a) {
          const auto y = w.tail(d.y);
          s.st_a += t;
          s.sg_a += t * b * b.transpose();
          s.sby_a += t * b * y.transpose();
          s.syy_a += t * y * y.transpose();
        } else {
          const auto z = w.tail(d.z);
          s.st_b += t;
          s.sg_b += t * b * b.transpose();
          s.sbz_b += t * b * z.transpose();
          s.szz_b += t * z * z.transpose();
        }
      }
    }

    out.trace.push_back(ll);
    if (iter > 0) {
      const double rel = std::abs(ll - prev) / (std::abs(prev) + 1e-10);
      if (rel < config.tol) {
        out.converged = true;
        break;
      }
    }
    if (iter >= config.max_iters) break;
    prev = ll;

    for (int h = 0; h < g; ++h) {
      const auto& s = stats[static_cast<std::size_t>(h)];
      check_mass(s.st, d.total() + 1, h);
      check_mass(s.st_a, d.x + d.y + 1, h);
      check_mass(s.st_b, d.x + d.z + 1, h);

      EtaParams eta;
      eta.x.mu_x = s.stx / s.st;
      eta.x.sigma_xx = s.stxx / s.st - eta.x.mu_x * eta.x.mu_x.transpose();
      eta.x.sigma_xx = 0.5 * (eta.x.sigma_xx + eta.x.sigma_xx.transpose()).eval();
      if (floor_eigenvalues(eta.x.sigma_xx, kCovFloorScale))
        out.guards.push_back({iter + 1, "covariance_floor",
                              "Sigma_XX component " + std::to_string(h)});

      const Matrix gamma_y = s.sg_a.ldlt().solve(s.sby_a);
      eta.y.alpha = gamma_y.row(0).transpose();
      eta.y.beta = gamma_y.bottomRows(d.x).transpose();
      Matrix ry = s.syy_a - s.sby_a.transpose() * gamma_y -
                  gamma_y.transpose() * s.sby_a + gamma_y.transpose() * s.sg_a * gamma_y;
      eta.y.omega = 0.5 * (ry + ry.transpose()) / s.st_a;
      if (floor_eigenvalues(eta.y.omega, kCovFloorScale))
        out.guards.push_back({iter + 1, "covariance_floor",
                              "Omega_Y component " + std::to_string(h)});

      const Matrix gamma_z = s.sg_b.ldlt().solve(s.sbz_b);
      eta.z.alpha = gamma_z.row(0).transpose();
      eta.z.beta = gamma_z.bottomRows(d.x).transpose();
      Matrix rz = s.szz_b - s.sbz_b.transpose() * gamma_z -
                  gamma_z.transpose() * s.sbz_b + gamma_z.transpose() * s.sg_b * gamma_z;
      eta.z.omega = 0.5 * (rz + rz.transpose()) / s.st_b;
      if (floor_eigenvalues(eta.z.omega, kCovFloorScale))
        out.guards.push_back({iter + 1, "covariance_floor",
                              "Omega_Z component " + std::to_string(h)});

      out.params.components[static_cast<std::size_t>(h)] = eta_to_theta(eta);
      out.params.pi(h) = s.st / static_cast<double>(ds.n());
    }
    out.params.pi /= out.params.pi.sum();
  }
  return out;
}

/// Responsibility-weighted skew-normal M-step pieces for one component.
struct SnmixCompStats {
  double st = 0.0, st_a = 0.0, st_b = 0.0;
  Vector stx;
  Matrix stxx;
  double ste1 = 0.0, ste2 = 0.0;
  Vector ste1x;
  Matrix sg_a, sby_a, syy_a;
  Matrix sg_b, sbz_b, szz_b;

  explicit SnmixCompStats(const BlockDims& d) {
    stx = Vector::Zero(d.x);
    stxx = Matrix::Zero(d.x, d.x);
    ste1x = Vector::Zero(d.x);
    sg_a = Matrix::Zero(2 + d.x, 2 + d.x);
    sby_a = Matrix::Zero(2 + d.x, d.y);
    syy_a = Matrix::Zero(d.y, d.y);
    sg_b = Matrix::Zero(2 + d.x, 2 + d.x);
    sbz_b = Matrix::Zero(2 + d.x, d.z);
    szz_b = Matrix::Zero(d.z, d.z);
  }
};

RestartOutcome snmix_em_loop(const StackedDataset& ds, MixtureInit init,
                             const EMConfig& config) {
  const BlockDims d = ds.dims();
  const int g = static_cast<int>(init.components.size());
  const auto idx_a = xy_indices(d);
  const auto idx_b = xz_indices(d);

  RestartOutcome out;
  out.params = MixtureParams{init.pi, std::move(init.components)};

  double prev = 0.0;
  for (int iter = 0;; ++iter) {
    const auto dens_a = make_block_densities(out.params, idx_a);
    const auto dens_b = make_block_densities(out.params, idx_b);
    const Vector log_pi = out.params.pi.array().log();

    std::vector<SnmixCompStats> stats(static_cast<std::size_t>(g), SnmixCompStats(d));
    double ll = 0.0;
    Vector logp(g), tau(g), b(2 + d.x), ms(g);
    for (Index i = 0; i < ds.n(); ++i) {
      const bool in_a = ds.is_a_row(i);
      const Vector w = ds.observed_row(i);
      const auto& dens = in_a ? dens_a : dens_b;
      for (int h = 0; h < g; ++h) {
        logp(h) = log_pi(h) + dens[static_cast<std::size_t>(h)].log_density(w);
        ms(h) = dens[static_cast<std::size_t>(h)].m_of(w);
      }
      const double lse = logsumexp(logp);
      if (!std::isfinite(lse))
        throw NumericalError("mixture E-step: zero density at row " + std::to_string(i));
      ll += lse;
      tau = (logp.array() - lse).exp();

      const auto x = w.head(d.x);
      for (int h = 0; h < g; ++h) {
        const double t = tau(h);
        auto& s = stats[static_cast<std::size_t>(h)];
        const auto [e1, e2] = tn_moments(ms(h), dens[static_cast<std::size_t>(h)].c());

        s.st += t;
        s.stx += t * x;
        s.stxx += t * x * x.transpose();
        s.ste1 += t * e1;
        s.ste2 += t * e2;
        s.ste1x += t * e1 * x;

        b(0) = 1.0;
        b(1) = e1;
        b.tail(d.x) = x;
        Matrix gi = b * b.transpose();
        gi(1, 1) += e2 - e1 * e1;
        if (in_a) {
          const auto y = w.tail(d.y);
          s.st_a += t;
          s.sg_a += t * gi;
          s.sby_a += t * b * y.transpose();
          s.syy_a += t * y * y.transpose();
        } else {
          const auto z = w.tail(d.z);
          s.st_b += t;
          s.sg_b += t * gi;
          s.sbz_b += t * b * z.transpose();
          s.szz_b += t * z * z.transpose();
        }
      }
    }

    out.trace.push_back(ll);
    if (iter > 0) {
      const double rel = std::abs(ll - prev) / (std::abs(prev) + 1e-10);
      if (rel < config.tol) {
        out.converged = true;
        break;
      }
    }
    if (iter >= config.max_iters) break;
    prev = ll;

    for (int h = 0; h < g; ++h) {
      const auto& s = stats[static_cast<std::size_t>(h)];
      check_mass(s.st, d.total() + 1, h);
      check_mass(s.st_a, d.x + d.y + 1, h);
      check_mass(s.st_b, d.x + d.z + 1, h);

      auto xb = detail::sn_xblock_mstep(s.stx, s.stxx, s.ste1, s.ste2, s.ste1x, s.st);
      if (floor_eigenvalues(xb.sigma_xx, kCovFloorScale))
        out.guards.push_back({iter + 1, "covariance_floor",
                              "Sigma_XX component " + std::to_string(h)});
      auto ry = detail::sn_regression_mstep(s.sg_a, s.sby_a, s.syy_a, s.st_a, d.x);
      if (floor_eigenvalues(ry.omega, kCovFloorScale))
        out.guards.push_back({iter + 1, "covariance_floor",
                              "Omega_Y component " + std::to_string(h)});
      auto rz = detail::sn_regression_mstep(s.sg_b, s.sbz_b, s.szz_b, s.st_b, d.x);
      if (floor_eigenvalues(rz.omega, kCovFloorScale))
        out.guards.push_back({iter + 1, "covariance_floor",
                              "Omega_Z component " + std::to_string(h)});

      out.params.components[static_cast<std::size_t>(h)] =
          detail::sn_assemble(d, xb, ry, rz, out.guards, iter + 1);
      out.params.pi(h) = s.st / static_cast<double>(ds.n());
    }
    out.params.pi /= out.params.pi.sum();
  }
  return out;
}

MixFitResult fit_mixture(const StackedDataset& ds, int g, const EMConfig& config,
                         bool skew) {
  const BlockDims d = ds.dims();
  if (g < 1) throw ValidationError("fit mixture: g must be >= 1");
  if (ds.n() < d.x + 2 || ds.n_a() < d.x + d.y + 1 || ds.n_b() < d.x + d.z + 1)
    throw ValidationError("fit mixture: insufficient rows for the block sizes");
  if (!(config.tol > 0.0) || config.max_iters < 1)
    throw ValidationError("fit mixture: bad EM configuration");

  const int restarts = (g == 1) ? 1 : std::max(1, config.n_restarts);
  std::optional<RestartOutcome> best;
  int best_restart = -1;
  std::vector<double> restart_lls;
  std::vector<GuardEvent> outer_guards;
  std::string last_error;

  for (int r = 0; r < restarts; ++r) {
    Rng rng = Rng::derive(config.seed, 7000 + static_cast<std::uint64_t>(r));
    try {
      MixtureInit init = initial_components(ds, g, skew, rng);
      RestartOutcome outcome = skew ? snmix_em_loop(ds, std::move(init), config)
                                    : gmm_em_loop(ds, std::move(init), config);
      restart_lls.push_back(outcome.trace.back());
      if (!best || outcome.trace.back() > best->trace.back()) {
        best = std::move(outcome);
        best_restart = r;
      }
    } catch (const DegenerateComponent& e) {
      restart_lls.push_back(kNegInf);
      last_error = "component " + std::to_string(e.component) + ": " + e.why;
      outer_guards.push_back({0, "restart_abandoned",
                              "restart " + std::to_string(r) + ": " + last_error});
    } catch (const NumericalError& e) {
      restart_lls.push_back(kNegInf);
      last_error = e.what();
      outer_guards.push_back({0, "restart_abandoned",
                              "restart " + std::to_string(r) + ": " + last_error});
    }
  }
  if (!best)
    throw NumericalError("mixture fit: all restarts failed (" + last_error + ")");

  MixFitResult result;
  result.params = std::move(best->params);
  result.report.family = skew ? "snmix" : "gmm";
  result.report.converged = best->converged;
  result.report.loglik_trace = std::move(best->trace);
  result.report.iterations = static_cast<int>(result.report.loglik_trace.size()) - 1;
  result.report.final_loglik = result.report.loglik_trace.back();
  result.report.guard_events = std::move(best->guards);
  result.report.guard_events.insert(result.report.guard_events.end(),
                                    outer_guards.begin(), outer_guards.end());
  result.report.restart_logliks = std::move(restart_lls);
  result.report.chosen_restart = best_restart;
  return result;
}

}  // namespace

Responsibilities posterior_class_probs(const StackedDataset& ds,
                                       const MixtureParams& params) {
  validate_mixture(params);
  const BlockDims d = ds.dims();
  if (params.dims() != d)
    throw ValidationError("posterior_class_probs: dimension mismatch");
  const auto dens_a = make_block_densities(params, xy_indices(d));
  const auto dens_b = make_block_densities(params, xz_indices(d));
  const Vector log_pi = params.pi.array().log();
  const int g = params.g();

  Responsibilities resp;
  resp.tau.resize(ds.n(), g);
  Vector logp(g);
  for (Index i = 0; i < ds.n(); ++i) {
    const Vector w = ds.observed_row(i);
    const auto& dens = ds.is_a_row(i) ? dens_a : dens_b;
    for (int h = 0; h < g; ++h)
      logp(h) = log_pi(h) + dens[static_cast<std::size_t>(h)].log_density(w);
    const double lse = logsumexp(logp);
    if (!std::isfinite(lse))
      throw NumericalError("posterior_class_probs: zero density at row " +
                           std::to_string(i));
    resp.tau.row(i) = (logp.array() - lse).exp();
  }
  return resp;
}

MixFitResult fit_gmm_matching(const StackedDataset& ds, int g, const EMConfig& config) {
  return fit_mixture(ds, g, config, /*skew=*/false);
}

MixFitResult fit_snmix_matching(const StackedDataset& ds, int g, const EMConfig& config) {
  return fit_mixture(ds, g, config, /*skew=*/true);
}

double observed_loglik(const StackedDataset& ds, const ModelParams& params) {
  return std::visit(
      overloaded{
          [&](const GaussianParams& p) { return gaussian_observed_loglik(ds, p); },
          [&](const SkewNormalParams& p) { return sn_observed_loglik(ds, p); },
          [&](const MixtureParams& p) {
            validate_mixture(p);
            const BlockDims d = ds.dims();
            if (p.dims() != d)
              throw ValidationError("observed_loglik: dimension mismatch");
            const auto dens_a = make_block_densities(p, xy_indices(d));
            const auto dens_b = make_block_densities(p, xz_indices(d));
            const Vector log_pi = p.pi.array().log();
            double ll = 0.0;
            Vector logp(p.g());
            for (Index i = 0; i < ds.n(); ++i) {
              const Vector w = ds.observed_row(i);
              const auto& dens = ds.is_a_row(i) ? dens_a : dens_b;
              for (int h = 0; h < p.g(); ++h)
                logp(h) = log_pi(h) + dens[static_cast<std::size_t>(h)].log_density(w);
              const double lse = logsumexp(logp);
              if (!std::isfinite(lse))
                throw NumericalError("observed_loglik: zero density at row " +
                                     std::to_string(i));
              ll += lse;
            }
            return ll;
          }},
      params);
}

Vector component_mean(const ComponentParams& comp) {
  return std::visit(overloaded{[](const GaussianParams& g) { return Vector(g.mu); },
                               [](const SkewNormalParams& s) { return sn_mean(s); }},
                    comp);
}

std::vector<int> best_label_permutation(const MixtureParams& fitted,
                                        const MixtureParams& reference) {
  if (fitted.g() != reference.g())
    throw ValidationError("best_label_permutation: component counts differ");
  std::vector<Vector> mf, mr;
  for (const auto& c : fitted.components) mf.push_back(component_mean(c));
  for (const auto& c : reference.components) mr.push_back(component_mean(c));
  return min_cost_permutation(mf, mr);
}

MixtureParams permute_components(const MixtureParams& params,
                                 const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != params.g())
    throw ValidationError("permute_components: bad permutation size");
  MixtureParams out;
  out.pi.resize(params.g());
  for (int h = 0; h < params.g(); ++h) {
    out.pi(h) = params.pi(perm[static_cast<std::size_t>(h)]);
    out.components.push_back(params.components[static_cast<std::size_t>(perm[static_cast<std::size_t>(h)])]);
  }
  return out;
}

LabelledSample sample_model(const ModelParams& params, Index n, std::uint64_t seed) {
  return std::visit(
      overloaded{
          [&](const GaussianParams& p) {
            return LabelledSample{gaussian_sample(p, n, seed),
                                  std::vector<int>(static_cast<std::size_t>(n), 0)};
          },
          [&](const SkewNormalParams& p) {
            return LabelledSample{sn_sample(p, n, seed),
                                  std::vector<int>(static_cast<std::size_t>(n), 0)};
          },
          [&](const MixtureParams& p) {
            validate_mixture(p);
            Rng rng(seed);
            const Index dim = p.dims().total();
            std::vector<MvnDensity> gauss;
            std::vector<Matrix> chols;
            const bool skew = p.family() == ModelFamily::snmix;
            for (const auto& comp : p.components) {
              if (skew)
                chols.push_back(psd_sqrt(std::get<SkewNormalParams>(comp).sigma));
              else
                gauss.emplace_back(std::get<GaussianParams>(comp).mu,
                                   std::get<GaussianParams>(comp).sigma);
            }
            LabelledSample out;
            out.values.resize(n, dim);
            out.labels.resize(static_cast<std::size_t>(n));
            std::vector<double> pi(p.pi.data(), p.pi.data() + p.g());
            Vector xi(dim);
            for (Index i = 0; i < n; ++i) {
              const int h = rng.categorical(pi);
              out.labels[static_cast<std::size_t>(i)] = h;
              if (skew) {
                const auto& c = std::get<SkewNormalParams>(p.components[static_cast<std::size_t>(h)]);
                const double u = std::abs(rng.normal());
                for (Index j = 0; j < dim; ++j) xi(j) = rng.normal();
                out.values.row(i) =
                    (c.mu + c.delta * u + chols[static_cast<std::size_t>(h)] * xi).transpose();
              } else {
                out.values.row(i) = gauss[static_cast<std::size_t>(h)].sample(rng).transpose();
              }
            }
            return out;
          }},
      params);
}

}  // namespace fusionkit
