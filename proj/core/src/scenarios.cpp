#include "fusionkit/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "fusionkit/csv.hpp"
#include "fusionkit/errors.hpp"
#include "fusionkit/gaussian.hpp"
#include "fusionkit/rng.hpp"
#include "fusionkit/skew_normal.hpp"

namespace fusionkit {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  return splitmix64(s);
}

double pearson(const Vector& a, const Vector& b) {
  const double ma = a.mean();
  const double mb = b.mean();
  const double cov = ((a.array() - ma) * (b.array() - mb)).sum();
  const double va = (a.array() - ma).square().sum();
  const double vb = (b.array() - mb).square().sum();
  const double denom = std::sqrt(va * vb);
  return denom > 0.0 ? cov / denom : 0.0;
}

GaussianParams make_gaussian(const BlockDims& dims, Vector mu, Matrix sigma) {
  GaussianParams p;
  p.dims = dims;
  p.mu = std::move(mu);
  p.sigma = std::move(sigma);
  return p;
}

struct RepOutput {
  std::vector<ResultRow> rows;
  // Pooled (first Y, first Z) points per method for the report grids.
  std::map<std::string, std::vector<std::pair<double, double>>> points;
};

void push_points(RepOutput& out, const std::string& method, const Matrix& values,
                 const BlockDims& d) {
  auto& v = out.points[method];
  for (Index i = 0; i < values.rows(); ++i)
    v.emplace_back(values(i, d.y_begin()), values(i, d.z_begin()));
}

RepOutput run_replication(const SimulationScenario& sc, int rep, std::uint64_t seed) {
  RepOutput out;
  const BlockDims d = model_dims(sc.generator);
  const std::uint64_t base = seed;
  const auto stream = [&](std::uint64_t k) {
    return derive_seed(base, static_cast<std::uint64_t>(rep) * 16 + k);
  };

  const LabelledSample gen = sample_model(sc.generator, sc.n_a + sc.n_b, stream(0));
  out.rows.push_back({rep, "truth", "rho_yz",
                      pearson(gen.values.col(d.y_begin()), gen.values.col(d.z_begin()))});
  push_points(out, "truth", gen.values, d);

  const BlockSpec spec = default_block_spec(d);
  Matrix table_a(sc.n_a, d.x + d.y);
  table_a = gen.values.topRows(sc.n_a).leftCols(d.x + d.y);
  Matrix table_b(sc.n_b, d.x + d.z);
  table_b.leftCols(d.x) = gen.values.bottomRows(sc.n_b).leftCols(d.x);
  table_b.rightCols(d.z) = gen.values.bottomRows(sc.n_b).rightCols(d.z);
  const StackedDataset ds = stack(table_a, table_b, spec);

  if (sc.include_nn) {
    try {
      const ImputedDataset imp = impute_nn(ds);
      out.rows.push_back({rep, "nn", "rho_yz", summarize(imp).groups.front().rho_yz});
      if (std::holds_alternative<MixtureParams>(sc.generator)) {
        Index mismatches = 0;
        for (Index i = 0; i < imp.n(); ++i) {
          const Index donor = imp.donor[static_cast<std::size_t>(i)];
          if (gen.labels[static_cast<std::size_t>(donor)] !=
              gen.labels[static_cast<std::size_t>(i)])
            ++mismatches;
        }
        out.rows.push_back({rep, "nn", "cross_component_rate",
                            static_cast<double>(mismatches) / static_cast<double>(imp.n())});
      }
      push_points(out, "nn", imp.values, d);
    } catch (const std::exception&) {
      out.rows.push_back({rep, "nn", "error", 1.0});
    }
  }

  if (!sc.include_parametric) return out;

  ModelParams fitted = sc.generator;  // placeholder, replaced below
  try {
    EMConfig em = sc.em;
    em.seed = stream(1);
    switch (sc.fit_family) {
      case ModelFamily::gaussian:
        fitted = fit_gaussian(ds);
        break;
      case ModelFamily::skew_normal: {
        const SnFitResult fit = fit_sn_em(ds, sn_moment_init(ds), em);
        fitted = fit.params;
        out.rows.push_back({rep, "fit", "final_loglik", fit.report.final_loglik});
        out.rows.push_back({rep, "fit", "iterations",
                            static_cast<double>(fit.report.iterations)});
        break;
      }
      case ModelFamily::gmm:
      case ModelFamily::snmix: {
        const MixFitResult fit = (sc.fit_family == ModelFamily::gmm)
                                     ? fit_gmm_matching(ds, sc.fit_g, em)
                                     : fit_snmix_matching(ds, sc.fit_g, em);
        fitted = fit.params;
        out.rows.push_back({rep, "fit", "final_loglik", fit.report.final_loglik});
        out.rows.push_back({rep, "fit", "iterations",
                            static_cast<double>(fit.report.iterations)});
        break;
      }
    }
  } catch (const std::exception&) {
    out.rows.push_back({rep, "fit", "error", 1.0});
    return out;
  }

  try {
    ImputationRequest req;
    req.seed = stream(2);
    req.draw_mode = sc.draw_mode;
    const ImputedDataset imp = impute_parametric(ds, fitted, req);
    out.rows.push_back({rep, "parametric", "rho_yz", summarize(imp).groups.front().rho_yz});

    const auto* fitted_mix = std::get_if<MixtureParams>(&fitted);
    const auto* gen_mix = std::get_if<MixtureParams>(&sc.generator);
    if (fitted_mix != nullptr && gen_mix != nullptr &&
        fitted_mix->g() == gen_mix->g() && req.draw_mode == DrawMode::posterior_draw) {
      // Map fitted component labels onto generator labels before comparing.
      const auto perm = best_label_permutation(*fitted_mix, *gen_mix);
      std::vector<int> to_generator(perm.size(), 0);
      for (std::size_t h = 0; h < perm.size(); ++h)
        to_generator[static_cast<std::size_t>(perm[h])] = static_cast<int>(h);
      Index mismatches = 0;
      for (Index i = 0; i < imp.n(); ++i) {
        const int drawn = imp.component_draw[static_cast<std::size_t>(i)];
        if (drawn < 0) continue;
        if (to_generator[static_cast<std::size_t>(drawn)] !=
            gen.labels[static_cast<std::size_t>(i)])
          ++mismatches;
      }
      out.rows.push_back({rep, "parametric", "cross_component_rate",
                          static_cast<double>(mismatches) / static_cast<double>(imp.n())});
    }
    push_points(out, "parametric", imp.values, d);
  } catch (const std::exception&) {
    out.rows.push_back({rep, "parametric", "error", 1.0});
  }
  return out;
}

}  // namespace

SimulationScenario builtin_scenario(const std::string& name) {
  const BlockDims d{1, 1, 1};
  if (name == "sn-515") {
    SkewNormalParams gen;
    gen.dims = d;
    gen.mu = Vector::Zero(3);
    gen.sigma = Matrix::Identity(3, 3);
    gen.delta = Vector(3);
    gen.delta << 1.0, 3.0, 5.0;

    SimulationScenario sc;
    sc.name = name;
    sc.generator = gen;
    sc.n_a = 500;
    sc.n_b = 500;
    sc.replications = 20;
    sc.fit_family = ModelFamily::skew_normal;
    return sc;
  }
  if (name == "gmm-overlap") {
    Vector mu1(3), mu2(3);
    mu1 << -0.1, 0.0, 0.0;
    mu2 << 0.1, 1.0, 1.0;
    const Matrix cov = 0.01 * Matrix::Identity(3, 3);
    MixtureParams gen;
    gen.pi = Vector::Constant(2, 0.5);
    gen.components.emplace_back(make_gaussian(d, mu1, cov));
    gen.components.emplace_back(make_gaussian(d, mu2, cov));

    SimulationScenario sc;
    sc.name = name;
    sc.generator = gen;
    sc.n_a = 500;
    sc.n_b = 500;
    sc.replications = 20;
    sc.fit_family = ModelFamily::gmm;
    sc.fit_g = 2;
    sc.em.n_restarts = 5;
    return sc;
  }
  throw ValidationError("unknown builtin scenario: " + name +
                        " (available: sn-515, gmm-overlap)");
}

std::vector<std::string> builtin_scenario_names() { return {"sn-515", "gmm-overlap"}; }

ScenarioResult run_scenario(const SimulationScenario& scenario, std::uint64_t seed,
                            int threads) {
  if (scenario.replications < 1)
    throw ValidationError("run_scenario: replication count must be >= 1");
  if (model_dims(scenario.generator).total() < 3)
    throw ValidationError("run_scenario: generator must span X, Y and Z");

  const int reps = scenario.replications;
  std::vector<RepOutput> outputs(static_cast<std::size_t>(reps));
  int workers = threads > 0 ? threads
                            : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, reps);

  if (workers == 1) {
    for (int rep = 0; rep < reps; ++rep)
      outputs[static_cast<std::size_t>(rep)] = run_replication(scenario, rep, seed);
  } else {
    std::atomic<int> next{0};
    std::vector<std::future<void>> futs;
    for (int t = 0; t < workers; ++t) {
      futs.push_back(std::async(std::launch::async, [&] {
        for (;;) {
          const int rep = next.fetch_add(1);
          if (rep >= reps) return;
          outputs[static_cast<std::size_t>(rep)] = run_replication(scenario, rep, seed);
        }
      }));
    }
    for (auto& f : futs) f.get();
  }

  ScenarioResult result;
  for (const auto& out : outputs)
    result.rows.insert(result.rows.end(), out.rows.begin(), out.rows.end());

  // Pool (Y, Z) points per method over replications; shared axis range keeps
  // the grids comparable across methods.
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> pooled;
  double lo_y = 0, hi_y = 0, lo_z = 0, hi_z = 0;
  bool first = true;
  for (const auto& out : outputs) {
    for (const auto& [method, pts] : out.points) {
      auto& [ys, zs] = pooled[method];
      for (const auto& [y, z] : pts) {
        ys.push_back(y);
        zs.push_back(z);
        if (first) {
          lo_y = hi_y = y;
          lo_z = hi_z = z;
          first = false;
        } else {
          lo_y = std::min(lo_y, y);
          hi_y = std::max(hi_y, y);
          lo_z = std::min(lo_z, z);
          hi_z = std::max(hi_z, z);
        }
      }
    }
  }
  for (const auto& [method, yz] : pooled) {
    const auto& [ys, zs] = yz;
    const Vector y = Eigen::Map<const Vector>(ys.data(), static_cast<Index>(ys.size()));
    const Vector z = Eigen::Map<const Vector>(zs.data(), static_cast<Index>(zs.size()));
    result.grids.emplace(method,
                         hist2d(y, z, scenario.grid_bins, lo_y, hi_y, lo_z, hi_z));
  }
  return result;
}

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open file for writing: " + path);
  out << "replication,method,statistic,value\n";
  for (const auto& row : rows)
    out << row.replication << "," << row.method << "," << row.statistic << ","
        << format_double(row.value) << "\n";
  if (!out) throw ValidationError("I/O failure while writing: " + path);
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open results file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("empty results file: " + path);
  if (line.find("replication,method,statistic,value") != 0)
    throw ValidationError("results CSV schema mismatch in " + path);
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string rep, method, statistic, value;
    if (!std::getline(ss, rep, ',') || !std::getline(ss, method, ',') ||
        !std::getline(ss, statistic, ',') || !std::getline(ss, value))
      throw ValidationError("results CSV parse failure at line " +
                            std::to_string(line_no) + " in " + path);
    try {
      rows.push_back({std::stoi(rep), method, statistic, std::stod(value)});
    } catch (const std::exception&) {
      throw ValidationError("results CSV parse failure at line " +
                            std::to_string(line_no) + " in " + path);
    }
    ++line_no;
  }
  return rows;
}

std::vector<AggregateRow> aggregate_results(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw ValidationError("aggregate_results: no rows");
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& row : rows) groups[{row.method, row.statistic}].push_back(row.value);

  const auto quantile = [](std::vector<double>& v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * (static_cast<double>(v.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
  };

  std::vector<AggregateRow> out;
  for (auto& [key, values] : groups) {
    AggregateRow row;
    row.method = key.first;
    row.statistic = key.second;
    row.n = static_cast<int>(values.size());
    row.median = quantile(values, 0.5);
    row.q1 = quantile(values, 0.25);
    row.q3 = quantile(values, 0.75);
    out.push_back(std::move(row));
  }
  return out;
}

std::string render_report(const std::vector<AggregateRow>& rows) {
  std::ostringstream out;
  out << "method        statistic                 median        q1        q3    n\n";
  out << "---------------------------------------------------------------------\n";
  char buf[160];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%-13s %-22s %9.4f %9.4f %9.4f %4d\n",
                  row.method.c_str(), row.statistic.c_str(), row.median, row.q1,
                  row.q3, row.n);
    out << buf;
  }
  return out.str();
}

double median_of(const std::vector<ResultRow>& rows, const std::string& method,
                 const std::string& statistic) {
  std::vector<double> values;
  for (const auto& row : rows)
    if (row.method == method && row.statistic == statistic) values.push_back(row.value);
  if (values.empty())
    throw ValidationError("median_of: no rows for " + method + "/" + statistic);
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace fusionkit
