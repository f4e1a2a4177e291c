#pragma once

#include <map>
#include <string>
#include <vector>

#include "fusionkit/em_config.hpp"
#include "fusionkit/histogram.hpp"
#include "fusionkit/imputation.hpp"
#include "fusionkit/mixtures.hpp"

namespace fusionkit {

/// One simulation design: generate, split, fit, impute, summarise.
struct SimulationScenario {
  std::string name;
  ModelParams generator;
  Index n_a = 0;
  Index n_b = 0;
  int replications = 1;
  ModelFamily fit_family = ModelFamily::gaussian;
  int fit_g = 1;
  EMConfig em;
  bool include_nn = true;
  bool include_parametric = true;
  DrawMode draw_mode = DrawMode::posterior_draw;
  int grid_bins = 60;
};

/// Named presets: "sn-515" (skew-normal, mu=0, Sigma=I, delta=(1,3,5),
/// n_A=n_B=500, 20 replications) and "gmm-overlap" (two equally weighted
/// Gaussian components, means (-0.1,0,0) and (0.1,1,1), covariance 0.01 I,
/// n_A=n_B=500, 20 replications).
SimulationScenario builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

struct ResultRow {
  int replication = 0;
  std::string method;     // "truth", "fit", "nn", "parametric", ...
  std::string statistic;  // "rho_yz", "cross_component_rate", ...
  double value = 0.0;
};

struct ScenarioResult {
  std::vector<ResultRow> rows;
  /// Pooled (first-Y, first-Z) histograms across replications, keyed by
  /// "truth" / "nn" / "parametric".
  std::map<std::string, HistGrid> grids;
};

/// Runs all replications (in parallel when threads != 1) with per-replication
/// derived seeds; output ordering is by replication index either way. A
/// failing replication contributes an "error" row and the run continues.
ScenarioResult run_scenario(const SimulationScenario& scenario, std::uint64_t seed,
                            int threads = 0);

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path);
std::vector<ResultRow> read_results_csv(const std::string& path);

struct AggregateRow {
  std::string method;
  std::string statistic;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  int n = 0;
};

std::vector<AggregateRow> aggregate_results(const std::vector<ResultRow>& rows);

/// Human-readable table, one line per (method, statistic).
std::string render_report(const std::vector<AggregateRow>& rows);

double median_of(const std::vector<ResultRow>& rows, const std::string& method,
                 const std::string& statistic);

}  // namespace fusionkit
