// fusionkit: statistical matching (data fusion) of two datasets that share
// only a common X block. Subcommands: fit, impute, simulate, report.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fusionkit/csv.hpp"
#include "fusionkit/errors.hpp"
#include "fusionkit/gaussian.hpp"
#include "fusionkit/histogram.hpp"
#include "fusionkit/imputation.hpp"
#include "fusionkit/mixtures.hpp"
#include "fusionkit/model_io.hpp"
#include "fusionkit/scenarios.hpp"
#include "fusionkit/skew_normal.hpp"

namespace fk = fusionkit;

namespace {

void print_error(int code, const std::string& kind, const std::string& message) {
  nlohmann::json err{{"error", {{"code", code}, {"kind", kind}, {"message", message}}}};
  std::cerr << err.dump() << std::endl;
}

struct CommonDataOptions {
  std::string dataset_a;
  std::string dataset_b;
  std::vector<std::string> x_cols, y_cols, z_cols;

  void attach(CLI::App* cmd) {
    cmd->add_option("--dataset_a", dataset_a, "CSV with the X and Y columns")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--dataset_b", dataset_b, "CSV with the X and Z columns")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--x_cols", x_cols, "common X column names")->required();
    cmd->add_option("--y_cols", y_cols, "Y column names (dataset A only)")->required();
    cmd->add_option("--z_cols", z_cols, "Z column names (dataset B only)")->required();
  }

  fk::StackedDataset load() const {
    const fk::BlockSpec spec(x_cols, y_cols, z_cols);
    const fk::Matrix a = fk::load_csv(dataset_a, spec, fk::DatasetTag::A);
    const fk::Matrix b = fk::load_csv(dataset_b, spec, fk::DatasetTag::B);
    return fk::stack(a, b, spec);
  }
};

struct EmOptions {
  fk::EMConfig config;

  // A configurable nested subcommand maps to a [<cmd>.em] config section.
  void attach(CLI::App* cmd) {
    auto* em = cmd->add_subcommand("em", "EM settings ([<command>.em] config section)");
    em->configurable(true);
    em->add_option("--tol", config.tol, "relative log-likelihood tolerance");
    em->add_option("--max_iters", config.max_iters, "EM iteration cap");
    em->add_option("--n_restarts", config.n_restarts, "mixture restarts");
    em->add_option("--init_strategy", config.init_strategy,
                   "moments (single family) or kmeans (mixtures)");
  }
};

std::filesystem::path out_file(const std::string& out_dir, const std::string& name) {
  std::filesystem::create_directories(out_dir);
  return std::filesystem::path(out_dir) / name;
}

// ---------------------------------------------------------------------------

struct FitCommand {
  CommonDataOptions data;
  EmOptions em;
  std::string family = "gaussian";
  int g = 1;
  std::uint64_t seed = 0;
  std::string out_dir = ".";

  void attach(CLI::App* cmd) {
    data.attach(cmd);
    em.attach(cmd);
    cmd->add_option("--family", family, "gaussian | skew_normal | gmm | snmix")
        ->required();
    cmd->add_option("--g", g, "number of mixture components");
    cmd->add_option("--seed", seed, "RNG seed for EM restarts");
    cmd->add_option("--out", out_dir, "output directory");
  }

  void run() {
    const fk::StackedDataset ds = data.load();
    em.config.seed = seed;

    fk::ModelParams model = fk::GaussianParams{};
    fk::FitReport report;
    switch (fk::family_from_name(family)) {
      case fk::ModelFamily::gaussian: {
        const fk::GaussianParams params = fk::fit_gaussian(ds);
        report.family = "gaussian";
        report.converged = true;
        report.final_loglik = fk::gaussian_observed_loglik(ds, params);
        report.loglik_trace = {report.final_loglik};
        model = params;
        break;
      }
      case fk::ModelFamily::skew_normal: {
        auto fit = fk::fit_sn_em(ds, fk::sn_moment_init(ds), em.config);
        model = fit.params;
        report = std::move(fit.report);
        break;
      }
      case fk::ModelFamily::gmm: {
        auto fit = fk::fit_gmm_matching(ds, g, em.config);
        model = fit.params;
        report = std::move(fit.report);
        break;
      }
      case fk::ModelFamily::snmix: {
        auto fit = fk::fit_snmix_matching(ds, g, em.config);
        model = fit.params;
        report = std::move(fit.report);
        break;
      }
    }

    const auto model_path = out_file(out_dir, "model.json");
    const auto report_path = out_file(out_dir, "fit_report.json");
    fk::save_model(model_path.string(), model);
    fk::save_report(report_path.string(), report);
    std::cout << "wrote " << model_path.string() << "\n"
              << "wrote " << report_path.string() << "\n";
  }
};

struct ImputeCommand {
  CommonDataOptions data;
  std::string model_path;
  std::string method = "parametric";
  std::string draw_mode = "posterior_draw";
  std::string search = "kdtree";
  bool hard_assign = false;
  bool standardise_x = false;
  std::uint64_t seed = 0;
  int grid_bins = 60;
  std::string out_dir = ".";

  void attach(CLI::App* cmd) {
    data.attach(cmd);
    cmd->add_option("--model", model_path, "fitted model JSON (parametric method)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--method", method, "nn | parametric")->required();
    cmd->add_option("--draw_mode", draw_mode, "posterior_draw | conditional_mean");
    cmd->add_option("--search", search, "kdtree | brute (nn method)");
    cmd->add_flag("--hard_assign", hard_assign,
                  "mixtures: impute from the max-responsibility component");
    cmd->add_flag("--standardise_x", standardise_x,
                  "scale X by its pooled standard deviation before matching");
    cmd->add_option("--seed", seed, "RNG seed")->required();
    cmd->add_option("--grid_bins", grid_bins, "bins for the (Y,Z) histogram grid");
    cmd->add_option("--out", out_dir, "output directory");
  }

  void run() {
    const fk::StackedDataset ds = data.load();

    fk::ImputedDataset imputed;
    if (method == "nn") {
      fk::NNConfig cfg;
      cfg.standardise_x = standardise_x;
      if (search == "brute")
        cfg.search = fk::NNConfig::Search::brute;
      else if (search != "kdtree")
        throw fk::ValidationError("unknown search strategy: " + search);
      imputed = fk::impute_nn(ds, cfg);
    } else if (method == "parametric") {
      if (model_path.empty())
        throw fk::ValidationError("parametric imputation needs --model");
      const fk::ModelParams model = fk::load_model(model_path);
      fk::ImputationRequest req;
      req.seed = seed;
      req.draw_mode = fk::draw_mode_from_name(draw_mode);
      req.hard_assign = hard_assign;
      imputed = fk::impute_parametric(ds, model, req);
    } else {
      throw fk::ValidationError("unknown imputation method: " + method);
    }

    const auto csv_path = out_file(out_dir, "imputed.csv");
    fk::emit_csv(imputed, csv_path.string());

    const fk::SummaryTable summary = fk::summarize(imputed);
    fk::write_summary_csv(summary, out_file(out_dir, "summary.csv").string());
    fk::save_summary_json(out_file(out_dir, "summary.json").string(), summary);

    const fk::BlockDims dims = ds.dims();
    const fk::Vector y = imputed.values.col(dims.y_begin());
    const fk::Vector z = imputed.values.col(dims.z_begin());
    fk::write_grid_csv(fk::hist2d(y, z, grid_bins),
                       out_file(out_dir, "yz_grid.csv").string());

    std::cout << "wrote " << csv_path.string() << " (+provenance, summary, grid)\n"
              << "rho_yz = " << fk::format_double(summary.groups.front().rho_yz)
              << "\n";
  }
};

struct SimulateCommand {
  std::string scenario_name;
  std::string generator_model;
  fk::Index n_a = 500;
  fk::Index n_b = 500;
  int replications = 1;
  std::string fit_family = "gaussian";
  int fit_g = 1;
  bool no_nn = false;
  bool no_parametric = false;
  std::string draw_mode = "posterior_draw";
  int grid_bins = 60;
  int threads = 0;
  EmOptions em;
  std::uint64_t seed = 0;
  std::string out_dir = ".";

  void attach(CLI::App* cmd) {
    cmd->add_option("--scenario", scenario_name,
                    "builtin scenario name (sn-515, gmm-overlap)");
    cmd->add_option("--generator_model", generator_model,
                    "model JSON to generate from (custom scenarios)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--n_a", n_a, "rows in dataset A");
    cmd->add_option("--n_b", n_b, "rows in dataset B");
    cmd->add_option("--replications", replications, "replication count");
    cmd->add_option("--fit_family", fit_family, "model family to fit");
    cmd->add_option("--fit_g", fit_g, "mixture components to fit");
    cmd->add_flag("--no_nn", no_nn, "skip nearest-neighbour matching");
    cmd->add_flag("--no_parametric", no_parametric, "skip parametric imputation");
    cmd->add_option("--draw_mode", draw_mode, "posterior_draw | conditional_mean");
    cmd->add_option("--grid_bins", grid_bins, "bins for the output grids");
    cmd->add_option("--threads", threads, "0 = hardware concurrency");
    em.attach(cmd);
    cmd->add_option("--seed", seed, "base RNG seed")->required();
    cmd->add_option("--out", out_dir, "output directory");
  }

  void run() {
    fk::SimulationScenario scenario;
    if (!scenario_name.empty()) {
      scenario = fk::builtin_scenario(scenario_name);
      if (replications > 1) scenario.replications = replications;
    } else {
      if (generator_model.empty())
        throw fk::ValidationError("simulate needs --scenario or --generator_model");
      scenario.name = "custom";
      scenario.generator = fk::load_model(generator_model);
      scenario.n_a = n_a;
      scenario.n_b = n_b;
      scenario.replications = replications;
      scenario.fit_family = fk::family_from_name(fit_family);
      scenario.fit_g = fit_g;
    }
    scenario.include_nn = !no_nn;
    scenario.include_parametric = !no_parametric;
    scenario.draw_mode = fk::draw_mode_from_name(draw_mode);
    scenario.grid_bins = grid_bins;
    scenario.em = em.config;

    const fk::ScenarioResult result = fk::run_scenario(scenario, seed, threads);

    const auto results_path = out_file(out_dir, "results.csv");
    fk::write_results_csv(result.rows, results_path.string());
    for (const auto& [method, grid] : result.grids)
      fk::write_grid_csv(grid, out_file(out_dir, "grid_" + method + ".csv").string());

    const std::string report = fk::render_report(fk::aggregate_results(result.rows));
    std::ofstream report_out(out_file(out_dir, "report.txt"));
    report_out << report;
    std::cout << "wrote " << results_path.string() << "\n" << report;
  }
};

struct ReportCommand {
  std::string results_path;
  std::string out_dir = ".";

  void attach(CLI::App* cmd) {
    cmd->add_option("--results", results_path, "results CSV from simulate")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", out_dir, "output directory");
  }

  void run() {
    const auto rows = fk::read_results_csv(results_path);
    if (rows.empty()) throw fk::ValidationError("results file has no data rows");
    const std::string report = fk::render_report(fk::aggregate_results(rows));

    // Render any histogram grids sitting next to the results file.
    std::ostringstream grids;
    const auto dir = std::filesystem::path(results_path).parent_path();
    if (!dir.empty() && std::filesystem::exists(dir)) {
      for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("grid_", 0) == 0 && entry.path().extension() == ".csv") {
          const fk::CsvTable table = fk::read_csv_table(entry.path().string());
          grids << name << ": " << table.values.rows() << " cells, max density "
                << fk::format_double(table.values.col(2).maxCoeff()) << "\n";
        }
      }
    }

    std::ofstream out(out_file(out_dir, "report.txt"));
    out << report;
    if (!grids.str().empty()) out << "\ngrids:\n" << grids.str();
    std::cout << report;
    if (!grids.str().empty()) std::cout << "\ngrids:\n" << grids.str();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fusionkit: statistical matching of two partially observed datasets"};
  app.require_subcommand(1);
  // Config lives on the root app; fallthrough lets `fusionkit fit --config f`
  // reach it. Sections map to subcommands: [fit], [fit.em], [impute], ...
  app.fallthrough(true);
  app.set_config("--config", "",
                 "TOML config file with one section per subcommand");
  app.allow_config_extras(CLI::config_extras_mode::ignore);

  FitCommand fit;
  ImputeCommand impute;
  SimulateCommand simulate;
  ReportCommand report;

  auto* fit_cmd = app.add_subcommand("fit", "fit a matching model to two CSVs");
  fit_cmd->fallthrough(true);
  fit.attach(fit_cmd);

  auto* impute_cmd = app.add_subcommand("impute", "fill the missing blocks");
  impute_cmd->fallthrough(true);
  impute.attach(impute_cmd);

  auto* simulate_cmd = app.add_subcommand("simulate", "run a simulation study");
  simulate_cmd->fallthrough(true);
  simulate.attach(simulate_cmd);

  auto* report_cmd = app.add_subcommand("report", "aggregate a results CSV");
  report_cmd->fallthrough(true);
  report.attach(report_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error(2, "usage", e.what());
    return 2;
  }

  try {
    if (fit_cmd->parsed()) fit.run();
    if (impute_cmd->parsed()) impute.run();
    if (simulate_cmd->parsed()) simulate.run();
    if (report_cmd->parsed()) report.run();
    return 0;
  } catch (const fk::ValidationError& e) {
    print_error(2, "validation", e.what());
    return 2;
  } catch (const fk::NumericalError& e) {
    print_error(3, "numerical", e.what());
    return 3;
  } catch (const std::exception& e) {
    print_error(3, "internal", e.what());
    return 3;
  }
}
