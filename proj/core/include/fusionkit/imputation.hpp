#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fusionkit/dataset.hpp"
#include "fusionkit/mixtures.hpp"
#include "fusionkit/types.hpp"

namespace fusionkit {

/// Nearest-neighbour matching configuration. The metric is squared Euclidean
/// distance on the X block and ties go to the lowest donor index; both are
/// fixed. X is matched on raw coordinates unless standardise_x is set.
struct NNConfig {
  enum class Search { brute, kdtree };
  Search search = Search::kdtree;
  bool standardise_x = false;
};

enum class DrawMode { posterior_draw, conditional_mean };

const char* draw_mode_name(DrawMode mode);
DrawMode draw_mode_from_name(const std::string& name);

struct ImputationRequest {
  std::uint64_t seed = 0;
  DrawMode draw_mode = DrawMode::posterior_draw;
  /// Mixtures only: assign each row to its max-responsibility component
  /// instead of sampling the component from the responsibilities.
  bool hard_assign = false;
};

/// Hot-deck matching: each A row's Z is copied from the X-nearest B row and
/// each B row's Y from the X-nearest A row. Donation is with replacement.
ImputedDataset impute_nn(const StackedDataset& ds, const NNConfig& cfg = {});

/// Model-based imputation from the fitted conditionals. Each row uses its own
/// RNG stream derived from (seed, row), so results do not depend on traversal
/// order. The model must satisfy the identification restriction.
ImputedDataset impute_parametric(const StackedDataset& ds, const ModelParams& model,
                                 const ImputationRequest& request);

/// Draws from the limiting nearest-neighbour imputation distribution for a
/// skew-normal model: X from its marginal, then two independent latent
/// scaling variables feed Y | X and Z | X separately.
Matrix asymptotic_nn_sample_sn(const SkewNormalParams& params, Index n,
                               std::uint64_t seed);

/// Mixture analogue: X from the mixture X-marginal, then component indicators
/// S, T drawn i.i.d. from the posterior weights tau(x); Y comes from component
/// S and Z from component T.
struct MixtureAsymptoticSample {
  Matrix values;
  std::vector<int> s;  // component used for Y
  std::vector<int> t;  // component used for Z
};
MixtureAsymptoticSample asymptotic_nn_sample_mixture(const MixtureParams& params,
                                                     Index n, std::uint64_t seed);

struct SummaryGroup {
  std::string group;
  Index n = 0;
  double rho_yz = 0.0;  // Pearson correlation of the first Y and first Z column
  Vector mean;
  Matrix cov;
};

struct SummaryTable {
  std::vector<SummaryGroup> groups;  // "all" first, then one per label value
};

/// Correlation and block moments of a completed dataset, optionally split by
/// integer group labels (one per row). Groups need at least 3 rows.
SummaryTable summarize(const ImputedDataset& imputed,
                       const std::vector<int>* labels = nullptr);

/// CSV with columns (group, rho_yz, n).
void write_summary_csv(const SummaryTable& table, const std::string& path);

}  // namespace fusionkit
