#pragma once

#include <variant>
#include <vector>

#include "fusionkit/dataset.hpp"
#include "fusionkit/em_config.hpp"
#include "fusionkit/gaussian.hpp"
#include "fusionkit/skew_normal.hpp"
#include "fusionkit/types.hpp"

namespace fusionkit {

using ComponentParams = std::variant<GaussianParams, SkewNormalParams>;

/// Finite mixture over a single component family, with the component-wise
/// identification restriction Sigma_YZ^(h) = Sigma_YX^(h)[Sigma_XX^(h)]^{-1}Sigma_XZ^(h)
/// enforced on every fitted component.
struct MixtureParams {
  Vector pi;
  std::vector<ComponentParams> components;

  int g() const { return static_cast<int>(components.size()); }
  BlockDims dims() const;
  ModelFamily family() const;  // gmm or snmix
};

/// Any model the engine can fit, impute from, or serialise.
using ModelParams = std::variant<GaussianParams, SkewNormalParams, MixtureParams>;

ModelFamily model_family(const ModelParams& params);
BlockDims model_dims(const ModelParams& params);
/// Largest component-wise identification-restriction gap (see constraint_gap).
double model_constraint_gap(const ModelParams& params);

/// Posterior class probabilities tau_{i,h}. Row i uses the (X,Y) marginal
/// component densities when i < n_A and the (X,Z) marginal otherwise,
/// weighted by the mixing proportions; computed in log space.
struct Responsibilities {
  Matrix tau;  // n x g, rows sum to 1
};
Responsibilities posterior_class_probs(const StackedDataset& ds,
                                       const MixtureParams& params);

struct MixFitResult {
  MixtureParams params;
  FitReport report;
};

MixFitResult fit_gmm_matching(const StackedDataset& ds, int g, const EMConfig& config);
MixFitResult fit_snmix_matching(const StackedDataset& ds, int g, const EMConfig& config);

/// Observed-data log-likelihood for any model family: sum over A rows of the
/// log marginal (X,Y) density plus over B rows of the log marginal (X,Z) density.
double observed_loglik(const StackedDataset& ds, const ModelParams& params);

Vector component_mean(const ComponentParams& comp);

/// Permutation p minimising total squared distance between component means,
/// fitted.components[p[h]] matched to reference.components[h].
/// For comparing fits across label switchings; never used inside fitting.
std::vector<int> best_label_permutation(const MixtureParams& fitted,
                                        const MixtureParams& reference);
MixtureParams permute_components(const MixtureParams& params,
                                 const std::vector<int>& perm);

/// n draws from any model; mixture draws also report the component labels
/// (all zero for single-family models).
struct LabelledSample {
  Matrix values;
  std::vector<int> labels;
};
LabelledSample sample_model(const ModelParams& params, Index n, std::uint64_t seed);

}  // namespace fusionkit
