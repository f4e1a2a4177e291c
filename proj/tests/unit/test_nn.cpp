#include <doctest.h>

#include <cmath>

#include "fusionkit/dataset.hpp"
#include "fusionkit/imputation.hpp"
#include "fusionkit/nn_index.hpp"
#include "fusionkit/rng.hpp"

using namespace fusionkit;

namespace {

/// Plain O(n^2) scan written out longhand; the independent check for both
/// search strategies.
Index scan_oracle(const Matrix& donors, const Eigen::RowVectorXd& q) {
  Index best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < donors.rows(); ++k) {
    double d2 = 0.0;
    for (Index j = 0; j < q.size(); ++j) {
      const double diff = q(j) - donors(k, j);
      d2 += diff * diff;
    }
    if (d2 < best_d) {
      best_d = d2;
      best = k;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("single donors match mutually regardless of distance") {
  Matrix a(1, 2), b(1, 2);
  a << 0.0, 5.0;
  b << 100.0, -3.0;
  const StackedDataset ds = stack(a, b, default_block_spec({1, 1, 1}));
  const ImputedDataset imp = impute_nn(ds);
  CHECK(imp.donor[0] == 1);
  CHECK(imp.donor[1] == 0);
  CHECK(imp.values(0, 2) == -3.0);
  CHECK(imp.values(1, 1) == 5.0);
}

TEST_CASE("exact x match wins, ties break to the lowest donor index") {
  Matrix a(1, 2), b(4, 2);
  a << 1.0, 9.0;
  b << 0.0, 1.0,
       1.0, 2.0,
       1.0, 3.0,
       2.0, 4.0;
  const StackedDataset ds = stack(a, b, default_block_spec({1, 1, 1}));
  for (auto search : {NNConfig::Search::brute, NNConfig::Search::kdtree}) {
    NNConfig cfg;
    cfg.search = search;
    const ImputedDataset imp = impute_nn(ds, cfg);
    CHECK(imp.donor[0] == 1 + 1);  // global index of the first exact match
    CHECK(imp.values(0, 2) == 2.0);
  }
}

TEST_CASE("50x50 donors agree with the exhaustive scan oracle") {
  Rng rng(42);
  const Matrix a = rng.normal_matrix(50, 3);  // d_X = 2
  const Matrix b = rng.normal_matrix(50, 3);
  const BlockSpec spec = default_block_spec({2, 1, 1});
  const StackedDataset ds = stack(a, b, spec);
  const ImputedDataset imp = impute_nn(ds);

  const Matrix x_a = ds.x_a();
  const Matrix x_b = ds.x_b();
  for (Index i = 0; i < 50; ++i)
    CHECK(imp.donor[static_cast<std::size_t>(i)] == 50 + scan_oracle(x_b, x_a.row(i)));
  for (Index i = 0; i < 50; ++i)
    CHECK(imp.donor[static_cast<std::size_t>(50 + i)] == scan_oracle(x_a, x_b.row(i)));
}

TEST_CASE("kd-tree and brute force return identical donors, duplicates included") {
  Rng rng(43);
  for (int rep = 0; rep < 12; ++rep) {
    const Index n = 20 + static_cast<Index>(rng.uniform() * 300);
    const Index d = 1 + static_cast<Index>(rng.uniform() * 3);
    Matrix donors = rng.normal_matrix(n, d);
    // Coarse rounding manufactures many exact ties.
    donors = (donors * 2.0).array().round() / 2.0;
    const KdTree tree(donors);
    for (int q = 0; q < 60; ++q) {
      Eigen::RowVectorXd query(d);
      for (Index j = 0; j < d; ++j)
        query(j) = std::round(2.0 * rng.normal() * 2.0) / 2.0;
      const NnResult via_tree = tree.nearest(query);
      const NnResult via_scan = nn_brute(donors, query);
      CHECK(via_tree.index == via_scan.index);
      CHECK(via_tree.dist2 == via_scan.dist2);
    }
  }
}

TEST_CASE("hot-deck property: imputed values come from the donor pool, observed cells intact") {
  Rng rng(44);
  const Matrix a = rng.normal_matrix(40, 2);
  const Matrix b = rng.normal_matrix(30, 2);
  const StackedDataset ds = stack(a, b, default_block_spec({1, 1, 1}));
  const ImputedDataset imp = impute_nn(ds);

  for (Index i = 0; i < ds.n(); ++i) {
    for (Index j = 0; j < 3; ++j)
      if (ds.observed(i, j)) CHECK(imp.values(i, j) == ds.values()(i, j));
    const Index donor = imp.donor[static_cast<std::size_t>(i)];
    if (i < 40) {
      CHECK(donor >= 40);
      CHECK(imp.values(i, 2) == ds.values()(donor, 2));
    } else {
      CHECK(donor < 40);
      CHECK(imp.values(i, 1) == ds.values()(donor, 1));
    }
  }
}

TEST_CASE("standardisation changes the metric only when scales differ") {
  Rng rng(45);
  Matrix a(3, 3), b(3, 3);
  // First X dimension lives on a huge scale; donor choice flips when it is
  // standardised away.
  a << 1000.0, 0.0, 0.0,
       2000.0, 1.0, 0.0,
       3000.0, 2.0, 0.0;
  b << 1100.0, 0.0, 1.0,
       2900.0, 0.1, 2.0,
       1050.0, 50.0, 3.0;
  const BlockSpec spec = default_block_spec({2, 1, 1});
  const StackedDataset ds = stack(a, b, spec);

  NNConfig raw;
  const ImputedDataset imp_raw = impute_nn(ds, raw);
  NNConfig scaled;
  scaled.standardise_x = true;
  const ImputedDataset imp_scaled = impute_nn(ds, scaled);
  // Row 0 of A: raw distance is dominated by the first coordinate.
  CHECK(imp_raw.donor[0] == 3 + 2);
  // After standardising, the second coordinate matters again.
  CHECK(imp_scaled.donor[0] == 3 + 0);
}

TEST_CASE("empty donor pool impossible by construction, single-row pools fine") {
  Matrix donors(1, 1);
  donors << 5.0;
  const KdTree tree(donors);
  Eigen::RowVectorXd q(1);
  q << -100.0;
  CHECK(tree.nearest(q).index == 0);
}
