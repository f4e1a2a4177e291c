#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fusionkit/block_spec.hpp"
#include "fusionkit/types.hpp"

namespace fusionkit {

/// Per-cell provenance tag.
enum class CellTag : std::uint8_t { observed, nn, parametric };

/// The stacked n x d matrix: rows 1..n_A come from dataset A (X, Y observed,
/// Z missing), rows n_A+1..n from dataset B (X, Z observed, Y missing).
/// Missing cells hold 0.0 and are identified by the mask, never by sentinels.
/// Immutable after construction; safe to share across threads.
class StackedDataset {
 public:
  StackedDataset() = default;

  const Matrix& values() const { return values_; }
  Index n() const { return values_.rows(); }
  Index n_a() const { return n_a_; }
  Index n_b() const { return n_b_; }
  const BlockSpec& spec() const { return spec_; }
  BlockDims dims() const { return spec_.dims(); }

  bool observed(Index row, Index col) const { return mask_(row, col) != 0; }
  bool is_a_row(Index row) const { return row < n_a_; }
  /// Column-sum of missing cells for one column.
  Index missing_count(Index col) const;

  // Observed blocks (canonical column order makes these contiguous).
  Eigen::Block<const Matrix> x_all() const;   // n x d_X
  Eigen::Block<const Matrix> x_a() const;     // n_A x d_X
  Eigen::Block<const Matrix> x_b() const;     // n_B x d_X
  Eigen::Block<const Matrix> y_a() const;     // n_A x d_Y
  Eigen::Block<const Matrix> z_b() const;     // n_B x d_Z

  /// Observed sub-vector of one row: (x, y) for A rows, (x, z) for B rows.
  Vector observed_row(Index row) const;

  /// Recover the original A-table (n_A x (d_X+d_Y)) and B-table.
  Matrix unstack_a() const;
  Matrix unstack_b() const;

  friend StackedDataset stack(const Matrix& dataset_a, const Matrix& dataset_b,
                              const BlockSpec& spec);

 private:
  Matrix values_;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> mask_;
  Index n_a_ = 0;
  Index n_b_ = 0;
  BlockSpec spec_;
};

/// Combine an A-table (columns X then Y, canonical order) and a B-table
/// (columns X then Z) into the stacked layout. Throws ValidationError on
/// dimension mismatch, empty inputs, or non-finite values.
StackedDataset stack(const Matrix& dataset_a, const Matrix& dataset_b,
                     const BlockSpec& spec);

/// A completed matrix plus provenance of every filled cell.
struct ImputedDataset {
  Matrix values;                    // n x d, fully observed
  std::vector<CellTag> row_tag;     // tag of the imputed block in each row
  std::vector<Index> donor;         // per-row donor row index, -1 if none
  std::vector<int> component_draw;  // mixture component drawn per row, -1 if none
  BlockSpec spec;
  Index n_a = 0;
  Index n_b = 0;
  std::string method;      // "nn" or "parametric"
  std::string family;      // model family for parametric runs, empty for nn
  std::uint64_t seed = 0;
  std::string draw_mode;   // "posterior_draw" or "conditional_mean", empty for nn

  Index n() const { return values.rows(); }
  /// Tag of an individual cell (observed cells always report observed).
  CellTag cell_tag(Index row, Index col) const;
  /// Column range filled in this row: Z for A rows, Y for B rows.
  bool cell_imputed(Index row, Index col) const;
};

}  // namespace fusionkit
