#include "fusionkit/dataset.hpp"

#include <cmath>

#include "fusionkit/errors.hpp"

namespace fusionkit {

StackedDataset stack(const Matrix& dataset_a, const Matrix& dataset_b,
                     const BlockSpec& spec) {
  const BlockDims d = spec.dims();
  if (dataset_a.rows() == 0 || dataset_b.rows() == 0)
    throw ValidationError("stack: both datasets must be non-empty");
  if (dataset_a.cols() != d.x + d.y)
    throw ValidationError("stack: dataset A must have d_X + d_Y columns");
  if (dataset_b.cols() != d.x + d.z)
    throw ValidationError("stack: dataset B must have d_X + d_Z columns");
  if (!dataset_a.allFinite() || !dataset_b.allFinite())
    throw ValidationError("stack: observed values must be finite");

  StackedDataset ds;
  ds.spec_ = spec;
  ds.n_a_ = dataset_a.rows();
  ds.n_b_ = dataset_b.rows();
  const Index n = ds.n_a_ + ds.n_b_;
  ds.values_ = Matrix::Zero(n, d.total());
  ds.mask_.setZero(n, d.total());

  ds.values_.topLeftCorner(ds.n_a_, d.x + d.y) = dataset_a;
  ds.values_.block(ds.n_a_, 0, ds.n_b_, d.x) = dataset_b.leftCols(d.x);
  ds.values_.block(ds.n_a_, d.z_begin(), ds.n_b_, d.z) = dataset_b.rightCols(d.z);

  ds.mask_.topLeftCorner(ds.n_a_, d.x + d.y).setConstant(1);
  ds.mask_.block(ds.n_a_, 0, ds.n_b_, d.x).setConstant(1);
  ds.mask_.block(ds.n_a_, d.z_begin(), ds.n_b_, d.z).setConstant(1);
  return ds;
}

Index StackedDataset::missing_count(Index col) const {
  Index count = 0;
  for (Index i = 0; i < n(); ++i)
    if (!observed(i, col)) ++count;
  return count;
}

Eigen::Block<const Matrix> StackedDataset::x_all() const {
  return values_.block(0, 0, n(), dims().x);
}
Eigen::Block<const Matrix> StackedDataset::x_a() const {
  return values_.block(0, 0, n_a_, dims().x);
}
Eigen::Block<const Matrix> StackedDataset::x_b() const {
  return values_.block(n_a_, 0, n_b_, dims().x);
}
Eigen::Block<const Matrix> StackedDataset::y_a() const {
  const auto d = dims();
  return values_.block(0, d.y_begin(), n_a_, d.y);
}
Eigen::Block<const Matrix> StackedDataset::z_b() const {
  const auto d = dims();
  return values_.block(n_a_, d.z_begin(), n_b_, d.z);
}

Vector StackedDataset::observed_row(Index row) const {
  const auto d = dims();
  Vector out(is_a_row(row) ? d.x + d.y : d.x + d.z);
  if (is_a_row(row)) {
    out = values_.row(row).head(d.x + d.y).transpose();
  } else {
    out.head(d.x) = values_.row(row).head(d.x).transpose();
    out.tail(d.z) = values_.row(row).segment(d.z_begin(), d.z).transpose();
  }
  return out;
}

Matrix StackedDataset::unstack_a() const {
  return values_.topLeftCorner(n_a_, dims().x + dims().y);
}

Matrix StackedDataset::unstack_b() const {
  const auto d = dims();
  Matrix out(n_b_, d.x + d.z);
  out.leftCols(d.x) = values_.block(n_a_, 0, n_b_, d.x);
  out.rightCols(d.z) = values_.block(n_a_, d.z_begin(), n_b_, d.z);
  return out;
}

CellTag ImputedDataset::cell_tag(Index row, Index col) const {
  return cell_imputed(row, col) ? row_tag[static_cast<std::size_t>(row)]
                                : CellTag::observed;
}

bool ImputedDataset::cell_imputed(Index row, Index col) const {
  const BlockDims d = spec.dims();
  if (row < n_a) return col >= d.z_begin();
  return col >= d.y_begin() && col < d.z_begin();
}

}  // namespace fusionkit
