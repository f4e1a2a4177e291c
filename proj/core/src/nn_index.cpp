#include "fusionkit/nn_index.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "fusionkit/errors.hpp"

namespace fusionkit {

double nn_dist2(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  double d2 = 0.0;
  for (Index j = 0; j < a.size(); ++j) {
    const double diff = a(j) - b(j);
    d2 += diff * diff;
  }
  return d2;
}

namespace {

inline void consider(NnResult& best, Index idx, double d2) {
  if (d2 < best.dist2 || (d2 == best.dist2 && idx < best.index)) {
    best.index = idx;
    best.dist2 = d2;
  }
}

}  // namespace

NnResult nn_brute(const Matrix& donors, const Eigen::RowVectorXd& query) {
  if (donors.rows() == 0) throw ValidationError("nearest neighbour: empty donor pool");
  NnResult best{-1, std::numeric_limits<double>::infinity()};
  for (Index k = 0; k < donors.rows(); ++k)
    consider(best, k, nn_dist2(query, donors.row(k)));
  return best;
}

KdTree::KdTree(Matrix donors) : donors_(std::move(donors)) {
  if (donors_.rows() == 0) throw ValidationError("KdTree: empty donor pool");
  order_.resize(static_cast<std::size_t>(donors_.rows()));
  std::iota(order_.begin(), order_.end(), Index{0});
  nodes_.reserve(static_cast<std::size_t>(2 * donors_.rows() / kLeafSize + 8));
  build(0, donors_.rows(), 0);
}

Index KdTree::build(Index begin, Index end, int depth) {
  const Index node_index = static_cast<Index>(nodes_.size());
  nodes_.push_back({begin, end, -1, 0.0, -1, -1});
  if (end - begin <= kLeafSize) return node_index;

  // Split on the dimension with the largest spread in this range.
  const Index d = donors_.cols();
  int split_dim = depth % static_cast<int>(d);
  double best_spread = -1.0;
  for (Index j = 0; j < d; ++j) {
    double lo = donors_(order_[static_cast<std::size_t>(begin)], j);
    double hi = lo;
    for (Index i = begin + 1; i < end; ++i) {
      const double v = donors_(order_[static_cast<std::size_t>(i)], j);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      split_dim = static_cast<int>(j);
    }
  }

  const Index mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](Index a, Index b) {
                     const double va = donors_(a, split_dim);
                     const double vb = donors_(b, split_dim);
                     return va < vb || (va == vb && a < b);
                   });

  Node& node = nodes_[static_cast<std::size_t>(node_index)];
  node.split_dim = split_dim;
  node.split_val = donors_(order_[static_cast<std::size_t>(mid)], split_dim);
  // Fields are re-read after the recursive calls: build() may reallocate nodes_.
  const Index left = build(begin, mid, depth + 1);
  const Index right = build(mid, end, depth + 1);
  nodes_[static_cast<std::size_t>(node_index)].left = left;
  nodes_[static_cast<std::size_t>(node_index)].right = right;
  return node_index;
}

void KdTree::search(Index node_index, const Eigen::RowVectorXd& query,
                    NnResult& best) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_index)];
  if (node.split_dim < 0) {
    for (Index i = node.begin; i < node.end; ++i) {
      const Index k = order_[static_cast<std::size_t>(i)];
      consider(best, k, nn_dist2(query, donors_.row(k)));
    }
    return;
  }
  const double diff = query(node.split_dim) - node.split_val;
  const Index first = (diff < 0.0) ? node.left : node.right;
  const Index second = (diff < 0.0) ? node.right : node.left;
  search(first, query, best);
  // Visit the far side also on exact equality: it may hold an equally distant
  // donor with a lower index.
  if (diff * diff <= best.dist2) search(second, query, best);
}

NnResult KdTree::nearest(const Eigen::RowVectorXd& query) const {
  NnResult best{-1, std::numeric_limits<double>::infinity()};
  search(0, query, best);
  return best;
}

}  // namespace fusionkit
