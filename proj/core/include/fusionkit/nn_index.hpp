#pragma once

#include <vector>

#include "fusionkit/types.hpp"

namespace fusionkit {

struct NnResult {
  Index index = -1;
  double dist2 = 0.0;
};

/// Squared Euclidean distance accumulated coordinate by coordinate in index
/// order. Both search strategies call this exact function, which is what
/// makes their results bit-identical, ties included.
double nn_dist2(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b);

/// Exhaustive scan; ties broken by lowest donor index.
NnResult nn_brute(const Matrix& donors, const Eigen::RowVectorXd& query);

/// Exact k-d tree search. Returns the same (index, dist2) as nn_brute on
/// every input, including duplicate donor coordinates.
class KdTree {
 public:
  explicit KdTree(Matrix donors);

  NnResult nearest(const Eigen::RowVectorXd& query) const;
  Index size() const { return donors_.rows(); }

 private:
  struct Node {
    Index begin, end;       // range in order_
    int split_dim = -1;     // -1 for leaves
    double split_val = 0.0;
    Index left = -1, right = -1;
  };

  Index build(Index begin, Index end, int depth);
  void search(Index node, const Eigen::RowVectorXd& query, NnResult& best) const;

  Matrix donors_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
  static constexpr Index kLeafSize = 16;
};

}  // namespace fusionkit
