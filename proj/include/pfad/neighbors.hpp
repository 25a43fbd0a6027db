#pragma once

#include <Eigen/Core>
#include <vector>

namespace pfad {

// k nearest reference points per query row, ascending by (distance, index).
struct Neighbors {
  Eigen::MatrixXi index;
  Eigen::MatrixXd distance;
};

// Exact Euclidean k-NN over a k-d tree. Pruning only discards boxes whose
// lower bound is strictly worse than the current k-th candidate, so ties are
// resolved by index exactly as a naive all-pairs loop would.
class NeighborIndex {
 public:
  NeighborIndex() = default;
  explicit NeighborIndex(Eigen::MatrixXd points);

  const Eigen::MatrixXd& points() const { return points_; }
  Eigen::Index size() const { return points_.rows(); }

  Neighbors query(const Eigen::MatrixXd& queries, int k) const;
  // Neighbours of every reference point among the other reference points.
  Neighbors query_self(int k) const;

 private:
  struct Node {
    int begin = 0, end = 0;         // range in order_
    int left = -1, right = -1;      // children; -1 for leaves
  };
  struct Search;

  Neighbors search(const Eigen::MatrixXd& queries, int k, bool exclude_self) const;
  int build(int begin, int end);

  Eigen::MatrixXd points_;
  int dim_ = 0;
  std::vector<int> order_;        // point ids, leaf-contiguous
  std::vector<double> rows_;      // points_ in order_, row-major
  std::vector<Node> nodes_;
  std::vector<double> lo_, hi_;   // per-node bounding box, dim_ values each
};

}  // namespace pfad
