#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "lgmreg/geom3d.hpp"

namespace lgmreg {

struct Neighbor {
  std::size_t index;
  double distance2;
};

/// Neighbors are ordered by (squared distance, index); ties are broken by index.
inline bool neighbor_less(const Neighbor& a, const Neighbor& b) {
  return a.distance2 < b.distance2 || (a.distance2 == b.distance2 && a.index < b.index);
}

/// Static 3D k-d tree over a point cloud (median splits on the widest axis).
class KdTree {
 public:
  explicit KdTree(const PointCloud& cloud, std::size_t leaf_size = 8);

  /// k nearest points to `query`, skipping index `exclude` when given.
  /// Results are sorted with neighbor_less.
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k,
                            std::size_t exclude = std::numeric_limits<std::size_t>::max()) const;
  Neighbor nearest(const Vec3& query) const;
  std::size_t size() const { return points_.rows(); }

 private:
  struct Node {
    std::size_t begin;
    std::size_t end;
    int axis;        // -1 for leaves
    double split;
    std::size_t left;
    std::size_t right;
  };

  std::size_t build(std::size_t begin, std::size_t end);
  void search(std::size_t node, const Vec3& q, std::size_t k, std::size_t exclude,
              std::vector<Neighbor>& heap) const;

  PointMatrix points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

/// O(N) scan with the same ordering contract as KdTree::knn.
std::vector<Neighbor> brute_force_knn(const PointCloud& cloud, const Vec3& query, std::size_t k,
                                      std::size_t exclude = std::numeric_limits<std::size_t>::max());

}  // namespace lgmreg
