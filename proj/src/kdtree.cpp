#include "lgmreg/kdtree.hpp"

#include <algorithm>
#include <numeric>

#include "lgmreg/error.hpp"

namespace lgmreg {
namespace {

// Fixed evaluation order so the tree and the brute-force scan agree bit for bit.
inline double dist2(const PointMatrix& P, std::size_t i, const Vec3& q) {
  const auto r = static_cast<Eigen::Index>(i);
  const double dx = P(r, 0) - q.x();
  const double dy = P(r, 1) - q.y();
  const double dz = P(r, 2) - q.z();
  return dx * dx + dy * dy + dz * dz;
}

void offer(std::vector<Neighbor>& heap, std::size_t k, const Neighbor& n) {
  if (heap.size() < k) {
    heap.push_back(n);
    std::push_heap(heap.begin(), heap.end(), neighbor_less);
  } else if (neighbor_less(n, heap.front())) {
    std::pop_heap(heap.begin(), heap.end(), neighbor_less);
    heap.back() = n;
    std::push_heap(heap.begin(), heap.end(), neighbor_less);
  }
}

}  // namespace

KdTree::KdTree(const PointCloud& cloud, std::size_t leaf_size)
    : points_(cloud.matrix()), order_(cloud.size()), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * cloud.size() / leaf_size_ + 2);
  if (!order_.empty()) build(0, order_.size());
}

std::size_t KdTree::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back({begin, end, -1, 0.0, 0, 0});
  if (end - begin <= leaf_size_) return id;

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (std::size_t k = begin; k < end; ++k) {
    const Vec3 p = points_.row(static_cast<Eigen::Index>(order_[k])).transpose();
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi(axis) == lo(axis)) return id;  // all coincident

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                     return points_(static_cast<Eigen::Index>(a), axis) < points_(static_cast<Eigen::Index>(b), axis);
                   });
  const double split = points_(static_cast<Eigen::Index>(order_[mid]), axis);
  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::search(std::size_t node_id, const Vec3& q, std::size_t k, std::size_t exclude,
                    std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::size_t s = node.begin; s < node.end; ++s) {
      const std::size_t i = order_[s];
      if (i == exclude) continue;
      offer(heap, k, {i, dist2(points_, i, q)});
    }
    return;
  }
  // Left holds coordinates <= split, right holds >= split.
  const double diff = q(node.axis) - node.split;
  const std::size_t near = diff <= 0.0 ? node.left : node.right;
  const std::size_t far = diff <= 0.0 ? node.right : node.left;
  search(near, q, k, exclude, heap);
  if (heap.size() < k || diff * diff <= heap.front().distance2) search(far, q, k, exclude, heap);
}

std::vector<Neighbor> KdTree::knn(const Vec3& query, std::size_t k, std::size_t exclude) const {
  std::vector<Neighbor> heap;
  if (k == 0 || nodes_.empty()) return heap;
  heap.reserve(k + 1);
  search(0, query, k, exclude, heap);
  std::sort_heap(heap.begin(), heap.end(), neighbor_less);
  return heap;
}

Neighbor KdTree::nearest(const Vec3& query) const {
  const auto r = knn(query, 1);
  if (r.empty()) throw InvalidArgument("nearest-neighbor query on an empty tree");
  return r.front();
}

std::vector<Neighbor> brute_force_knn(const PointCloud& cloud, const Vec3& query, std::size_t k, std::size_t exclude) {
  std::vector<Neighbor> all;
  all.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (i != exclude) all.push_back({i, dist2(cloud.matrix(), i, query)});
  const std::size_t m = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m), all.end(), neighbor_less);
  all.resize(m);
  return all;
}

}  // namespace lgmreg
