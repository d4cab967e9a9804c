// Static 3-D k-d tree for nearest-neighbor queries inside ICP and the
// descriptor-free covisibility checks.

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "loopbox/geometry.hpp"

namespace loopbox {

class KdTree3 {
 public:
  KdTree3() = default;

  explicit KdTree3(std::vector<Vec3> pts) : pts_(std::move(pts)) {
    idx_.resize(pts_.size());
    std::iota(idx_.begin(), idx_.end(), 0u);
    nodes_.reserve(pts_.size());
    if (!idx_.empty()) root_ = build(0, idx_.size());
  }

  size_t size() const { return pts_.size(); }
  const Vec3& point(size_t i) const { return pts_[i]; }

  struct Hit {
    size_t index = 0;
    double dist2 = std::numeric_limits<double>::max();
  };

  Hit nearest(const Vec3& q) const {
    Hit best;
    if (root_ >= 0) search(root_, q, best);
    return best;
  }

 private:
  struct Node {
    size_t point = 0;
    int axis = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(size_t lo, size_t hi) {
    Aabb box;
    for (size_t k = lo; k < hi; ++k) box.extend(pts_[idx_[k]]);
    int axis = 0;
    box.extent().maxCoeff(&axis);
    const size_t mid = (lo + hi) / 2;
    std::nth_element(idx_.begin() + static_cast<long>(lo),
                     idx_.begin() + static_cast<long>(mid),
                     idx_.begin() + static_cast<long>(hi),
                     [&](size_t a, size_t b) {
                       return pts_[a][axis] < pts_[b][axis] ||
                              (pts_[a][axis] == pts_[b][axis] && a < b);
                     });
    Node node;
    node.point = idx_[mid];
    node.axis = axis;
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(node);
    if (mid > lo) nodes_[static_cast<size_t>(id)].left = build(lo, mid);
    if (mid + 1 < hi) nodes_[static_cast<size_t>(id)].right = build(mid + 1, hi);
    return id;
  }

  void search(std::int32_t id, const Vec3& q, Hit& best) const {
    const Node& node = nodes_[static_cast<size_t>(id)];
    const Vec3& p = pts_[node.point];
    const double d2 = (p - q).squaredNorm();
    if (d2 < best.dist2 || (d2 == best.dist2 && node.point < best.index)) {
      best.dist2 = d2;
      best.index = node.point;
    }
    const double delta = q[node.axis] - p[node.axis];
    const std::int32_t near = delta < 0 ? node.left : node.right;
    const std::int32_t far = delta < 0 ? node.right : node.left;
    if (near >= 0) search(near, q, best);
    if (far >= 0 && delta * delta < best.dist2) search(far, q, best);
  }

  std::vector<Vec3> pts_;
  std::vector<size_t> idx_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

}  // namespace loopbox
