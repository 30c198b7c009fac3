#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "liodom/geometry.hpp"

namespace liodom {

struct Neighbor {
  std::size_t index = 0;
  double squared_distance = 0.0;
};

/// Balanced 3-d tree over a fixed point set answering exact nearest-neighbor
/// and k-nearest queries. Immutable after construction; concurrent queries
/// are safe.
///
/// The tree is implicit: the subrange [lo, hi) of `order_` is rooted at its
/// middle element, split on the axis of largest spread within that range.
class KdIndex {
 public:
  /// Copies the points. Throws std::invalid_argument on an empty set.
  explicit KdIndex(std::span<const Vec3> points);

  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  /// Exact nearest neighbor. Ties resolve to the lowest index.
  Neighbor nearest(const Vec3& query) const;

  /// The k nearest points sorted by increasing distance (fewer if k > size).
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;

 private:
  void build(std::size_t lo, std::size_t hi);
  void search_nearest(std::size_t lo, std::size_t hi, const Vec3& q,
                      Neighbor& best) const;
  void search_knn(std::size_t lo, std::size_t hi, const Vec3& q, std::size_t k,
                  std::vector<Neighbor>& heap) const;

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<unsigned char> axis_;  // split axis of the node stored at order_[mid]
};

}  // namespace liodom
